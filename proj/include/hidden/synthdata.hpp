#pragma once

// Synthetic benchmark: a 4x4 grid of isotropic Gaussian clusters under a
// three-level label tree (16 leaves, 4 quadrants, 1 root).  Every sample
// activates exactly its leaf, the leaf's quadrant, and the root.  The
// hierarchy itself is never given to the trainer; it only scores embeddings
// afterwards.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hidden/dataset.hpp"
#include "hidden/linalg.hpp"
#include "hidden/rng.hpp"

namespace hidden {

struct Hierarchy {
  int label_count = 0;
  std::vector<std::pair<int, int>> edges;  // parent -> child
  std::vector<std::string> names;          // optional, size 0 or label_count

  void validate() const {
    if (label_count < 2) throw std::invalid_argument("hierarchy: need at least 2 nodes");
    if (!names.empty() && names.size() != static_cast<std::size_t>(label_count))
      throw std::invalid_argument("hierarchy: name count mismatch");
    std::vector<int> indeg(label_count, 0);
    std::vector<std::vector<int>> children(label_count);
    for (const auto& [p, c] : edges) {
      if (p < 0 || c < 0 || p >= label_count || c >= label_count)
        throw std::invalid_argument("hierarchy: edge endpoint out of range");
      if (p == c) throw std::invalid_argument("hierarchy: self-loop");
      children[p].push_back(c);
      ++indeg[c];
    }
    // Kahn: directed cycles leave nodes unprocessed.
    std::deque<int> q;
    for (int v = 0; v < label_count; ++v) {
      if (indeg[v] == 0) q.push_back(v);
    }
    int seen = 0;
    auto deg = indeg;
    while (!q.empty()) {
      const int v = q.front();
      q.pop_front();
      ++seen;
      for (int c : children[v]) {
        if (--deg[c] == 0) q.push_back(c);
      }
    }
    if (seen != label_count) throw std::invalid_argument("hierarchy: directed cycle");
  }
};

// Undirected shortest-path hop counts between all node pairs (BFS per node).
inline Table<int> hops_matrix(const Hierarchy& h) {
  h.validate();
  const int L = h.label_count;
  std::vector<std::vector<int>> adj(L);
  for (const auto& [p, c] : h.edges) {
    adj[p].push_back(c);
    adj[c].push_back(p);
  }
  Table<int> hops(L, L, -1);
  for (int s = 0; s < L; ++s) {
    hops(s, s) = 0;
    std::deque<int> q{s};
    while (!q.empty()) {
      const int v = q.front();
      q.pop_front();
      for (int w : adj[v]) {
        if (hops(s, w) < 0) {
          hops(s, w) = hops(s, v) + 1;
          q.push_back(w);
        }
      }
    }
  }
  std::ostringstream unreachable;
  int bad = 0;
  for (int a = 0; a < L && bad < 8; ++a) {
    for (int b = 0; b < L && bad < 8; ++b) {
      if (hops(a, b) < 0) {
        unreachable << (bad ? ", " : "") << "(" << a << "," << b << ")";
        ++bad;
      }
    }
  }
  if (bad > 0)
    throw std::invalid_argument("hops_matrix: graph is disconnected, unreachable pairs: " +
                                unreachable.str());
  return hops;
}

struct GaussianGridSpec {
  int grid_side = 4;
  double spacing = 1.0;
  double sigma_factor = 0.1;  // cluster sigma = sigma_factor * spacing
  std::size_t total_samples = 20000;
  double train_fraction = 0.6;
  std::uint64_t seed = 1;

  void validate() const {
    if (grid_side != 4)
      throw std::invalid_argument("gaussian grid: quadrant labels require grid_side == 4");
    if (!(spacing > 0.0)) throw std::invalid_argument("gaussian grid: spacing must be positive");
    if (!(sigma_factor > 0.0)) throw std::invalid_argument("gaussian grid: sigma must be positive");
    if (total_samples < 10) throw std::invalid_argument("gaussian grid: too few samples");
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
      throw std::invalid_argument("gaussian grid: train fraction outside (0, 1)");
  }

  // 16 leaves, 4 quadrants, root.
  static constexpr int leaf_count = 16;
  static constexpr int quadrant_base = 16;
  static constexpr int root_label = 20;
  static constexpr int label_count = 21;

  static int leaf_id(int ix, int iy) { return iy * 4 + ix; }
  static int quadrant_of_leaf(int leaf) {
    const int ix = leaf % 4;
    const int iy = leaf / 4;
    return quadrant_base + (iy / 2) * 2 + (ix / 2);
  }
};

struct SyntheticData {
  Dataset train;
  Dataset test;
  Hierarchy truth;
};

inline Hierarchy grid_hierarchy() {
  Hierarchy h;
  h.label_count = GaussianGridSpec::label_count;
  for (int q = 0; q < 4; ++q)
    h.edges.emplace_back(GaussianGridSpec::root_label, GaussianGridSpec::quadrant_base + q);
  for (int leaf = 0; leaf < GaussianGridSpec::leaf_count; ++leaf)
    h.edges.emplace_back(GaussianGridSpec::quadrant_of_leaf(leaf), leaf);
  for (int l = 0; l < h.label_count; ++l) h.names.push_back("l" + std::to_string(l + 1));
  return h;
}

// Draw the full corpus, split train/test, then standardize features with the
// train-split mean and variance.
inline SyntheticData generate(const GaussianGridSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  const std::size_t N = spec.total_samples;
  Dataset all;
  all.feature_dim = 2;
  all.label_count = GaussianGridSpec::label_count;
  all.features = Mat(N, 2);
  all.labels = LabelMatrix(N, all.label_count);
  all.ids.reserve(N);

  std::uniform_int_distribution<int> pick_leaf(0, GaussianGridSpec::leaf_count - 1);
  std::normal_distribution<double> noise(0.0, spec.sigma_factor * spec.spacing);
  for (std::size_t i = 0; i < N; ++i) {
    const int leaf = pick_leaf(rng);
    const int ix = leaf % 4;
    const int iy = leaf / 4;
    all.features(i, 0) = static_cast<double>(ix) * spec.spacing + noise(rng);
    all.features(i, 1) = static_cast<double>(iy) * spec.spacing + noise(rng);
    all.labels(i, leaf) = 1;
    all.labels(i, GaussianGridSpec::quadrant_of_leaf(leaf)) = 1;
    all.labels(i, GaussianGridSpec::root_label) = 1;
    all.ids.push_back("s" + std::to_string(i));
  }

  std::vector<std::size_t> idx(N);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t train_n =
      static_cast<std::size_t>(std::lround(spec.train_fraction * static_cast<double>(N)));
  if (train_n == 0 || train_n >= N)
    throw std::invalid_argument("gaussian grid: degenerate train/test split");

  SyntheticData out;
  out.train = all.select({idx.begin(), idx.begin() + train_n});
  out.test = all.select({idx.begin() + train_n, idx.end()});
  out.truth = grid_hierarchy();

  // Train-split statistics standardize both splits.
  for (std::size_t f = 0; f < 2; ++f) {
    double mean = 0.0;
    for (std::size_t i = 0; i < out.train.size(); ++i) mean += out.train.features(i, f);
    mean /= static_cast<double>(out.train.size());
    double var = 0.0;
    for (std::size_t i = 0; i < out.train.size(); ++i) {
      const double d = out.train.features(i, f) - mean;
      var += d * d;
    }
    var /= static_cast<double>(out.train.size());
    const double sd = std::sqrt(var);
    if (!(sd > 0.0)) throw std::runtime_error("gaussian grid: zero feature variance");
    for (std::size_t i = 0; i < out.train.size(); ++i)
      out.train.features(i, f) = (out.train.features(i, f) - mean) / sd;
    for (std::size_t i = 0; i < out.test.size(); ++i)
      out.test.features(i, f) = (out.test.features(i, f) - mean) / sd;
  }
  return out;
}

// Label corruption: with probability `prob` a document loses one uniformly
// chosen active label.  Documents with at most one active label are left
// alone.
inline Dataset drop_labels(const Dataset& data, double prob, Rng& rng) {
  if (!(prob >= 0.0) || !(prob <= 1.0))
    throw std::invalid_argument("drop_labels: probability outside [0, 1]");
  Dataset out = data;
  if (prob == 0.0) return out;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (u(rng) >= prob) continue;
    const auto active = out.active_labels(i);
    if (active.size() < 2) continue;
    std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
    out.labels(i, active[pick(rng)]) = 0;
  }
  return out;
}

// Uniform subsample of round(fraction * size) documents, original order kept.
inline Dataset subsample(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || !(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("subsample: fraction outside (0, 1]");
  const std::size_t keep =
      static_cast<std::size_t>(std::lround(fraction * static_cast<double>(data.size())));
  if (keep == 0) throw std::invalid_argument("subsample: fraction keeps zero documents");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return data.select(idx);
}

}  // namespace hidden
