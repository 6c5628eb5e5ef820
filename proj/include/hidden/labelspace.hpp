#pragma once

// Label embeddings and the co-occurrence ranking loss.
//
// Each label l owns a Euclidean column theta_l.  Co-occurrence counts order
// label pairs: for an ordered pair (l, l') with C(l, l') > 0 the loss asks
// that l' sit closer to l than every label that co-occurs with l strictly
// less often,
//   term(l, l') = -log( exp(-d(l, l')) / sum_{z in N(l,l') + {l'}} exp(-d(l, z)) ),
// where N(l, l') = { z != l : C(l, z) < C(l, l') }.  Distances are either
// geodesic between ball projections of the columns or plain Euclidean
// between the raw columns.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "hidden/dataset.hpp"
#include "hidden/geometry.hpp"
#include "hidden/linalg.hpp"
#include "hidden/rng.hpp"

namespace hidden {

enum class Metric { hyperbolic, euclidean };

struct LabelEmbeddings {
  std::size_t dim = 0;
  std::size_t label_count = 0;
  Vec theta;  // column-major: column l occupies [l*dim, (l+1)*dim)

  LabelEmbeddings() = default;
  LabelEmbeddings(std::size_t n, std::size_t labels)
      : dim(n), label_count(labels), theta(n * labels, 0.0) {
    if (n == 0 || labels == 0) throw std::invalid_argument("embeddings: zero dimension");
  }

  std::span<double> col(std::size_t l) { return {theta.data() + l * dim, dim}; }
  std::span<const double> col(std::size_t l) const { return {theta.data() + l * dim, dim}; }

  static LabelEmbeddings uniform_init(std::size_t n, std::size_t labels, double half_width,
                                      Rng& rng) {
    if (half_width <= 0.0) throw std::invalid_argument("embeddings: half_width must be positive");
    LabelEmbeddings e(n, labels);
    std::uniform_real_distribution<double> u(-half_width, half_width);
    for (double& v : e.theta) v = u(rng);
    return e;
  }

  static LabelEmbeddings identity(std::size_t labels) {
    LabelEmbeddings e(labels, labels);
    for (std::size_t l = 0; l < labels; ++l) e.col(l)[l] = 1.0;
    return e;
  }
};

// Symmetric pair counts with a zero diagonal.
struct CoOccurrence {
  std::size_t label_count = 0;
  std::vector<std::int64_t> counts;

  explicit CoOccurrence(std::size_t labels = 0)
      : label_count(labels), counts(labels * labels, 0) {}

  std::int64_t count(std::size_t l, std::size_t m) const { return counts[l * label_count + m]; }
  std::int64_t& at(std::size_t l, std::size_t m) { return counts[l * label_count + m]; }
};

inline CoOccurrence count_cooccurrence(const Dataset& data) {
  CoOccurrence c(data.label_count);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto active = data.active_labels(i);
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        c.at(active[a], active[b]) += 1;
        c.at(active[b], active[a]) += 1;
      }
    }
  }
  return c;
}

// N(l, l'): labels z != l whose count with l is strictly below C(l, l').
inline std::vector<int> neighbor_set(const CoOccurrence& c, int l, int lp) {
  const int L = static_cast<int>(c.label_count);
  if (l < 0 || lp < 0 || l >= L || lp >= L)
    throw std::invalid_argument("neighbor_set: label id out of range");
  if (l == lp) throw std::invalid_argument("neighbor_set: identical labels");
  const std::int64_t ref = c.count(l, lp);
  std::vector<int> out;
  for (int z = 0; z < L; ++z) {
    if (z != l && c.count(l, z) < ref) out.push_back(z);
  }
  return out;
}

inline Mat embedding_distance_matrix(const LabelEmbeddings& emb, Metric metric) {
  const std::size_t L = emb.label_count;
  Mat dist(L, L, 0.0);
  if (metric == Metric::hyperbolic) {
    Mat ball(L, emb.dim);
    for (std::size_t l = 0; l < L; ++l) {
      const auto p = project_to_ball(emb.col(l));
      std::copy(p.begin(), p.end(), ball.row(l).begin());
    }
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t m = l + 1; m < L; ++m) {
        const double d = poincare_distance(ball.row(l), ball.row(m));
        dist(l, m) = d;
        dist(m, l) = d;
      }
    }
  } else {
    Vec diff(emb.dim);
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t m = l + 1; m < L; ++m) {
        const auto cl = emb.col(l);
        const auto cm = emb.col(m);
        for (std::size_t i = 0; i < emb.dim; ++i) diff[i] = cl[i] - cm[i];
        const double d = norm(diff);
        dist(l, m) = d;
        dist(m, l) = d;
      }
    }
  }
  return dist;
}

// Softmax over the candidate set {lp} + neighbors for query l, evaluated from
// a distance matrix.  Probabilities are returned in that order.
inline std::vector<double> pair_softmax(const Mat& dist, int l, int lp,
                                        std::span<const int> neighbors) {
  double dmin = dist(l, lp);
  for (int z : neighbors) dmin = std::min(dmin, dist(l, z));
  std::vector<double> p(neighbors.size() + 1);
  p[0] = std::exp(-(dist(l, lp) - dmin));
  double sum = p[0];
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    p[i + 1] = std::exp(-(dist(l, neighbors[i]) - dmin));
    sum += p[i + 1];
  }
  for (double& v : p) v /= sum;
  return p;
}

struct DistanceLossResult {
  double value = 0.0;
  Mat ddist;  // d(loss)/d(dist(l, z)), only entries touched by some pair
};

// Value and distance-space gradient of the ranking loss given a precomputed
// distance matrix.  Pairs with a zero count contribute nothing.
inline DistanceLossResult cooc_ranking_from_distances(const Mat& dist, const CoOccurrence& cooc) {
  const std::size_t L = cooc.label_count;
  if (dist.rows != L || dist.cols != L)
    throw std::invalid_argument("ranking loss: distance matrix shape mismatch");
  DistanceLossResult out;
  out.ddist = Mat(L, L, 0.0);
  std::vector<int> nbr;
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t lp = 0; lp < L; ++lp) {
      if (lp == l) continue;
      const std::int64_t ref = cooc.count(l, lp);
      if (ref <= 0) continue;
      nbr.clear();
      double dmin = dist(l, lp);
      for (std::size_t z = 0; z < L; ++z) {
        if (z != l && cooc.count(l, z) < ref) {
          nbr.push_back(static_cast<int>(z));
          dmin = std::min(dmin, dist(l, z));
        }
      }
      double sumexp = std::exp(-(dist(l, lp) - dmin));
      for (int z : nbr) sumexp += std::exp(-(dist(l, z) - dmin));
      // term = d(l, lp) + log sum_z exp(-d(l, z))
      out.value += dist(l, lp) - dmin + std::log(sumexp);
      const double plp = std::exp(-(dist(l, lp) - dmin)) / sumexp;
      out.ddist(l, lp) += 1.0 - plp;
      for (int z : nbr) {
        out.ddist(l, z) -= std::exp(-(dist(l, z) - dmin)) / sumexp;
      }
    }
  }
  return out;
}

struct RankingLossResult {
  double value = 0.0;
  Vec dtheta;  // same column-major layout as LabelEmbeddings::theta
};

inline RankingLossResult cooc_loss_hyperbolic(const LabelEmbeddings& emb,
                                              const CoOccurrence& cooc) {
  if (emb.label_count != cooc.label_count)
    throw std::invalid_argument("ranking loss: label count mismatch");
  const std::size_t L = emb.label_count;
  const std::size_t n = emb.dim;
  Mat ball(L, n);
  for (std::size_t l = 0; l < L; ++l) {
    const auto p = project_to_ball(emb.col(l));
    std::copy(p.begin(), p.end(), ball.row(l).begin());
  }
  Mat dist(L, L, 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t m = l + 1; m < L; ++m) {
      const double d = poincare_distance(ball.row(l), ball.row(m));
      dist(l, m) = d;
      dist(m, l) = d;
    }
  }
  const auto base = cooc_ranking_from_distances(dist, cooc);

  RankingLossResult out;
  out.value = base.value;
  out.dtheta.assign(emb.theta.size(), 0.0);
  // Accumulate ball-space gradients per column, then pull each column's total
  // back through the projection once.
  Mat gball(L, n, 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t m = l + 1; m < L; ++m) {
      const double w = base.ddist(l, m) + base.ddist(m, l);
      if (w == 0.0) continue;
      const auto g = poincare_distance_grad(ball.row(l), ball.row(m));
      if (g.degenerate) continue;
      axpy(w, g.du, gball.row(l));
      axpy(w, g.dv, gball.row(m));
    }
  }
  for (std::size_t l = 0; l < L; ++l) {
    const auto pb = projection_pullback(emb.col(l), gball.row(l));
    std::copy(pb.begin(), pb.end(), out.dtheta.begin() + l * n);
  }
  return out;
}

inline RankingLossResult cooc_loss_euclidean(const LabelEmbeddings& emb,
                                             const CoOccurrence& cooc) {
  if (emb.label_count != cooc.label_count)
    throw std::invalid_argument("ranking loss: label count mismatch");
  const std::size_t L = emb.label_count;
  const std::size_t n = emb.dim;
  const Mat dist = embedding_distance_matrix(emb, Metric::euclidean);
  const auto base = cooc_ranking_from_distances(dist, cooc);

  RankingLossResult out;
  out.value = base.value;
  out.dtheta.assign(emb.theta.size(), 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t m = l + 1; m < L; ++m) {
      const double w = base.ddist(l, m) + base.ddist(m, l);
      if (w == 0.0 || dist(l, m) <= 1e-12) continue;
      const auto cl = emb.col(l);
      const auto cm = emb.col(m);
      const double scale = w / dist(l, m);
      for (std::size_t i = 0; i < n; ++i) {
        const double g = scale * (cl[i] - cm[i]);
        out.dtheta[l * n + i] += g;
        out.dtheta[m * n + i] -= g;
      }
    }
  }
  return out;
}

inline RankingLossResult cooc_loss(const LabelEmbeddings& emb, const CoOccurrence& cooc,
                                   Metric metric) {
  return metric == Metric::hyperbolic ? cooc_loss_hyperbolic(emb, cooc)
                                      : cooc_loss_euclidean(emb, cooc);
}

}  // namespace hidden
