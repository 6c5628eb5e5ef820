#pragma once

// Classification and ranking metrics.
//
// Micro-F1 pools true/false positives and negatives over every
// (document, label) cell; Macro-F1 averages per-class F1 over classes that
// appear in predictions or truth.  Ranking quality of a label-distance
// matrix against hop counts uses DCG with gain 1/hops and Spearman rank
// correlation on fractional ranks, both averaged over query labels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "hidden/dataset.hpp"
#include "hidden/linalg.hpp"

namespace hidden {

struct PerClassF1 {
  long tp = 0, fp = 0, fn = 0;
  double f1 = 0.0;
  bool counted = false;  // class appears in predictions or truth
};

struct F1Report {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<PerClassF1> per_class;
};

inline F1Report f1_scores(const LabelMatrix& pred, const LabelMatrix& truth) {
  if (pred.rows != truth.rows || pred.cols != truth.cols)
    throw std::invalid_argument("f1_scores: shape mismatch");
  if (pred.rows == 0 || pred.cols == 0)
    throw std::invalid_argument("f1_scores: empty matrix");
  for (std::uint8_t v : pred.a)
    if (v > 1) throw std::invalid_argument("f1_scores: prediction entry not in {0,1}");
  for (std::uint8_t v : truth.a)
    if (v > 1) throw std::invalid_argument("f1_scores: truth entry not in {0,1}");

  F1Report rep;
  rep.per_class.assign(pred.cols, {});
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.rows; ++i) {
    const auto p = pred.row(i);
    const auto t = truth.row(i);
    for (std::size_t l = 0; l < pred.cols; ++l) {
      auto& c = rep.per_class[l];
      if (p[l] && t[l]) ++c.tp;
      else if (p[l] && !t[l]) ++c.fp;
      else if (!p[l] && t[l]) ++c.fn;
    }
  }
  double macro_sum = 0.0;
  std::size_t macro_n = 0;
  for (auto& c : rep.per_class) {
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
    c.counted = (c.tp + c.fp + c.fn) > 0;
    if (!c.counted) continue;
    c.f1 = (c.tp > 0) ? 2.0 * c.tp / (2.0 * c.tp + c.fp + c.fn) : 0.0;
    macro_sum += c.f1;
    ++macro_n;
  }
  rep.micro_f1 = (tp > 0) ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
  rep.macro_f1 = (macro_n > 0) ? macro_sum / macro_n : 0.0;
  return rep;
}

// Labels other than `query` grouped by equal distance, nearest group first;
// ids ascend inside each group.
inline std::vector<std::vector<int>> embedding_ranking(const Mat& dist, int query) {
  if (dist.rows != dist.cols || dist.rows < 2)
    throw std::invalid_argument("embedding_ranking: need a square matrix of at least 2 labels");
  if (query < 0 || static_cast<std::size_t>(query) >= dist.rows)
    throw std::invalid_argument("embedding_ranking: query out of range");
  std::vector<int> order;
  order.reserve(dist.rows - 1);
  for (std::size_t l = 0; l < dist.rows; ++l) {
    if (static_cast<int>(l) != query) order.push_back(static_cast<int>(l));
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double da = dist(query, a);
    const double db = dist(query, b);
    if (da != db) return da < db;
    return a < b;
  });
  std::vector<std::vector<int>> groups;
  for (int l : order) {
    if (groups.empty() || dist(query, groups.back().front()) != dist(query, l)) {
      groups.push_back({l});
    } else {
      groups.back().push_back(l);
    }
  }
  return groups;
}

// Gains 1/hops for every label except the query.
inline std::vector<double> graded_relevance(const Table<int>& hops, int query) {
  if (hops.rows != hops.cols) throw std::invalid_argument("graded_relevance: matrix not square");
  if (query < 0 || static_cast<std::size_t>(query) >= hops.rows)
    throw std::invalid_argument("graded_relevance: query out of range");
  std::vector<double> rel(hops.rows, 0.0);
  for (std::size_t l = 0; l < hops.rows; ++l) {
    if (static_cast<int>(l) == query) continue;
    const int h = hops(query, l);
    if (h <= 0) throw std::invalid_argument("graded_relevance: non-positive hop count off the diagonal");
    rel[l] = 1.0 / static_cast<double>(h);
  }
  return rel;
}

inline double dcg_at_k(std::span<const double> rels_ranked, int k) {
  if (k <= 0) throw std::invalid_argument("dcg_at_k: k must be positive");
  double s = 0.0;
  const std::size_t top = std::min<std::size_t>(rels_ranked.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < top; ++i) {
    s += rels_ranked[i] / std::log2(static_cast<double>(i) + 2.0);
  }
  return s;
}

// Mean over queries of DCG@k divided by the ideal (relevance-sorted) DCG@k.
inline double ndcg_at_k(const Mat& dist, const Table<int>& hops, int k) {
  if (dist.rows != dist.cols || hops.rows != hops.cols || dist.rows != hops.rows)
    throw std::invalid_argument("ndcg_at_k: shape mismatch");
  const std::size_t L = dist.rows;
  if (L < 2) throw std::invalid_argument("ndcg_at_k: need at least 2 labels");
  double total = 0.0;
  for (std::size_t q = 0; q < L; ++q) {
    const auto rel = graded_relevance(hops, static_cast<int>(q));
    const auto groups = embedding_ranking(dist, static_cast<int>(q));
    std::vector<double> ranked;
    ranked.reserve(L - 1);
    for (const auto& g : groups) {
      for (int l : g) ranked.push_back(rel[l]);
    }
    std::vector<double> ideal(ranked);
    std::sort(ideal.begin(), ideal.end(), std::greater<double>());
    const double dcg = dcg_at_k(ranked, k);
    const double idcg = dcg_at_k(ideal, k);
    if (idcg <= 0.0) {
      total += (dcg <= 0.0) ? 1.0 : 0.0;
    } else {
      total += dcg / idcg;
    }
  }
  return total / static_cast<double>(L);
}

namespace detail {

// Fractional (average) ranks; ties share the mean of their positions.
inline std::vector<double> fractional_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace detail

// Mean over queries of the Pearson correlation between fractional ranks of
// embedding distances and of hop counts.  A query whose ranks have zero
// variance on either side contributes 0; `zero_variance_queries` counts them.
inline double spearman(const Mat& dist, const Table<int>& hops,
                       int* zero_variance_queries = nullptr) {
  if (dist.rows != dist.cols || hops.rows != hops.cols || dist.rows != hops.rows)
    throw std::invalid_argument("spearman: shape mismatch");
  const std::size_t L = dist.rows;
  if (L < 3) throw std::invalid_argument("spearman: need at least 3 labels");
  double total = 0.0;
  int flagged = 0;
  std::vector<double> dv(L - 1), hv(L - 1);
  for (std::size_t q = 0; q < L; ++q) {
    std::size_t j = 0;
    for (std::size_t l = 0; l < L; ++l) {
      if (l == q) continue;
      dv[j] = dist(q, l);
      const int h = hops(q, l);
      if (h <= 0) throw std::invalid_argument("spearman: non-positive hop count off the diagonal");
      hv[j] = static_cast<double>(h);
      ++j;
    }
    const auto rd = detail::fractional_ranks(dv);
    const auto rh = detail::fractional_ranks(hv);
    const double r = detail::pearson(rd, rh);
    if (std::isnan(r)) {
      ++flagged;
    } else {
      total += r;
    }
  }
  if (zero_variance_queries != nullptr) *zero_variance_queries = flagged;
  return total / static_cast<double>(L);
}

struct RankingReport {
  std::map<int, double> ndcg;  // k -> value
  double spearman_mean = 0.0;
  int spearman_zero_variance_queries = 0;
};

inline RankingReport ranking_report(const Mat& dist, const Table<int>& hops,
                                    std::span<const int> ks) {
  RankingReport rep;
  for (int k : ks) rep.ndcg[k] = ndcg_at_k(dist, hops, k);
  rep.spearman_mean = spearman(dist, hops, &rep.spearman_zero_variance_queries);
  return rep;
}

}  // namespace hidden
