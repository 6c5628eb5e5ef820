#pragma once

// Experiment orchestration shared by the command-line tool and the
// integration tests: single train/evaluate runs, and the two sweep grids
// (label corruption and training-set subsampling).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hidden/evalmetrics.hpp"
#include "hidden/io.hpp"
#include "hidden/synthdata.hpp"
#include "hidden/trainer.hpp"

namespace hidden {

inline const std::vector<int> kDefaultNdcgKs = {1, 3, 5, 10};
inline const std::vector<double> kDefaultDropProbs = {0.0, 0.2, 0.4};
inline const std::vector<double> kDefaultFractions = {1.0, 0.5, 0.25, 0.1};

struct MetricsRecord {
  std::string variant;
  std::uint64_t seed = 0;
  std::size_t documents = 0;
  std::size_t labels = 0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  bool has_ranking = false;
  std::vector<std::pair<int, double>> ndcg;  // (k, value), ascending k
  double spearman_mean = 0.0;
  int spearman_zero_variance_queries = 0;
};

// Embeddings trained under the Euclidean ranking loss are ranked with their
// own metric; everything else is ranked geodesically.
inline Metric ranking_metric_for(Variant v) {
  return v == Variant::euc ? Metric::euclidean : Metric::hyperbolic;
}

inline MetricsRecord evaluate_model(const TrainedModel& model, const Dataset& data,
                                    const Table<int>* hops, std::span<const int> ks) {
  MetricsRecord rec;
  rec.variant = variant_name(model.variant);
  rec.seed = model.config.seed;
  rec.documents = data.size();
  rec.labels = data.label_count;
  const auto rep = f1_scores(detail::predict_all(model.encoder, model.theta, data), data.labels);
  rec.micro_f1 = rep.micro_f1;
  rec.macro_f1 = rep.macro_f1;
  if (hops != nullptr) {
    const Mat dist = embedding_distance_matrix(model.theta, ranking_metric_for(model.variant));
    const auto rank = ranking_report(dist, *hops, ks);
    rec.has_ranking = true;
    for (const auto& [k, v] : rank.ndcg) rec.ndcg.emplace_back(k, v);
    rec.spearman_mean = rank.spearman_mean;
    rec.spearman_zero_variance_queries = rank.spearman_zero_variance_queries;
  }
  return rec;
}

inline json metrics_to_json(const MetricsRecord& r) {
  json j;
  j["variant"] = r.variant;
  j["seed"] = r.seed;
  j["dataset"] = {{"documents", r.documents}, {"labels", r.labels}};
  j["micro_f1"] = r.micro_f1;
  j["macro_f1"] = r.macro_f1;
  if (r.has_ranking) {
    json nd;
    for (const auto& [k, v] : r.ndcg) nd[std::to_string(k)] = v;
    j["ndcg"] = nd;
    j["spearman"] = r.spearman_mean;
    j["spearman_zero_variance_queries"] = r.spearman_zero_variance_queries;
  } else {
    j["ndcg"] = nullptr;
    j["spearman"] = nullptr;
  }
  return j;
}

enum class SweepSetting { label_drop, subsample };

inline const char* sweep_setting_name(SweepSetting s) {
  return s == SweepSetting::label_drop ? "setting1" : "setting2";
}

struct SweepConfig {
  SweepSetting setting = SweepSetting::label_drop;
  std::vector<double> params;  // drop probabilities or kept fractions
  std::vector<Variant> variants = {Variant::flt, Variant::cas, Variant::jnt};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<int> ks = kDefaultNdcgKs;
  TrainConfig base;  // seed and variant fields are overwritten per cell
};

struct SweepCell {
  SweepSetting setting;
  double param = 0.0;
  Variant variant;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsRecord metrics;
};

// One corrupted copy of the training set per (setting parameter, seed); every
// variant in the cell group sees identical data.
inline Dataset corrupt_train(const Dataset& train, SweepSetting setting, double param,
                             std::size_t param_index, std::uint64_t seed) {
  if (setting == SweepSetting::label_drop) {
    Rng rng(derive_seed(seed, "label-drop", param_index));
    return drop_labels(train, param, rng);
  }
  return subsample(train, param, derive_seed(seed, "subsample", param_index));
}

inline std::vector<SweepCell> run_sweep(const Dataset& train, const Dataset& test,
                                        const Table<int>* hops, const SweepConfig& cfg) {
  if (cfg.params.empty()) throw std::invalid_argument("sweep: no setting parameters");
  if (cfg.variants.empty()) throw std::invalid_argument("sweep: no variants");
  if (cfg.seeds.empty()) throw std::invalid_argument("sweep: no seeds");
  std::vector<SweepCell> cells;
  for (std::size_t pi = 0; pi < cfg.params.size(); ++pi) {
    for (const std::uint64_t seed : cfg.seeds) {
      const Dataset corrupted = corrupt_train(train, cfg.setting, cfg.params[pi], pi, seed);
      for (const Variant variant : cfg.variants) {
        SweepCell cell;
        cell.setting = cfg.setting;
        cell.param = cfg.params[pi];
        cell.variant = variant;
        cell.seed = seed;
        try {
          TrainConfig tc = cfg.base;
          tc.variant = variant;
          tc.seed = seed;
          const TrainedModel model = train_model(corrupted, tc);
          cell.metrics = evaluate_model(model, test, hops, cfg.ks);
          cell.ok = true;
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

// Per-cell rows plus one seed-averaged summary row (seed column "mean") per
// (parameter, variant) group, in grid order.
inline std::vector<std::vector<std::string>> sweep_table(const std::vector<SweepCell>& cells,
                                                         std::span<const int> ks) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"setting", "param", "variant", "seed",
                                     "micro_f1", "macro_f1"};
  for (int k : ks) header.push_back("ndcg@" + std::to_string(k));
  header.push_back("spearman_x100");
  header.push_back("status");
  rows.push_back(header);

  auto metric_fields = [&](const MetricsRecord& m, bool ranked) {
    std::vector<std::string> f = {format_double(m.micro_f1), format_double(m.macro_f1)};
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (ranked && i < m.ndcg.size()) f.push_back(format_double(m.ndcg[i].second));
      else f.push_back("");
    }
    if (ranked) f.push_back(format_double(100.0 * m.spearman_mean));
    else f.push_back("");
    return f;
  };

  // Group key order follows first appearance, i.e. grid order.
  std::vector<std::pair<double, Variant>> groups;
  for (const auto& c : cells) {
    const std::pair<double, Variant> key{c.param, c.variant};
    bool found = false;
    for (const auto& g : groups) {
      if (g == key) { found = true; break; }
    }
    if (!found) groups.push_back(key);
  }

  for (const auto& [param, variant] : groups) {
    std::vector<const SweepCell*> member;
    for (const auto& c : cells) {
      if (c.param == param && c.variant == variant) member.push_back(&c);
    }
    std::size_t ok_count = 0;
    MetricsRecord mean;
    bool mean_ranked = true;
    for (const SweepCell* c : member) {
      std::vector<std::string> row = {sweep_setting_name(c->setting), format_double(c->param),
                                      variant_name(c->variant), std::to_string(c->seed)};
      if (c->ok) {
        const auto f = metric_fields(c->metrics, c->metrics.has_ranking);
        row.insert(row.end(), f.begin(), f.end());
        row.push_back("ok");
        mean.micro_f1 += c->metrics.micro_f1;
        mean.macro_f1 += c->metrics.macro_f1;
        mean.spearman_mean += c->metrics.spearman_mean;
        if (c->metrics.has_ranking) {
          if (mean.ndcg.empty()) mean.ndcg = c->metrics.ndcg;
          else {
            for (std::size_t i = 0; i < mean.ndcg.size(); ++i)
              mean.ndcg[i].second += c->metrics.ndcg[i].second;
          }
        } else {
          mean_ranked = false;
        }
        ++ok_count;
      } else {
        for (std::size_t i = 0; i < 3 + ks.size(); ++i) row.push_back("");
        row.push_back("error: " + c->error);
      }
      rows.push_back(std::move(row));
    }
    if (ok_count > 0) {
      const double inv = 1.0 / static_cast<double>(ok_count);
      mean.micro_f1 *= inv;
      mean.macro_f1 *= inv;
      mean.spearman_mean *= inv;
      for (auto& [k, v] : mean.ndcg) v *= inv;
      mean.has_ranking = mean_ranked && !mean.ndcg.empty();
      std::vector<std::string> row = {sweep_setting_name(member.front()->setting),
                                      format_double(param), variant_name(variant), "mean"};
      const auto f = metric_fields(mean, mean.has_ranking);
      row.insert(row.end(), f.begin(), f.end());
      row.push_back(ok_count == member.size() ? "ok"
                                              : "mean over " + std::to_string(ok_count) + " of " +
                                                    std::to_string(member.size()) + " seeds");
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// Seed-averaged metrics for one (parameter, variant) group of a finished
// sweep; throws if any member cell failed.
struct CellSummary {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double spearman_mean = 0.0;
  std::vector<std::pair<int, double>> ndcg;
};

inline CellSummary summarize_cells(const std::vector<SweepCell>& cells, double param,
                                   Variant variant) {
  CellSummary s;
  std::size_t count = 0;
  for (const auto& c : cells) {
    if (c.param != param || c.variant != variant) continue;
    if (!c.ok)
      throw std::runtime_error(std::string("sweep cell failed (") + variant_name(variant) +
                               ", param " + format_double(param) + ", seed " +
                               std::to_string(c.seed) + "): " + c.error);
    s.micro_f1 += c.metrics.micro_f1;
    s.macro_f1 += c.metrics.macro_f1;
    s.spearman_mean += c.metrics.spearman_mean;
    if (s.ndcg.empty()) s.ndcg = c.metrics.ndcg;
    else {
      for (std::size_t i = 0; i < s.ndcg.size(); ++i) s.ndcg[i].second += c.metrics.ndcg[i].second;
    }
    ++count;
  }
  if (count == 0) throw std::runtime_error("sweep: no cells matched the summary request");
  const double inv = 1.0 / static_cast<double>(count);
  s.micro_f1 *= inv;
  s.macro_f1 *= inv;
  s.spearman_mean *= inv;
  for (auto& [k, v] : s.ndcg) v *= inv;
  return s;
}

}  // namespace hidden
