#pragma once

// Training procedures.
//
// Four variants share one loop:
//   flt  fixed identity embeddings (embed dim forced to the label count),
//        cross entropy only;
//   cas  stage one fits the embeddings to co-occurrence alone (full-batch
//        ranking loss), stage two freezes them and trains the encoder;
//   jnt  encoder and embeddings trained together on
//        cross entropy + lambda * ranking loss (geodesic distances);
//   euc  same as jnt with Euclidean distances in the ranking loss.
//
// The ranking gradient is added on every mini-batch at weight
// lambda / batches_per_epoch, so one epoch applies exactly lambda times the
// full ranking gradient.  Model selection: the epoch with the best
// validation Micro-F1 wins, earlier epoch on ties.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hidden/adam.hpp"
#include "hidden/dataset.hpp"
#include "hidden/encoder.hpp"
#include "hidden/evalmetrics.hpp"
#include "hidden/labelspace.hpp"
#include "hidden/rng.hpp"

namespace hidden {

enum class Variant { flt, cas, jnt, euc };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::flt: return "flt";
    case Variant::cas: return "cas";
    case Variant::jnt: return "jnt";
    case Variant::euc: return "euc";
  }
  throw std::invalid_argument("variant_name: unknown variant");
}

inline Variant parse_variant(const std::string& s) {
  if (s == "flt") return Variant::flt;
  if (s == "cas") return Variant::cas;
  if (s == "jnt") return Variant::jnt;
  if (s == "euc") return Variant::euc;
  throw std::invalid_argument("unknown variant '" + s + "' (expected flt, cas, jnt or euc)");
}

enum class RankingSchedule { every_batch, first_batch };

enum class ThetaInit { uniform, identity };

struct TrainConfig {
  Variant variant = Variant::jnt;
  double lambda = 0.1;
  int epochs = 30;
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  double doc_dropout = 0.1;
  double label_dropout = 0.6;
  std::size_t embed_dim = 16;
  double validation_fraction = 0.10;
  double theta_init_half_width = 0.001;
  std::vector<std::size_t> hidden_dims = {64, 64};
  RankingSchedule ranking_schedule = RankingSchedule::every_batch;
  // Full-batch embedding steps per stage-one epoch for cas.
  int stage1_steps_per_epoch = 1;
  ThetaInit theta_init = ThetaInit::uniform;
  bool freeze_theta = false;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("config: lambda must be >= 0");
    if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("config: batch size must be >= 1");
    if (doc_dropout < 0.0 || doc_dropout >= 1.0)
      throw std::invalid_argument("config: doc dropout outside [0, 1)");
    if (label_dropout < 0.0 || label_dropout >= 1.0)
      throw std::invalid_argument("config: label dropout outside [0, 1)");
    if (embed_dim < 1) throw std::invalid_argument("config: embed dim must be >= 1");
    if (!(validation_fraction > 0.0) || !(validation_fraction < 1.0))
      throw std::invalid_argument("config: validation fraction outside (0, 1)");
    if (!(theta_init_half_width > 0.0))
      throw std::invalid_argument("config: theta init width must be > 0");
    if (stage1_steps_per_epoch < 1)
      throw std::invalid_argument("config: stage-one steps must be >= 1");
  }
};

struct EpochStats {
  int epoch = 0;
  double train_objective = 0.0;  // dropout-off objective on the train slice
  double val_micro_f1 = 0.0;
  double val_macro_f1 = 0.0;
};

struct TrainedModel {
  Variant variant = Variant::jnt;
  EncoderParams encoder;
  LabelEmbeddings theta;
  std::vector<EpochStats> history;
  std::vector<double> stage1_objective;  // cas only: ranking loss per stage-one epoch
  int best_epoch = 0;
  TrainConfig config;
};

// Deterministic shuffle split; the validation slice takes
// round(fraction * size) documents, at least one on each side.
inline std::pair<Dataset, Dataset> split_validation(const Dataset& data, double fraction,
                                                    std::uint64_t seed) {
  if (!(fraction > 0.0) || !(fraction < 1.0))
    throw std::invalid_argument("split_validation: fraction outside (0, 1)");
  if (data.size() < 2) throw std::invalid_argument("split_validation: need at least 2 documents");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::size_t val_n =
      static_cast<std::size_t>(std::lround(fraction * static_cast<double>(data.size())));
  val_n = std::max<std::size_t>(1, std::min(val_n, data.size() - 1));
  const std::vector<std::size_t> val_idx(idx.begin(), idx.begin() + val_n);
  const std::vector<std::size_t> train_idx(idx.begin() + val_n, idx.end());
  return {data.select(train_idx), data.select(val_idx)};
}

namespace detail {

inline std::vector<std::span<double>> tensor_views(EncoderParams& p, LabelEmbeddings* theta) {
  std::vector<std::span<double>> v;
  for (auto& l : p.layers) {
    v.emplace_back(l.w.a.data(), l.w.a.size());
    v.emplace_back(l.b.data(), l.b.size());
  }
  if (theta != nullptr) v.emplace_back(theta->theta.data(), theta->theta.size());
  return v;
}

inline std::vector<std::span<const double>> grad_views(EncoderGrad& g, Vec* dtheta) {
  std::vector<std::span<const double>> v;
  for (auto& l : g) {
    v.emplace_back(l.w.a.data(), l.w.a.size());
    v.emplace_back(l.b.data(), l.b.size());
  }
  if (dtheta != nullptr) v.emplace_back(dtheta->data(), dtheta->size());
  return v;
}

inline LabelMatrix predict_all(const EncoderParams& p, const LabelEmbeddings& emb,
                               const Dataset& data) {
  LabelMatrix pred(data.size(), data.label_count);
  Rng unused(0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vec rep = encode(p, data.features.row(i), false, 0.0, unused);
    const Vec scores = alignment(rep, emb, 0.0, false, unused);
    const auto pr = predict(scores);
    std::copy(pr.active.begin(), pr.active.end(), pred.row(i).begin());
  }
  return pred;
}

// Dropout-off cross entropy over a whole dataset.
inline double clean_bce(const EncoderParams& p, const LabelEmbeddings& emb, const Dataset& data) {
  double total = 0.0;
  Rng unused(0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vec rep = encode(p, data.features.row(i), false, 0.0, unused);
    const auto truth = data.labels.row(i);
    for (std::size_t l = 0; l < emb.label_count; ++l) {
      total += bce_from_logit(dot(rep, emb.col(l)), static_cast<double>(truth[l]));
    }
  }
  return total;
}

}  // namespace detail

struct JointResult {
  double value = 0.0;
  EncoderGrad dparams;
  Vec dtheta;
};

// Full objective (cross entropy summed over all documents plus
// lambda * ranking loss) with analytic gradients, dropout off.
inline JointResult joint_objective(const EncoderParams& p, const LabelEmbeddings& emb,
                                   const Dataset& data, const CoOccurrence& cooc, double lambda,
                                   Metric metric) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("joint_objective: lambda must be >= 0");
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  Rng unused(0);
  JointResult out;
  auto l1 = l1_gradients(p, emb, data, all, false, 0.0, 0.0, unused);
  out.value = l1.value;
  out.dparams = std::move(l1.dparams);
  out.dtheta = std::move(l1.dtheta);
  if (lambda > 0.0) {
    const auto l2 = cooc_loss(emb, cooc, metric);
    out.value += lambda * l2.value;
    axpy(lambda, l2.dtheta, out.dtheta);
  }
  return out;
}

inline TrainedModel train_model(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  const std::size_t L = data.label_count;
  if (L < 2) throw std::invalid_argument("train: need at least 2 labels");

  const bool flat = cfg.variant == Variant::flt;
  const bool cascaded = cfg.variant == Variant::cas;
  const bool joint = cfg.variant == Variant::jnt || cfg.variant == Variant::euc;
  const Metric metric = cfg.variant == Variant::euc ? Metric::euclidean : Metric::hyperbolic;
  const std::size_t n = flat ? L : cfg.embed_dim;

  // Independent streams per purpose keep variants comparable under one seed.
  Rng rng_theta(derive_seed(cfg.seed, "theta-init"));
  Rng rng_encoder(derive_seed(cfg.seed, "encoder-init"));
  Rng rng_loop(derive_seed(cfg.seed, "epoch-loop"));

  LabelEmbeddings theta =
      flat || cfg.theta_init == ThetaInit::identity
          ? LabelEmbeddings::identity(L)
          : LabelEmbeddings::uniform_init(n, L, cfg.theta_init_half_width, rng_theta);
  if (theta.dim != n) throw std::invalid_argument("train: embed dim incompatible with variant");
  EncoderParams params = EncoderParams::mlp(data.feature_dim, cfg.hidden_dims, n, rng_encoder);

  auto [train_slice, val_slice] =
      split_validation(data, cfg.validation_fraction, derive_seed(cfg.seed, "validation-split"));
  const CoOccurrence cooc = count_cooccurrence(train_slice);

  TrainedModel model;
  model.variant = cfg.variant;
  model.config = cfg;

  // Stage one for cas: embeddings alone on the full-batch ranking loss.
  if (cascaded) {
    AdamState stage1;
    std::vector<std::span<double>> tensors{{theta.theta.data(), theta.theta.size()}};
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      double last = 0.0;
      for (int s = 0; s < cfg.stage1_steps_per_epoch; ++s) {
        auto l2 = cooc_loss(theta, cooc, metric);
        last = l2.value;
        std::vector<std::span<const double>> grads{{l2.dtheta.data(), l2.dtheta.size()}};
        adam_step(stage1, tensors, grads, cfg.learning_rate);
      }
      model.stage1_objective.push_back(last);
    }
  }

  const bool theta_trainable = !flat && !cascaded && !cfg.freeze_theta;
  const bool use_ranking = joint && cfg.lambda > 0.0;

  const std::size_t m = train_slice.size();
  const std::size_t batches = (m + cfg.batch_size - 1) / cfg.batch_size;
  const double batch_lambda = cfg.ranking_schedule == RankingSchedule::every_batch
                                  ? cfg.lambda / static_cast<double>(batches)
                                  : cfg.lambda;

  AdamState opt;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);

  EncoderParams best_params = params;
  LabelEmbeddings best_theta = theta;
  double best_micro = -1.0;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng_loop);
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * cfg.batch_size;
      const std::size_t hi = std::min(m, lo + cfg.batch_size);
      auto l1 = l1_gradients(params, theta, train_slice,
                             {order.data() + lo, hi - lo}, true, cfg.doc_dropout,
                             cfg.label_dropout, rng_loop);
      if (use_ranking && (cfg.ranking_schedule == RankingSchedule::every_batch || b == 0)) {
        const auto l2 = cooc_loss(theta, cooc, metric);
        axpy(batch_lambda, l2.dtheta, l1.dtheta);
      }
      auto tensors = detail::tensor_views(params, theta_trainable ? &theta : nullptr);
      auto grads = detail::grad_views(l1.dparams, theta_trainable ? &l1.dtheta : nullptr);
      adam_step(opt, tensors, grads, cfg.learning_rate);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_objective = detail::clean_bce(params, theta, train_slice);
    if (use_ranking) stats.train_objective += cfg.lambda * cooc_loss(theta, cooc, metric).value;
    const auto rep = f1_scores(detail::predict_all(params, theta, val_slice), val_slice.labels);
    stats.val_micro_f1 = rep.micro_f1;
    stats.val_macro_f1 = rep.macro_f1;
    model.history.push_back(stats);

    if (stats.val_micro_f1 > best_micro) {
      best_micro = stats.val_micro_f1;
      best_epoch = epoch;
      best_params = params;
      best_theta = theta;
    }
  }

  model.encoder = std::move(best_params);
  model.theta = std::move(best_theta);
  model.best_epoch = best_epoch;
  return model;
}

inline TrainedModel train_flat(const Dataset& data, TrainConfig cfg) {
  cfg.variant = Variant::flt;
  return train_model(data, cfg);
}

inline TrainedModel train_cascaded(const Dataset& data, TrainConfig cfg) {
  cfg.variant = Variant::cas;
  return train_model(data, cfg);
}

inline TrainedModel train_joint(const Dataset& data, TrainConfig cfg,
                                Metric metric = Metric::hyperbolic) {
  cfg.variant = metric == Metric::hyperbolic ? Variant::jnt : Variant::euc;
  return train_model(data, cfg);
}

}  // namespace hidden
