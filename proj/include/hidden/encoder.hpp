#pragma once

// Document encoder and the classification loss.
//
// The encoder is a ReLU MLP with a linear output layer.  A document scores
// against label l through sigmoid(F(x) . theta_l) on the raw Euclidean
// columns; a label is predicted active when its score is strictly above 0.5.
// During training, inverted dropout is applied to the encoder output and,
// independently per document, whole embedding columns are dropped from the
// alignment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "hidden/dataset.hpp"
#include "hidden/labelspace.hpp"
#include "hidden/linalg.hpp"
#include "hidden/rng.hpp"

namespace hidden {

inline double sigmoid(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(-|t|)) based cross entropy on a single logit.
inline double bce_from_logit(double t, double y) {
  return std::max(t, 0.0) - t * y + std::log1p(std::exp(-std::fabs(t)));
}

struct EncoderLayer {
  Mat w;  // out x in
  Vec b;
};

struct EncoderParams {
  std::vector<EncoderLayer> layers;

  std::size_t input_dim() const { return layers.front().w.cols; }
  std::size_t output_dim() const { return layers.back().w.rows; }

  void validate() const {
    if (layers.empty()) throw std::invalid_argument("encoder: no layers");
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto& l = layers[k];
      if (l.w.rows == 0 || l.w.cols == 0 || l.b.size() != l.w.rows)
        throw std::invalid_argument("encoder: malformed layer shape");
      if (k > 0 && l.w.cols != layers[k - 1].w.rows)
        throw std::invalid_argument("encoder: layer dimension mismatch");
    }
  }

  // He-style init: weights ~ N(0, sqrt(2 / fan_in)), biases zero.
  static EncoderParams mlp(std::size_t input, const std::vector<std::size_t>& hidden,
                           std::size_t output, Rng& rng) {
    if (input == 0 || output == 0) throw std::invalid_argument("encoder: zero dimension");
    EncoderParams p;
    std::size_t in = input;
    std::vector<std::size_t> outs(hidden);
    outs.push_back(output);
    for (std::size_t out : outs) {
      if (out == 0) throw std::invalid_argument("encoder: zero hidden width");
      EncoderLayer layer;
      layer.w = Mat(out, in);
      layer.b.assign(out, 0.0);
      std::normal_distribution<double> g(0.0, std::sqrt(2.0 / static_cast<double>(in)));
      for (double& v : layer.w.a) v = g(rng);
      p.layers.push_back(std::move(layer));
      in = out;
    }
    return p;
  }
};

using EncoderGrad = std::vector<EncoderLayer>;

inline EncoderGrad zero_like(const EncoderParams& p) {
  EncoderGrad g;
  g.reserve(p.layers.size());
  for (const auto& l : p.layers) {
    EncoderLayer z;
    z.w = Mat(l.w.rows, l.w.cols, 0.0);
    z.b.assign(l.b.size(), 0.0);
    g.push_back(std::move(z));
  }
  return g;
}

namespace detail {

// Forward pass keeping pre-activations; `acts[k]` is the output of layer k
// after its nonlinearity (identity on the last layer).
inline void mlp_forward(const EncoderParams& p, std::span<const double> x,
                        std::vector<Vec>& acts) {
  acts.resize(p.layers.size());
  std::span<const double> in = x;
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const auto& l = p.layers[k];
    acts[k].assign(l.w.rows, 0.0);
    for (std::size_t i = 0; i < l.w.rows; ++i) {
      acts[k][i] = l.b[i] + dot(l.w.row(i), in);
    }
    if (k + 1 < p.layers.size()) {
      for (double& v : acts[k]) v = v > 0.0 ? v : 0.0;
    }
    in = acts[k];
  }
}

}  // namespace detail

// Encode one document.  In training mode, inverted dropout zeroes each output
// coordinate with probability dropout_rate and rescales the survivors.
inline Vec encode(const EncoderParams& p, std::span<const double> x, bool train_mode,
                  double dropout_rate, Rng& rng) {
  p.validate();
  if (x.size() != p.input_dim()) throw std::invalid_argument("encode: feature dim mismatch");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw std::invalid_argument("encode: dropout rate outside [0, 1)");
  std::vector<Vec> acts;
  detail::mlp_forward(p, x, acts);
  Vec out = std::move(acts.back());
  if (train_mode && dropout_rate > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep = 1.0 - dropout_rate;
    for (double& v : out) {
      v = (u(rng) < dropout_rate) ? 0.0 : v / keep;
    }
  }
  return out;
}

// Per-label sigmoid scores of a document representation against the columns.
// Training mode drops whole columns with probability label_dropout and
// rescales the kept ones.
inline Vec alignment(std::span<const double> doc_repr, const LabelEmbeddings& emb,
                     double label_dropout, bool train_mode, Rng& rng) {
  if (doc_repr.size() != emb.dim) throw std::invalid_argument("alignment: dimension mismatch");
  if (label_dropout < 0.0 || label_dropout >= 1.0)
    throw std::invalid_argument("alignment: dropout rate outside [0, 1)");
  Vec scores(emb.label_count);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep = 1.0 - label_dropout;
  for (std::size_t l = 0; l < emb.label_count; ++l) {
    double t = 0.0;
    if (train_mode && label_dropout > 0.0) {
      if (u(rng) < label_dropout) {
        scores[l] = sigmoid(0.0);
        continue;
      }
      t = dot(doc_repr, emb.col(l)) / keep;
    } else {
      t = dot(doc_repr, emb.col(l));
    }
    scores[l] = sigmoid(t);
  }
  return scores;
}

struct BceLoss {
  double value = 0.0;
  Vec grad_logits;  // score - truth, per label
};

// Cross entropy of sigmoid scores against binary truth.  Scores are clamped
// away from {0, 1} before the logs.
inline BceLoss bce_loss(std::span<const double> scores, std::span<const std::uint8_t> truth) {
  if (scores.size() != truth.size()) throw std::invalid_argument("bce_loss: size mismatch");
  constexpr double eps = 1e-12;
  BceLoss out;
  out.grad_logits.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0) || !(scores[i] <= 1.0))
      throw std::invalid_argument("bce_loss: score outside [0, 1]");
    if (truth[i] > 1) throw std::invalid_argument("bce_loss: truth entry not in {0,1}");
    const double s = std::min(1.0 - eps, std::max(eps, scores[i]));
    const double y = static_cast<double>(truth[i]);
    out.value -= y * std::log(s) + (1.0 - y) * std::log(1.0 - s);
    out.grad_logits[i] = s - y;
  }
  return out;
}

struct Prediction {
  std::vector<std::uint8_t> active;  // score strictly above 0.5
};

inline Prediction predict(std::span<const double> scores) {
  Prediction p;
  p.active.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0) || !(scores[i] <= 1.0))
      throw std::invalid_argument("predict: score outside [0, 1]");
    p.active[i] = scores[i] > 0.5 ? 1 : 0;
  }
  return p;
}

struct L1Result {
  double value = 0.0;
  EncoderGrad dparams;
  Vec dtheta;  // column-major, same layout as the embeddings
};

// Cross-entropy loss and gradients over a batch of documents, summed over the
// batch.  Dropout masks are drawn per document: first the output mask, then
// one keep/drop draw per label column.
inline L1Result l1_gradients(const EncoderParams& p, const LabelEmbeddings& emb,
                             const Dataset& data, std::span<const std::size_t> batch,
                             bool train_mode, double doc_dropout, double label_dropout,
                             Rng& rng) {
  p.validate();
  if (p.output_dim() != emb.dim) throw std::invalid_argument("l1_gradients: encoder/embedding dim mismatch");
  if (p.input_dim() != data.feature_dim) throw std::invalid_argument("l1_gradients: feature dim mismatch");
  if (emb.label_count != data.label_count) throw std::invalid_argument("l1_gradients: label count mismatch");
  if (doc_dropout < 0.0 || doc_dropout >= 1.0 || label_dropout < 0.0 || label_dropout >= 1.0)
    throw std::invalid_argument("l1_gradients: dropout rate outside [0, 1)");

  const std::size_t n = emb.dim;
  const std::size_t L = emb.label_count;
  const std::size_t K = p.layers.size();

  L1Result out;
  out.dparams = zero_like(p);
  out.dtheta.assign(emb.theta.size(), 0.0);

  std::vector<Vec> acts;
  Vec frep(n);              // encoder output after doc dropout
  Vec doc_mask(n);          // inverted-dropout scale per coordinate
  Vec label_mask(L);        // inverted-dropout scale per column
  Vec gF(n);                // gradient at the (pre-dropout) encoder output
  std::vector<Vec> delta(K);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  for (const std::size_t di : batch) {
    if (di >= data.size()) throw std::out_of_range("l1_gradients: batch index out of range");
    detail::mlp_forward(p, data.features.row(di), acts);

    if (train_mode && doc_dropout > 0.0) {
      const double keep = 1.0 - doc_dropout;
      for (std::size_t i = 0; i < n; ++i)
        doc_mask[i] = (u(rng) < doc_dropout) ? 0.0 : 1.0 / keep;
    } else {
      std::fill(doc_mask.begin(), doc_mask.end(), 1.0);
    }
    if (train_mode && label_dropout > 0.0) {
      const double keep = 1.0 - label_dropout;
      for (std::size_t l = 0; l < L; ++l)
        label_mask[l] = (u(rng) < label_dropout) ? 0.0 : 1.0 / keep;
    } else {
      std::fill(label_mask.begin(), label_mask.end(), 1.0);
    }

    for (std::size_t i = 0; i < n; ++i) frep[i] = acts.back()[i] * doc_mask[i];

    std::fill(gF.begin(), gF.end(), 0.0);
    const auto truth = data.labels.row(di);
    for (std::size_t l = 0; l < L; ++l) {
      if (label_mask[l] == 0.0) {
        out.value += bce_from_logit(0.0, static_cast<double>(truth[l]));
        continue;
      }
      const auto colv = emb.col(l);
      const double t = label_mask[l] * dot(frep, colv);
      const double y = static_cast<double>(truth[l]);
      out.value += bce_from_logit(t, y);
      const double g = sigmoid(t) - y;  // d(loss)/d(logit)
      const double gm = g * label_mask[l];
      for (std::size_t i = 0; i < n; ++i) {
        out.dtheta[l * n + i] += gm * frep[i];
        gF[i] += gm * colv[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) gF[i] *= doc_mask[i];

    // Backward through the MLP.
    delta[K - 1] = gF;
    for (std::size_t k = K; k-- > 0;) {
      const auto& layer = p.layers[k];
      auto& grad = out.dparams[k];
      const std::span<const double> in =
          (k == 0) ? data.features.row(di) : std::span<const double>(acts[k - 1]);
      for (std::size_t i = 0; i < layer.w.rows; ++i) {
        const double d = delta[k][i];
        if (d == 0.0) continue;
        grad.b[i] += d;
        auto grow = grad.w.row(i);
        for (std::size_t j = 0; j < in.size(); ++j) grow[j] += d * in[j];
      }
      if (k == 0) break;
      delta[k - 1].assign(layer.w.cols, 0.0);
      for (std::size_t i = 0; i < layer.w.rows; ++i) {
        const double d = delta[k][i];
        if (d == 0.0) continue;
        const auto wrow = layer.w.row(i);
        for (std::size_t j = 0; j < layer.w.cols; ++j) delta[k - 1][j] += d * wrow[j];
      }
      for (std::size_t j = 0; j < layer.w.cols; ++j) {
        if (acts[k - 1][j] <= 0.0) delta[k - 1][j] = 0.0;  // ReLU mask
      }
    }
  }
  return out;
}

}  // namespace hidden
