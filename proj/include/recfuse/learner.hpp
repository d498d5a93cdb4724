#pragma once

// Multinomial logistic regression trained with mini-batch ADAM, one stage
// of the stagewise model. Weights are stored row-major as W[d * rho + r].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "recfuse/core_model.hpp"
#include "recfuse/embeddings.hpp"
#include "recfuse/error.hpp"
#include "recfuse/featurizer.hpp"

namespace recfuse {

struct AdamParams {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamParams&) const = default;
};

struct TrainConfig {
  std::size_t stages = 15;  // T
  std::size_t epochs = 500;
  std::size_t batch_size = 10;
  AdamParams adam;
  std::uint64_t seed = 0;
  double l2 = 1e-4;
  /// Train on the averaged previous-stage distribution instead of its argmax
  /// for unlabeled clusters.
  bool soft_labels = false;
  /// Loss weight of cells in unlabeled clusters; labeled and synthetic
  /// clusters always weigh 1.
  double weak_weight = 0.0;
  /// z-score features before optimisation; the scaling is folded back into
  /// the stored weights.
  bool standardize = true;

  void validate() const {
    if (epochs < 1) throw Error("train config: epochs must be >= 1");
    if (batch_size < 1) throw Error("train config: batch size must be >= 1");
    if (!(l2 >= 0.0) || !std::isfinite(l2)) throw Error("train config: l2 must be a finite value >= 0");
    if (!(weak_weight >= 0.0) || !std::isfinite(weak_weight)) throw Error("train config: weak_weight must be >= 0");
    if (!(adam.alpha > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
        !(adam.epsilon > 0.0)) {
      throw Error("train config: invalid ADAM parameters");
    }
  }

  bool operator==(const TrainConfig&) const = default;
};

struct SoftmaxStage {
  std::size_t b = 0;
  std::size_t rho = 0;
  std::vector<double> W;     // b * rho
  std::vector<double> bias;  // rho

  SoftmaxStage() = default;
  SoftmaxStage(std::size_t b_, std::size_t rho_) : b(b_), rho(rho_), W(b_ * rho_, 0.0), bias(rho_, 0.0) {}

  double& w(std::size_t d, std::size_t r) { return W[d * rho + r]; }
  double w(std::size_t d, std::size_t r) const { return W[d * rho + r]; }

  bool operator==(const SoftmaxStage&) const = default;
};

namespace detail {

/// logits = Wᵀx + bias, written into `out` (size rho).
inline void logits(const SoftmaxStage& s, std::span<const double> x, std::span<double> out) {
  std::copy(s.bias.begin(), s.bias.end(), out.begin());
  for (std::size_t d = 0; d < s.b; ++d) {
    const double xd = x[d];
    if (xd == 0.0) continue;
    const double* row = s.W.data() + d * s.rho;
    for (std::size_t r = 0; r < s.rho; ++r) out[r] += xd * row[r];
  }
}

/// In-place softmax with max subtraction.
inline void softmax_inplace(std::span<double> z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

/// Bounded uniform draw used for shuffling; independent of the standard
/// library's distribution implementations so results match across
/// toolchains.
inline std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

template <class T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

}  // namespace detail

/// softmax(Wᵀx + bias).
inline Vector softmax_forward(const SoftmaxStage& stage, std::span<const double> x) {
  if (x.size() != stage.b) {
    throw Error("softmax_forward: feature dimension " + std::to_string(x.size()) + " does not match stage width " +
                std::to_string(stage.b));
  }
  Vector z(stage.rho);
  detail::logits(stage, x, z);
  detail::softmax_inplace(z);
  return z;
}

/// Training targets: one dense distribution over ρ_j per sample, plus a
/// loss weight per sample.
struct Targets {
  std::size_t rho = 0;
  std::vector<double> dist;     // n * rho
  std::vector<double> weights;  // n

  std::size_t size() const { return weights.size(); }
  std::span<const double> of(std::size_t i) const { return {dist.data() + i * rho, rho}; }

  static Targets from_labels(std::span<const LabelVector> y) {
    Targets t;
    if (y.empty()) return t;
    t.rho = y[0].dim;
    t.dist.assign(y.size() * t.rho, 0.0);
    t.weights.assign(y.size(), 1.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i].dim != t.rho || y[i].hot_index >= t.rho) throw Error("targets: inconsistent label dimension");
      t.dist[i * t.rho + y[i].hot_index] = 1.0;
    }
    return t;
  }
};

struct StageGradient {
  std::vector<double> dW;
  std::vector<double> dbias;
};

/// Mean weighted cross-entropy over `batch` plus λ‖W‖². `X` holds one
/// feature row per sample.
inline double objective(const SoftmaxStage& s, const FeatureMatrix& X, const Targets& y,
                        std::span<const std::size_t> batch, double lambda) {
  Vector p(s.rho);
  double loss = 0.0;
  for (auto i : batch) {
    detail::logits(s, X.row(i), p);
    double mx = *std::max_element(p.begin(), p.end());
    double lse = 0.0;
    for (double v : p) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    auto t = y.of(i);
    double ce = 0.0;
    for (std::size_t r = 0; r < s.rho; ++r)
      if (t[r] != 0.0) ce -= t[r] * (p[r] - lse);
    loss += y.weights[i] * ce;
  }
  loss /= static_cast<double>(batch.size());
  double reg = 0.0;
  for (double w : s.W) reg += w * w;
  return loss + lambda * reg;
}

/// Exact gradient of objective() with respect to W and bias.
inline StageGradient gradient(const SoftmaxStage& s, const FeatureMatrix& X, const Targets& y,
                              std::span<const std::size_t> batch, double lambda) {
  if (X.cols != s.b || y.rho != s.rho) throw Error("gradient: dimension mismatch");
  StageGradient g;
  g.dW.assign(s.W.size(), 0.0);
  g.dbias.assign(s.rho, 0.0);
  Vector p(s.rho);
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto i : batch) {
    auto x = X.row(i);
    detail::logits(s, x, p);
    detail::softmax_inplace(p);
    auto t = y.of(i);
    double tsum = 0.0;
    for (double v : t) tsum += v;
    const double w = y.weights[i] * inv;
    for (std::size_t r = 0; r < s.rho; ++r) p[r] = w * (tsum * p[r] - t[r]);
    for (std::size_t d = 0; d < s.b; ++d) {
      const double xd = x[d];
      if (xd == 0.0) continue;
      double* row = g.dW.data() + d * s.rho;
      for (std::size_t r = 0; r < s.rho; ++r) row[r] += xd * p[r];
    }
    for (std::size_t r = 0; r < s.rho; ++r) g.dbias[r] += p[r];
  }
  for (std::size_t k = 0; k < s.W.size(); ++k) g.dW[k] += 2.0 * lambda * s.W[k];
  return g;
}

/// Per-epoch record of the training objective, for diagnostics and tests.
struct TrainTrace {
  std::vector<double> epoch_loss;  // mean over the epoch's batches
};

/// Fits one softmax stage by mini-batch ADAM from a zero start. Samples
/// with zero weight are dropped. Deterministic for a fixed seed.
inline SoftmaxStage train_stage(const FeatureMatrix& X, const Targets& y, const TrainConfig& cfg, std::uint64_t seed,
                                TrainTrace* trace = nullptr) {
  cfg.validate();
  if (X.rows != y.size()) throw Error("train_stage: feature and label counts differ");
  if (X.rows == 0) throw Error("train_stage: no training samples");
  const std::size_t b = X.cols, rho = y.rho;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < X.rows; ++i)
    if (y.weights[i] > 0.0) order.push_back(i);
  if (order.empty()) throw Error("train_stage: every sample has zero weight");

  // Column standardisation over the weighted-in samples.
  std::vector<double> mu(b, 0.0), sigma(b, 1.0);
  const FeatureMatrix* Xs = &X;
  FeatureMatrix scaled;
  if (cfg.standardize) {
    for (auto i : order) {
      auto x = X.row(i);
      for (std::size_t d = 0; d < b; ++d) mu[d] += x[d];
    }
    for (double& m : mu) m /= static_cast<double>(order.size());
    std::vector<double> var(b, 0.0);
    for (auto i : order) {
      auto x = X.row(i);
      for (std::size_t d = 0; d < b; ++d) var[d] += (x[d] - mu[d]) * (x[d] - mu[d]);
    }
    for (std::size_t d = 0; d < b; ++d) {
      double sd = std::sqrt(var[d] / static_cast<double>(order.size()));
      sigma[d] = sd > 1e-12 ? sd : 1.0;
      if (sd <= 1e-12) mu[d] = 0.0;  // constant column: leave as is
    }
    scaled = X;
    for (std::size_t i = 0; i < X.rows; ++i) {
      auto x = scaled.row(i);
      for (std::size_t d = 0; d < b; ++d) x[d] = (x[d] - mu[d]) / sigma[d];
    }
    Xs = &scaled;
  }

  SoftmaxStage s(b, rho);
  std::vector<double> mW(s.W.size(), 0.0), vW(s.W.size(), 0.0), mb(rho, 0.0), vb(rho, 0.0);
  std::mt19937_64 rng(seed);
  const auto& a = cfg.adam;
  double b1t = 1.0, b2t = 1.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    detail::seeded_shuffle(order, rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::span<const std::size_t> batch(order.data() + start, std::min(cfg.batch_size, order.size() - start));
      if (trace) epoch_loss += objective(s, *Xs, y, batch, cfg.l2);
      auto g = gradient(s, *Xs, y, batch, cfg.l2);
      b1t *= a.beta1;
      b2t *= a.beta2;
      const double c1 = 1.0 / (1.0 - b1t), c2 = 1.0 / (1.0 - b2t);
      auto step = [&](std::vector<double>& param, std::vector<double>& m, std::vector<double>& v,
                      const std::vector<double>& grad) {
        for (std::size_t k = 0; k < param.size(); ++k) {
          m[k] = a.beta1 * m[k] + (1.0 - a.beta1) * grad[k];
          v[k] = a.beta2 * v[k] + (1.0 - a.beta2) * grad[k] * grad[k];
          param[k] -= a.alpha * (m[k] * c1) / (std::sqrt(v[k] * c2) + a.epsilon);
        }
      };
      step(s.W, mW, vW, g.dW);
      step(s.bias, mb, vb, g.dbias);
      ++batches;
    }
    bool finite = std::all_of(s.W.begin(), s.W.end(), [](double v) { return std::isfinite(v); }) &&
                  std::all_of(s.bias.begin(), s.bias.end(), [](double v) { return std::isfinite(v); });
    if (trace) {
      epoch_loss /= static_cast<double>(batches);
      finite = finite && std::isfinite(epoch_loss);
      trace->epoch_loss.push_back(epoch_loss);
    }
    if (!finite) {
      throw TrainError("non-finite parameters or loss at epoch " + std::to_string(epoch) + " (" +
                       std::to_string(order.size()) + " samples, width " + std::to_string(b) + ")");
    }
  }

  if (cfg.standardize) {
    // softmax(Wᵀ((x - mu) / sigma) + bias) == softmax(W'ᵀx + bias').
    for (std::size_t d = 0; d < b; ++d) {
      for (std::size_t r = 0; r < rho; ++r) {
        double wd = s.w(d, r) / sigma[d];
        s.bias[r] -= wd * mu[d];
        s.w(d, r) = wd;
      }
    }
  }
  return s;
}

/// Convenience overload taking one-hot labels.
inline SoftmaxStage train_stage(const FeatureMatrix& X, std::span<const LabelVector> y, const TrainConfig& cfg,
                                std::uint64_t seed) {
  return train_stage(X, Targets::from_labels(y), cfg, seed);
}

/// Seed for (attribute, stage), derived from the run seed.
inline std::uint64_t stage_seed(std::uint64_t run_seed, std::size_t attribute, std::size_t stage) {
  return detail::mix64(run_seed ^ detail::mix64((static_cast<std::uint64_t>(attribute) << 32) ^ stage ^
                                                0x5851f42d4c957f2dULL));
}

/// The frozen stages h^[0..T] for one attribute.
struct AttributeModel {
  std::size_t attribute = 0;
  std::string attribute_name;
  std::size_t rho = 0;
  FeatureLayout layout;
  FeatureConfig feature_config;
  std::vector<SoftmaxStage> stages;

  std::size_t T() const { return stages.empty() ? 0 : stages.size() - 1; }
  const SoftmaxStage& final_stage() const {
    if (stages.empty()) throw Error("attribute model has no stages");
    return stages.back();
  }
};

}  // namespace recfuse
