#pragma once

// Stagewise additive training and its replay at prediction time.
//
// All attributes advance in lockstep: stage t of every attribute is trained
// on features computed from the joint working assignment y^[t], and the
// stage-t predictions of all attributes form y^[t+1]. Replaying the frozen
// stages on the same data reproduces the training-time predictions exactly.

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "recfuse/core_model.hpp"
#include "recfuse/featurizer.hpp"
#include "recfuse/inference.hpp"
#include "recfuse/learner.hpp"

namespace recfuse {

/// Assignment the dynamic features are computed from. Training targets are
/// y^[t] either way.
enum class RunningSource {
  Working,     // y^[t]: pinned ground truth on labeled clusters, predictions elsewhere
  Prediction,  // majority vote at stage 0, then the stage t−1 prediction, for every cluster
};

inline std::string_view to_string(RunningSource r) { return r == RunningSource::Working ? "working" : "prediction"; }

struct StagewiseConfig {
  TrainConfig train;
  RunningSource running = RunningSource::Prediction;
  std::size_t jobs = 1;
};

/// Runs fn(0..n-1) on up to `jobs` threads; rethrows the exception of the
/// lowest failing index.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= n) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// What the observer sees after stage t of attribute j.
struct StageObservation {
  std::size_t stage = 0;
  std::size_t attribute = 0;
  const FeatureMatrix* features = nullptr;
  const LabelTable* working = nullptr;  // y^[t]
  const Targets* targets = nullptr;     // empty during replay
  const SoftmaxStage* model = nullptr;
  const std::vector<ClusterPrediction>* predictions = nullptr;
};
using StageObserver = std::function<void(const StageObservation&)>;

struct StagewiseResult {
  std::vector<AttributeModel> models;
  /// Stage-T predictions, [attribute][cluster].
  std::vector<std::vector<ClusterPrediction>> predictions;
  /// y^[T], the assignment the final stage was trained on.
  LabelTable working;
};

namespace detail {

inline bool is_labeled(const FusionDataset& ds, const GroundTruth& truth, std::size_t k, std::size_t j) {
  return ds.is_synthetic(k) || truth.contains(k, j);
}

inline Targets make_targets(const FusionDataset& ds, const GroundTruth& truth, const LabelTable& working,
                            std::size_t j, std::size_t rho, const TrainConfig& cfg,
                            const std::vector<ClusterPrediction>* soft) {
  Targets t;
  t.rho = rho;
  t.dist.assign(ds.num_rows() * rho, 0.0);
  t.weights.assign(ds.num_rows(), 1.0);
  for (std::size_t i = 0; i < ds.num_rows(); ++i) {
    const std::size_t k = ds.cluster_of(i);
    double* row = t.dist.data() + i * rho;
    if (is_labeled(ds, truth, k, j)) {
      row[working.at(k, j)] = 1.0;
      continue;
    }
    t.weights[i] = cfg.weak_weight;
    if (soft) {
      const auto& mean = (*soft)[k].mean;
      for (std::size_t r = 0; r < mean.size(); ++r) row[r] = mean[r];
    } else {
      row[working.at(k, j)] = 1.0;
    }
  }
  return t;
}

/// Shared stage loop. `stage_for(t, j, X, targets)` returns h^[t]_j, either
/// by training or by looking up a frozen model.
template <class StageFn>
StagewiseResult run_stages(const Featurizer& fz, const GroundTruth& truth, std::size_t T, const StagewiseConfig& cfg,
                           std::span<const std::size_t> attributes, StageFn&& stage_for,
                           const StageObserver& observer) {
  const auto& ds = fz.dataset();
  const auto& sets = fz.candidate_sets();
  const std::size_t c = ds.num_attributes(), p = ds.num_clusters();
  StagewiseResult res;
  res.working = weak_labels(sets, truth);
  LabelTable dynamic = cfg.running == RunningSource::Working ? res.working : weak_labels(sets);
  for (std::size_t k = 0; k < p; ++k) {
    if (!ds.is_synthetic(k)) continue;
    for (std::size_t j = 0; j < c; ++j)
      if (!truth.contains(k, j)) throw Error("synthetic cluster '" + ds.cluster_name(k) + "' has no label");
  }
  bool have_running = false;
  std::vector<std::vector<ClusterPrediction>> preds(c), prev(c);
  std::vector<SoftmaxStage> stage_models(c);
  std::vector<FeatureMatrix> matrices(c);
  std::vector<Targets> targets(c);
  for (std::size_t t = 0; t <= T; ++t) {
    const auto violations = fz.violations(dynamic);
    parallel_for(attributes.size(), cfg.jobs, [&](std::size_t a) {
      const std::size_t j = attributes[a];
      matrices[j] = fz.matrix(j, dynamic, have_running ? &dynamic : nullptr, violations);
      const bool soft = cfg.train.soft_labels && t > 0;
      targets[j] = make_targets(ds, truth, res.working, j, fz.rho(j), cfg.train, soft ? &prev[j] : nullptr);
      try {
        stage_models[j] = stage_for(t, j, matrices[j], targets[j]);
      } catch (const TrainError& e) {
        throw TrainError("stage " + std::to_string(t) + ", attribute '" + ds.schema()[j] + "': " + e.what());
      }
      preds[j] = predict_clusters(stage_models[j], matrices[j], ds, sets, j);
    });
    if (observer) {
      for (auto j : attributes) {
        StageObservation obs{t, j, &matrices[j], &res.working, &targets[j], &stage_models[j], &preds[j]};
        observer(obs);
      }
    }
    if (t == T) break;
    // y^[t+1] = y_T ∪ y_U^[t+1]; attributes outside `attributes` keep their weak labels.
    LabelTable next = res.working;
    for (auto j : attributes) {
      for (std::size_t k = 0; k < p; ++k)
        if (!is_labeled(ds, truth, k, j)) next.at(k, j) = preds[j][k].index;
    }
    if (cfg.running == RunningSource::Working) {
      dynamic = next;
    } else {
      for (auto j : attributes)
        for (std::size_t k = 0; k < p; ++k) dynamic.at(k, j) = preds[j][k].index;
    }
    have_running = true;
    res.working = std::move(next);
    prev = preds;
  }
  res.predictions = std::move(preds);
  return res;
}

inline std::vector<std::size_t> all_attributes(std::size_t c) {
  std::vector<std::size_t> v(c);
  for (std::size_t j = 0; j < c; ++j) v[j] = j;
  return v;
}

}  // namespace detail

/// Trains h^[0..T] for every attribute. G_T labels are pinned for every
/// stage; synthetic clusters must be fully labeled in `truth`.
inline StagewiseResult stagewise_train(const Featurizer& fz, const GroundTruth& truth, const StagewiseConfig& cfg,
                                       const StageObserver& observer = {}) {
  cfg.train.validate();
  const auto& ds = fz.dataset();
  const std::size_t c = ds.num_attributes();
  std::vector<std::vector<SoftmaxStage>> stages(c);
  auto attrs = detail::all_attributes(c);
  auto res = detail::run_stages(
      fz, truth, cfg.train.stages, cfg, attrs,
      [&](std::size_t t, std::size_t j, const FeatureMatrix& X, const Targets& y) {
        auto s = train_stage(X, y, cfg.train, stage_seed(cfg.train.seed, j, t));
        stages[j].push_back(s);
        return s;
      },
      observer);
  res.models.resize(c);
  for (std::size_t j = 0; j < c; ++j) {
    auto& m = res.models[j];
    m.attribute = j;
    m.attribute_name = ds.schema()[j];
    m.rho = fz.rho(j);
    m.layout = fz.layout(j);
    m.feature_config = fz.config();
    m.stages = std::move(stages[j]);
  }
  return res;
}

/// Single-attribute variant: only column j is trained; the other columns
/// stay at their weak labels throughout.
inline AttributeModel stagewise_train(const Featurizer& fz, std::size_t attribute, const GroundTruth& truth,
                                      const StagewiseConfig& cfg, const StageObserver& observer = {}) {
  cfg.train.validate();
  if (attribute >= fz.dataset().num_attributes()) throw Error("stagewise_train: attribute out of range");
  std::vector<SoftmaxStage> stages;
  std::vector<std::size_t> attrs{attribute};
  detail::run_stages(
      fz, truth, cfg.train.stages, cfg, attrs,
      [&](std::size_t t, std::size_t j, const FeatureMatrix& X, const Targets& y) {
        auto s = train_stage(X, y, cfg.train, stage_seed(cfg.train.seed, j, t));
        stages.push_back(s);
        return s;
      },
      observer);
  AttributeModel m;
  m.attribute = attribute;
  m.attribute_name = fz.dataset().schema()[attribute];
  m.rho = fz.rho(attribute);
  m.layout = fz.layout(attribute);
  m.feature_config = fz.config();
  m.stages = std::move(stages);
  return m;
}

/// Re-runs frozen stages over a dataset and returns the stage-T
/// predictions. `models` must hold one model per attribute, in schema order,
/// with equal stage counts.
inline StagewiseResult cascade(const Featurizer& fz, const std::vector<AttributeModel>& models,
                               const GroundTruth& truth, RunningSource running, std::size_t jobs = 1,
                               const StageObserver& observer = {}) {
  const auto& ds = fz.dataset();
  const std::size_t c = ds.num_attributes();
  if (models.size() != c) throw Error("cascade: expected one model per attribute");
  for (std::size_t j = 0; j < c; ++j) {
    const auto& m = models[j];
    if (m.attribute_name != ds.schema()[j]) {
      throw Error("cascade: model for attribute '" + m.attribute_name + "' does not match schema column '" +
                  ds.schema()[j] + "'");
    }
    if (m.stages.empty() || m.stages.size() != models[0].stages.size()) {
      throw Error("cascade: models have inconsistent stage counts");
    }
    if (m.rho != fz.rho(j) || m.layout.width() != fz.layout(j).width()) {
      throw Error("cascade: model for attribute '" + m.attribute_name + "' expects width " +
                  std::to_string(m.layout.width()) + " and label dimension " + std::to_string(m.rho) +
                  ", data gives " + std::to_string(fz.layout(j).width()) + " and " + std::to_string(fz.rho(j)));
    }
  }
  StagewiseConfig cfg;
  cfg.running = running;
  cfg.jobs = jobs;
  auto attrs = detail::all_attributes(c);
  auto res = detail::run_stages(
      fz, truth, models[0].stages.size() - 1, cfg, attrs,
      [&](std::size_t t, std::size_t j, const FeatureMatrix&, const Targets&) { return models[j].stages[t]; },
      observer);
  res.models = models;
  return res;
}

/// One fused record per cluster.
struct FusedTable {
  std::vector<std::string> schema;
  std::vector<std::string> cluster_ids;
  std::vector<std::vector<std::string>> values;       // [cluster][attribute]
  std::vector<std::vector<double>> confidence;        // [cluster][attribute]; 1 for ground-truth cells
  std::vector<std::vector<std::size_t>> chosen_index; // [cluster][attribute]
};

/// Maps stage-T predictions back to strings; G_T cells are emitted as
/// their ground-truth values. Synthetic clusters are skipped.
inline FusedTable fused_table(const FusionDataset& ds, const CandidateSets& sets, const GroundTruth& truth,
                              const StagewiseResult& res) {
  const std::size_t c = ds.num_attributes();
  if (res.predictions.size() != c) throw Error("fused_table: missing predictions for some attributes");
  FusedTable out;
  out.schema = ds.schema();
  for (std::size_t k = 0; k < ds.num_clusters(); ++k) {
    if (ds.is_synthetic(k)) continue;
    out.cluster_ids.push_back(ds.cluster_name(k));
    auto& vals = out.values.emplace_back(c);
    auto& conf = out.confidence.emplace_back(c, 1.0);
    auto& idx = out.chosen_index.emplace_back(c, 0);
    for (std::size_t j = 0; j < c; ++j) {
      if (const auto* v = truth.find(k, j)) {
        vals[j] = *v;
        idx[j] = *sets.at(k, j).index_of(*v);
        continue;
      }
      const auto& p = res.predictions[j][k];
      idx[j] = p.index;
      vals[j] = sets.at(k, j).values[p.index];
      conf[j] = p.confidence;
    }
  }
  return out;
}

/// Replays `models` on `ds` and returns the fused table.
inline FusedTable fuse_dataset(const std::vector<AttributeModel>& models, const FusionDataset& ds,
                               const GroundTruth& truth, RunningSource running, std::size_t jobs = 1) {
  if (models.empty()) throw Error("fuse_dataset: no models");
  CandidateSets sets(ds);
  truth.validate(ds, sets);
  Featurizer fz(ds, sets, models[0].feature_config);
  auto res = cascade(fz, models, truth, running, jobs);
  return fused_table(ds, sets, truth, res);
}

}  // namespace recfuse
