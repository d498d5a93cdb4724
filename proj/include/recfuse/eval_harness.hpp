#pragma once

// Experiment protocol: seeded cluster splits, precision, majority-vote and
// Counts baselines, multi-seed runs with ablation and augmentation sweeps.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "recfuse/augmentation.hpp"
#include "recfuse/benchmark.hpp"
#include "recfuse/core_model.hpp"
#include "recfuse/error.hpp"
#include "recfuse/featurizer.hpp"
#include "recfuse/stagewise.hpp"

namespace recfuse {

/// Predicted value per [cluster][attribute].
using PredictionTable = std::vector<std::vector<std::string>>;

using CellRef = std::pair<std::size_t, std::size_t>;  // (cluster, attribute)

/// Share of `eval_set` cells whose prediction equals the ground truth.
inline double precision(const PredictionTable& predicted, const GroundTruth& truth, std::span<const CellRef> eval_set) {
  if (eval_set.empty()) throw Error("precision: empty evaluation set");
  std::size_t correct = 0;
  for (auto [k, j] : eval_set) {
    const auto* t = truth.find(k, j);
    if (!t) throw Error("precision: evaluation cell without ground truth");
    if (predicted.at(k).at(j) == *t) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(eval_set.size());
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Seeded shuffle of 0..p-1, then contiguous cuts of llround(f·p) clusters.
inline Split split(std::size_t p, double train_fraction, double validation_fraction, std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && validation_fraction >= 0.0 && train_fraction + validation_fraction < 1.0)) {
    throw Error("split: fractions must be >= 0 and sum to less than 1");
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(p)));
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(p)));
  if (n_train + n_val >= p || (train_fraction > 0.0 && n_train == 0) || (validation_fraction > 0.0 && n_val == 0)) {
    throw Error("split: too few clusters (" + std::to_string(p) + ") for nonempty splits");
  }
  std::vector<std::size_t> ids(p);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::mt19937_64 rng(detail::mix64(seed ^ 0x632be59bd9b4e019ULL));
  detail::seeded_shuffle(ids, rng);
  Split s;
  s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                      ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
  return s;
}

/// Most frequent value per cell, ties to candidate index 0.
inline PredictionTable majority_vote_baseline(const FusionDataset& ds, const CandidateSets& sets) {
  PredictionTable out(ds.num_clusters(), std::vector<std::string>(ds.num_attributes()));
  for (std::size_t k = 0; k < ds.num_clusters(); ++k)
    for (std::size_t j = 0; j < ds.num_attributes(); ++j) out[k][j] = sets.at(k, j).values[0];
  return out;
}

/// Laplace-smoothed source accuracy (correct + 1) / (total + 2), counted
/// over the cells of labeled clusters.
inline std::vector<double> source_accuracies(const FusionDataset& ds, const GroundTruth& train_truth) {
  if (!ds.has_sources()) throw Error("counts baseline unavailable: dataset has no sources");
  std::vector<double> correct(ds.num_sources(), 0.0), total(ds.num_sources(), 0.0);
  for (std::size_t i = 0; i < ds.num_rows(); ++i) {
    const std::size_t k = ds.cluster_of(i);
    for (std::size_t j = 0; j < ds.num_attributes(); ++j) {
      const auto* t = train_truth.find(k, j);
      if (!t) continue;
      total[ds.source_of(i)] += 1.0;
      if (ds.cell(i, j) == *t) correct[ds.source_of(i)] += 1.0;
    }
  }
  std::vector<double> acc(ds.num_sources());
  for (std::size_t s = 0; s < acc.size(); ++s) acc[s] = (correct[s] + 1.0) / (total[s] + 2.0);
  return acc;
}

/// Independent-source log-odds vote: score(v) = Σ over rows claiming v of
/// log a_s − log(1 − a_s), plus log(freq(v)/|E_k|). Ties go to the lower
/// candidate index.
inline PredictionTable counts_baseline(const FusionDataset& ds, const CandidateSets& sets,
                                       const GroundTruth& train_truth) {
  auto acc = source_accuracies(ds, train_truth);
  std::vector<double> weight(acc.size());
  for (std::size_t s = 0; s < acc.size(); ++s) weight[s] = std::log(acc[s]) - std::log(1.0 - acc[s]);
  PredictionTable out(ds.num_clusters(), std::vector<std::string>(ds.num_attributes()));
  for (std::size_t k = 0; k < ds.num_clusters(); ++k) {
    const auto members = ds.members(k);
    for (std::size_t j = 0; j < ds.num_attributes(); ++j) {
      const auto& cs = sets.at(k, j);
      std::vector<double> score(cs.size());
      for (std::size_t q = 0; q < cs.size(); ++q)
        score[q] = std::log(static_cast<double>(cs.freqs[q]) / static_cast<double>(members.size()));
      for (auto i : members) score[sets.cell_index(i, j)] += weight[ds.source_of(i)];
      std::size_t best = 0;
      for (std::size_t q = 1; q < cs.size(); ++q)
        if (score[q] > score[best]) best = q;
      out[k][j] = cs.values[best];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

/// One configuration evaluated over all seeds.
struct Variant {
  std::string name;
  FeatureConfig features;
  AugmentConfig augment;
  std::size_t stages = 0;
};

struct ExperimentConfig {
  double train_fraction = 0.05;
  double validation_fraction = 0.05;
  std::vector<std::uint64_t> seeds;  // empty: 0..49
  StagewiseConfig stagewise;
  FeatureConfig features;
  AugmentConfig augment{0.0, 0};
  /// Evaluated attributes by name; empty means all.
  std::vector<std::string> eval_attributes;
  bool ablate_models = false;
  bool ablate_groups = false;
  std::vector<double> augment_ratios;  // extra variants, one per ratio
  std::vector<std::size_t> stage_counts;  // extra variants, one per T
  std::size_t jobs = 1;                   // concurrent (seed, variant) runs

  std::vector<std::uint64_t> seed_list() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> s(50);
    std::iota(s.begin(), s.end(), std::uint64_t{0});
    return s;
  }

  std::vector<Variant> variants() const {
    std::vector<Variant> v;
    v.push_back({"full", features, augment, stagewise.train.stages});
    if (ablate_models) {
      for (auto m : kAllModels) {
        v.push_back({"-" + std::string(model_name(m)), features.without(m), augment, stagewise.train.stages});
      }
    }
    if (ablate_groups) {
      for (auto g : {ContextGroup::Attribute, ContextGroup::Record, ContextGroup::Dataset}) {
        v.push_back({"-group:" + std::string(group_name(g)), features.without(g), augment, stagewise.train.stages});
      }
    }
    for (double r : augment_ratios) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "ratio=%g", r);
      v.push_back({buf, features, AugmentConfig{r, augment.seed}, stagewise.train.stages});
    }
    for (auto t : stage_counts) v.push_back({"T=" + std::to_string(t), features, augment, t});
    return v;
  }
};

struct SeedResult {
  std::string variant;
  std::uint64_t seed = 0;
  double precision = 0.0;
  double mv_precision = 0.0;
  std::optional<double> counts_precision;
  std::size_t eval_cells = 0;
  std::size_t synthetic_clusters = 0;
};

struct Summary {
  double median = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;  // sample standard deviation / sqrt(n)
};

inline Summary summarize(std::vector<double> xs) {
  if (xs.empty()) throw Error("summarize: no values");
  Summary s;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  s.median = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  }
  return s;
}

struct VariantSummary {
  std::string variant;
  Summary precision;
  Summary mv;
  std::optional<Summary> counts;
  double delta_median = 0.0;  // against "full"
};

struct ExperimentReport {
  std::vector<SeedResult> runs;  // variant-major, seeds in config order
  std::vector<VariantSummary> summaries;
  double runtime_seconds = 0.0;  // not written to report files

  const VariantSummary& summary(std::string_view variant) const {
    for (const auto& s : summaries)
      if (s.variant == variant) return s;
    throw Error("report has no variant '" + std::string(variant) + "'");
  }

  /// Human-readable table.
  std::string text() const {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-24s %8s %8s %8s %8s %8s %8s\n", "variant", "median", "mean", "stderr", "delta",
                  "mv", "counts");
    out += buf;
    for (const auto& s : summaries) {
      std::string counts = s.counts ? fmt6(s.counts->median) : "-";
      std::snprintf(buf, sizeof buf, "%-24s %8.4f %8.4f %8.4f %+8.4f %8.4f %8s\n", s.variant.c_str(),
                    s.precision.median, s.precision.mean, s.precision.stderr_, s.delta_median, s.mv.median,
                    counts.c_str());
      out += buf;
    }
    return out;
  }

  /// One JSON object per line: every (variant, seed) run, then every
  /// variant summary.
  std::string jsonl() const {
    std::string out;
    for (const auto& r : runs) {
      nlohmann::ordered_json j{{"type", "run"},
                               {"variant", r.variant},
                               {"seed", r.seed},
                               {"precision", round6(r.precision)},
                               {"mv_precision", round6(r.mv_precision)},
                               {"eval_cells", r.eval_cells},
                               {"synthetic_clusters", r.synthetic_clusters}};
      if (r.counts_precision) j["counts_precision"] = round6(*r.counts_precision);
      out += j.dump() + "\n";
    }
    for (const auto& s : summaries) {
      nlohmann::ordered_json j{{"type", "summary"},
                               {"variant", s.variant},
                               {"median", round6(s.precision.median)},
                               {"mean", round6(s.precision.mean)},
                               {"stderr", round6(s.precision.stderr_)},
                               {"delta_median", round6(s.delta_median)},
                               {"mv_median", round6(s.mv.median)}};
      if (s.counts) j["counts_median"] = round6(s.counts->median);
      out += j.dump() + "\n";
    }
    return out;
  }

 private:
  static std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
  }
  static double round6(double v) { return std::round(v * 1e6) / 1e6; }
};

/// Everything one (seed, variant) run produces, for callers that want the
/// trained models or the per-stage observations.
struct RunArtifacts {
  SeedResult result;
  StagewiseResult trained;
  Split split;
};

inline std::vector<std::size_t> resolve_attributes(const FusionDataset& ds, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  if (names.empty()) {
    for (std::size_t j = 0; j < ds.num_attributes(); ++j) out.push_back(j);
    return out;
  }
  for (const auto& n : names) {
    auto j = ds.attribute_index(n);
    if (!j) throw Error("unknown evaluation attribute '" + n + "'");
    out.push_back(*j);
  }
  return out;
}

/// split → augment → stagewise training → fuse → precision on the test
/// clusters, for one seed and one variant.
inline RunArtifacts run_once(const FusionDataset& ds, const GroundTruth& full_truth, const ExperimentConfig& cfg,
                             const Variant& variant, std::uint64_t seed, const StageObserver& observer = {}) {
  RunArtifacts art;
  art.split = split(ds.num_clusters(), cfg.train_fraction, cfg.validation_fraction, seed);
  const auto train_truth = full_truth.restricted_to(art.split.train);

  AugmentConfig aug = variant.augment;
  aug.seed = detail::mix64(aug.seed ^ detail::mix64(seed + 0x51ed270b27dbbe2fULL));
  auto synth = augment_entities(ds, train_truth, art.split.train, aug);
  auto [work_ds, work_truth] = append_synthetic(ds, train_truth, synth);

  CandidateSets sets(work_ds);
  work_truth.validate(work_ds, sets);
  Featurizer fz(work_ds, sets, variant.features);
  StagewiseConfig sc = cfg.stagewise;
  sc.train.stages = variant.stages;
  sc.train.seed = detail::mix64(cfg.stagewise.train.seed ^ detail::mix64(seed + 0x3c6ef372fe94f82bULL));
  art.trained = stagewise_train(fz, work_truth, sc, observer);
  auto fused = fused_table(work_ds, sets, work_truth, art.trained);

  // Original clusters keep their indices in work_ds; fused rows skip the
  // synthetic ones, which come last.
  PredictionTable predicted = fused.values;
  CandidateSets orig_sets(ds);
  const auto mv = majority_vote_baseline(ds, orig_sets);
  std::vector<CellRef> eval;
  for (auto k : art.split.test)
    for (auto j : resolve_attributes(ds, cfg.eval_attributes)) eval.emplace_back(k, j);
  std::sort(eval.begin(), eval.end());

  auto& r = art.result;
  r.variant = variant.name;
  r.seed = seed;
  r.precision = precision(predicted, full_truth, eval);
  r.mv_precision = precision(mv, full_truth, eval);
  if (ds.has_sources()) r.counts_precision = precision(counts_baseline(ds, orig_sets, train_truth), full_truth, eval);
  r.eval_cells = eval.size();
  r.synthetic_clusters = synth.size();
  return art;
}

/// Runs every variant over every seed and aggregates.
inline ExperimentReport run_experiment(const FusionDataset& ds, const GroundTruth& full_truth,
                                       const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto seeds = cfg.seed_list();
  const auto variants = cfg.variants();
  ExperimentReport rep;
  rep.runs.resize(seeds.size() * variants.size());
  parallel_for(rep.runs.size(), cfg.jobs, [&](std::size_t idx) {
    const auto& v = variants[idx / seeds.size()];
    rep.runs[idx] = run_once(ds, full_truth, cfg, v, seeds[idx % seeds.size()]).result;
  });
  double full_median = 0.0;
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    std::vector<double> p, mv, counts;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const auto& r = rep.runs[vi * seeds.size() + si];
      p.push_back(r.precision);
      mv.push_back(r.mv_precision);
      if (r.counts_precision) counts.push_back(*r.counts_precision);
    }
    VariantSummary s;
    s.variant = variants[vi].name;
    s.precision = summarize(p);
    s.mv = summarize(mv);
    if (!counts.empty()) s.counts = summarize(counts);
    if (vi == 0) full_median = s.precision.median;
    s.delta_median = s.precision.median - full_median;
    rep.summaries.push_back(std::move(s));
  }
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace recfuse
