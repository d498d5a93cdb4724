#pragma once

// Cell-level prediction and cluster-level fusion.

#include <cstddef>
#include <span>
#include <vector>

#include "recfuse/core_model.hpp"
#include "recfuse/error.hpp"
#include "recfuse/featurizer.hpp"
#include "recfuse/learner.hpp"

namespace recfuse {

struct PredictionDistribution {
  Vector probs;  // ρ_j entries
  std::size_t candidate_count = 0;
};

inline PredictionDistribution predict_cell(const SoftmaxStage& stage, std::span<const double> features,
                                           std::size_t candidate_count) {
  if (candidate_count == 0 || candidate_count > stage.rho) throw Error("predict_cell: bad candidate count");
  return {softmax_forward(stage, features), candidate_count};
}

/// Distribution of the final stage h^[T] for one cell.
inline PredictionDistribution predict_cell(const AttributeModel& model, const CellFeatures& features,
                                           std::size_t candidate_count) {
  return predict_cell(model.final_stage(), features.values(), candidate_count);
}

/// Mean of the distributions, then argmax over [0, candidate_count) with
/// the lowest index winning ties.
inline std::size_t fuse_cluster(std::span<const Vector> distributions, std::size_t candidate_count) {
  if (distributions.empty()) throw Error("fuse_cluster: no distributions");
  const std::size_t rho = distributions[0].size();
  if (candidate_count == 0 || candidate_count > rho) throw Error("fuse_cluster: bad candidate count");
  Vector mean(rho, 0.0);
  for (const auto& d : distributions) {
    if (d.size() != rho) throw Error("fuse_cluster: distributions differ in width");
    for (std::size_t r = 0; r < rho; ++r) mean[r] += d[r];
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < candidate_count; ++r)
    if (mean[r] > mean[best]) best = r;
  return best;
}

struct ClusterPrediction {
  std::size_t index = 0;
  double confidence = 0.0;  // renormalised probability of `index`
  Vector mean;              // mean distribution restricted to the candidates, renormalised
};

/// Fused prediction for every cluster of column j from one stage, given
/// that column's feature matrix.
inline std::vector<ClusterPrediction> predict_clusters(const SoftmaxStage& stage, const FeatureMatrix& X,
                                                       const FusionDataset& ds, const CandidateSets& sets,
                                                       std::size_t attribute) {
  if (X.cols != stage.b) {
    throw Error("predict_clusters: feature width " + std::to_string(X.cols) + " does not match model width " +
                std::to_string(stage.b));
  }
  std::vector<Vector> cell(ds.num_rows());
  for (std::size_t i = 0; i < ds.num_rows(); ++i) cell[i] = softmax_forward(stage, X.row(i));
  std::vector<ClusterPrediction> out(ds.num_clusters());
  std::vector<Vector> group;
  for (std::size_t k = 0; k < ds.num_clusters(); ++k) {
    group.clear();
    for (auto i : ds.members(k)) group.push_back(cell[i]);
    const std::size_t cc = sets.at(k, attribute).size();
    auto& p = out[k];
    p.index = fuse_cluster(group, cc);
    p.mean.assign(cc, 0.0);
    double total = 0.0;
    for (const auto& d : group) {
      for (std::size_t r = 0; r < cc; ++r) p.mean[r] += d[r];
    }
    for (double v : p.mean) total += v;
    for (double& v : p.mean) v /= total;
    p.confidence = p.mean[p.index];
  }
  return out;
}

}  // namespace recfuse
