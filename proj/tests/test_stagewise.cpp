#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace recfuse;

namespace {

struct Fixture {
  Benchmark bm = rtest::small_benchmark(5, 40);
  CandidateSets sets{bm.dataset};
  GroundTruth labeled;

  Fixture() {
    // Every fourth cluster labeled.
    for (const auto& [key, v] : bm.truth.entries())
      if (key.first % 4 == 0) labeled.set(key.first, key.second, v);
  }
};

StagewiseConfig small_config(std::size_t stages, RunningSource running = RunningSource::Prediction) {
  StagewiseConfig cfg;
  cfg.train = rtest::fast_train(stages);
  cfg.train.epochs = 20;
  cfg.running = running;
  return cfg;
}

}  // namespace

TEST(Stagewise, LabeledCellsArePinnedAtEveryStage) {
  Fixture f;
  Featurizer fz(f.bm.dataset, f.sets, FeatureConfig{});
  const auto& ds = f.bm.dataset;
  std::size_t seen = 0;
  stagewise_train(fz, f.labeled, small_config(3), [&](const StageObservation& o) {
    ++seen;
    for (std::size_t i = 0; i < ds.num_rows(); ++i) {
      const auto k = ds.cluster_of(i);
      const auto* v = f.labeled.find(k, o.attribute);
      if (!v) {
        EXPECT_EQ(o.targets->weights[i], 0.0);
        continue;
      }
      const auto idx = *f.sets.at(k, o.attribute).index_of(*v);
      EXPECT_EQ(o.working->at(k, o.attribute), idx);
      EXPECT_EQ(o.targets->of(i)[idx], 1.0);
      EXPECT_EQ(o.targets->weights[i], 1.0);
    }
  });
  EXPECT_EQ(seen, 4 * ds.num_attributes());
}

TEST(Stagewise, EarlierStagesAreFrozen) {
  Fixture f;
  Featurizer fz(f.bm.dataset, f.sets, FeatureConfig{});
  std::vector<std::vector<SoftmaxStage>> observed(f.bm.dataset.num_attributes());
  auto res = stagewise_train(fz, f.labeled, small_config(2),
                             [&](const StageObservation& o) { observed[o.attribute].push_back(*o.model); });
  for (std::size_t j = 0; j < res.models.size(); ++j) {
    EXPECT_EQ(res.models[j].T(), 2u);
    EXPECT_EQ(res.models[j].stages, observed[j]);
  }
}

TEST(Stagewise, StaticBlockStableAcrossStages) {
  Fixture f;
  Featurizer fz(f.bm.dataset, f.sets, FeatureConfig{});
  std::vector<std::vector<double>> first(f.bm.dataset.num_attributes());
  stagewise_train(fz, f.labeled, small_config(2), [&](const StageObservation& o) {
    const auto nu = fz.layout(o.attribute).nu;
    std::vector<double> st;
    for (std::size_t i = 0; i < o.features->rows; ++i) {
      auto r = o.features->row(i);
      st.insert(st.end(), r.begin(), r.begin() + static_cast<std::ptrdiff_t>(nu));
    }
    if (o.stage == 0) first[o.attribute] = st;
    else EXPECT_EQ(st, first[o.attribute]);
  });
}

TEST(Stagewise, CascadeReproducesTrainingPredictions) {
  Fixture f;
  Featurizer fz(f.bm.dataset, f.sets, FeatureConfig{});
  for (auto running : {RunningSource::Prediction, RunningSource::Working}) {
    auto cfg = small_config(2, running);
    auto res = stagewise_train(fz, f.labeled, cfg);
    auto replay = cascade(fz, res.models, f.labeled, running);
    ASSERT_EQ(replay.predictions.size(), res.predictions.size());
    for (std::size_t j = 0; j < res.predictions.size(); ++j)
      for (std::size_t k = 0; k < res.predictions[j].size(); ++k) {
        EXPECT_EQ(replay.predictions[j][k].index, res.predictions[j][k].index);
        EXPECT_EQ(replay.predictions[j][k].confidence, res.predictions[j][k].confidence);
      }
    EXPECT_EQ(replay.working, res.working);
  }
}

TEST(Stagewise, ParallelMatchesSequential) {
  Fixture f;
  Featurizer fz(f.bm.dataset, f.sets, FeatureConfig{});
  auto cfg = small_config(1);
  auto a = stagewise_train(fz, f.labeled, cfg);
  cfg.jobs = 3;
  auto b = stagewise_train(fz, f.labeled, cfg);
  for (std::size_t j = 0; j < a.models.size(); ++j) EXPECT_EQ(a.models[j].stages, b.models[j].stages);
}

TEST(Stagewise, ZeroStagesIsASingleModel) {
  Fixture f;
  Featurizer fz(f.bm.dataset, f.sets, FeatureConfig{});
  auto res = stagewise_train(fz, f.labeled, small_config(0));
  for (const auto& m : res.models) EXPECT_EQ(m.stages.size(), 1u);
  auto single = stagewise_train(fz, 1, f.labeled, small_config(0));
  EXPECT_EQ(single.stages.size(), 1u);
  EXPECT_EQ(single.attribute_name, f.bm.dataset.schema()[1]);
}

TEST(Stagewise, FusedTableEmitsTruthForLabeledCells) {
  Fixture f;
  Featurizer fz(f.bm.dataset, f.sets, FeatureConfig{});
  auto res = stagewise_train(fz, f.labeled, small_config(1));
  auto table = fused_table(f.bm.dataset, f.sets, f.labeled, res);
  ASSERT_EQ(table.values.size(), f.bm.dataset.num_clusters());
  for (const auto& [key, v] : f.labeled.entries()) {
    EXPECT_EQ(table.values[key.first][key.second], v);
    EXPECT_EQ(table.confidence[key.first][key.second], 1.0);
  }
  auto direct = fuse_dataset(res.models, f.bm.dataset, f.labeled, RunningSource::Prediction);
  EXPECT_EQ(direct.values, table.values);
}

TEST(Stagewise, CascadeRejectsMismatchedModels) {
  Fixture f;
  Featurizer fz(f.bm.dataset, f.sets, FeatureConfig{});
  auto res = stagewise_train(fz, f.labeled, small_config(0));
  auto models = res.models;
  models.pop_back();
  EXPECT_THROW(cascade(fz, models, f.labeled, RunningSource::Prediction), Error);
  models = res.models;
  std::swap(models[0], models[1]);
  EXPECT_THROW(cascade(fz, models, f.labeled, RunningSource::Prediction), Error);
  Featurizer narrow(f.bm.dataset, f.sets, FeatureConfig{}.without(RepresentationModel::Vote));
  EXPECT_THROW(cascade(narrow, res.models, f.labeled, RunningSource::Prediction), Error);
}
