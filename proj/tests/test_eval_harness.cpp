#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"

using namespace recfuse;

TEST(Split, DisjointCoveringAndSeeded) {
  for (std::uint64_t seed : {0u, 1u, 7u}) {
    auto s = split(200, 0.05, 0.05, seed);
    EXPECT_EQ(s.train.size(), 10u);
    EXPECT_EQ(s.validation.size(), 10u);
    EXPECT_EQ(s.test.size(), 180u);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.validation.begin(), s.validation.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), 200u);
    EXPECT_EQ(split(200, 0.05, 0.05, seed).train, s.train);
  }
  EXPECT_NE(split(200, 0.05, 0.05, 1).train, split(200, 0.05, 0.05, 2).train);
  EXPECT_THROW(split(10, 0.6, 0.4, 0), Error);
  EXPECT_THROW(split(10, 0.01, 0.0, 0), Error);
}

TEST(Precision, CountsMatches) {
  GroundTruth t;
  t.set(0, 0, "a");
  t.set(1, 0, "b");
  PredictionTable p{{"a"}, {"c"}};
  std::vector<CellRef> eval{{0, 0}, {1, 0}};
  EXPECT_DOUBLE_EQ(precision(p, t, eval), 0.5);
  EXPECT_THROW(precision(p, t, std::vector<CellRef>{}), Error);
}

TEST(MajorityVote, MatchesBruteForce) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    auto ds = rtest::random_dataset(rng, 200, 2);
    CandidateSets sets(ds);
    auto mv = majority_vote_baseline(ds, sets);
    for (std::size_t k = 0; k < ds.num_clusters(); ++k)
      for (std::size_t j = 0; j < 2; ++j) {
        std::map<std::string, int> count;
        for (auto i : ds.members(k)) ++count[ds.cell(i, j)];
        std::string best;
        int most = -1;
        for (const auto& [v, n] : count)  // map order: bytes ascending, so ">" keeps the smallest
          if (n > most) most = n, best = v;
        EXPECT_EQ(mv[k][j], best);
      }
  }
}

TEST(Counts, ReliableSourceOutvotesMajority) {
  // s1 is right on the labeled cluster, s2 and s3 are wrong; on the test
  // cluster s1 stands alone against a 2-row majority.
  auto ds = rtest::make_dataset({"A"}, {{"train", {"t"}, "s1"},
                                       {"train", {"u"}, "s2"},
                                       {"train", {"v"}, "s3"},
                                       {"test", {"x"}, "s1"},
                                       {"test", {"y"}, "s2"},
                                       {"test", {"y"}, "s3"}});
  CandidateSets sets(ds);
  GroundTruth labels;
  labels.set(0, 0, "t");
  auto acc = source_accuracies(ds, labels);
  EXPECT_DOUBLE_EQ(acc[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(acc[1], 1.0 / 3.0);
  auto pred = counts_baseline(ds, sets, labels);
  EXPECT_EQ(pred[1][0], "x");
  // Without labels every source weighs 0 and counts reduces to MV.
  EXPECT_EQ(counts_baseline(ds, sets, GroundTruth{})[1][0], "y");
  auto nosrc = rtest::make_dataset({"A"}, {{"k", {"x"}}});
  CandidateSets ns(nosrc);
  EXPECT_THROW(counts_baseline(nosrc, ns, labels), Error);
}

TEST(Summarize, MedianMeanStderr) {
  auto s = summarize({3.0, 1.0, 2.0, 4.0});
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stderr_, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(summarize({0.7}).stderr_, 0.0);
  EXPECT_THROW(summarize({}), Error);
}

namespace {

double mv_on_noisy(const Benchmark& bm) {
  CandidateSets sets(bm.dataset);
  auto mv = majority_vote_baseline(bm.dataset, sets);
  std::vector<CellRef> eval;
  for (std::size_t k = 0; k < bm.dataset.num_clusters(); ++k)
    for (auto j : bm.noisy_attributes()) eval.emplace_back(k, j);
  return precision(mv, bm.truth, eval);
}

}  // namespace

TEST(Generator, CleanBenchmarkIsSolvedByMajority) {
  BenchmarkSpec spec;
  spec.corruption = 0.0;
  auto bm = generate_benchmark(spec, 1);
  EXPECT_EQ(mv_on_noisy(bm), 1.0);
}

TEST(Generator, DefaultCorruptionCapsMajorityVote) {
  BenchmarkSpec spec;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto bm = generate_benchmark(spec, seed);
    EXPECT_EQ(bm.dataset.num_clusters(), 200u);
    EXPECT_EQ(bm.dataset.num_rows(), 200u * 6u);
    EXPECT_EQ(bm.truth.size(), 200u * 5u);
    CandidateSets sets(bm.dataset);
    EXPECT_NO_THROW(bm.truth.validate(bm.dataset, sets));
    EXPECT_NEAR(mv_on_noisy(bm), 0.6, 0.05) << seed;
  }
}

TEST(Generator, DeterministicAndValidated) {
  BenchmarkSpec spec;
  spec.clusters = 30;
  spec.sources = 3;
  auto a = generate_benchmark(spec, 9), b = generate_benchmark(spec, 9);
  EXPECT_EQ(format_dataset(a.dataset), format_dataset(b.dataset));
  EXPECT_EQ(a.truth.entries(), b.truth.entries());
  EXPECT_TRUE(a.dataset.has_sources());
  EXPECT_FALSE(a.dataset.constraints().empty());
  for (auto bad : {BenchmarkSpec{.rows = 4}, BenchmarkSpec{.corruption = 0.6}, BenchmarkSpec{.attributes = 2},
                   BenchmarkSpec{.sources = 1}, BenchmarkSpec{.clusters = 0}}) {
    EXPECT_THROW(generate_benchmark(bad, 0), Error);
  }
}

TEST(Generator, ConstraintsHoldOnTruth) {
  auto bm = rtest::small_benchmark(6, 100);
  CandidateSets sets(bm.dataset);
  LabelTable truth_table = weak_labels(sets, bm.truth);
  ViolationCounter vc(bm.dataset, sets, truth_table, PartnerValues::Working);
  // Rows carrying the true value have no working-mode violations.
  for (const auto& dc : bm.dataset.constraints()) {
    auto counts = vc.counts(dc);
    for (std::size_t i = 0; i < bm.dataset.num_rows(); ++i) {
      const auto k = bm.dataset.cluster_of(i);
      bool faithful = true;
      for (auto a : dc.attributes()) faithful &= bm.dataset.cell(i, a) == *bm.truth.find(k, a);
      if (faithful) {
        EXPECT_EQ(counts[i], 0u);
      }
    }
  }
}

namespace {

ExperimentConfig tiny_experiment() {
  ExperimentConfig cfg;
  cfg.train_fraction = 0.2;
  cfg.validation_fraction = 0.1;
  cfg.seeds = {0, 1};
  cfg.stagewise.train = rtest::fast_train(1);
  cfg.stagewise.train.epochs = 20;
  cfg.augment = {0.1, 0};
  return cfg;
}

}  // namespace

TEST(Experiment, SmokeAndDeterminism) {
  auto bm = rtest::small_benchmark(3, 40);
  auto cfg = tiny_experiment();
  cfg.eval_attributes = {bm.dataset.schema()[1], bm.dataset.schema()[2]};
  cfg.ablate_groups = true;
  cfg.jobs = 2;
  auto rep = run_experiment(bm.dataset, bm.truth, cfg);
  ASSERT_EQ(rep.summaries.size(), 4u);
  EXPECT_EQ(rep.runs.size(), 8u);
  for (const auto& r : rep.runs) {
    EXPECT_GE(r.precision, 0.0);
    EXPECT_LE(r.precision, 1.0);
    EXPECT_EQ(r.eval_cells, 2u * 28u);
    EXPECT_EQ(r.synthetic_clusters, 4u);
  }
  EXPECT_EQ(rep.summary("full").delta_median, 0.0);
  cfg.jobs = 1;
  auto again = run_experiment(bm.dataset, bm.truth, cfg);
  EXPECT_EQ(again.text(), rep.text());
  EXPECT_EQ(again.jsonl(), rep.jsonl());
  EXPECT_THROW(rep.summary("nope"), Error);
}

TEST(Experiment, TestClustersNeverTrain) {
  auto bm = rtest::small_benchmark(3, 40);
  auto cfg = tiny_experiment();
  auto v = cfg.variants().front();
  auto art = run_once(bm.dataset, bm.truth, cfg, v, 5);
  std::set<std::size_t> test(art.split.test.begin(), art.split.test.end());
  // Labels reach training only through the working table: test clusters
  // must carry their weak labels there, never the truth when it differs.
  CandidateSets sets(bm.dataset);
  std::size_t differ = 0;
  for (auto k : test)
    for (std::size_t j = 0; j < bm.dataset.num_attributes(); ++j)
      differ += sets.at(k, j).values[0] != *bm.truth.find(k, j);
  EXPECT_GT(differ, 0u);
  EXPECT_EQ(art.result.eval_cells, test.size() * bm.dataset.num_attributes());
}

TEST(Experiment, VariantNames) {
  ExperimentConfig cfg;
  cfg.ablate_models = true;
  cfg.augment_ratios = {0.05};
  cfg.stage_counts = {1};
  auto v = cfg.variants();
  ASSERT_EQ(v.size(), 1 + kAllModels.size() + 2);
  EXPECT_EQ(v[1].name, "-format");
  EXPECT_EQ(v[v.size() - 2].name, "ratio=0.05");
  EXPECT_EQ(v.back().name, "T=1");
  EXPECT_EQ(cfg.seed_list().size(), 50u);
}
