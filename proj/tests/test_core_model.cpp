#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "helpers.hpp"

using namespace recfuse;
using rtest::make_dataset;

TEST(CandidateSet, FigureOneStyleClusterKeepsBothClaims) {
  auto ds = make_dataset({"State"}, {{"c3", {"WA"}}, {"c3", {"New York"}}, {"c3", {"WA"}}});
  CandidateSets sets(ds);
  const auto& cs = sets.at(0, 0);
  EXPECT_EQ(cs.values, (std::vector<std::string>{"WA", "New York"}));
  EXPECT_EQ(cs.freqs, (std::vector<std::size_t>{2, 1}));
}

TEST(CandidateSet, SingletonAndOrdering) {
  auto ds = make_dataset({"A"}, {{"k", {"x"}}, {"m", {"b"}}, {"m", {"a"}}, {"m", {"b"}}, {"m", {"c"}}, {"m", {"a"}}});
  CandidateSets sets(ds);
  EXPECT_EQ(sets.at(0, 0).values, std::vector<std::string>{"x"});
  EXPECT_EQ(sets.at(0, 0).freqs, std::vector<std::size_t>{1});
  // Ties on frequency go to byte order.
  EXPECT_EQ(sets.at(1, 0).values, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(CandidateSet, MatchesBruteForceAndIsPermutationInvariant) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto ds = rtest::random_dataset(rng, 40, 3);
    CandidateSets sets(ds);
    // Reverse the row order and rebuild.
    std::vector<rtest::Row> rev;
    for (std::size_t i = ds.num_rows(); i-- > 0;) rev.push_back({ds.cluster_name(ds.cluster_of(i)), ds.row(i), ""});
    auto ds2 = make_dataset(ds.schema(), rev);
    CandidateSets sets2(ds2);
    for (std::size_t k = 0; k < ds.num_clusters(); ++k) {
      const auto k2 = *ds2.cluster_index(ds.cluster_name(k));
      for (std::size_t j = 0; j < ds.num_attributes(); ++j) {
        std::map<std::string, std::size_t> count;
        for (auto i : ds.members(k)) ++count[ds.cell(i, j)];
        std::vector<std::pair<std::string, std::size_t>> expect(count.begin(), count.end());
        std::stable_sort(expect.begin(), expect.end(), [](auto& a, auto& b) { return a.second > b.second; });
        const auto& cs = sets.at(k, j);
        ASSERT_EQ(cs.size(), expect.size());
        for (std::size_t q = 0; q < cs.size(); ++q) {
          EXPECT_EQ(cs.values[q], expect[q].first);
          EXPECT_EQ(cs.freqs[q], expect[q].second);
        }
        EXPECT_EQ(sets2.at(k2, j).values, cs.values);
      }
    }
  }
}

TEST(LabelDimension, MaxOverClusters) {
  auto ds = make_dataset({"A", "B"}, {{"1", {"a", "z"}},
                                      {"1", {"b", "z"}},
                                      {"2", {"a", "z"}},
                                      {"2", {"b", "z"}},
                                      {"2", {"c", "z"}},
                                      {"3", {"q", "z"}}});
  CandidateSets sets(ds);
  EXPECT_EQ(label_dimension(sets, 0), 3u);
  EXPECT_EQ(label_dimension(sets, 1), 1u);
}

TEST(LabelDimension, RandomDatasetsMatchScan) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto ds = rtest::random_dataset(rng, 60, 2);
    CandidateSets sets(ds);
    for (std::size_t j = 0; j < 2; ++j) {
      std::size_t best = 0;
      for (std::size_t k = 0; k < ds.num_clusters(); ++k) {
        std::vector<std::string> seen;
        for (auto i : ds.members(k))
          if (std::find(seen.begin(), seen.end(), ds.cell(i, j)) == seen.end()) seen.push_back(ds.cell(i, j));
        best = std::max(best, seen.size());
      }
      EXPECT_EQ(label_dimension(sets, j), best);
    }
  }
}

TEST(WeakLabels, MajorityFirstTiesAndTruthOverride) {
  auto ds = make_dataset({"A"}, {{"1", {"p"}}, {"1", {"p"}}, {"1", {"p"}}, {"1", {"q"}},
                                 {"2", {"x"}}, {"2", {"y"}}, {"2", {"y"}}, {"2", {"x"}}});
  CandidateSets sets(ds);
  auto w = weak_labels(sets);
  EXPECT_EQ(w.at(0, 0), 0u);
  EXPECT_EQ(w.at(1, 0), 0u);
  EXPECT_EQ(sets.at(1, 0).values[0], "x");
  GroundTruth truth;
  truth.set(0, 0, "q");
  EXPECT_EQ(weak_labels(sets, truth).at(0, 0), 1u);
  EXPECT_EQ(weak_labels(sets, truth).label(0, 0, 3), (LabelVector{3, 1}));
}

TEST(GroundTruth, ValueOutsideCandidateSetNamesTheCell) {
  auto ds = make_dataset({"A"}, {{"c1", {"p"}}});
  CandidateSets sets(ds);
  GroundTruth truth;
  truth.set(0, 0, "nope");
  try {
    truth.validate(ds, sets);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("c1"), std::string::npos);
  }
}

TEST(FusionDataset, RejectsBadShapes) {
  EXPECT_THROW(make_dataset({"A", "B"}, {{"1", {"x"}}}), DataError);
  EXPECT_THROW(make_dataset({"A", "A"}, {{"1", {"x", "y"}}}), DataError);
  EXPECT_THROW(make_dataset({"A"}, {{"1", {"x"}, "s1"}, {"1", {"y"}}}), DataError);
}

TEST(FusionDataset, TrimsCellsAndIndexesClusters) {
  auto ds = make_dataset({"A"}, {{"b", {"  x "}}, {"a", {"y"}}, {"b", {"z"}}});
  EXPECT_EQ(ds.cell(0, 0), "x");
  EXPECT_EQ(ds.num_clusters(), 2u);
  EXPECT_EQ(ds.cluster_name(0), "b");
  EXPECT_EQ(ds.members(0).size(), 2u);
  EXPECT_EQ(ds.cluster_index("a"), 1u);
  EXPECT_FALSE(ds.cluster_index("c").has_value());
}
