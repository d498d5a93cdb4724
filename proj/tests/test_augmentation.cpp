#include <gtest/gtest.h>

#include <set>

#include "helpers.hpp"

using namespace recfuse;

namespace {

std::string symbols(const FormatString& f) {
  std::string out;
  for (const auto& s : f.symbols) out += "[" + s.str() + "]";
  return out;
}

std::string random_string(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces{"a", "Z", "q", "0", "7", "-", "#", " ", ".", "\xc3\xa9",
                                               "\xe6\x97\xa5", "\xf0\x9f\x98\x80", "\xff", "\xc3"};
  std::string s;
  switch (rng() % 5) {
    case 0: return s;
    case 1:
      for (std::size_t i = 0, n = 1 + rng() % 10; i < n; ++i) s += static_cast<char>('0' + rng() % 10);
      return s;
    case 2:
      for (std::size_t i = 0, n = 1 + rng() % 10; i < n; ++i) s += "!?#-/"[rng() % 5];
      return s;
    default:
      for (std::size_t i = 0, n = rng() % 16; i < n; ++i) s += pieces[rng() % pieces.size()];
      return s;
  }
}

}  // namespace

TEST(FormatMap, WorkedExamples) {
  auto g = format_map("New York-#401H3");
  EXPECT_EQ(symbols(g), "[S2][ ][S2][-][#][T2][S1][T1]");
  EXPECT_EQ(g.inverse[0], "New");
  EXPECT_EQ(g.inverse[5], "401");
  EXPECT_EQ(symbols(format_map("Toronto-#21LG")), "[S2][-][#][T2][S2]");
  EXPECT_EQ(symbols(format_map("A")), "[S1]");
  EXPECT_EQ(symbols(format_map("7")), "[T1]");
  EXPECT_EQ(format_map("").size(), 0u);
}

TEST(FormatMap, RoundTripAndCoalescing) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10000; ++trial) {
    auto s = random_string(rng);
    auto f = format_map(s);
    ASSERT_EQ(f.source(), s);
    for (std::size_t i = 1; i < f.size(); ++i) {
      auto cls = [](const FormatSymbol& x) {
        using K = FormatSymbol::Kind;
        return x.kind == K::S1 || x.kind == K::S2 ? 1 : (x.kind == K::T1 || x.kind == K::T2 ? 2 : 0);
      };
      const int a = cls(f.symbols[i - 1]), b = cls(f.symbols[i]);
      EXPECT_FALSE(a != 0 && a == b) << s;
    }
  }
}

TEST(LcsFormat, Examples) {
  auto m = lcs_format(format_map("New York-#401H3"), format_map("Toronto-#21LG"));
  FormatString expect;
  expect.symbols = format_map("York-#401").symbols;
  EXPECT_EQ(m.symbols, expect.symbols);
  EXPECT_EQ(m.pos_first, 2u);
  EXPECT_EQ(m.pos_second, 0u);
  auto same = format_map("ab-12");
  EXPECT_EQ(lcs_format(same, same).length, same.size());
  EXPECT_EQ(lcs_format(format_map("abc"), format_map("123")).length, 0u);
  // Leftmost in the first string wins a tie.
  auto tie = lcs_format(format_map("a-b"), format_map("x"));
  EXPECT_EQ(tie.pos_first, 0u);
}

TEST(LcsFormat, MatchesBruteForce) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    auto g = format_map(random_string(rng)), h = format_map(random_string(rng));
    std::size_t best = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < h.size(); ++j) {
        std::size_t L = 0;
        while (i + L < g.size() && j + L < h.size() && g.symbols[i + L] == h.symbols[j + L]) ++L;
        best = std::max(best, L);
      }
    EXPECT_EQ(lcs_format(g, h).length, best);
  }
}

TEST(AugmentCell, Examples) {
  EXPECT_EQ(augment_cell("New York-#401H3", "Toronto-#21LG"), "York-#401");
  EXPECT_EQ(augment_cell("abc", "123"), "");
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    auto s = random_string(rng), t = random_string(rng);
    EXPECT_EQ(augment_cell(s, s), s);
    auto out = augment_cell(s, t);
    EXPECT_EQ(format_map(out).symbols, lcs_format(format_map(s), format_map(t)).symbols) << s << " / " << t;
  }
}

TEST(AugmentEntities, CountsNamesAndLabels) {
  EXPECT_EQ(augment_count(0.1, 50), 5u);
  EXPECT_EQ(augment_count(0.1, 200), 20u);
  EXPECT_EQ(augment_count(0.0, 200), 0u);
  EXPECT_EQ(augment_count(0.15, 10), 2u);

  auto bm = rtest::small_benchmark(8, 200);
  std::vector<std::size_t> sources(bm.dataset.num_clusters());
  for (std::size_t k = 0; k < sources.size(); ++k) sources[k] = k;
  AugmentConfig cfg;
  cfg.seed = 17;
  EXPECT_TRUE(augment_entities(bm.dataset, bm.truth, sources, AugmentConfig{0.0, 1}).empty());
  auto synth = augment_entities(bm.dataset, bm.truth, sources, cfg);
  ASSERT_EQ(synth.size(), 20u);
  std::set<std::string> names;
  for (const auto& sc : synth) {
    EXPECT_EQ(sc.cluster_id.rfind("aug_", 0), 0u);
    names.insert(sc.cluster_id);
    EXPECT_EQ(sc.rows.size(), bm.dataset.members(sc.source_cluster).size());
  }
  EXPECT_EQ(names.size(), synth.size());

  auto [aug, truth] = append_synthetic(bm.dataset, bm.truth, synth);
  EXPECT_EQ(aug.num_clusters(), bm.dataset.num_clusters() + 20);
  CandidateSets sets(aug);
  EXPECT_NO_THROW(truth.validate(aug, sets));
  for (std::size_t k = bm.dataset.num_clusters(); k < aug.num_clusters(); ++k) {
    EXPECT_TRUE(aug.is_synthetic(k));
    for (std::size_t j = 0; j < aug.num_attributes(); ++j) EXPECT_TRUE(truth.contains(k, j));
  }
  auto again = augment_entities(bm.dataset, bm.truth, sources, cfg);
  for (std::size_t s = 0; s < synth.size(); ++s) EXPECT_EQ(again[s].rows, synth[s].rows);
}

TEST(AugmentEntities, CorrectCellsAreKept) {
  auto ds = rtest::make_dataset({"A"}, {{"k", {"New York-#401H3"}}, {"k", {"Boston"}}, {"m", {"Toronto-#21LG"}}});
  GroundTruth truth;
  truth.set(0, 0, "Boston");
  std::vector<std::size_t> src{0};
  auto synth = augment_entities(ds, truth, src, AugmentConfig{1.0, 4});
  ASSERT_EQ(synth.size(), 2u);
  for (const auto& sc : synth) {
    EXPECT_EQ(sc.labels[0], "Boston");
    EXPECT_EQ(sc.rows[1][0], "Boston");
  }
  GroundTruth none;
  EXPECT_THROW(augment_entities(ds, none, src, AugmentConfig{1.0, 4}), Error);
  EXPECT_THROW(augment_entities(ds, truth, src, AugmentConfig{-1.0, 4}), Error);
}
