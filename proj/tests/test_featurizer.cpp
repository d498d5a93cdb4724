#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"

using namespace recfuse;
using rtest::make_dataset;

TEST(Format, TokenizeAndBigrams) {
  EXPECT_EQ(tokenize_format("Google"), "AAAAAA");
  EXPECT_EQ(tokenize_format("Google Inc."), "AAAAAASAAAS");
  EXPECT_EQ(tokenize_format("12-B"), "NNSA");
  EXPECT_EQ(tokenize_format(""), "");
  // Non-ASCII letters are symbols; a multi-byte code point is one token.
  EXPECT_EQ(tokenize_format("\xc3\xa9t\xc3\xa9"), "SAS");

  EXPECT_EQ(bigram_counts("AAAAAA")[0], 5.0);
  auto g = bigram_counts(tokenize_format("Google Inc."));
  // AA AS SA SS AN NA NN NS SN
  EXPECT_EQ(g, (std::array<double, 9>{7, 2, 1, 0, 0, 0, 0, 0, 0}));
  auto n = bigram_counts(tokenize_format("12-B"));
  EXPECT_EQ(n, (std::array<double, 9>{0, 0, 1, 0, 0, 0, 1, 1, 0}));
}

TEST(Format, BigramTotalIsLengthMinusOne) {
  std::mt19937_64 rng(8);
  const std::string alphabet = "aZ09 -._x\xc3\xa9";
  for (int trial = 0; trial < 300; ++trial) {
    std::string s;
    for (std::size_t i = 0, len = rng() % 12; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    auto tokens = tokenize_format(s);
    double total = 0;
    for (double x : bigram_counts(tokens)) total += x;
    EXPECT_EQ(total, tokens.empty() ? 0.0 : static_cast<double>(tokens.size() - 1)) << s;
  }
}

TEST(AttributeFeatures, RunningOneHot) {
  auto ds = make_dataset({"A"}, {{"k", {"x"}}, {"k", {"y"}}, {"k", {"y"}}, {"m", {"z"}}});
  CandidateSets sets(ds);
  EmbeddingSpec spec;
  auto v = attribute_features(ds, sets, 0, 0, 3, LabelVector{3, 1}, spec);
  ASSERT_EQ(v.size(), 9u + 1u + 3u);
  EXPECT_EQ(std::vector<double>(v.end() - 3, v.end()), (std::vector<double>{0, 1, 0}));
  auto v0 = attribute_features(ds, sets, 0, 0, 3, std::nullopt, spec);
  EXPECT_EQ(std::vector<double>(v0.end() - 3, v0.end()), (std::vector<double>{0, 0, 0}));
  // Singleton cluster: value equals the mean embedding.
  EXPECT_NEAR(attribute_features(ds, sets, 3, 0, 3, std::nullopt, spec)[9], 0.0, 1e-12);
  EXPECT_THROW(attribute_features(ds, sets, 0, 0, 3, LabelVector{3, 3}, spec), Error);
}

TEST(RecordFeatures, CooccurrenceAndVote) {
  // Cluster of four; B's working value "b1" appears three times, twice
  // next to A = "x".
  auto ds = make_dataset({"A", "B"}, {{"k", {"x", "b1"}}, {"k", {"x", "b1"}}, {"k", {"y", "b1"}}, {"k", {"x", "b2"}}});
  CandidateSets sets(ds);
  auto working = weak_labels(sets);
  ASSERT_EQ(sets.at(0, 1).values[working.at(0, 1)], "b1");
  auto v = record_features(ds, sets, 0, 0, working);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_DOUBLE_EQ(v[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(v[1], 3.0 / 4.0);
  auto single = make_dataset({"A", "B"}, {{"s", {"x", "q"}}});
  CandidateSets ss(single);
  EXPECT_EQ(record_features(single, ss, 0, 0, weak_labels(ss)), (Vector{1.0, 1.0}));
}

namespace {

// Expected row of the featurizer assembled from the reference per-level
// functions, placed by block name.
Vector reference_row(const Featurizer& fz, std::size_t i, std::size_t j, const LabelTable& working,
                     const LabelTable* running) {
  const auto& ds = fz.dataset();
  const auto& sets = fz.candidate_sets();
  const auto& layout = fz.layout(j);
  std::optional<LabelVector> run;
  if (running) run = running->label(ds.cluster_of(i), j, fz.rho(j));
  auto a = attribute_features(ds, sets, i, j, fz.rho(j), run, fz.config().embedding);
  auto r = record_features(ds, sets, i, j, working);
  auto d = database_features(ds, sets, fz.constraint_index(), i, j, working, fz.config());
  const std::size_t c = ds.num_attributes();
  const std::size_t ns = fz.constraint_index().for_attribute(j).size();
  Vector out(layout.width(), 0.0);
  auto put = [&](const char* name, const Vector& src, std::size_t from, std::size_t count) {
    const auto* b = layout.find(name);
    if (!b) return;
    ASSERT_EQ(b->size, count) << name;
    for (std::size_t q = 0; q < count; ++q) out[b->offset + q] = src[from + q];
  };
  put("format", a, 0, 9);
  put("attr_embedding", a, 9, 1);
  put("running_value", a, 10, fz.rho(j));
  put("cooccurrence", r, 0, c - 1);
  put("vote", r, c - 1, 1);
  put("neighborhood", d, 0, 1);
  put("constraints", d, 1, ns);
  if (ds.has_sources()) put("source", d, 1 + ns, ds.num_sources());
  return out;
}

}  // namespace

TEST(Featurizer, MatchesReferenceFunctions) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    auto base = rtest::random_dataset(rng, 30, 3, trial % 2 == 0);
    std::vector<FusionDataset::RowInput> rows;
    for (std::size_t i = 0; i < base.num_rows(); ++i) {
      FusionDataset::RowInput in;
      in.cluster_id = base.cluster_name(base.cluster_of(i));
      if (base.has_sources()) in.source_id = base.source_name(base.source_of(i));
      in.cells = base.row(i);
      rows.push_back(in);
    }
    std::vector<DenialConstraint> dcs{parse_dc("!(t1.a0 = t2.a0 & t1.a1 != t2.a1)", base.schema()),
                                      parse_dc("!(t1.a2 = 'c')", base.schema())};
    auto ds = FusionDataset::build(base.schema(), rows, dcs);
    CandidateSets sets(ds);
    FeatureConfig cfg;
    if (trial % 3 == 1) cfg = cfg.without(RepresentationModel::Format);
    if (trial % 3 == 2) cfg = cfg.without(ContextGroup::Record);
    Featurizer fz(ds, sets, cfg);
    LabelTable working(3, ds.num_clusters());
    for (std::size_t k = 0; k < ds.num_clusters(); ++k)
      for (std::size_t j = 0; j < 3; ++j) working.at(k, j) = rng() % sets.at(k, j).size();
    for (std::size_t j = 0; j < 3; ++j) {
      auto fm = fz.matrix(j, working, &working, fz.violations(working));
      ASSERT_EQ(fm.cols, fz.layout(j).width());
      for (std::size_t i = 0; i < ds.num_rows(); ++i) {
        auto expect = reference_row(fz, i, j, working, &working);
        auto got = fm.row(i);
        for (std::size_t q = 0; q < fm.cols; ++q) EXPECT_NEAR(got[q], expect[q], 1e-12) << "col " << q;
      }
    }
  }
}

TEST(Featurizer, DimensionBookkeeping) {
  auto bm = rtest::small_benchmark();
  CandidateSets sets(bm.dataset);
  Featurizer fz(bm.dataset, sets, FeatureConfig{});
  const std::size_t c = bm.dataset.num_attributes();
  for (std::size_t j = 0; j < c; ++j) {
    const auto& l = fz.layout(j);
    const std::size_t sources = bm.dataset.has_sources() ? bm.dataset.num_sources() : 0;
    EXPECT_EQ(l.nu, 9 + 1 + 1 + sources);
    EXPECT_EQ(l.psi, fz.rho(j) + (c - 1) + 1 + fz.constraint_index().for_attribute(j).size());
    auto cells = fz.featurize(j, weak_labels(sets), nullptr);
    ASSERT_EQ(cells.size(), bm.dataset.num_rows());
    for (const auto& cf : cells) {
      EXPECT_EQ(cf.static_block.size(), l.nu);
      EXPECT_EQ(cf.dynamic_block.size(), l.psi);
    }
  }
  auto none = FeatureConfig{}.without(ContextGroup::Attribute).without(ContextGroup::Record);
  Featurizer fz2(bm.dataset, sets, none);
  EXPECT_EQ(fz2.layout(0).find("format"), nullptr);
  EXPECT_EQ(fz2.layout(0).find("vote"), nullptr);
  EXPECT_NE(fz2.layout(0).find("neighborhood"), nullptr);
}

TEST(Featurizer, StaticBlockIgnoresWorkingAssignment) {
  auto bm = rtest::small_benchmark(4, 30);
  CandidateSets sets(bm.dataset);
  Featurizer fz(bm.dataset, sets, FeatureConfig{});
  auto a = weak_labels(sets);
  LabelTable b = a;
  for (std::size_t j = 0; j < b.num_attributes(); ++j)
    for (std::size_t k = 0; k < b.num_clusters(); ++k) b.at(k, j) = sets.at(k, j).size() - 1;
  for (std::size_t j = 0; j < b.num_attributes(); ++j) {
    auto fa = fz.featurize(j, a, &a), fb = fz.featurize(j, b, &b);
    for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_EQ(fa[i].static_block, fb[i].static_block);
  }
}

TEST(ModelNames, RoundTrip) {
  for (auto m : kAllModels) EXPECT_EQ(parse_model_name(model_name(m)), m);
  EXPECT_FALSE(parse_model_name("bogus").has_value());
}
