#pragma once

#include <random>
#include <string>
#include <vector>

#include "recfuse/recfuse.hpp"

namespace rtest {

using recfuse::FusionDataset;

struct Row {
  std::string cluster;
  std::vector<std::string> cells;
  std::string source = {};  // empty: no source column
};

inline FusionDataset make_dataset(std::vector<std::string> schema, const std::vector<Row>& rows,
                                  std::vector<recfuse::DenialConstraint> dcs = {}) {
  std::vector<FusionDataset::RowInput> in;
  for (const auto& r : rows) {
    FusionDataset::RowInput x;
    x.cluster_id = r.cluster;
    x.cells = r.cells;
    if (!r.source.empty()) x.source_id = r.source;
    in.push_back(std::move(x));
  }
  return FusionDataset::build(std::move(schema), std::move(in), std::move(dcs));
}

/// Small random dataset over a tiny vocabulary so that clusters disagree
/// and constraints fire.
inline FusionDataset random_dataset(std::mt19937_64& rng, std::size_t max_rows, std::size_t attributes,
                                    bool sources = false) {
  std::vector<std::string> schema;
  for (std::size_t j = 0; j < attributes; ++j) schema.push_back("a" + std::to_string(j));
  std::uniform_int_distribution<std::size_t> nrows(1, max_rows);
  const std::size_t n = nrows(rng);
  const std::size_t clusters = 1 + rng() % std::max<std::size_t>(1, n / 2);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Row r;
    r.cluster = "k" + std::to_string(rng() % clusters);
    for (std::size_t j = 0; j < attributes; ++j) {
      const auto v = rng() % 4;
      r.cells.push_back(v == 3 ? std::to_string(rng() % 3) : std::string(1, static_cast<char>('a' + v)));
    }
    if (sources) r.source = "s" + std::to_string(rng() % 3);
    rows.push_back(std::move(r));
  }
  return make_dataset(schema, rows);
}

/// Small fixed benchmark used by several suites.
inline recfuse::Benchmark small_benchmark(std::uint64_t seed = 3, std::size_t clusters = 60) {
  recfuse::BenchmarkSpec spec;
  spec.clusters = clusters;
  return recfuse::generate_benchmark(spec, seed);
}

inline recfuse::TrainConfig fast_train(std::size_t stages = 2) {
  recfuse::TrainConfig t;
  t.stages = stages;
  t.epochs = 60;
  return t;
}

}  // namespace rtest
