#pragma once

// Relational data model for record fusion: the clustered dataset, per
// (cluster, attribute) candidate sets, label encoding and the majority-vote
// bootstrap for unlabeled cells.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "recfuse/dc.hpp"
#include "recfuse/error.hpp"

namespace recfuse {

/// Strips ASCII whitespace from both ends.
inline std::string trim(std::string_view s) {
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_ws(s[b])) ++b;
  while (e > b && is_ws(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

/// A clustered relational dataset D with schema S, clustering C and
/// optional source assignment. Immutable once built.
///
/// Clusters and sources are addressed by dense indices in order of first
/// appearance; the external ids are kept for output.
class FusionDataset {
 public:
  struct RowInput {
    std::string cluster_id;
    std::optional<std::string> source_id;
    std::vector<std::string> cells;
    std::size_t line = 0;  // for diagnostics; 0 when not from a file
  };

  FusionDataset() = default;

  /// Validates and builds a dataset. Cells are whitespace-trimmed. Either
  /// every row carries a source id or none does.
  static FusionDataset build(std::vector<std::string> schema, std::vector<RowInput> rows,
                             std::vector<DenialConstraint> constraints = {},
                             std::vector<bool> synthetic_clusters = {}) {
    FusionDataset ds;
    if (schema.empty()) throw DataError("schema has no attributes");
    for (std::size_t j = 0; j < schema.size(); ++j) {
      schema[j] = trim(schema[j]);
      for (std::size_t k = 0; k < j; ++k) {
        if (schema[k] == schema[j]) throw DataError("duplicate attribute name '" + schema[j] + "'");
      }
    }
    ds.schema_ = std::move(schema);
    const std::size_t c = ds.schema_.size();
    bool any_source = false, all_source = true;
    for (const auto& r : rows) {
      any_source |= r.source_id.has_value();
      all_source &= r.source_id.has_value();
    }
    if (any_source && !all_source) {
      for (const auto& r : rows) {
        if (!r.source_id) throw DataError("source id missing on some rows", r.line);
      }
    }
    std::unordered_map<std::string, std::size_t> cluster_index, source_index;
    ds.records_.reserve(rows.size());
    for (auto& r : rows) {
      if (r.cells.size() != c) {
        throw DataError("expected " + std::to_string(c) + " cells, found " + std::to_string(r.cells.size()),
                        r.line);
      }
      for (auto& cell : r.cells) cell = trim(cell);
      auto [it, inserted] = cluster_index.try_emplace(r.cluster_id, ds.cluster_names_.size());
      if (inserted) {
        ds.cluster_names_.push_back(r.cluster_id);
        ds.members_.emplace_back();
      }
      ds.members_[it->second].push_back(ds.records_.size());
      ds.cluster_of_.push_back(it->second);
      if (any_source) {
        auto [sit, sins] = source_index.try_emplace(*r.source_id, ds.source_names_.size());
        if (sins) ds.source_names_.push_back(*r.source_id);
        ds.source_of_.push_back(sit->second);
      }
      ds.records_.push_back(std::move(r.cells));
    }
    ds.has_sources_ = any_source;
    ds.cluster_lookup_ = std::move(cluster_index);
    for (const auto& dc : constraints) {
      for (auto a : dc.attributes()) {
        if (a >= c) throw DataError("constraint references attribute outside the schema");
      }
    }
    ds.constraints_ = std::move(constraints);
    ds.synthetic_ = std::move(synthetic_clusters);
    ds.synthetic_.resize(ds.cluster_names_.size(), false);
    ds.rebuild_views();
    return ds;
  }

  FusionDataset(const FusionDataset& other) { *this = other; }
  FusionDataset& operator=(const FusionDataset& other) {
    if (this == &other) return *this;
    schema_ = other.schema_;
    records_ = other.records_;
    cluster_of_ = other.cluster_of_;
    cluster_names_ = other.cluster_names_;
    members_ = other.members_;
    cluster_lookup_ = other.cluster_lookup_;
    has_sources_ = other.has_sources_;
    source_of_ = other.source_of_;
    source_names_ = other.source_names_;
    constraints_ = other.constraints_;
    synthetic_ = other.synthetic_;
    rebuild_views();
    return *this;
  }
  FusionDataset(FusionDataset&&) noexcept = default;
  FusionDataset& operator=(FusionDataset&&) noexcept = default;

  std::size_t num_rows() const { return records_.size(); }
  std::size_t num_attributes() const { return schema_.size(); }
  std::size_t num_clusters() const { return cluster_names_.size(); }

  const std::vector<std::string>& schema() const { return schema_; }
  std::optional<std::size_t> attribute_index(std::string_view name) const {
    for (std::size_t j = 0; j < schema_.size(); ++j)
      if (schema_[j] == name) return j;
    return std::nullopt;
  }

  const std::string& cell(std::size_t row, std::size_t attribute) const { return records_[row][attribute]; }
  const std::vector<std::string>& row(std::size_t i) const { return records_[i]; }
  /// The row as string views, indexed by schema position.
  std::span<const std::string_view> row_view(std::size_t i) const {
    return {views_.data() + i * schema_.size(), schema_.size()};
  }

  std::size_t cluster_of(std::size_t row) const { return cluster_of_[row]; }
  const std::string& cluster_name(std::size_t k) const { return cluster_names_[k]; }
  std::optional<std::size_t> cluster_index(const std::string& name) const {
    auto it = cluster_lookup_.find(name);
    if (it == cluster_lookup_.end()) return std::nullopt;
    return it->second;
  }
  std::span<const std::size_t> members(std::size_t k) const { return members_[k]; }
  bool is_synthetic(std::size_t k) const { return synthetic_[k]; }

  bool has_sources() const { return has_sources_; }
  std::size_t num_sources() const { return source_names_.size(); }
  std::size_t source_of(std::size_t row) const { return source_of_.at(row); }
  const std::string& source_name(std::size_t s) const { return source_names_[s]; }

  const std::vector<DenialConstraint>& constraints() const { return constraints_; }

 private:
  void rebuild_views() {
    views_.clear();
    views_.reserve(records_.size() * schema_.size());
    for (const auto& r : records_)
      for (const auto& cell : r) views_.emplace_back(cell);
  }

  std::vector<std::string> schema_;
  std::vector<std::vector<std::string>> records_;
  std::vector<std::size_t> cluster_of_;
  std::vector<std::string> cluster_names_;
  std::vector<std::vector<std::size_t>> members_;
  std::unordered_map<std::string, std::size_t> cluster_lookup_;
  bool has_sources_ = false;
  std::vector<std::size_t> source_of_;
  std::vector<std::string> source_names_;
  std::vector<DenialConstraint> constraints_;
  std::vector<bool> synthetic_;
  std::vector<std::string_view> views_;
};

/// Distinct values E_kj observed for attribute j in cluster k, ordered by
/// descending frequency with ties broken by byte order.
struct CandidateSet {
  std::size_t cluster = 0;
  std::size_t attribute = 0;
  std::vector<std::string> values;
  std::vector<std::size_t> freqs;

  std::size_t size() const { return values.size(); }

  std::optional<std::size_t> index_of(std::string_view v) const {
    for (std::size_t q = 0; q < values.size(); ++q)
      if (values[q] == v) return q;
    return std::nullopt;
  }
};

/// Name of the ordering rule, recorded in model files.
inline constexpr std::string_view kCandidateOrderKey = "freq_desc_then_bytes_asc";

inline CandidateSet make_candidate_set(std::size_t cluster, std::size_t attribute,
                                       std::span<const std::string_view> cells) {
  std::map<std::string_view, std::size_t> counts;
  for (auto v : cells) ++counts[v];
  std::vector<std::pair<std::string_view, std::size_t>> entries(counts.begin(), counts.end());
  // counts is already byte-ordered, so a stable sort on frequency keeps the tie-break.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  CandidateSet cs;
  cs.cluster = cluster;
  cs.attribute = attribute;
  for (auto& [v, n] : entries) {
    cs.values.emplace_back(v);
    cs.freqs.push_back(n);
  }
  return cs;
}

/// Candidate sets for every (cluster, attribute), plus the candidate index
/// of every cell.
class CandidateSets {
 public:
  CandidateSets() = default;

  explicit CandidateSets(const FusionDataset& ds) {
    const std::size_t c = ds.num_attributes(), p = ds.num_clusters();
    sets_.assign(c, std::vector<CandidateSet>(p));
    cell_index_.assign(c, std::vector<std::size_t>(ds.num_rows(), 0));
    std::vector<std::string_view> buf;
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t k = 0; k < p; ++k) {
        buf.clear();
        for (auto i : ds.members(k)) buf.push_back(ds.cell(i, j));
        sets_[j][k] = make_candidate_set(k, j, buf);
        const auto& cs = sets_[j][k];
        for (auto i : ds.members(k)) cell_index_[j][i] = *cs.index_of(ds.cell(i, j));
      }
    }
  }

  const CandidateSet& at(std::size_t cluster, std::size_t attribute) const { return sets_[attribute][cluster]; }
  std::size_t num_attributes() const { return sets_.size(); }
  std::size_t num_clusters() const { return sets_.empty() ? 0 : sets_[0].size(); }
  /// Position of row i's value for attribute j within its candidate set.
  std::size_t cell_index(std::size_t row, std::size_t attribute) const { return cell_index_[attribute][row]; }

 private:
  std::vector<std::vector<CandidateSet>> sets_;  // [attribute][cluster]
  std::vector<std::vector<std::size_t>> cell_index_;
};

inline CandidateSets build_candidate_sets(const FusionDataset& ds) { return CandidateSets(ds); }

/// ρ_j = max_k |E_kj|.
inline std::size_t label_dimension(const CandidateSets& sets, std::size_t attribute) {
  std::size_t rho = 0;
  for (std::size_t k = 0; k < sets.num_clusters(); ++k) rho = std::max(rho, sets.at(k, attribute).size());
  if (rho == 0) throw Error("label_dimension: no candidate sets for attribute");
  return rho;
}

/// One-hot label over candidate positions, zero-padded to ρ_j.
struct LabelVector {
  std::size_t dim = 0;
  std::size_t hot_index = 0;

  std::vector<double> dense() const {
    std::vector<double> v(dim, 0.0);
    v[hot_index] = 1.0;
    return v;
  }
  bool operator==(const LabelVector&) const = default;
};

/// Known correct values G_T, keyed by (cluster index, attribute index).
class GroundTruth {
 public:
  using Key = std::pair<std::size_t, std::size_t>;

  void set(std::size_t cluster, std::size_t attribute, std::string value) {
    labeled_[{cluster, attribute}] = std::move(value);
  }
  const std::string* find(std::size_t cluster, std::size_t attribute) const {
    auto it = labeled_.find({cluster, attribute});
    return it == labeled_.end() ? nullptr : &it->second;
  }
  bool contains(std::size_t cluster, std::size_t attribute) const { return find(cluster, attribute) != nullptr; }
  std::size_t size() const { return labeled_.size(); }
  bool empty() const { return labeled_.empty(); }
  const std::map<Key, std::string>& entries() const { return labeled_; }

  /// Copy restricted to the given clusters.
  GroundTruth restricted_to(std::span<const std::size_t> clusters) const {
    std::vector<bool> keep;
    for (auto k : clusters) {
      if (k >= keep.size()) keep.resize(k + 1, false);
      keep[k] = true;
    }
    GroundTruth out;
    for (const auto& [key, v] : labeled_) {
      if (key.first < keep.size() && keep[key.first]) out.labeled_.emplace(key, v);
    }
    return out;
  }

  /// Every labeled value must be one of its cluster's candidates.
  void validate(const FusionDataset& ds, const CandidateSets& sets) const {
    for (const auto& [key, v] : labeled_) {
      auto [k, j] = key;
      if (k >= ds.num_clusters() || j >= ds.num_attributes()) {
        throw DataError("ground truth refers to an unknown cluster or attribute");
      }
      if (!sets.at(k, j).index_of(v)) {
        throw DataError("ground-truth value '" + v + "' for cluster '" + ds.cluster_name(k) + "', attribute '" +
                        ds.schema()[j] + "' is not among the cluster's observed values");
      }
    }
  }

 private:
  std::map<Key, std::string> labeled_;
};

/// Hot index per (attribute, cluster); the working assignment y^[t].
class LabelTable {
 public:
  LabelTable() = default;
  LabelTable(std::size_t attributes, std::size_t clusters) : index_(attributes, std::vector<std::size_t>(clusters, 0)) {}

  std::size_t& at(std::size_t cluster, std::size_t attribute) { return index_[attribute][cluster]; }
  std::size_t at(std::size_t cluster, std::size_t attribute) const { return index_[attribute][cluster]; }
  std::size_t num_attributes() const { return index_.size(); }
  std::size_t num_clusters() const { return index_.empty() ? 0 : index_[0].size(); }
  const std::vector<std::size_t>& column(std::size_t attribute) const { return index_[attribute]; }
  std::vector<std::size_t>& column(std::size_t attribute) { return index_[attribute]; }

  LabelVector label(std::size_t cluster, std::size_t attribute, std::size_t rho) const {
    return {rho, at(cluster, attribute)};
  }

  bool operator==(const LabelTable&) const = default;

 private:
  std::vector<std::vector<std::size_t>> index_;
};

/// Majority-vote labels for G_U (candidate index 0 under the frequency
/// ordering), ground-truth indices for G_T.
inline LabelTable weak_labels(const CandidateSets& sets, const GroundTruth& truth = {}) {
  LabelTable table(sets.num_attributes(), sets.num_clusters());
  for (const auto& [key, v] : truth.entries()) {
    auto [k, j] = key;
    auto idx = sets.at(k, j).index_of(v);
    if (!idx) throw DataError("ground-truth value not in candidate set");
    table.at(k, j) = *idx;
  }
  return table;
}

}  // namespace recfuse
