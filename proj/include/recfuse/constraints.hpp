#pragma once

// Violation counting for denial constraints. A row is taken as-is (assumed
// correct) and paired with every other row of the dataset; a partner row
// counts once if either binding order satisfies all predicates.

#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "recfuse/core_model.hpp"
#include "recfuse/dc.hpp"

namespace recfuse {

/// Where partner rows take their values from.
enum class PartnerValues {
  Raw,      // the partner's own cells
  Working,  // the partner cluster's current working assignment
};

inline std::string_view to_string(PartnerValues p) { return p == PartnerValues::Raw ? "raw" : "working"; }

/// Σ_j: constraint indices mentioning each attribute.
class ConstraintIndex {
 public:
  ConstraintIndex() = default;
  ConstraintIndex(std::span<const DenialConstraint> constraints, std::size_t num_attributes)
      : by_attribute_(num_attributes) {
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      for (auto a : constraints[c].attributes()) by_attribute_[a].push_back(c);
    }
  }

  const std::vector<std::size_t>& for_attribute(std::size_t j) const { return by_attribute_[j]; }
  std::size_t num_attributes() const { return by_attribute_.size(); }

 private:
  std::vector<std::vector<std::size_t>> by_attribute_;
};

namespace detail {

/// Values a partner row contributes, one view per attribute.
inline std::vector<std::string_view> partner_row(const FusionDataset& ds, const CandidateSets& sets,
                                                 const LabelTable& working, std::size_t row, PartnerValues mode) {
  std::vector<std::string_view> out(ds.num_attributes());
  const std::size_t k = ds.cluster_of(row);
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = mode == PartnerValues::Raw ? std::string_view(ds.cell(row, j))
                                        : std::string_view(sets.at(k, j).values[working.at(k, j)]);
  }
  return out;
}

/// Hash key under which two values compare equal iff compare_values(Eq)
/// holds for them.
inline std::string equality_key(std::string_view v) {
  if (auto num = parse_decimal(v)) {
    double d = *num == 0.0 ? 0.0 : *num;
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
    return std::string("\x01") + std::string(buf, ptr);
  }
  return std::string(v);
}

}  // namespace detail

/// Number of rows i' != i whose pairing with row i (taken as-is) violates
/// `dc`. Rules over a single tuple variable are judged on row i alone and
/// yield 0 or 1. Straightforward O(n) scan.
inline std::size_t count_violations(std::size_t row, const DenialConstraint& dc, const FusionDataset& ds,
                                    const CandidateSets& sets, const LabelTable& working,
                                    PartnerValues mode = PartnerValues::Working) {
  auto self = ds.row_view(row);
  if (dc.is_single_tuple()) return dc.satisfied_by(self, self) ? 1 : 0;
  std::size_t count = 0;
  for (std::size_t other = 0; other < ds.num_rows(); ++other) {
    if (other == row) continue;
    auto partner = detail::partner_row(ds, sets, working, other, mode);
    if (dc.satisfied_by(self, partner) || dc.satisfied_by(partner, self)) ++count;
  }
  return count;
}

/// Violation counts for every row and constraint under one working
/// assignment. Partner rows sharing identical values are grouped (in
/// working mode a whole cluster is one group) and an equality predicate
/// between t1 and t2, when present, is used as a hash join.
class ViolationCounter {
 public:
  ViolationCounter(const FusionDataset& ds, const CandidateSets& sets, const LabelTable& working,
                   PartnerValues mode)
      : ds_(ds) {
    const std::size_t c = ds.num_attributes();
    if (mode == PartnerValues::Working) {
      groups_.resize(ds.num_clusters());
      for (std::size_t k = 0; k < ds.num_clusters(); ++k) {
        auto& g = groups_[k];
        g.values.resize(c);
        for (std::size_t j = 0; j < c; ++j) g.values[j] = sets.at(k, j).values[working.at(k, j)];
        g.multiplicity = ds.members(k).size();
      }
      group_of_row_.resize(ds.num_rows());
      for (std::size_t i = 0; i < ds.num_rows(); ++i) group_of_row_[i] = ds.cluster_of(i);
    } else {
      groups_.resize(ds.num_rows());
      group_of_row_.resize(ds.num_rows());
      for (std::size_t i = 0; i < ds.num_rows(); ++i) {
        auto view = ds.row_view(i);
        groups_[i].values.assign(view.begin(), view.end());
        groups_[i].multiplicity = 1;
        group_of_row_[i] = i;
      }
    }
  }

  /// Counts for every row of the dataset for one constraint.
  std::vector<std::size_t> counts(const DenialConstraint& dc) const {
    const std::size_t n = ds_.num_rows();
    std::vector<std::size_t> out(n, 0);
    if (dc.is_single_tuple()) {
      for (std::size_t i = 0; i < n; ++i) {
        auto self = ds_.row_view(i);
        out[i] = dc.satisfied_by(self, self) ? 1 : 0;
      }
      return out;
    }
    const Predicate* join = nullptr;
    for (const auto& p : dc.predicates()) {
      if (p.op == CompareOp::Eq && p.lhs.kind == Operand::Kind::Attribute &&
          p.rhs.kind == Operand::Kind::Attribute && p.lhs.tuple != p.rhs.tuple) {
        join = &p;
        break;
      }
    }
    std::vector<std::size_t> stamp(groups_.size(), 0);
    std::size_t epoch = 0;
    auto visit = [&](std::size_t i, std::size_t g, std::span<const std::string_view> self) {
      if (stamp[g] == epoch) return;
      stamp[g] = epoch;
      std::span<const std::string_view> partner = groups_[g].values;
      if (!(dc.satisfied_by(self, partner) || dc.satisfied_by(partner, self))) return;
      std::size_t mult = groups_[g].multiplicity;
      if (g == group_of_row_[i]) --mult;
      out[i] += mult;
    };
    if (!join) {
      for (std::size_t i = 0; i < n; ++i) {
        ++epoch;
        auto self = ds_.row_view(i);
        for (std::size_t g = 0; g < groups_.size(); ++g) visit(i, g, self);
      }
      return out;
    }
    // Normalise the join to t1.x = t2.y.
    std::size_t x = join->lhs.tuple == 0 ? join->lhs.attribute : join->rhs.attribute;
    std::size_t y = join->lhs.tuple == 0 ? join->rhs.attribute : join->lhs.attribute;
    // Binding (t1 = row, t2 = partner) needs partner[y] == row[x];
    // binding (t1 = partner, t2 = row) needs partner[x] == row[y].
    std::unordered_map<std::string, std::vector<std::size_t>> by_y, by_x;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      by_y[detail::equality_key(groups_[g].values[y])].push_back(g);
      by_x[detail::equality_key(groups_[g].values[x])].push_back(g);
    }
    for (std::size_t i = 0; i < n; ++i) {
      ++epoch;
      auto self = ds_.row_view(i);
      if (auto it = by_y.find(detail::equality_key(self[x])); it != by_y.end()) {
        for (auto g : it->second) visit(i, g, self);
      }
      if (auto it = by_x.find(detail::equality_key(self[y])); it != by_x.end()) {
        for (auto g : it->second) visit(i, g, self);
      }
    }
    return out;
  }

 private:
  struct Group {
    std::vector<std::string_view> values;
    std::size_t multiplicity = 0;
  };

  const FusionDataset& ds_;
  std::vector<Group> groups_;
  std::vector<std::size_t> group_of_row_;
};

}  // namespace recfuse
