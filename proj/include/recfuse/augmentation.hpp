#pragma once

// Entity augmentation: synthesise labeled training clusters by reshaping
// the wrong cells of a labeled cluster after the format of cells drawn from
// other clusters.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "recfuse/core_model.hpp"
#include "recfuse/error.hpp"
#include "recfuse/featurizer.hpp"
#include "recfuse/learner.hpp"

namespace recfuse {

/// One symbol of the format alphabet: single letter, letter run, single
/// digit, digit run, or a literal character.
struct FormatSymbol {
  enum class Kind { S1, S2, T1, T2, Literal };
  Kind kind = Kind::Literal;
  std::string literal;  // the character, for Literal

  bool operator==(const FormatSymbol&) const = default;

  std::string str() const {
    switch (kind) {
      case Kind::S1: return "S1";
      case Kind::S2: return "S2";
      case Kind::T1: return "T1";
      case Kind::T2: return "T2";
      case Kind::Literal: return literal;
    }
    return "?";
  }
};

/// Symbols plus, for each, the exact source substring it came from.
struct FormatString {
  std::vector<FormatSymbol> symbols;
  std::vector<std::string> inverse;

  std::size_t size() const { return symbols.size(); }
  std::string source() const {
    std::string s;
    for (const auto& p : inverse) s += p;
    return s;
  }
};

/// Letter runs become S1 (length 1) or S2, digit runs T1 or T2, every other
/// code point is kept as a literal symbol.
inline FormatString format_map(std::string_view s) {
  FormatString out;
  auto chars = utf8_chars(s);
  std::size_t i = 0;
  while (i < chars.size()) {
    const bool letter = is_ascii_letter(chars[i]);
    const bool digit = is_ascii_digit(chars[i]);
    if (!letter && !digit) {
      out.symbols.push_back({FormatSymbol::Kind::Literal, std::string(chars[i])});
      out.inverse.emplace_back(chars[i]);
      ++i;
      continue;
    }
    std::size_t j = i;
    std::string run;
    while (j < chars.size() && (letter ? is_ascii_letter(chars[j]) : is_ascii_digit(chars[j]))) run += chars[j++];
    FormatSymbol::Kind kind = letter ? (j - i == 1 ? FormatSymbol::Kind::S1 : FormatSymbol::Kind::S2)
                                     : (j - i == 1 ? FormatSymbol::Kind::T1 : FormatSymbol::Kind::T2);
    out.symbols.push_back({kind, {}});
    out.inverse.push_back(std::move(run));
    i = j;
  }
  return out;
}

struct FormatMatch {
  std::size_t pos_first = 0;   // start in the first format string
  std::size_t pos_second = 0;  // start in the second
  std::size_t length = 0;
  std::vector<FormatSymbol> symbols;
};

/// Longest common contiguous run of symbols. Ties go to the leftmost start
/// in `g`, then the leftmost start in `g2`.
inline FormatMatch lcs_format(const FormatString& g, const FormatString& g2) {
  const std::size_t n = g.size(), m = g2.size();
  FormatMatch best;
  // len[i][j]: common run ending at g[i-1], g2[j-1]. Rolling rows.
  std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = g.symbols[i - 1] == g2.symbols[j - 1] ? prev[j - 1] + 1 : 0;
      if (cur[j] == 0) continue;
      const std::size_t L = cur[j];
      const std::size_t si = i - L, sj = j - L;
      if (L > best.length || (L == best.length && (si < best.pos_first || (si == best.pos_first && sj < best.pos_second)))) {
        best.length = L;
        best.pos_first = si;
        best.pos_second = sj;
      }
    }
    std::swap(prev, cur);
    std::fill(cur.begin(), cur.end(), 0);
  }
  best.symbols.assign(g.symbols.begin() + static_cast<std::ptrdiff_t>(best.pos_first),
                      g.symbols.begin() + static_cast<std::ptrdiff_t>(best.pos_first + best.length));
  return best;
}

/// The part of `source` that realises its longest common format with
/// `target`; empty when they share no symbol.
inline std::string augment_cell(std::string_view source, std::string_view target) {
  auto g = format_map(source);
  auto match = lcs_format(g, format_map(target));
  std::string out;
  for (std::size_t k = 0; k < match.length; ++k) out += g.inverse[match.pos_first + k];
  return out;
}

struct AugmentConfig {
  double ratio = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(ratio >= 0.0) || !std::isfinite(ratio)) throw Error("augment config: ratio must be a finite value >= 0");
  }
  bool operator==(const AugmentConfig&) const = default;
};

struct SyntheticCluster {
  std::string cluster_id;
  std::size_t source_cluster = 0;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::optional<std::string>> row_sources;
  std::vector<std::string> labels;  // correct value per attribute
};

/// Number of synthetic clusters for `p` original clusters.
inline std::size_t augment_count(double ratio, std::size_t p) {
  return static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(p) - 1e-9));
}

/// Synthesises ⌈ratio·p⌉ clusters. Sources are drawn uniformly from
/// `source_clusters` that are labeled on every attribute; targets from all
/// non-synthetic clusters.
inline std::vector<SyntheticCluster> augment_entities(const FusionDataset& ds, const GroundTruth& truth,
                                                      std::span<const std::size_t> source_clusters,
                                                      const AugmentConfig& cfg) {
  cfg.validate();
  if (ds.num_rows() == 0) throw Error("augment: empty dataset");
  std::size_t originals = 0;
  std::vector<std::size_t> targets;
  for (std::size_t k = 0; k < ds.num_clusters(); ++k) {
    if (ds.is_synthetic(k)) continue;
    ++originals;
    targets.push_back(k);
  }
  const std::size_t want = augment_count(cfg.ratio, originals);
  std::vector<SyntheticCluster> out;
  if (want == 0) return out;
  const std::size_t c = ds.num_attributes();
  std::vector<std::size_t> sources;
  for (auto k : source_clusters) {
    bool full = !ds.is_synthetic(k);
    for (std::size_t j = 0; j < c && full; ++j) full = truth.contains(k, j);
    if (full) sources.push_back(k);
  }
  if (sources.empty()) throw Error("augment: no fully labeled source clusters");

  std::mt19937_64 rng(cfg.seed ^ 0xa0761d6478bd642fULL);
  const std::size_t max_attempts = 100 * want + 100;
  std::size_t attempts = 0, serial = 0;
  while (out.size() < want) {
    if (++attempts > max_attempts) throw Error("augment: could not produce enough valid synthetic clusters");
    const std::size_t k = sources[detail::uniform_below(rng, sources.size())];
    SyntheticCluster sc;
    sc.source_cluster = k;
    for (std::size_t j = 0; j < c; ++j) sc.labels.push_back(*truth.find(k, j));
    for (auto i : ds.members(k)) {
      std::vector<std::string> row(c);
      for (std::size_t j = 0; j < c; ++j) {
        const auto& cell = ds.cell(i, j);
        if (cell == sc.labels[j]) {
          row[j] = cell;
          continue;
        }
        const std::size_t tk = targets[detail::uniform_below(rng, targets.size())];
        const auto tm = ds.members(tk);
        const std::size_t ti = tm[detail::uniform_below(rng, tm.size())];
        row[j] = augment_cell(cell, ds.cell(ti, j));
      }
      sc.rows.push_back(std::move(row));
      sc.row_sources.push_back(ds.has_sources() ? std::optional<std::string>(ds.source_name(ds.source_of(i)))
                                                : std::nullopt);
    }
    // The label is the unchanged correct value, which survives in every
    // column unless an augmented cell happened to be trimmed into it.
    bool valid = true;
    for (std::size_t j = 0; j < c && valid; ++j) {
      bool present = false;
      for (const auto& r : sc.rows) present |= trim(r[j]) == sc.labels[j];
      valid = present;
    }
    if (!valid) continue;
    std::string name;
    do name = "aug_" + std::to_string(serial++);
    while (ds.cluster_index(name).has_value());
    sc.cluster_id = std::move(name);
    out.push_back(std::move(sc));
  }
  return out;
}

/// Dataset with the synthetic clusters appended (flagged synthetic), and
/// ground truth extended with their labels.
inline std::pair<FusionDataset, GroundTruth> append_synthetic(const FusionDataset& ds, const GroundTruth& truth,
                                                              const std::vector<SyntheticCluster>& synth) {
  std::vector<FusionDataset::RowInput> rows;
  rows.reserve(ds.num_rows());
  for (std::size_t i = 0; i < ds.num_rows(); ++i) {
    FusionDataset::RowInput r;
    r.cluster_id = ds.cluster_name(ds.cluster_of(i));
    if (ds.has_sources()) r.source_id = ds.source_name(ds.source_of(i));
    r.cells = ds.row(i);
    rows.push_back(std::move(r));
  }
  std::vector<bool> flags(ds.num_clusters());
  for (std::size_t k = 0; k < ds.num_clusters(); ++k) flags[k] = ds.is_synthetic(k);
  for (const auto& sc : synth) {
    for (std::size_t r = 0; r < sc.rows.size(); ++r) {
      FusionDataset::RowInput in;
      in.cluster_id = sc.cluster_id;
      in.source_id = sc.row_sources[r];
      in.cells = sc.rows[r];
      rows.push_back(std::move(in));
    }
    flags.push_back(true);
  }
  auto out = FusionDataset::build(ds.schema(), std::move(rows), ds.constraints(), std::move(flags));
  GroundTruth t = truth;
  for (const auto& sc : synth) {
    const std::size_t k = *out.cluster_index(sc.cluster_id);
    for (std::size_t j = 0; j < sc.labels.size(); ++j) t.set(k, j, sc.labels[j]);
  }
  return {std::move(out), std::move(t)};
}

}  // namespace recfuse
