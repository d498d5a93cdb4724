#pragma once

// Synthetic benchmark generator. One clean key attribute; every other
// attribute's true value is a deterministic function of the key. A share of
// clusters has colluding wrong rows that outvote the faithful ones on some
// attributes, so majority vote tops out near 1 − q there.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "recfuse/core_model.hpp"
#include "recfuse/dc.hpp"
#include "recfuse/embeddings.hpp"
#include "recfuse/error.hpp"
#include "recfuse/learner.hpp"

namespace recfuse {

struct BenchmarkSpec {
  std::size_t clusters = 200;  // p
  std::size_t attributes = 5;  // c, including the key
  std::size_t rows = 6;        // r, rows per cluster
  double corruption = 0.4;     // q
  /// Distinct keys as a share of clusters; smaller means more clusters
  /// share a key.
  double key_share = 0.25;
  /// Share of wrong values that are format perturbations of the truth
  /// rather than other vocabulary values.
  double format_noise = 0.5;
  std::size_t sources = 0;
  bool functional_dependencies = true;

  void validate() const {
    if (clusters < 1) throw Error("inconsistent benchmark spec: need at least one cluster");
    if (attributes < 3) throw Error("inconsistent benchmark spec: need at least 3 attributes (key + 2)");
    if (rows < 5) throw Error("inconsistent benchmark spec: rows per cluster must be >= 5 for a wrong majority "
                              "that leaves the other attributes decidable");
    if (!(corruption >= 0.0 && corruption <= 0.5)) {
      throw Error("inconsistent benchmark spec: corruption must lie in [0, 0.5]");
    }
    if (!(key_share > 0.0 && key_share <= 1.0)) throw Error("inconsistent benchmark spec: key_share must lie in (0, 1]");
    if (!(format_noise >= 0.0 && format_noise <= 1.0)) {
      throw Error("inconsistent benchmark spec: format_noise must lie in [0, 1]");
    }
    if (sources == 1) throw Error("inconsistent benchmark spec: use 0 or at least 2 sources");
  }

  bool operator==(const BenchmarkSpec&) const = default;
};

struct Benchmark {
  FusionDataset dataset;
  GroundTruth truth;  // every (cluster, attribute)
  std::size_t key_attribute = 0;
  std::vector<double> source_accuracy;
  /// Attributes other than the key; the usual evaluation set.
  std::vector<std::size_t> noisy_attributes() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < dataset.num_attributes(); ++j)
      if (j != key_attribute) out.push_back(j);
    return out;
  }
};

namespace detail {

inline constexpr std::array<const char*, 32> kFirstNames = {
    "Maria", "James", "Aiko",  "Omar",   "Lena",  "Victor", "Priya",  "Tomas", "Grace", "Malik", "Ines",
    "Pavel", "Chloe", "Diego", "Hana",   "Felix", "Amara",  "Jonas",  "Leila", "Marco", "Nadia", "Oscar",
    "Rosa",  "Samir", "Tessa", "Ulrich", "Vera",  "Wendy",  "Xavier", "Yara",  "Zane",  "Elena"};
inline constexpr std::array<const char*, 32> kLastNames = {
    "Lopez",  "Smith",  "Tanaka", "Haddad", "Novak",  "Costa",   "Iyer",   "Berg",
    "Okafor", "Rossi",  "Meyer",  "Kowal",  "Dubois", "Silva",   "Kim",    "Larsen",
    "Moreau", "Nagy",   "Ortiz",  "Petrov", "Quinn",  "Reyes",   "Sato",   "Torres",
    "Ueda",   "Varga",  "Weber",  "Young",  "Zhou",   "Fischer", "Alvarez", "Baker"};
inline constexpr std::array<const char*, 16> kStreets = {"Oak",    "Maple", "Cedar", "Pine",   "Elm",    "Birch",
                                                         "Willow", "Ash",   "Lake",  "Hill",   "River",  "Park",
                                                         "Sunset", "Grove", "Mill",  "Church"};
inline constexpr std::array<const char*, 4> kStreetKinds = {"St", "Ave", "Rd", "Ln"};

enum class ValueStyle { Name, Phone, Address, Code };

inline ValueStyle style_of(std::size_t attribute) {
  return static_cast<ValueStyle>((attribute - 1) % 4);
}

inline std::string digits(std::uint64_t h, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    s += static_cast<char>('0' + h % 10);
    h /= 10;
  }
  return s;
}

/// A canonical value of the given style derived from `h`.
inline std::string render_value(ValueStyle style, std::uint64_t h) {
  switch (style) {
    case ValueStyle::Name:
      return std::string(kFirstNames[h % 32]) + " " + kLastNames[(h >> 8) % 32];
    case ValueStyle::Phone: {
      auto d = digits(h, 10);
      return "(" + d.substr(0, 3) + ") " + d.substr(3, 3) + "-" + d.substr(6, 4);
    }
    case ValueStyle::Address:
      return std::to_string(1 + h % 999) + " " + kStreets[(h >> 12) % 16] + " " + kStreetKinds[(h >> 20) % 4];
    case ValueStyle::Code: {
      std::string s;
      s += static_cast<char>('A' + h % 26);
      s += static_cast<char>('A' + (h >> 5) % 26);
      return s + "-" + digits(h >> 10, 4);
    }
  }
  return {};
}

/// A same-content variant of `v` in a different surface format.
inline std::string perturb_format(ValueStyle style, const std::string& v, std::uint64_t h) {
  const int variant = static_cast<int>(h % 3);
  switch (style) {
    case ValueStyle::Name: {
      auto sp = v.find(' ');
      std::string first = v.substr(0, sp), last = v.substr(sp + 1);
      if (variant == 0) return first.substr(0, 1) + ". " + last;
      if (variant == 1) return last + ", " + first;
      return first + "  " + last + ".";
    }
    case ValueStyle::Phone: {
      std::string d;
      for (char ch : v)
        if (ch >= '0' && ch <= '9') d += ch;
      if (variant == 0) return d;
      if (variant == 1) return d.substr(0, 3) + "." + d.substr(3, 3) + "." + d.substr(6);
      return "+1 " + d.substr(0, 3) + " " + d.substr(3, 3) + " " + d.substr(6);
    }
    case ValueStyle::Address: {
      auto sp = v.find(' ');
      std::string num = v.substr(0, sp), rest = v.substr(sp + 1);
      if (variant == 0) return rest + " #" + num;
      if (variant == 1) return num + ", " + rest + ".";
      return "No." + num + " " + rest;
    }
    case ValueStyle::Code: {
      auto dash = v.find('-');
      std::string a = v.substr(0, dash), b = v.substr(dash + 1);
      if (variant == 0) return a + b;
      if (variant == 1) return b + "/" + a;
      return a + " - " + b;
    }
  }
  return v;
}

}  // namespace detail

/// Generates the benchmark. Attribute 0 ("key") is clean and constant within
/// a cluster. In a share 2q of clusters the floor((r−1)/2) faithful rows are
/// outvoted on floor((c−1)/2) attributes by colluding rows, which scatter
/// distinct wrong values on the remaining attributes; elsewhere the faithful
/// rows hold the majority everywhere. The colluded attributes are always a
/// minority of the non-key ones.
inline Benchmark generate_benchmark(const BenchmarkSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t p = spec.clusters, c = spec.attributes, r = spec.rows;
  std::mt19937_64 rng(detail::mix64(seed ^ 0x2545f4914f6cdd1dULL));
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  std::vector<std::string> schema{"key"};
  const std::array<const char*, 4> style_names{"name", "phone", "address", "code"};
  for (std::size_t j = 1; j < c; ++j) {
    std::string base = style_names[(j - 1) % 4];
    if (j > 4) base += std::to_string((j - 1) / 4 + 1);
    schema.push_back(base);
  }
  const std::uint64_t world = detail::mix64(seed + 0x9e3779b97f4a7c15ULL);
  auto truth_of = [&](std::size_t key, std::size_t j) {
    return detail::render_value(detail::style_of(j), detail::mix64(world ^ (key * 0x100000001b3ULL) ^ (j << 48)));
  };
  auto key_text = [](std::size_t key) {
    std::string d = std::to_string(10000 + key);
    return "Z" + d;
  };
  auto wrong_value = [&](std::size_t j, const std::string& truth) {
    for (;;) {
      std::string v = unit() < spec.format_noise ? detail::perturb_format(detail::style_of(j), truth, rng())
                                                 : detail::render_value(detail::style_of(j), rng());
      if (v != truth) return v;
    }
  };

  const std::size_t num_keys = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.key_share * p)));
  Benchmark bm;
  bm.key_attribute = 0;
  std::vector<double> acc;
  if (spec.sources > 0) {
    for (std::size_t s = 0; s < spec.sources; ++s) {
      acc.push_back(0.9 - 0.6 * static_cast<double>(s) / static_cast<double>(spec.sources - 1));
    }
  }
  auto pick_source = [&](bool faithful) {
    double total = 0.0;
    for (double a : acc) total += faithful ? a : 1.0 - a;
    double u = unit() * total;
    for (std::size_t s = 0; s < acc.size(); ++s) {
      u -= faithful ? acc[s] : 1.0 - acc[s];
      if (u < 0.0) return s;
    }
    return acc.size() - 1;
  };

  const std::size_t weak_faithful = (r - 1) / 2;  // outvoted group in corrupted clusters
  std::vector<FusionDataset::RowInput> rows;
  std::vector<std::vector<std::string>> truths;
  // Keys are spread evenly over the clusters.
  std::vector<std::size_t> key_of(p);
  for (std::size_t k = 0; k < p; ++k) key_of[k] = k % num_keys;
  detail::seeded_shuffle(key_of, rng);
  for (std::size_t k = 0; k < p; ++k) {
    const std::size_t key = key_of[k];
    std::vector<std::string> t(c);
    t[0] = key_text(key);
    for (std::size_t j = 1; j < c; ++j) t[j] = truth_of(key, j);
    truths.push_back(t);
    const bool corrupted = unit() < 2.0 * spec.corruption;
    const std::size_t faithful = corrupted ? weak_faithful : r - weak_faithful;
    const std::size_t bad = r - faithful;
    // Per attribute: collude (one shared wrong value) or scatter (distinct wrong values).
    std::vector<bool> collude(c, false);
    if (corrupted) {
      const std::size_t m = (c - 1) / 2;
      std::vector<std::size_t> attrs;
      for (std::size_t j = 1; j < c; ++j) attrs.push_back(j);
      detail::seeded_shuffle(attrs, rng);
      for (std::size_t a = 0; a < m; ++a) collude[attrs[a]] = true;
    } else {
      for (std::size_t j = 1; j < c; ++j) collude[j] = unit() < 0.5;
    }
    std::vector<std::vector<std::string>> cells(r, t);
    for (std::size_t j = 1; j < c; ++j) {
      if (collude[j]) {
        auto w = wrong_value(j, t[j]);
        for (std::size_t b = 0; b < bad; ++b) cells[faithful + b][j] = w;
      } else {
        std::vector<std::string> used{t[j]};
        for (std::size_t b = 0; b < bad; ++b) {
          std::string w = wrong_value(j, t[j]);
          // Only three format variants exist per value; fall back to the vocabulary.
          while (std::find(used.begin(), used.end(), w) != used.end())
            w = detail::render_value(detail::style_of(j), rng());
          used.push_back(w);
          cells[faithful + b][j] = w;
        }
      }
    }
    // Row order within the cluster is shuffled so position carries no signal.
    std::vector<std::size_t> order(r);
    for (std::size_t i = 0; i < r; ++i) order[i] = i;
    detail::seeded_shuffle(order, rng);
    for (auto i : order) {
      FusionDataset::RowInput in;
      in.cluster_id = "e" + std::to_string(k);
      if (!acc.empty()) in.source_id = "s" + std::to_string(pick_source(i < faithful));
      in.cells = cells[i];
      rows.push_back(std::move(in));
    }
  }
  std::vector<DenialConstraint> dcs;
  if (spec.functional_dependencies) {
    for (std::size_t j = 1; j < c; ++j) dcs.push_back(parse_dc("!(t1.key = t2.key & t1." + schema[j] + " != t2." +
                                                                   schema[j] + ")",
                                                               schema));
  }
  bm.dataset = FusionDataset::build(schema, std::move(rows), std::move(dcs));
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t j = 0; j < c; ++j) bm.truth.set(k, j, truths[k][j]);
  bm.source_accuracy = acc;
  return bm;
}

}  // namespace recfuse
