#pragma once

// Training-free string embeddings: signed feature hashing of character
// trigrams, L2-normalised. embed_value plays the role of the per-column
// value map, embed_record the whole-row map.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recfuse/error.hpp"

namespace recfuse {

struct EmbeddingSpec {
  std::size_t m = 32;  // value embedding width
  std::size_t q = 64;  // record embedding width
  std::uint64_t hash_seed = 0x9e3779b97f4a7c15ULL;

  bool operator==(const EmbeddingSpec&) const = default;
};

using Vector = std::vector<double>;

namespace detail {

inline constexpr char kTrigramStart = '\x02';
inline constexpr char kTrigramEnd = '\x03';
inline constexpr char kPrefixSeparator = '\x1f';

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Seeded FNV-1a over `prefix` + `gram`, finalised with a 64-bit mixer.
inline std::uint64_t hash_key(std::uint64_t seed, std::string_view prefix, std::string_view gram) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  feed(prefix);
  feed(gram);
  return mix64(h);
}

/// Adds the signed trigram hashes of `value` (padded with one start and
/// one end sentinel) into `out`.
inline void accumulate_trigrams(std::string_view value, std::string_view prefix, std::uint64_t seed,
                                std::span<double> out) {
  if (value.empty()) return;
  std::string padded;
  padded.reserve(value.size() + 2);
  padded += kTrigramStart;
  padded += value;
  padded += kTrigramEnd;
  const std::size_t dim = out.size();
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    std::uint64_t h = hash_key(seed, prefix, std::string_view(padded).substr(i, 3));
    std::size_t bucket = static_cast<std::size_t>((h >> 1) % dim);
    out[bucket] += (h & 1U) ? 1.0 : -1.0;
  }
}

inline void l2_normalize(Vector& v) {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 == 0.0) return;
  double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
}

}  // namespace detail

/// Embedding of a single cell value in ℝ^m. The empty string maps to zero.
inline Vector embed_value(std::string_view value, const EmbeddingSpec& spec) {
  Vector v(spec.m, 0.0);
  detail::accumulate_trigrams(value, {}, spec.hash_seed, v);
  detail::l2_normalize(v);
  return v;
}

/// Embedding of a whole row in ℝ^q. Each cell's trigrams are keyed by its
/// attribute name, so moving a value to another column changes the result.
inline Vector embed_record(std::span<const std::string_view> row, std::span<const std::string> schema,
                           const EmbeddingSpec& spec) {
  if (row.size() != schema.size()) throw Error("embed_record: row width does not match schema");
  Vector v(spec.q, 0.0);
  std::string prefix;
  for (std::size_t j = 0; j < row.size(); ++j) {
    prefix = schema[j];
    prefix += detail::kPrefixSeparator;
    detail::accumulate_trigrams(row[j], prefix, spec.hash_seed, v);
  }
  detail::l2_normalize(v);
  return v;
}

/// Euclidean distance.
inline double distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error("distance: dimension mismatch (" + std::to_string(u.size()) + " vs " + std::to_string(v.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double d = u[i] - v[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace recfuse
