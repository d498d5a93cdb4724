#pragma once

// Per-cell feature vectors v_ij built from attribute-, record- and
// dataset-level signals. Every vector is laid out as
//
//   [ static block (ν) | dynamic block (ψ) ]
//
// where the static block depends only on the data and the dynamic block is
// recomputed from the working assignment of the current stage.

#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recfuse/constraints.hpp"
#include "recfuse/core_model.hpp"
#include "recfuse/embeddings.hpp"

namespace recfuse {

/// The representation models that can be switched off for ablations.
enum class RepresentationModel {
  Format,
  RunningValue,
  AttrEmbedding,
  Cooccurrence,
  Vote,
  Neighborhood,
  Constraints,
  Source,
};

inline constexpr std::array<RepresentationModel, 8> kAllModels = {
    RepresentationModel::Format,       RepresentationModel::RunningValue, RepresentationModel::AttrEmbedding,
    RepresentationModel::Cooccurrence, RepresentationModel::Vote,         RepresentationModel::Neighborhood,
    RepresentationModel::Constraints,  RepresentationModel::Source,
};

inline std::string_view model_name(RepresentationModel m) {
  switch (m) {
    case RepresentationModel::Format: return "format";
    case RepresentationModel::RunningValue: return "running_value";
    case RepresentationModel::AttrEmbedding: return "attr_embedding";
    case RepresentationModel::Cooccurrence: return "cooccurrence";
    case RepresentationModel::Vote: return "vote";
    case RepresentationModel::Neighborhood: return "neighborhood";
    case RepresentationModel::Constraints: return "constraints";
    case RepresentationModel::Source: return "source";
  }
  return "?";
}

/// Accepts the canonical names plus dash/underscore spellings such as
/// "co-occurrence" or "running-value".
inline std::optional<RepresentationModel> parse_model_name(std::string_view name) {
  std::string norm;
  for (char c : name) {
    if (c == '-' || c == '_') continue;
    norm += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  for (auto m : kAllModels) {
    std::string canon;
    for (char c : model_name(m))
      if (c != '_') canon += c;
    if (canon == norm) return m;
  }
  return std::nullopt;
}

/// Context groups: attribute-, record- and dataset-level.
enum class ContextGroup { Attribute, Record, Dataset };

inline std::string_view group_name(ContextGroup g) {
  switch (g) {
    case ContextGroup::Attribute: return "attribute";
    case ContextGroup::Record: return "record";
    case ContextGroup::Dataset: return "dataset";
  }
  return "?";
}

inline ContextGroup group_of(RepresentationModel m) {
  switch (m) {
    case RepresentationModel::Format:
    case RepresentationModel::RunningValue:
    case RepresentationModel::AttrEmbedding: return ContextGroup::Attribute;
    case RepresentationModel::Cooccurrence:
    case RepresentationModel::Vote: return ContextGroup::Record;
    default: return ContextGroup::Dataset;
  }
}

struct FeatureConfig {
  std::array<bool, kAllModels.size()> enabled_models{true, true, true, true, true, true, true, true};
  EmbeddingSpec embedding;
  PartnerValues partner_values = PartnerValues::Working;

  bool enabled(RepresentationModel m) const { return enabled_models[static_cast<std::size_t>(m)]; }
  void set(RepresentationModel m, bool on) { enabled_models[static_cast<std::size_t>(m)] = on; }
  FeatureConfig without(RepresentationModel m) const {
    FeatureConfig c = *this;
    c.set(m, false);
    return c;
  }
  FeatureConfig without(ContextGroup g) const {
    FeatureConfig c = *this;
    for (auto m : kAllModels)
      if (group_of(m) == g) c.set(m, false);
    return c;
  }

  bool operator==(const FeatureConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Format model

/// Byte length of the UTF-8 sequence starting with `lead` (1 for invalid
/// lead bytes, so every byte is consumed exactly once).
inline std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

/// Splits `s` into code points; malformed sequences fall back to bytes.
inline std::vector<std::string_view> utf8_chars(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len = utf8_length(static_cast<unsigned char>(s[i]));
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

inline bool is_ascii_letter(std::string_view ch) {
  return ch.size() == 1 && ((ch[0] >= 'a' && ch[0] <= 'z') || (ch[0] >= 'A' && ch[0] <= 'Z'));
}
inline bool is_ascii_digit(std::string_view ch) { return ch.size() == 1 && ch[0] >= '0' && ch[0] <= '9'; }

/// Letters → 'A', digits → 'N', every other character → 'S'.
inline std::string tokenize_format(std::string_view value) {
  std::string out;
  for (auto ch : utf8_chars(value)) {
    out += is_ascii_letter(ch) ? 'A' : (is_ascii_digit(ch) ? 'N' : 'S');
  }
  return out;
}

/// Bigram order of the format vector.
inline constexpr std::array<std::string_view, 9> kFormatBigrams = {"AA", "AS", "SA", "SS", "AN",
                                                                    "NA", "NN", "NS", "SN"};

/// Counts of the nine ordered token bigrams, in kFormatBigrams order.
inline std::array<double, 9> bigram_counts(std::string_view tokens) {
  std::array<double, 9> counts{};
  auto slot = [](char a, char b) -> std::size_t {
    static constexpr std::size_t table[3][3] = {
        // A   N   S    (second token)
        {0, 4, 1},  // A
        {5, 6, 7},  // N
        {2, 8, 3},  // S
    };
    auto code = [](char t) -> std::size_t { return t == 'A' ? 0 : (t == 'N' ? 1 : 2); };
    return table[code(a)][code(b)];
  };
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) counts[slot(tokens[i], tokens[i + 1])] += 1.0;
  return counts;
}

// ---------------------------------------------------------------------------
// Reference per-level feature functions. The Featurizer below caches the
// static parts but computes the same quantities.

namespace detail {

/// Frequency-weighted mean of embed_value over the cells of cluster k.
inline Vector cluster_mean_value_embedding(const CandidateSet& cs, const EmbeddingSpec& spec) {
  Vector mean(spec.m, 0.0);
  std::size_t total = 0;
  for (std::size_t q = 0; q < cs.size(); ++q) {
    auto e = embed_value(cs.values[q], spec);
    for (std::size_t d = 0; d < spec.m; ++d) mean[d] += static_cast<double>(cs.freqs[q]) * e[d];
    total += cs.freqs[q];
  }
  for (double& x : mean) x /= static_cast<double>(total);
  return mean;
}

}  // namespace detail

/// [bigram counts (9), distance to the entity's mean value embedding (1),
///  running cluster-value one-hot (ρ_j)]. `running` is empty at stage 0.
inline Vector attribute_features(const FusionDataset& ds, const CandidateSets& sets, std::size_t row,
                                 std::size_t attribute, std::size_t rho, std::optional<LabelVector> running,
                                 const EmbeddingSpec& spec) {
  const auto& value = ds.cell(row, attribute);
  const auto& cs = sets.at(ds.cluster_of(row), attribute);
  Vector v;
  auto counts = bigram_counts(tokenize_format(value));
  v.insert(v.end(), counts.begin(), counts.end());
  v.push_back(distance(embed_value(value, spec), detail::cluster_mean_value_embedding(cs, spec)));
  Vector x(rho, 0.0);
  if (running) {
    if (running->hot_index >= rho) throw Error("attribute_features: running label outside label dimension");
    x[running->hot_index] = 1.0;
  }
  v.insert(v.end(), x.begin(), x.end());
  return v;
}

/// [co-occurrence ratio for every other attribute (c−1), vote (1)].
inline Vector record_features(const FusionDataset& ds, const CandidateSets& sets, std::size_t row,
                              std::size_t attribute, const LabelTable& working) {
  const std::size_t k = ds.cluster_of(row);
  const auto members = ds.members(k);
  const auto& own = ds.cell(row, attribute);
  Vector v;
  for (std::size_t other = 0; other < ds.num_attributes(); ++other) {
    if (other == attribute) continue;
    const auto& w = sets.at(k, other).values[working.at(k, other)];
    std::size_t n = 0, m = 0;
    for (auto i : members) {
      if (ds.cell(i, other) != w) continue;
      ++m;
      if (ds.cell(i, attribute) == own) ++n;
    }
    v.push_back(m == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(m));
  }
  std::size_t t = 0;
  for (auto i : members) t += ds.cell(i, attribute) == own ? 1 : 0;
  v.push_back(static_cast<double>(t) / static_cast<double>(members.size()));
  return v;
}

/// [neighbourhood distance (1), violation count per constraint in Σ_j,
///  source one-hot (omitted without sources)].
inline Vector database_features(const FusionDataset& ds, const CandidateSets& sets, const ConstraintIndex& index,
                                std::size_t row, std::size_t attribute, const LabelTable& working,
                                const FeatureConfig& config) {
  const auto& spec = config.embedding;
  const std::size_t k = ds.cluster_of(row);
  auto joint = [&](std::size_t i) {
    Vector n = embed_record(ds.row_view(i), ds.schema(), spec);
    auto b = embed_value(ds.cell(i, attribute), spec);
    n.insert(n.end(), b.begin(), b.end());
    return n;
  };
  Vector mean(spec.q + spec.m, 0.0);
  for (auto i : ds.members(k)) {
    auto n = joint(i);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += n[d];
  }
  for (double& x : mean) x /= static_cast<double>(ds.members(k).size());
  Vector v;
  v.push_back(distance(joint(row), mean));
  for (auto c : index.for_attribute(attribute)) {
    v.push_back(static_cast<double>(
        count_violations(row, ds.constraints()[c], ds, sets, working, config.partner_values)));
  }
  if (ds.has_sources()) {
    Vector s(ds.num_sources(), 0.0);
    s[ds.source_of(row)] = 1.0;
    v.insert(v.end(), s.begin(), s.end());
  }
  return v;
}

// ---------------------------------------------------------------------------

struct FeatureBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool dynamic = false;
};

/// Column layout of v_ij for one attribute.
struct FeatureLayout {
  std::size_t nu = 0;   // static width
  std::size_t psi = 0;  // dynamic width
  std::vector<FeatureBlock> blocks;

  std::size_t width() const { return nu + psi; }
  const FeatureBlock* find(std::string_view name) const {
    for (const auto& b : blocks)
      if (b.name == name) return &b;
    return nullptr;
  }
};

struct CellFeatures {
  std::size_t row = 0;
  std::size_t attribute = 0;
  Vector static_block;
  Vector dynamic_block;

  Vector values() const {
    Vector v = static_block;
    v.insert(v.end(), dynamic_block.begin(), dynamic_block.end());
    return v;
  }
};

/// Dense row-major feature matrix for one column: one row per cell.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
};

/// Violation counts [constraint][row] for one working assignment.
using ViolationTable = std::vector<std::vector<std::size_t>>;

/// Builds feature vectors for every cell of a dataset. Static blocks are
/// computed once at construction.
class Featurizer {
 public:
  Featurizer(const FusionDataset& ds, const CandidateSets& sets, FeatureConfig config)
      : ds_(ds), sets_(sets), config_(std::move(config)), index_(ds.constraints(), ds.num_attributes()) {
    const std::size_t c = ds.num_attributes();
    rho_.resize(c);
    layouts_.resize(c);
    static_.resize(c);
    vote_.resize(c);
    for (std::size_t j = 0; j < c; ++j) {
      rho_[j] = label_dimension(sets, j);
      layouts_[j] = make_layout(j);
    }
    compute_static_blocks();
  }

  const FusionDataset& dataset() const { return ds_; }
  const CandidateSets& candidate_sets() const { return sets_; }
  const FeatureConfig& config() const { return config_; }
  const ConstraintIndex& constraint_index() const { return index_; }
  std::size_t rho(std::size_t j) const { return rho_[j]; }
  const FeatureLayout& layout(std::size_t j) const { return layouts_[j]; }

  /// Violation counts needed by the constraints block, or an empty table
  /// when that block is off.
  ViolationTable violations(const LabelTable& working) const {
    ViolationTable out;
    if (!config_.enabled(RepresentationModel::Constraints) || ds_.constraints().empty()) return out;
    ViolationCounter counter(ds_, sets_, working, config_.partner_values);
    for (const auto& dc : ds_.constraints()) out.push_back(counter.counts(dc));
    return out;
  }

  /// Feature matrix for column j. `running` is null at stage 0 (all-zero
  /// running-value block). `violations` must come from violations(working)
  /// when the constraints block is on.
  FeatureMatrix matrix(std::size_t j, const LabelTable& working, const LabelTable* running,
                       const ViolationTable& violations) const {
    const auto& layout = layouts_[j];
    FeatureMatrix fm;
    fm.rows = ds_.num_rows();
    fm.cols = layout.width();
    fm.data.assign(fm.rows * fm.cols, 0.0);
    const std::size_t c = ds_.num_attributes();
    const auto* running_block = layout.find("running_value");
    const auto* cooc_block = layout.find("cooccurrence");
    const auto* vote_block = layout.find("vote");
    const auto* dc_block = layout.find("constraints");
    const auto& sigma = index_.for_attribute(j);
    if (dc_block && violations.size() != ds_.constraints().size()) {
      throw Error("featurize: violation table does not match constraints");
    }
    for (std::size_t i = 0; i < fm.rows; ++i) {
      auto out = fm.row(i);
      const auto& st = static_[j];
      std::copy(st.begin() + static_cast<std::ptrdiff_t>(i * layout.nu),
                st.begin() + static_cast<std::ptrdiff_t>((i + 1) * layout.nu), out.begin());
      const std::size_t k = ds_.cluster_of(i);
      if (running_block && running) out[running_block->offset + running->at(k, j)] = 1.0;
      if (cooc_block) {
        const auto members = ds_.members(k);
        const std::size_t own = sets_.cell_index(i, j);
        std::size_t slot = 0;
        for (std::size_t other = 0; other < c; ++other) {
          if (other == j) continue;
          const std::size_t w = working.at(k, other);
          std::size_t n = 0, m = 0;
          for (auto r : members) {
            if (sets_.cell_index(r, other) != w) continue;
            ++m;
            if (sets_.cell_index(r, j) == own) ++n;
          }
          out[cooc_block->offset + slot++] = m == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(m);
        }
      }
      if (vote_block) out[vote_block->offset] = vote_[j][i];
      if (dc_block) {
        for (std::size_t s = 0; s < sigma.size(); ++s) {
          out[dc_block->offset + s] = static_cast<double>(violations[sigma[s]][i]);
        }
      }
    }
    return fm;
  }

  /// Spec-level entry point: features of every cell of column j.
  std::vector<CellFeatures> featurize(std::size_t j, const LabelTable& working, const LabelTable* running) const {
    auto fm = matrix(j, working, running, violations(working));
    const auto& layout = layouts_[j];
    std::vector<CellFeatures> out(fm.rows);
    for (std::size_t i = 0; i < fm.rows; ++i) {
      auto r = fm.row(i);
      out[i].row = i;
      out[i].attribute = j;
      out[i].static_block.assign(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(layout.nu));
      out[i].dynamic_block.assign(r.begin() + static_cast<std::ptrdiff_t>(layout.nu), r.end());
      if (out[i].static_block.size() + out[i].dynamic_block.size() != layout.width()) {
        throw Error("featurize: dimension drift");
      }
    }
    return out;
  }

 private:
  FeatureLayout make_layout(std::size_t j) const {
    FeatureLayout l;
    std::size_t offset = 0;
    auto add = [&](RepresentationModel m, std::size_t size, bool dynamic) {
      if (!config_.enabled(m) || size == 0) return;
      l.blocks.push_back({std::string(model_name(m)), offset, size, dynamic});
      offset += size;
      (dynamic ? l.psi : l.nu) += size;
    };
    add(RepresentationModel::Format, 9, false);
    add(RepresentationModel::AttrEmbedding, 1, false);
    add(RepresentationModel::Neighborhood, 1, false);
    add(RepresentationModel::Source, ds_.has_sources() ? ds_.num_sources() : 0, false);
    add(RepresentationModel::RunningValue, rho_[j], true);
    add(RepresentationModel::Cooccurrence, ds_.num_attributes() - 1, true);
    add(RepresentationModel::Vote, 1, true);
    add(RepresentationModel::Constraints, index_.for_attribute(j).size(), true);
    return l;
  }

  void compute_static_blocks() {
    const auto& spec = config_.embedding;
    const std::size_t n = ds_.num_rows(), c = ds_.num_attributes();
    const bool need_records = config_.enabled(RepresentationModel::Neighborhood);
    std::vector<Vector> record_emb;
    if (need_records) {
      record_emb.reserve(n);
      for (std::size_t i = 0; i < n; ++i) record_emb.push_back(embed_record(ds_.row_view(i), ds_.schema(), spec));
    }
    for (std::size_t j = 0; j < c; ++j) {
      const auto& layout = layouts_[j];
      auto& st = static_[j];
      st.assign(n * layout.nu, 0.0);
      vote_[j].assign(n, 0.0);
      for (std::size_t k = 0; k < ds_.num_clusters(); ++k) {
        const auto& cs = sets_.at(k, j);
        for (auto i : ds_.members(k)) {
          vote_[j][i] = static_cast<double>(cs.freqs[sets_.cell_index(i, j)]) /
                        static_cast<double>(ds_.members(k).size());
        }
        const auto members = ds_.members(k);
        std::vector<Vector> value_emb;
        Vector value_mean(spec.m, 0.0);
        if (config_.enabled(RepresentationModel::AttrEmbedding) || need_records) {
          for (std::size_t q = 0; q < cs.size(); ++q) value_emb.push_back(embed_value(cs.values[q], spec));
          for (std::size_t q = 0; q < cs.size(); ++q)
            for (std::size_t d = 0; d < spec.m; ++d) value_mean[d] += static_cast<double>(cs.freqs[q]) * value_emb[q][d];
          for (double& x : value_mean) x /= static_cast<double>(members.size());
        }
        Vector joint_mean;
        if (need_records) {
          joint_mean.assign(spec.q + spec.m, 0.0);
          for (auto i : members) {
            for (std::size_t d = 0; d < spec.q; ++d) joint_mean[d] += record_emb[i][d];
            const auto& b = value_emb[sets_.cell_index(i, j)];
            for (std::size_t d = 0; d < spec.m; ++d) joint_mean[spec.q + d] += b[d];
          }
          for (double& x : joint_mean) x /= static_cast<double>(members.size());
        }
        for (auto i : members) {
          std::span<double> out(st.data() + i * layout.nu, layout.nu);
          const std::size_t own = sets_.cell_index(i, j);
          for (const auto& block : layout.blocks) {
            if (block.dynamic) continue;
            auto dst = out.subspan(block.offset, block.size);
            if (block.name == "format") {
              auto counts = bigram_counts(tokenize_format(ds_.cell(i, j)));
              std::copy(counts.begin(), counts.end(), dst.begin());
            } else if (block.name == "attr_embedding") {
              dst[0] = distance(value_emb[own], value_mean);
            } else if (block.name == "neighborhood") {
              Vector joint = record_emb[i];
              joint.insert(joint.end(), value_emb[own].begin(), value_emb[own].end());
              dst[0] = distance(joint, joint_mean);
            } else if (block.name == "source") {
              dst[ds_.source_of(i)] = 1.0;
            }
          }
        }
      }
    }
  }

  const FusionDataset& ds_;
  const CandidateSets& sets_;
  FeatureConfig config_;
  ConstraintIndex index_;
  std::vector<std::size_t> rho_;
  std::vector<FeatureLayout> layouts_;
  std::vector<std::vector<double>> static_;  // [attribute][row * nu + d]
  std::vector<std::vector<double>> vote_;    // [attribute][row]; constant but kept in ψ
};

}  // namespace recfuse
