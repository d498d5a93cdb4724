#pragma once

// Run configuration: an INI file with one section per module. Keys are
// addressed as "section.key" both here and on the command line.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <thread>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "recfuse/augmentation.hpp"
#include "recfuse/benchmark.hpp"
#include "recfuse/error.hpp"
#include "recfuse/eval_harness.hpp"
#include "recfuse/featurizer.hpp"
#include "recfuse/learner.hpp"
#include "recfuse/stagewise.hpp"

namespace recfuse {

inline constexpr std::string_view kVersion = "1.0.0";

struct ConfigKey {
  const char* name;
  const char* help;
};

/// Every accepted key. Anything else in a file or on the command line is an
/// error.
inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"data.path", "dataset file"},
      {"data.labels", "ground-truth labels file"},
      {"data.constraints", "denial constraints file"},
      {"data.delimiter", "field delimiter (one character, or 'tab')"},
      {"features.disable", "comma-separated representation models to disable"},
      {"features.embedding_m", "attribute embedding dimension"},
      {"features.embedding_q", "record embedding dimension"},
      {"features.hash_seed", "feature hashing seed"},
      {"violations.partner_values", "raw or working"},
      {"train.stages", "number of stages after the first (T)"},
      {"train.epochs", "ADAM epochs per stage"},
      {"train.batch_size", "mini-batch size"},
      {"train.alpha", "ADAM step size"},
      {"train.beta1", "ADAM first-moment decay"},
      {"train.beta2", "ADAM second-moment decay"},
      {"train.epsilon", "ADAM epsilon"},
      {"train.l2", "L2 penalty on the weights"},
      {"train.weak_weight", "loss weight of weakly labeled cells"},
      {"train.standardize", "z-score features during optimisation"},
      {"train.running", "dynamic features from 'working' (y^[t]) or 'prediction'"},
      {"labels.soft", "train on averaged distributions instead of hard weak labels"},
      {"augment.ratio", "synthetic clusters as a share of clusters"},
      {"experiment.train_fraction", "labeled share of clusters"},
      {"experiment.validation_fraction", "validation share of clusters"},
      {"experiment.seeds", "number of split seeds, or a comma list of seeds"},
      {"experiment.eval_attributes", "comma-separated attributes to score (empty: all)"},
      {"experiment.ablate_models", "add one variant per disabled model"},
      {"experiment.ablate_groups", "add one variant per disabled context group"},
      {"experiment.augment_ratios", "comma-separated extra augmentation ratios"},
      {"experiment.stage_counts", "comma-separated extra stage counts"},
      {"generator.clusters", "benchmark clusters"},
      {"generator.attributes", "benchmark attributes including the key"},
      {"generator.rows", "rows per cluster"},
      {"generator.corruption", "corruption rate q"},
      {"generator.key_share", "distinct keys as a share of clusters"},
      {"generator.format_noise", "share of wrong values that are format variants"},
      {"generator.sources", "number of sources (0: none)"},
      {"generator.functional_dependencies", "emit key FDs as constraints"},
      {"run.seed", "global seed"},
      {"run.jobs", "worker threads (0: logical cores)"},
      {"run.output", "output directory"},
  };
  return keys;
}

namespace detail {

inline bool known_key(const std::string& k) {
  for (const auto& c : config_keys())
    if (k == c.name) return true;
  return false;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (auto t = trim(cur); !t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (auto t = trim(cur); !t.empty()) out.push_back(t);
  return out;
}

inline std::string fmt_double(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw Error("config: " + key + ": expected a number, got '" + v + "'");
  return d;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw Error("config: " + key + ": expected a nonnegative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw Error("config: " + key + ": integer out of range");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error("config: " + key + ": expected true or false, got '" + v + "'");
}

}  // namespace detail

struct RunConfig {
  std::string data_path, labels_path, constraints_path;
  char delimiter = ',';
  std::string output = "out";
  FeatureConfig features;
  StagewiseConfig stagewise;
  AugmentConfig augment;
  ExperimentConfig experiment;
  BenchmarkSpec generator;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;

  /// Raw key/value pairs the config was built from, after overrides.
  std::map<std::string, std::string> values;

  /// Canonical "section.key = value" text covering every key, sorted. The
  /// config hash is taken over this.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : to_map()) out += k + " = " + v + "\n";
    return out;
  }

  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical()) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  std::size_t resolved_jobs() const {
    if (jobs > 0) return jobs;
    auto n = std::thread::hardware_concurrency();
    return n ? n : 1;
  }

  std::map<std::string, std::string> to_map() const {
    using detail::fmt_double;
    std::map<std::string, std::string> m;
    m["data.path"] = data_path;
    m["data.labels"] = labels_path;
    m["data.constraints"] = constraints_path;
    m["data.delimiter"] = delimiter == '\t' ? "tab" : std::string(1, delimiter);
    std::string disabled;
    for (auto mdl : kAllModels) {
      if (features.enabled(mdl)) continue;
      if (!disabled.empty()) disabled += ",";
      disabled += model_name(mdl);
    }
    m["features.disable"] = disabled;
    m["features.embedding_m"] = std::to_string(features.embedding.m);
    m["features.embedding_q"] = std::to_string(features.embedding.q);
    m["features.hash_seed"] = std::to_string(features.embedding.hash_seed);
    m["violations.partner_values"] = std::string(to_string(features.partner_values));
    const auto& t = stagewise.train;
    m["train.stages"] = std::to_string(t.stages);
    m["train.epochs"] = std::to_string(t.epochs);
    m["train.batch_size"] = std::to_string(t.batch_size);
    m["train.alpha"] = fmt_double(t.adam.alpha);
    m["train.beta1"] = fmt_double(t.adam.beta1);
    m["train.beta2"] = fmt_double(t.adam.beta2);
    m["train.epsilon"] = fmt_double(t.adam.epsilon);
    m["train.l2"] = fmt_double(t.l2);
    m["train.weak_weight"] = fmt_double(t.weak_weight);
    m["train.standardize"] = t.standardize ? "true" : "false";
    m["train.running"] = std::string(to_string(stagewise.running));
    m["labels.soft"] = t.soft_labels ? "true" : "false";
    m["augment.ratio"] = fmt_double(augment.ratio);
    const auto& e = experiment;
    m["experiment.train_fraction"] = fmt_double(e.train_fraction);
    m["experiment.validation_fraction"] = fmt_double(e.validation_fraction);
    std::string seeds;
    for (auto s : e.seed_list()) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
    m["experiment.seeds"] = seeds;
    std::string attrs;
    for (const auto& a : e.eval_attributes) attrs += (attrs.empty() ? "" : ",") + a;
    m["experiment.eval_attributes"] = attrs;
    m["experiment.ablate_models"] = e.ablate_models ? "true" : "false";
    m["experiment.ablate_groups"] = e.ablate_groups ? "true" : "false";
    std::string ratios;
    for (auto r : e.augment_ratios) ratios += (ratios.empty() ? "" : ",") + fmt_double(r);
    m["experiment.augment_ratios"] = ratios;
    std::string counts;
    for (auto c : e.stage_counts) counts += (counts.empty() ? "" : ",") + std::to_string(c);
    m["experiment.stage_counts"] = counts;
    const auto& g = generator;
    m["generator.clusters"] = std::to_string(g.clusters);
    m["generator.attributes"] = std::to_string(g.attributes);
    m["generator.rows"] = std::to_string(g.rows);
    m["generator.corruption"] = fmt_double(g.corruption);
    m["generator.key_share"] = fmt_double(g.key_share);
    m["generator.format_noise"] = fmt_double(g.format_noise);
    m["generator.sources"] = std::to_string(g.sources);
    m["generator.functional_dependencies"] = g.functional_dependencies ? "true" : "false";
    m["run.seed"] = std::to_string(seed);
    m["run.jobs"] = std::to_string(jobs);
    m["run.output"] = output;
    return m;
  }
};

/// Builds a RunConfig from "section.key" → value pairs. Missing keys take
/// their defaults. `env_seed`, when set, replaces run.seed.
inline RunConfig make_config(const std::map<std::string, std::string>& kv,
                             const std::optional<std::string>& env_seed = std::nullopt) {
  using namespace detail;
  RunConfig c;
  c.values = kv;
  for (const auto& [k, v] : kv)
    if (!known_key(k)) throw Error("config: unknown key '" + k + "'");
  auto get = [&](const char* k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("data.path")) c.data_path = *v;
  if (auto v = get("data.labels")) c.labels_path = *v;
  if (auto v = get("data.constraints")) c.constraints_path = *v;
  if (auto v = get("data.delimiter")) {
    if (*v == "tab" || *v == "\\t") c.delimiter = '\t';
    else if (v->size() == 1 && *v != "\"" && *v != "\n") c.delimiter = (*v)[0];
    else throw Error("config: data.delimiter must be one character or 'tab'");
  }
  if (auto v = get("features.disable")) {
    for (const auto& name : split_list(*v)) {
      auto m = parse_model_name(name);
      if (!m) throw Error("config: features.disable: unknown representation model '" + name + "'");
      c.features.set(*m, false);
    }
  }
  if (auto v = get("features.embedding_m")) c.features.embedding.m = parse_uint("features.embedding_m", *v);
  if (auto v = get("features.embedding_q")) c.features.embedding.q = parse_uint("features.embedding_q", *v);
  if (auto v = get("features.hash_seed")) c.features.embedding.hash_seed = parse_uint("features.hash_seed", *v);
  if (auto v = get("violations.partner_values")) {
    if (*v == "raw") c.features.partner_values = PartnerValues::Raw;
    else if (*v == "working") c.features.partner_values = PartnerValues::Working;
    else throw Error("config: violations.partner_values must be 'raw' or 'working'");
  }
  auto& t = c.stagewise.train;
  if (auto v = get("train.stages")) t.stages = parse_uint("train.stages", *v);
  if (auto v = get("train.epochs")) t.epochs = parse_uint("train.epochs", *v);
  if (auto v = get("train.batch_size")) t.batch_size = parse_uint("train.batch_size", *v);
  if (auto v = get("train.alpha")) t.adam.alpha = parse_double("train.alpha", *v);
  if (auto v = get("train.beta1")) t.adam.beta1 = parse_double("train.beta1", *v);
  if (auto v = get("train.beta2")) t.adam.beta2 = parse_double("train.beta2", *v);
  if (auto v = get("train.epsilon")) t.adam.epsilon = parse_double("train.epsilon", *v);
  if (auto v = get("train.l2")) t.l2 = parse_double("train.l2", *v);
  if (auto v = get("train.weak_weight")) t.weak_weight = parse_double("train.weak_weight", *v);
  if (auto v = get("train.standardize")) t.standardize = parse_bool("train.standardize", *v);
  if (auto v = get("train.running")) {
    if (*v == "working") c.stagewise.running = RunningSource::Working;
    else if (*v == "prediction") c.stagewise.running = RunningSource::Prediction;
    else throw Error("config: train.running must be 'working' or 'prediction'");
  }
  if (auto v = get("labels.soft")) t.soft_labels = parse_bool("labels.soft", *v);
  if (auto v = get("augment.ratio")) c.augment.ratio = parse_double("augment.ratio", *v);
  auto& e = c.experiment;
  if (auto v = get("experiment.train_fraction")) e.train_fraction = parse_double("experiment.train_fraction", *v);
  if (auto v = get("experiment.validation_fraction")) {
    e.validation_fraction = parse_double("experiment.validation_fraction", *v);
  }
  if (auto v = get("experiment.seeds")) {
    auto items = split_list(*v);
    if (items.size() == 1 && v->find(',') == std::string::npos) {
      const auto n = parse_uint("experiment.seeds", items[0]);
      if (n == 0) throw Error("config: experiment.seeds must be at least 1");
      for (std::uint64_t s = 0; s < n; ++s) e.seeds.push_back(s);
    } else {
      for (const auto& s : items) e.seeds.push_back(parse_uint("experiment.seeds", s));
      if (e.seeds.empty()) throw Error("config: experiment.seeds is empty");
    }
  }
  if (auto v = get("experiment.eval_attributes")) e.eval_attributes = split_list(*v);
  if (auto v = get("experiment.ablate_models")) e.ablate_models = parse_bool("experiment.ablate_models", *v);
  if (auto v = get("experiment.ablate_groups")) e.ablate_groups = parse_bool("experiment.ablate_groups", *v);
  if (auto v = get("experiment.augment_ratios")) {
    for (const auto& s : split_list(*v)) e.augment_ratios.push_back(parse_double("experiment.augment_ratios", s));
  }
  if (auto v = get("experiment.stage_counts")) {
    for (const auto& s : split_list(*v)) e.stage_counts.push_back(parse_uint("experiment.stage_counts", s));
  }
  auto& g = c.generator;
  if (auto v = get("generator.clusters")) g.clusters = parse_uint("generator.clusters", *v);
  if (auto v = get("generator.attributes")) g.attributes = parse_uint("generator.attributes", *v);
  if (auto v = get("generator.rows")) g.rows = parse_uint("generator.rows", *v);
  if (auto v = get("generator.corruption")) g.corruption = parse_double("generator.corruption", *v);
  if (auto v = get("generator.key_share")) g.key_share = parse_double("generator.key_share", *v);
  if (auto v = get("generator.format_noise")) g.format_noise = parse_double("generator.format_noise", *v);
  if (auto v = get("generator.sources")) g.sources = parse_uint("generator.sources", *v);
  if (auto v = get("generator.functional_dependencies")) {
    g.functional_dependencies = parse_bool("generator.functional_dependencies", *v);
  }
  if (auto v = get("run.seed")) c.seed = parse_uint("run.seed", *v);
  if (env_seed) c.seed = parse_uint("RECFUSE_SEED", *env_seed);
  if (auto v = get("run.jobs")) c.jobs = parse_uint("run.jobs", *v);
  if (auto v = get("run.output")) c.output = *v;

  // The global seed drives training and augmentation.
  t.seed = c.seed;
  c.augment.seed = c.seed;
  c.stagewise.jobs = c.resolved_jobs();
  e.stagewise = c.stagewise;
  e.features = c.features;
  e.augment = c.augment;
  e.jobs = c.resolved_jobs();

  t.validate();
  c.augment.validate();
  g.validate();
  return c;
}

/// Flattens INI text into "section.key" pairs.
inline std::map<std::string, std::string> parse_ini(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw DataError("config: " + e.message(), e.line());
  }
  std::map<std::string, std::string> kv;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw Error("config: key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) kv[section + "." + key] = trim(value.data());
  }
  return kv;
}

/// Manifest written next to every output: enough to rerun bit-exactly.
inline std::string manifest_json(const RunConfig& c, std::string_view command,
                                 const std::map<std::string, std::string>& outputs = {}) {
  nlohmann::ordered_json j;
  j["tool"] = "recfuse";
  j["version"] = std::string(kVersion);
  j["command"] = std::string(command);
  j["config_hash"] = c.hash();
  j["seed"] = c.seed;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : c.to_map()) cfg[k] = v;
  j["config"] = cfg;
  nlohmann::ordered_json outs = nlohmann::ordered_json::object();
  for (const auto& [k, v] : outputs) outs[k] = v;
  j["outputs"] = outs;
  return j.dump(2) + "\n";
}

}  // namespace recfuse
