#pragma once

// JSON model files. Doubles are written in shortest round-trip form, so a
// loaded model reproduces the saved one bit for bit.

#include <string>
#include <vector>

#include <json.hpp>

#include "recfuse/core_model.hpp"
#include "recfuse/error.hpp"
#include "recfuse/featurizer.hpp"
#include "recfuse/learner.hpp"
#include "recfuse/stagewise.hpp"

namespace recfuse {

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json feature_config_to_json(const FeatureConfig& fc) {
  nlohmann::json models = nlohmann::json::object();
  for (auto m : kAllModels) models[std::string(model_name(m))] = fc.enabled(m);
  return {
      {"models", models},
      {"embedding", {{"m", fc.embedding.m}, {"q", fc.embedding.q}, {"hash_seed", fc.embedding.hash_seed}}},
      {"partner_values", std::string(to_string(fc.partner_values))},
  };
}

inline FeatureConfig feature_config_from_json(const nlohmann::json& j) {
  FeatureConfig fc;
  for (auto& [name, on] : j.at("models").items()) {
    auto m = parse_model_name(name);
    if (!m) throw Error("model file: unknown representation model '" + name + "'");
    fc.set(*m, on.get<bool>());
  }
  const auto& e = j.at("embedding");
  fc.embedding.m = e.at("m").get<std::size_t>();
  fc.embedding.q = e.at("q").get<std::size_t>();
  fc.embedding.hash_seed = e.at("hash_seed").get<std::uint64_t>();
  auto pv = j.at("partner_values").get<std::string>();
  if (pv == "raw") fc.partner_values = PartnerValues::Raw;
  else if (pv == "working") fc.partner_values = PartnerValues::Working;
  else throw Error("model file: bad partner_values '" + pv + "'");
  return fc;
}

inline nlohmann::json model_to_json(const AttributeModel& m, RunningSource running) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : m.layout.blocks) {
    blocks.push_back({{"name", b.name}, {"offset", b.offset}, {"size", b.size}, {"dynamic", b.dynamic}});
  }
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : m.stages) {
    stages.push_back({{"b", s.b}, {"rho", s.rho}, {"W", s.W}, {"bias", s.bias}});
  }
  return {
      {"format", "recfuse-model"},
      {"version", kModelFormatVersion},
      {"candidate_order", std::string(kCandidateOrderKey)},
      {"attribute", m.attribute_name},
      {"attribute_index", m.attribute},
      {"rho", m.rho},
      {"running", std::string(to_string(running))},
      {"feature_config", feature_config_to_json(m.feature_config)},
      {"layout", {{"nu", m.layout.nu}, {"psi", m.layout.psi}, {"blocks", blocks}}},
      {"stages", stages},
  };
}

struct LoadedModel {
  AttributeModel model;
  RunningSource running = RunningSource::Working;
};

inline LoadedModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "recfuse-model") throw Error("not a model file");
    if (j.at("version").get<int>() != kModelFormatVersion) throw Error("unsupported model file version");
    if (j.at("candidate_order").get<std::string>() != kCandidateOrderKey) {
      throw Error("model was trained with a different candidate ordering");
    }
    LoadedModel out;
    auto& m = out.model;
    m.attribute_name = j.at("attribute").get<std::string>();
    m.attribute = j.at("attribute_index").get<std::size_t>();
    m.rho = j.at("rho").get<std::size_t>();
    auto running = j.at("running").get<std::string>();
    out.running = running == "prediction" ? RunningSource::Prediction : RunningSource::Working;
    m.feature_config = feature_config_from_json(j.at("feature_config"));
    const auto& l = j.at("layout");
    m.layout.nu = l.at("nu").get<std::size_t>();
    m.layout.psi = l.at("psi").get<std::size_t>();
    for (const auto& b : l.at("blocks")) {
      m.layout.blocks.push_back({b.at("name").get<std::string>(), b.at("offset").get<std::size_t>(),
                                 b.at("size").get<std::size_t>(), b.at("dynamic").get<bool>()});
    }
    for (const auto& s : j.at("stages")) {
      SoftmaxStage st;
      st.b = s.at("b").get<std::size_t>();
      st.rho = s.at("rho").get<std::size_t>();
      st.W = s.at("W").get<std::vector<double>>();
      st.bias = s.at("bias").get<std::vector<double>>();
      if (st.W.size() != st.b * st.rho || st.bias.size() != st.rho || st.rho != m.rho ||
          st.b != m.layout.width()) {
        throw Error("stage shapes do not match the model header");
      }
      m.stages.push_back(std::move(st));
    }
    if (m.stages.empty()) throw Error("model has no stages");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model file: ") + e.what());
  }
}

inline std::string serialize_model(const AttributeModel& m, RunningSource running) {
  return model_to_json(m, running).dump(1) + "\n";
}

inline LoadedModel deserialize_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model file: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace recfuse
