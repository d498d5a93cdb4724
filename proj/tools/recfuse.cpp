// recfuse command-line tool: ingest, train, fuse, augment, evaluate, bench.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "recfuse/recfuse.hpp"

namespace fs = std::filesystem;
using namespace recfuse;

namespace {

struct Options {
  std::string config_file;
  std::map<std::string, std::string> overrides;
  std::vector<std::string> disable;
  std::string jobs;
  std::string models_dir;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("-c,--config", o.config_file, "INI run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--disable", o.disable, "representation model to disable (repeatable)");
  cmd->add_option("-j,--jobs", o.jobs, "worker threads, same as --run.jobs");
  for (const auto& key : config_keys()) {
    cmd->add_option_function<std::string>(
        std::string("--") + key.name, [&o, name = std::string(key.name)](const std::string& v) { o.overrides[name] = v; },
        key.help);
  }
}

RunConfig load_config(const Options& o) {
  std::map<std::string, std::string> kv;
  if (!o.config_file.empty()) kv = parse_ini(read_file(o.config_file));
  for (const auto& [k, v] : o.overrides) kv[k] = v;
  if (!o.jobs.empty()) kv["run.jobs"] = o.jobs;
  if (!o.disable.empty()) {
    std::string list = kv["features.disable"];
    for (const auto& d : o.disable) list += (list.empty() ? "" : ",") + d;
    kv["features.disable"] = list;
  }
  std::optional<std::string> env_seed;
  if (const char* s = std::getenv("RECFUSE_SEED"); s && *s) env_seed = s;
  return make_config(kv, env_seed);
}

struct Loaded {
  FusionDataset ds;
  GroundTruth truth;
};

Loaded load_data(const RunConfig& c, bool need_labels) {
  if (c.data_path.empty()) throw Error("no dataset: set data.path");
  auto text = read_file(c.data_path);
  // Constraints need the schema, which lives in the header row.
  auto header = parse_header(parse_csv(text.substr(0, text.find('\n')), c.delimiter).at(0));
  std::vector<DenialConstraint> dcs;
  if (!c.constraints_path.empty()) dcs = parse_constraints(read_file(c.constraints_path), header.schema);
  Loaded out{parse_dataset(text, std::move(dcs), c.delimiter), {}};
  if (!c.labels_path.empty()) {
    out.truth = parse_labels(read_file(c.labels_path), out.ds, c.delimiter);
  } else if (need_labels) {
    throw Error("no labels: set data.labels");
  }
  return out;
}

void write_output(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path.string(), content);
}

std::string model_file_name(const AttributeModel& m) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", m.attribute);
  std::string safe;
  for (char ch : m.attribute_name) safe += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return std::string("model_") + buf + "_" + safe + ".json";
}

std::map<std::string, std::string> write_models(const fs::path& dir, const std::vector<AttributeModel>& models,
                                                RunningSource running) {
  std::map<std::string, std::string> outs;
  for (const auto& m : models) {
    auto p = dir / model_file_name(m);
    write_output(p, serialize_model(m, running));
    outs["model:" + m.attribute_name] = p.string();
  }
  return outs;
}

void print_summary(const FusionDataset& ds, const CandidateSets& sets, const GroundTruth& truth) {
  std::printf("rows (n): %zu\nclusters (p): %zu\nattributes (c): %zu\n", ds.num_rows(), ds.num_clusters(),
              ds.num_attributes());
  for (std::size_t j = 0; j < ds.num_attributes(); ++j) {
    std::printf("  %-24s rho=%zu\n", ds.schema()[j].c_str(), label_dimension(sets, j));
  }
  std::printf("sources: %zu\nconstraints: %zu\nlabeled cells: %zu\n", ds.has_sources() ? ds.num_sources() : 0,
              ds.constraints().size(), truth.size());
}

int cmd_ingest(const Options& o) {
  auto c = load_config(o);
  auto [ds, truth] = load_data(c, false);
  CandidateSets sets(ds);
  truth.validate(ds, sets);
  print_summary(ds, sets, truth);
  return 0;
}

int cmd_train(const Options& o) {
  auto c = load_config(o);
  auto [ds, truth] = load_data(c, true);
  CandidateSets sets(ds);
  truth.validate(ds, sets);
  const auto start = std::chrono::steady_clock::now();
  Featurizer fz(ds, sets, c.features);
  auto res = stagewise_train(fz, truth, c.stagewise);
  const fs::path out = c.output;
  auto outs = write_models(out / "models", res.models, c.stagewise.running);
  write_output(out / "manifest.json", manifest_json(c, "train", outs));
  std::cerr << "trained " << res.models.size() << " attribute models in "
            << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s\n";
  return 0;
}

int cmd_fuse(const Options& o) {
  auto c = load_config(o);
  if (o.models_dir.empty()) throw Error("fuse: --models is required");
  auto [ds, truth] = load_data(c, false);
  CandidateSets sets(ds);
  truth.validate(ds, sets);
  std::vector<LoadedModel> loaded;
  for (const auto& entry : fs::directory_iterator(o.models_dir)) {
    if (entry.path().extension() != ".json" || entry.path().filename().string().rfind("model_", 0) != 0) continue;
    try {
      loaded.push_back(deserialize_model(read_file(entry.path().string())));
    } catch (const Error& e) {
      throw Error(entry.path().string() + ": " + e.what());
    }
  }
  if (loaded.empty()) throw Error("fuse: no model files in '" + o.models_dir + "'");
  std::sort(loaded.begin(), loaded.end(),
            [](const LoadedModel& a, const LoadedModel& b) { return a.model.attribute < b.model.attribute; });
  std::vector<AttributeModel> models;
  for (auto& l : loaded) {
    if (l.running != loaded[0].running) throw Error("fuse: models disagree on the running source");
    if (!(l.model.feature_config == loaded[0].model.feature_config)) {
      throw Error("fuse: models disagree on the feature configuration");
    }
    models.push_back(std::move(l.model));
  }
  Featurizer fz(ds, sets, models[0].feature_config);
  auto res = cascade(fz, models, truth, loaded[0].running, c.resolved_jobs());
  auto table = fused_table(ds, sets, truth, res);
  const fs::path out = c.output;
  write_output(out / "fused.csv", format_fused(table, true, c.delimiter));
  write_output(out / "manifest.json", manifest_json(c, "fuse", {{"fused", (out / "fused.csv").string()}}));
  return 0;
}

int cmd_augment(const Options& o) {
  auto c = load_config(o);
  auto [ds, truth] = load_data(c, true);
  CandidateSets sets(ds);
  truth.validate(ds, sets);
  std::vector<std::size_t> sources(ds.num_clusters());
  for (std::size_t k = 0; k < sources.size(); ++k) sources[k] = k;
  auto synth = augment_entities(ds, truth, sources, c.augment);
  std::vector<FusionDataset::RowInput> rows;
  GroundTruth labels;
  for (const auto& sc : synth) {
    for (std::size_t r = 0; r < sc.rows.size(); ++r) {
      FusionDataset::RowInput in;
      in.cluster_id = sc.cluster_id;
      in.source_id = sc.row_sources[r];
      in.cells = sc.rows[r];
      rows.push_back(std::move(in));
    }
  }
  const fs::path out = c.output;
  std::map<std::string, std::string> outs;
  if (!rows.empty()) {
    auto aug = FusionDataset::build(ds.schema(), std::move(rows), {});
    for (const auto& sc : synth) {
      const auto k = *aug.cluster_index(sc.cluster_id);
      for (std::size_t j = 0; j < sc.labels.size(); ++j) labels.set(k, j, sc.labels[j]);
    }
    write_output(out / "augmented.csv", format_dataset(aug, c.delimiter));
    write_output(out / "augmented_labels.csv", format_labels(labels, aug, c.delimiter));
    outs = {{"augmented", (out / "augmented.csv").string()}, {"labels", (out / "augmented_labels.csv").string()}};
  }
  write_output(out / "manifest.json", manifest_json(c, "augment", outs));
  std::cerr << "synthesised " << synth.size() << " clusters\n";
  return 0;
}

int cmd_evaluate(const Options& o) {
  auto c = load_config(o);
  FusionDataset ds;
  GroundTruth truth;
  if (!c.data_path.empty()) {
    auto l = load_data(c, true);
    ds = std::move(l.ds);
    truth = std::move(l.truth);
  } else {
    auto bm = generate_benchmark(c.generator, c.seed);
    ds = std::move(bm.dataset);
    truth = std::move(bm.truth);
  }
  auto rep = run_experiment(ds, truth, c.experiment);
  // Models of the full configuration on the first seed.
  const auto seeds = c.experiment.seed_list();
  auto full = c.experiment.variants().front();
  auto art = run_once(ds, truth, c.experiment, full, seeds.front());
  const fs::path out = c.output;
  auto outs = write_models(out / "models", art.trained.models, c.stagewise.running);
  write_output(out / "report.txt", rep.text());
  write_output(out / "report.jsonl", rep.jsonl());
  outs["report"] = (out / "report.txt").string();
  outs["report_jsonl"] = (out / "report.jsonl").string();
  write_output(out / "manifest.json", manifest_json(c, "evaluate", outs));
  std::cout << rep.text();
  std::cerr << "runtime " << rep.runtime_seconds << " s\n";
  return 0;
}

int cmd_bench(const Options& o) {
  auto c = load_config(o);
  auto bm = generate_benchmark(c.generator, c.seed);
  const fs::path out = c.output;
  write_output(out / "bench.csv", format_dataset(bm.dataset, c.delimiter));
  write_output(out / "bench_labels.csv", format_labels(bm.truth, bm.dataset, c.delimiter));
  write_output(out / "bench_constraints.txt", format_constraints(bm.dataset.constraints(), bm.dataset.schema()));
  write_output(out / "manifest.json", manifest_json(c, "bench",
                                                    {{"data", (out / "bench.csv").string()},
                                                     {"labels", (out / "bench_labels.csv").string()},
                                                     {"constraints", (out / "bench_constraints.txt").string()}}));
  std::cerr << "wrote " << bm.dataset.num_clusters() << " clusters to " << (out / "bench.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recfuse: learned record fusion"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;
  struct Cmd {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Cmd cmds[] = {
      {"ingest", "validate input files and print a summary", cmd_ingest},
      {"train", "train per-attribute models", cmd_train},
      {"fuse", "fuse clusters with trained models", cmd_fuse},
      {"augment", "synthesise labeled clusters", cmd_augment},
      {"evaluate", "run the multi-seed evaluation protocol", cmd_evaluate},
      {"bench", "write a synthetic benchmark", cmd_bench},
  };
  std::map<CLI::App*, int (*)(const Options&)> handlers;
  for (const auto& cmd : cmds) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub, o);
    if (std::string(cmd.name) == "fuse") sub->add_option("--models", o.models_dir, "directory of model files");
    handlers[sub] = cmd.fn;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    for (auto& [sub, fn] : handlers)
      if (sub->parsed()) return fn(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
