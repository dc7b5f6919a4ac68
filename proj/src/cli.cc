/*
 * Copyright 2026 The ensemblecf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ensemblecf/cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "ensemblecf/blackbox.h"
#include "ensemblecf/codec.h"
#include "ensemblecf/errors.h"
#include "ensemblecf/explainers.h"
#include "ensemblecf/fixtures.h"
#include "ensemblecf/metrics.h"
#include "ensemblecf/random.h"

namespace ensemblecf {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Seed streams derived from the run seed.
constexpr uint64_t kSplitStream = 1;
constexpr uint64_t kModelStream = 2;
constexpr uint64_t kCodecStream = 3;
constexpr uint64_t kExplainStream = 4;

constexpr char kManifestFormat[] = "ensemblecf-manifest";

std::string Absolute(const std::string& path) {
  if (path.empty()) return path;
  return fs::absolute(path).lexically_normal().string();
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

uint64_t RequireSeed(const RunConfig& cfg) {
  if (!cfg.seed) throw ConfigError("--seed is required for " + cfg.command);
  return *cfg.seed;
}

struct LoadedData {
  Dataset train;
  Dataset test;
};

LoadedData LoadData(const RunConfig& cfg, uint64_t seed) {
  std::optional<Dataset> full;
  if (!cfg.fixture.empty()) {
    if (!cfg.dataset.empty()) {
      throw ConfigError("--fixture and --dataset are mutually exclusive");
    }
    full.emplace(MakeFixture(cfg.fixture, cfg.fixture_seed));
  } else {
    if (cfg.dataset.empty() || cfg.schema.empty()) {
      throw ConfigError("--dataset and --schema (or --fixture) are required");
    }
    full.emplace(Dataset::LoadCsv(cfg.dataset, cfg.schema));
  }
  if (full->size() < 2) throw DataError("need at least two instances");
  const Split split =
      SplitRows(full->size(), cfg.test_fraction, DeriveSeed(seed, kSplitStream));
  return {full->Subset(split.train), full->Subset(split.test)};
}

bool IsExternal(const std::string& spec) {
  return spec.rfind("external:", 0) == 0;
}

std::unique_ptr<BlackBox> FitBuiltin(const std::string& spec,
                                     const Dataset& train, uint64_t seed) {
  const size_t colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string args =
      colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto parse_int = [&](const std::string& text) {
    try {
      size_t used = 0;
      const int v = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad black-box spec \"" + spec + "\"");
    }
  };
  if (kind == "knn") {
    return KnnModel::Fit(train, args.empty() ? 5 : parse_int(args));
  }
  if (kind == "forest") {
    ForestOptions options;
    options.seed = DeriveSeed(seed, kModelStream);
    if (!args.empty()) {
      const size_t comma = args.find(',');
      options.n_trees = parse_int(args.substr(0, comma));
      if (comma != std::string::npos) {
        options.max_depth = parse_int(args.substr(comma + 1));
      }
    }
    return ForestModel::Fit(train, options);
  }
  throw ConfigError("bad black-box spec \"" + spec + "\"");
}

std::unique_ptr<BlackBox> ResolveModel(const RunConfig& cfg,
                                       const Dataset& train, uint64_t seed) {
  if (!cfg.model.empty()) return LoadModel(cfg.model);
  if (IsExternal(cfg.blackbox)) {
    return std::make_unique<ExternalBlackBox>(
        ExternalPredictorSpec{.command = cfg.blackbox.substr(9)});
  }
  return FitBuiltin(cfg.blackbox, train, seed);
}

std::shared_ptr<const CounterfactualExplainer> BuildExplainer(
    const RunConfig& cfg, const Dataset& train, uint64_t seed) {
  std::shared_ptr<const CounterfactualExplainer> explainer;
  if (cfg.explainer == "ensemble") {
    explainer = std::make_shared<EnsembleExplainer>(cfg.ensemble);
  } else {
    explainer = MakeExplainer(ParseExplainerKind(cfg.explainer),
                              cfg.ensemble.brute, cfg.ensemble.tree,
                              cfg.ensemble.sphere);
  }
  if (cfg.codec.empty()) return explainer;
  auto codec = MakeCodec(cfg.codec, train.schema(), train.instances(),
                         DeriveSeed(seed, kCodecStream));
  return std::make_shared<LatentExplainer>(std::move(explainer),
                                           std::move(codec));
}

json CounterfactualToJson(const Counterfactual& c) {
  return {{"values", c.values},
          {"source", ExplainerKindName(c.source)},
          {"eval_distance", c.eval_distance},
          {"search_distance", c.search_distance},
          {"changed_features", c.changed_features}};
}

json ManifestJson(const RunConfig& cfg) {
  return {{"format", kManifestFormat},
          {"version", 1},
          {"versions",
           {{"ensemblecf", kVersion}, {"model_format", 1}, {"manifest", 1}}},
          {"config", cfg.ToJson()}};
}

// Writes `name` (and the manifest) under the output directory, or `body` to
// `out` when there is none.
void Emit(const RunConfig& cfg, const std::string& name,
          const std::string& body, std::ostream& out) {
  if (cfg.output_dir.empty()) {
    out << body;
    return;
  }
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  WriteText(dir / name, body);
  WriteText(dir / "manifest.json", ManifestJson(cfg).dump(2) + "\n");
}

std::string CounterfactualsCsv(const Schema& schema,
                               const std::vector<Counterfactual>& cfs) {
  std::ostringstream csv;
  for (const Feature& f : schema.features()) csv << f.name << ',';
  csv << "source,eval_distance,search_distance\n";
  csv.precision(17);
  for (const Counterfactual& c : cfs) {
    for (double v : c.values) csv << v << ',';
    csv << ExplainerKindName(c.source) << ',' << c.eval_distance << ','
        << c.search_distance << '\n';
  }
  return csv.str();
}

int CmdFixtures(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir(cfg.output_dir.empty() ? "." : cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::string> names = FixtureNames();
  if (!cfg.fixture.empty()) names = {cfg.fixture};
  for (const std::string& name : names) {
    const Dataset data = MakeFixture(name, cfg.fixture_seed);
    const fs::path csv = dir / (name + ".csv");
    const fs::path schema = dir / (name + ".schema.json");
    data.WriteCsv(csv.string());
    WriteText(schema, data.schema().ToJson().dump(2) + "\n");
    out << csv.string() << ' ' << schema.string() << '\n';
  }
  return 0;
}

int CmdFit(RunConfig cfg, std::ostream& out) {
  const uint64_t seed = cfg.seed.value_or(0);
  if (IsExternal(cfg.blackbox)) {
    throw ConfigError("external black boxes cannot be fitted");
  }
  const LoadedData data = LoadData(cfg, seed);
  std::unique_ptr<BlackBox> model = FitBuiltin(cfg.blackbox, data.train, seed);
  const auto& builtin = dynamic_cast<const BuiltinModel&>(*model);
  std::string path = cfg.model;
  if (path.empty()) {
    if (cfg.output_dir.empty()) {
      throw ConfigError("fit needs --model or --output-dir");
    }
    path = (fs::path(cfg.output_dir) / "model.json").string();
  }
  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
  }
  builtin.Save(path);
  cfg.model.clear();
  if (!cfg.output_dir.empty()) {
    WriteText(fs::path(cfg.output_dir) / "manifest.json",
              ManifestJson(cfg).dump(2) + "\n");
  }
  const std::vector<int> train_pred = model->Predict(data.train.instances());
  size_t agree = 0;
  for (size_t i = 0; i < train_pred.size(); ++i) {
    agree += train_pred[i] == data.train.labels()[i] ? 1 : 0;
  }
  out << "wrote " << path << " (train accuracy "
      << static_cast<double>(agree) / static_cast<double>(train_pred.size())
      << ")\n";
  return 0;
}

int CmdExplain(RunConfig cfg, std::ostream& out) {
  const uint64_t seed = RequireSeed(cfg);
  cfg.ensemble.workers = cfg.workers;
  cfg.ensemble.Validate();
  const LoadedData data = LoadData(cfg, seed);
  if (cfg.index >= data.test.size()) {
    throw DataError("--index " + std::to_string(cfg.index) +
                    " is out of range (" + std::to_string(data.test.size()) +
                    " test instances)");
  }
  if (cfg.k < 1) throw ConfigError("--k must be >= 1");
  const std::unique_ptr<BlackBox> model = ResolveModel(cfg, data.train, seed);
  const auto explainer = BuildExplainer(cfg, data.train, seed);

  const Instance& x = data.test.instance(cfg.index);
  const CountingBlackBox counted(*model);
  const ExplainRequest request{
      .x = x,
      .model = counted,
      .data = data.train,
      .known = data.train.instances(),
      .actionable = data.train.schema().ActionableFeatures(),
      .k = cfg.k,
      .seed = DeriveSeed(seed, kExplainStream),
      .call_budget = cfg.ensemble.member_call_budget,
  };
  const auto start = std::chrono::steady_clock::now();
  std::vector<Counterfactual> cfs;
  json members = json::array();
  json member_seconds = json::array();
  const auto* ensemble = dynamic_cast<const EnsembleExplainer*>(explainer.get());
  if (ensemble) {
    ExplanationResult result = ensemble->ExplainDetailed(request);
    cfs = std::move(result.selected);
    for (const MemberReport& m : result.members) {
      json entry = {{"kind", ExplainerKindName(m.kind)},
                    {"seed", m.seed},
                    {"instances", m.instances},
                    {"features", m.features},
                    {"candidates", m.candidates},
                    {"bbox_calls", m.bbox_calls}};
      if (m.error) entry["error"] = *m.error;
      members.push_back(std::move(entry));
      member_seconds.push_back(m.seconds);
    }
  } else {
    cfs = explainer->Explain(request);
  }
  const double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();

  // Independent re-check of the contract before reporting.
  const int x_label = model->Predict(x);
  if (!cfs.empty()) {
    std::vector<Instance> values;
    for (const Counterfactual& c : cfs) values.push_back(c.values);
    const std::vector<int> labels = model->Predict(values);
    for (int label : labels) {
      if (label == x_label) {
        throw PredictionError("returned counterfactual failed re-validation");
      }
    }
  }

  if (cfg.format == "csv") {
    Emit(cfg, "counterfactuals.csv",
         CounterfactualsCsv(data.train.schema(), cfs), out);
    return 0;
  }
  json doc = {{"x", x},
              {"label", x_label},
              {"explainer", explainer->name()},
              {"k", cfg.k},
              {"seed", seed},
              {"counterfactuals", json::array()},
              {"bbox_calls", counted.instance_calls()},
              {"timings", {{"total_seconds", seconds}}}};
  const auto& target = data.train.schema().target();
  if (target && x_label < static_cast<int>(target->categories.size())) {
    doc["label_name"] = target->categories[x_label];
  }
  for (const Counterfactual& c : cfs) {
    doc["counterfactuals"].push_back(CounterfactualToJson(c));
  }
  if (ensemble) {
    doc["members"] = std::move(members);
    doc["timings"]["member_seconds"] = std::move(member_seconds);
  }
  Emit(cfg, "explanation.json", doc.dump(2) + "\n", out);
  return 0;
}

int CmdEvaluate(RunConfig cfg, std::ostream& out) {
  const uint64_t seed = RequireSeed(cfg);
  cfg.ensemble.workers = 1;
  cfg.ensemble.Validate();
  if (cfg.k < 1) throw ConfigError("--k must be >= 1");
  const LoadedData data = LoadData(cfg, seed);
  const std::unique_ptr<BlackBox> model = ResolveModel(cfg, data.train, seed);
  const auto explainer = BuildExplainer(cfg, data.train, seed);
  const size_t n = std::min(cfg.n_instances, data.test.size());
  const std::span<const Instance> instances(data.test.instances().data(), n);
  const EvaluationOptions options{
      .k = cfg.k,
      .seed = DeriveSeed(seed, kExplainStream),
      .actionable = data.train.schema().ActionableFeatures(),
      .workers = cfg.workers,
      .call_budget = cfg.ensemble.member_call_budget,
  };
  const EvaluationSummary summary =
      EvaluateRun(*explainer, instances, *model, data.train, options);
  if (cfg.format == "json") {
    Emit(cfg, "metrics.json", MetricsToJson(summary).dump(2) + "\n", out);
  } else {
    std::ostringstream csv;
    WriteMetricsCsv(summary, csv);
    Emit(cfg, "metrics.csv", csv.str(), out);
  }
  return 0;
}

int CmdServe(const RunConfig& cfg, std::istream& in, std::ostream& out) {
  std::unique_ptr<BlackBox> model;
  if (!cfg.model.empty()) {
    model = LoadModel(cfg.model);
  } else {
    const uint64_t seed = cfg.seed.value_or(0);
    const LoadedData data = LoadData(cfg, seed);
    model = FitBuiltin(cfg.blackbox, data.train, seed);
  }
  ServePredictionProtocol(*model, in, out);
  return 0;
}

void AddDataOptions(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--dataset", cfg.dataset, "CSV file with a header row");
  cmd->add_option("--schema", cfg.schema, "JSON schema of the dataset");
  cmd->add_option("--fixture", cfg.fixture,
                  "Bundled dataset: blobs, german, series or image");
  cmd->add_option("--fixture-seed", cfg.fixture_seed, "Fixture generator seed");
  cmd->add_option("--test-fraction", cfg.test_fraction,
                  "Share of rows held out as test instances");
}

void AddModelOptions(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--blackbox", cfg.blackbox,
                  "knn:K, forest:N,DEPTH or external:COMMAND");
  cmd->add_option("--model", cfg.model, "Saved model file");
}

void AddExplainOptions(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--explainer", cfg.explainer,
                  "ensemble, brute, tree or sphere");
  cmd->add_option("--codec", cfg.codec, "identity, kernel:S or linear:Q");
  cmd->add_option("--k", cfg.k, "Counterfactuals per instance");
  cmd->add_option("--pool-size", cfg.ensemble.pool_size, "Ensemble members");
  cmd->add_option("--instance-fraction", cfg.ensemble.instance_fraction,
                  "Share of known instances per member");
  cmd->add_option("--feature-fraction", cfg.ensemble.feature_fraction,
                  "Share of actionable features per member");
  cmd->add_option("--lambda", cfg.ensemble.selection.lambda,
                  "Distance penalty of the selection");
  cmd->add_option("--call-budget", cfg.ensemble.member_call_budget,
                  "Black-box calls per base explainer");
  cmd->add_option("--workers", cfg.workers, "Worker threads");
  cmd->add_option("--output-dir", cfg.output_dir, "Output directory");
}

}  // namespace

nlohmann::json RunConfig::ToJson() const {
  json j = {{"command", command},
            {"dataset", dataset},
            {"schema", schema},
            {"fixture", fixture},
            {"fixture_seed", fixture_seed},
            {"blackbox", blackbox},
            {"model", model},
            {"explainer", explainer},
            {"codec", codec},
            {"k", k},
            {"index", index},
            {"n_instances", n_instances},
            {"test_fraction", test_fraction},
            {"workers", workers},
            {"format", format},
            {"ensemble", ensemble.ToJson()}};
  j["seed"] = seed ? json(*seed) : json(nullptr);
  return j;
}

RunConfig RunConfig::FromJson(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.command = j.at("command").get<std::string>();
    c.dataset = j.value("dataset", c.dataset);
    c.schema = j.value("schema", c.schema);
    c.fixture = j.value("fixture", c.fixture);
    c.fixture_seed = j.value("fixture_seed", c.fixture_seed);
    c.blackbox = j.value("blackbox", c.blackbox);
    c.model = j.value("model", c.model);
    c.explainer = j.value("explainer", c.explainer);
    c.codec = j.value("codec", c.codec);
    c.k = j.value("k", c.k);
    c.index = j.value("index", c.index);
    c.n_instances = j.value("n_instances", c.n_instances);
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.workers = j.value("workers", c.workers);
    c.format = j.value("format", c.format);
    if (j.contains("seed") && !j.at("seed").is_null()) {
      c.seed = j.at("seed").get<uint64_t>();
    }
    if (j.contains("ensemble")) {
      c.ensemble = EnsembleConfig::FromJson(j.at("ensemble"));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  }
  return c;
}

Split SplitRows(size_t n, double test_fraction, uint64_t seed) {
  if (n < 2) throw DataError("need at least two instances to split");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must be in (0, 1)");
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const size_t n_test = std::clamp<size_t>(
      static_cast<size_t>(std::llround(test_fraction * static_cast<double>(n))),
      1, n - 1);
  Split split;
  split.test.assign(order.begin(), order.begin() + n_test);
  split.train.assign(order.begin() + n_test, order.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

int RunCli(int argc, const char* const* argv, std::istream& in,
           std::ostream& out, std::ostream& err) {
  CLI::App app{"Ensemble counterfactual explanations for black-box models",
               "ensemblecf"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  RunConfig cfg;
  uint64_t seed = 0;
  std::string manifest;

  auto* fixtures = app.add_subcommand("fixtures", "Write the bundled datasets");
  fixtures->add_option("--name", cfg.fixture, "Only this fixture");
  fixtures->add_option("--fixture-seed", cfg.fixture_seed, "Generator seed");
  fixtures->add_option("--output-dir", cfg.output_dir, "Output directory");

  auto* fit = app.add_subcommand("fit", "Fit and save a built-in model");
  AddDataOptions(fit, cfg);
  AddModelOptions(fit, cfg);
  auto* fit_seed = fit->add_option("--seed", seed, "Run seed");
  fit->add_option("--output-dir", cfg.output_dir, "Output directory");

  auto* explain = app.add_subcommand("explain", "Explain one test instance");
  AddDataOptions(explain, cfg);
  AddModelOptions(explain, cfg);
  AddExplainOptions(explain, cfg);
  auto* explain_seed = explain->add_option("--seed", seed, "Run seed");
  explain->add_option("--index", cfg.index, "Test instance to explain");
  explain->add_option("--format", cfg.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  explain->add_option("--manifest", manifest, "Rerun from a manifest");

  auto* evaluate =
      app.add_subcommand("evaluate", "Score explanations of test instances");
  AddDataOptions(evaluate, cfg);
  AddModelOptions(evaluate, cfg);
  AddExplainOptions(evaluate, cfg);
  auto* evaluate_seed = evaluate->add_option("--seed", seed, "Run seed");
  evaluate->add_option("--n-instances", cfg.n_instances,
                       "Number of test instances");
  evaluate->add_option("--format", cfg.format, "csv or json")
      ->check(CLI::IsMember({"json", "csv"}));
  evaluate->add_option("--manifest", manifest, "Rerun from a manifest");

  auto* serve = app.add_subcommand(
      "serve", "Answer the prediction protocol on stdin/stdout");
  AddDataOptions(serve, cfg);
  AddModelOptions(serve, cfg);
  auto* serve_seed = serve->add_option("--seed", seed, "Run seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }

  try {
    for (auto* opt : {fit_seed, explain_seed, evaluate_seed, serve_seed}) {
      if (opt->count() > 0) cfg.seed = seed;
    }
    if (fixtures->parsed()) return CmdFixtures(cfg, out);
    if (serve->parsed()) return CmdServe(cfg, in, out);

    CLI::App* cmd = fit->parsed() ? fit : explain->parsed() ? explain : evaluate;
    cfg.command = cmd->get_name();
    if (!manifest.empty()) {
      const json doc = ReadJsonFile(manifest);
      if (doc.value("format", "") != kManifestFormat) {
        throw DataError(manifest + " is not a run manifest");
      }
      const std::string output_dir = cfg.output_dir;
      cfg = RunConfig::FromJson(doc.at("config"));
      if (cfg.command != cmd->get_name()) {
        throw ConfigError("manifest was written by \"" + cfg.command +
                          "\", not \"" + cmd->get_name() + "\"");
      }
      cfg.output_dir = output_dir;
    } else {
      cfg.dataset = Absolute(cfg.dataset);
      cfg.schema = Absolute(cfg.schema);
      cfg.model = Absolute(cfg.model);
      if (cfg.format.empty()) {
        cfg.format = cfg.command == "evaluate" ? "csv" : "json";
      }
    }
    if (cfg.command == "fit") return CmdFit(cfg, out);
    if (cfg.command == "explain") return CmdExplain(cfg, out);
    return CmdEvaluate(cfg, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ensemblecf
