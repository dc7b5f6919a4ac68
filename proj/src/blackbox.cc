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

#include "ensemblecf/blackbox.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "ensemblecf/distance.h"
#include "ensemblecf/errors.h"
#include "ensemblecf/random.h"

namespace ensemblecf {
namespace {

constexpr char kModelFormat[] = "ensemblecf-model";
constexpr int kModelVersion = 1;

int LabelCount(const Dataset& data) {
  if (data.schema().target()) {
    return static_cast<int>(data.schema().target()->categories.size());
  }
  const int max_label =
      *std::max_element(data.labels().begin(), data.labels().end());
  return std::max(2, max_label + 1);
}

int Vote(const std::vector<int>& votes) {
  int best = 0;
  for (size_t y = 1; y < votes.size(); ++y) {
    if (votes[y] > votes[best]) best = static_cast<int>(y);
  }
  return best;
}

void CheckWidth(std::span<const Instance> batch, size_t width) {
  for (const Instance& x : batch) {
    if (x.size() != width) {
      throw PredictionError("instance has " + std::to_string(x.size()) +
                            " values, model expects " + std::to_string(width));
    }
  }
}

nlohmann::json StatsToJson(const std::vector<FeatureStats>& stats) {
  nlohmann::json out = nlohmann::json::array();
  for (const FeatureStats& s : stats) {
    out.push_back({s.mad, s.min, s.max, s.median, s.mean, s.stddev});
  }
  return out;
}

std::vector<FeatureStats> StatsFromJson(const nlohmann::json& json) {
  std::vector<FeatureStats> stats;
  for (const auto& entry : json) {
    const auto v = entry.get<std::vector<double>>();
    if (v.size() != 6) throw ModelParseError("model parse error: bad stats");
    stats.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  return stats;
}

void CheckHeader(const nlohmann::json& json, const std::string& type) {
  if (json.value("format", std::string()) != kModelFormat) {
    throw ModelParseError("model parse error: not an ensemblecf model");
  }
  if (json.value("version", 0) != kModelVersion) {
    throw ModelParseError("model parse error: unsupported model version");
  }
  if (json.value("type", std::string()) != type) {
    throw ModelParseError("model parse error: expected a " + type + " model");
  }
}

Schema SchemaFromModel(const nlohmann::json& json) {
  try {
    return Schema::FromJson(json.at("schema"));
  } catch (const Error& e) {
    throw ModelParseError(std::string("model parse error: ") + e.what());
  }
}

}  // namespace

std::vector<int> BlackBox::Predict(std::span<const Instance> batch) const {
  batch_calls_.fetch_add(1);
  instance_calls_.fetch_add(batch.size());
  if (batch.empty()) return {};
  std::vector<int> labels = PredictBatch(batch);
  if (labels.size() != batch.size()) {
    throw PredictionError("black box returned " +
                          std::to_string(labels.size()) + " labels for " +
                          std::to_string(batch.size()) + " instances");
  }
  const int count = label_count();
  for (int y : labels) {
    if (y < 0 || y >= count) {
      throw PredictionError("label " + std::to_string(y) +
                            " outside [0, " + std::to_string(count) + ")");
    }
  }
  return labels;
}

int BlackBox::Predict(const Instance& x) const {
  return Predict(std::span<const Instance>(&x, 1)).front();
}

std::vector<int> FunctionBlackBox::PredictBatch(
    std::span<const Instance> batch) const {
  std::vector<int> out;
  out.reserve(batch.size());
  for (const Instance& x : batch) out.push_back(rule_(x));
  return out;
}

void BuiltinModel::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << ToJson().dump(1) << '\n';
  if (!out) throw Error("cannot write " + path);
}

std::unique_ptr<KnnModel> KnnModel::Fit(const Dataset& train, int k) {
  if (k < 1) throw ConfigError("knn needs k >= 1");
  if (!train.has_labels()) throw DataError("training set has no labels");
  std::unique_ptr<KnnModel> model(new KnnModel());
  model->schema_ = train.schema();
  model->stats_ = train.stats();
  model->rows_ = train.instances();
  model->labels_ = train.labels();
  model->k_ = k;
  model->label_count_ = LabelCount(train);
  return model;
}

std::vector<int> KnnModel::PredictBatch(std::span<const Instance> batch) const {
  CheckWidth(batch, schema_.size());
  std::vector<int> out;
  out.reserve(batch.size());
  const size_t k = std::min<size_t>(k_, rows_.size());
  std::vector<std::pair<double, size_t>> distances(rows_.size());
  std::vector<int> votes(label_count_);
  for (const Instance& x : batch) {
    for (size_t r = 0; r < rows_.size(); ++r) {
      distances[r] = {SearchDistance(x, rows_[r], schema_, stats_), r};
    }
    std::partial_sort(distances.begin(), distances.begin() + k,
                      distances.end());
    std::fill(votes.begin(), votes.end(), 0);
    for (size_t i = 0; i < k; ++i) ++votes[labels_[distances[i].second]];
    out.push_back(Vote(votes));
  }
  return out;
}

nlohmann::json KnnModel::ToJson() const {
  return {{"format", kModelFormat},
          {"version", kModelVersion},
          {"type", "knn"},
          {"schema", schema_.ToJson()},
          {"k", k_},
          {"label_count", label_count_},
          {"stats", StatsToJson(stats_)},
          {"rows", rows_},
          {"labels", labels_}};
}

std::unique_ptr<KnnModel> KnnModel::FromJson(const nlohmann::json& json) {
  CheckHeader(json, "knn");
  std::unique_ptr<KnnModel> model(new KnnModel());
  model->schema_ = SchemaFromModel(json);
  try {
    model->k_ = json.at("k").get<int>();
    model->label_count_ = json.at("label_count").get<int>();
    model->stats_ = StatsFromJson(json.at("stats"));
    model->rows_ = json.at("rows").get<std::vector<Instance>>();
    model->labels_ = json.at("labels").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelParseError(std::string("model parse error: ") + e.what());
  }
  if (model->k_ < 1 || model->label_count_ < 2 || model->rows_.empty() ||
      model->rows_.size() != model->labels_.size() ||
      model->stats_.size() != model->schema_.size()) {
    throw ModelParseError("model parse error: inconsistent knn model");
  }
  for (size_t r = 0; r < model->rows_.size(); ++r) {
    if (!model->schema_.Conforms(model->rows_[r]) || model->labels_[r] < 0 ||
        model->labels_[r] >= model->label_count_) {
      throw ModelParseError("model parse error: bad knn row");
    }
  }
  return model;
}

std::unique_ptr<ForestModel> ForestModel::Fit(const Dataset& train,
                                              const ForestOptions& options) {
  if (options.n_trees < 1) throw ConfigError("forest needs n_trees >= 1");
  if (!train.has_labels()) throw DataError("training set has no labels");
  const auto& labels = train.labels();
  if (std::all_of(labels.begin(), labels.end(),
                  [&](int y) { return y == labels.front(); })) {
    throw DataError("single-class training set");
  }
  std::unique_ptr<ForestModel> model(new ForestModel());
  model->schema_ = train.schema();
  model->options_ = options;
  model->label_count_ = LabelCount(train);

  const size_t n = train.size();
  const int mtry = std::max(
      1, static_cast<int>(std::ceil(std::sqrt(double(train.schema().size())))));
  std::vector<Instance> rows(n);
  std::vector<int> bag_labels(n);
  for (int t = 0; t < options.n_trees; ++t) {
    const uint64_t tree_seed = DeriveSeed(options.seed, t);
    std::mt19937_64 rng(tree_seed);
    std::uniform_int_distribution<size_t> pick(0, n - 1);
    for (size_t i = 0; i < n; ++i) {
      const size_t r = pick(rng);
      rows[i] = train.instance(r);
      bag_labels[i] = labels[r];
    }
    TreeOptions tree_options;
    tree_options.max_depth = options.max_depth;
    tree_options.min_leaf = options.min_leaf;
    tree_options.features_per_split = mtry;
    tree_options.seed = Mix64(tree_seed);
    model->trees_.push_back(
        DecisionTree::Fit(train.schema(), rows, bag_labels, tree_options));
  }
  return model;
}

std::vector<int> ForestModel::PredictBatch(
    std::span<const Instance> batch) const {
  CheckWidth(batch, schema_.size());
  std::vector<int> out;
  out.reserve(batch.size());
  std::vector<int> votes(label_count_);
  for (const Instance& x : batch) {
    std::fill(votes.begin(), votes.end(), 0);
    for (const DecisionTree& tree : trees_) ++votes[tree.Predict(x)];
    out.push_back(Vote(votes));
  }
  return out;
}

nlohmann::json ForestModel::ToJson() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const DecisionTree& t : trees_) trees.push_back(t.ToJson());
  return {{"format", kModelFormat},
          {"version", kModelVersion},
          {"type", "forest"},
          {"schema", schema_.ToJson()},
          {"n_trees", options_.n_trees},
          {"max_depth", options_.max_depth},
          {"min_leaf", options_.min_leaf},
          {"seed", options_.seed},
          {"label_count", label_count_},
          {"trees", std::move(trees)}};
}

std::unique_ptr<ForestModel> ForestModel::FromJson(const nlohmann::json& json) {
  CheckHeader(json, "forest");
  std::unique_ptr<ForestModel> model(new ForestModel());
  model->schema_ = SchemaFromModel(json);
  try {
    model->options_.n_trees = json.at("n_trees").get<int>();
    model->options_.max_depth = json.at("max_depth").get<int>();
    model->options_.min_leaf = json.at("min_leaf").get<int>();
    model->options_.seed = json.at("seed").get<uint64_t>();
    model->label_count_ = json.at("label_count").get<int>();
    for (const auto& t : json.at("trees")) {
      model->trees_.push_back(DecisionTree::FromJson(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelParseError(std::string("model parse error: ") + e.what());
  }
  if (model->trees_.empty() || model->label_count_ < 2) {
    throw ModelParseError("model parse error: inconsistent forest model");
  }
  const int m = static_cast<int>(model->schema_.size());
  for (const DecisionTree& tree : model->trees_) {
    for (const TreeNode& node : tree.nodes()) {
      if (node.label < 0 || node.label >= model->label_count_ ||
          node.feature >= m) {
        throw ModelParseError("model parse error: bad tree node");
      }
    }
  }
  return model;
}

std::unique_ptr<BuiltinModel> ModelFromJson(const nlohmann::json& json) {
  if (!json.is_object()) {
    throw ModelParseError("model parse error: expected a JSON object");
  }
  const std::string type = json.value("type", std::string());
  if (type == "knn") return KnnModel::FromJson(json);
  if (type == "forest") return ForestModel::FromJson(json);
  throw ModelParseError("model parse error: unknown model type \"" + type +
                        "\"");
}

std::unique_ptr<BuiltinModel> LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelParseError("model parse error: cannot open " + path);
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ModelParseError(std::string("model parse error: ") + e.what());
  }
  return ModelFromJson(json);
}

void ServePredictionProtocol(const BlackBox& model, std::istream& in,
                             std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json reply;
    try {
      const nlohmann::json request = nlohmann::json::parse(line);
      const std::string op = request.at("op").get<std::string>();
      if (op == "hello") {
        reply = {{"op", "hello"}, {"labels", model.label_count()}};
      } else if (op == "predict") {
        const auto instances =
            request.at("instances").get<std::vector<Instance>>();
        reply = {{"op", "labels"}, {"labels", model.Predict(instances)}};
      } else {
        reply = {{"op", "error"}, {"msg", "unknown op \"" + op + "\""}};
      }
    } catch (const std::exception& e) {
      reply = {{"op", "error"}, {"msg", e.what()}};
    }
    out << reply.dump() << '\n';
    out.flush();
  }
}

}  // namespace ensemblecf
