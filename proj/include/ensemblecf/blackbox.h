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

#ifndef ENSEMBLECF_BLACKBOX_H_
#define ENSEMBLECF_BLACKBOX_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "ensemblecf/schema.h"
#include "ensemblecf/surrogate_tree.h"
#include "json.hpp"

namespace ensemblecf {

// Opaque classifier mapping raw instances (schema order, categorical values as
// category indices) to labels in [0, label_count()).
//
// Predict() is batch-first. Every call bumps the batch and instance counters
// and checks the returned labels against label_count(); a violation raises
// PredictionError.
class BlackBox {
 public:
  virtual ~BlackBox() = default;

  std::vector<int> Predict(std::span<const Instance> batch) const;
  int Predict(const Instance& x) const;

  virtual int label_count() const = 0;

  uint64_t batch_calls() const { return batch_calls_.load(); }
  uint64_t instance_calls() const { return instance_calls_.load(); }

 protected:
  virtual std::vector<int> PredictBatch(
      std::span<const Instance> batch) const = 0;

 private:
  mutable std::atomic<uint64_t> batch_calls_{0};
  mutable std::atomic<uint64_t> instance_calls_{0};
};

// Rule-backed model, used for analytic fixtures and tests.
class FunctionBlackBox : public BlackBox {
 public:
  FunctionBlackBox(std::function<int(const Instance&)> rule, int label_count)
      : rule_(std::move(rule)), label_count_(label_count) {}

  int label_count() const override { return label_count_; }

 protected:
  std::vector<int> PredictBatch(
      std::span<const Instance> batch) const override;

 private:
  std::function<int(const Instance&)> rule_;
  int label_count_;
};

// Forwards to another black box while keeping its own call counters.
class CountingBlackBox : public BlackBox {
 public:
  explicit CountingBlackBox(const BlackBox& inner) : inner_(inner) {}
  int label_count() const override { return inner_.label_count(); }

 protected:
  std::vector<int> PredictBatch(
      std::span<const Instance> batch) const override {
    return inner_.Predict(batch);
  }

 private:
  const BlackBox& inner_;
};

// Built-in models that can be written to and read back from a model file.
class BuiltinModel : public BlackBox {
 public:
  virtual nlohmann::json ToJson() const = 0;
  void Save(const std::string& path) const;
};

// Majority vote of the k nearest training rows under the search distance.
// Vote ties go to the lowest label; distance ties to the earliest row.
class KnnModel : public BuiltinModel {
 public:
  // Throws DataError on an empty or unlabeled training set, ConfigError when
  // k < 1.
  static std::unique_ptr<KnnModel> Fit(const Dataset& train, int k);
  static std::unique_ptr<KnnModel> FromJson(const nlohmann::json& json);

  int label_count() const override { return label_count_; }
  nlohmann::json ToJson() const override;

 protected:
  std::vector<int> PredictBatch(
      std::span<const Instance> batch) const override;

 private:
  KnnModel() = default;

  Schema schema_;
  std::vector<FeatureStats> stats_;
  std::vector<Instance> rows_;
  std::vector<int> labels_;
  int k_ = 1;
  int label_count_ = 2;
};

struct ForestOptions {
  int n_trees = 32;
  // Negative means unlimited.
  int max_depth = 8;
  int min_leaf = 1;
  uint64_t seed = 0;
};

// Bagged CART trees with sqrt(m) features drawn per split; majority vote with
// ties to the lowest label.
class ForestModel : public BuiltinModel {
 public:
  // Throws DataError on an unlabeled or single-class training set, ConfigError
  // when n_trees < 1.
  static std::unique_ptr<ForestModel> Fit(const Dataset& train,
                                          const ForestOptions& options);
  static std::unique_ptr<ForestModel> FromJson(const nlohmann::json& json);

  int label_count() const override { return label_count_; }
  nlohmann::json ToJson() const override;
  size_t tree_count() const { return trees_.size(); }

 protected:
  std::vector<int> PredictBatch(
      std::span<const Instance> batch) const override;

 private:
  ForestModel() = default;

  Schema schema_;
  std::vector<DecisionTree> trees_;
  ForestOptions options_;
  int label_count_ = 2;
};

// Reads a model file written by BuiltinModel::Save. Throws ModelParseError.
std::unique_ptr<BuiltinModel> LoadModel(const std::string& path);
std::unique_ptr<BuiltinModel> ModelFromJson(const nlohmann::json& json);

struct ExternalPredictorSpec {
  // Run through /bin/sh -c.
  std::string command;
  std::chrono::milliseconds timeout{10000};
  // Instances per request; larger batches are split.
  size_t max_batch = 4096;
};

// Child process speaking newline-delimited JSON on its stdin/stdout:
//   {"op":"hello"}                          -> {"op":"hello","labels":L}
//   {"op":"predict","instances":[[...]]}    -> {"op":"labels","labels":[...]}
// Concurrent callers are serialized. Any process exit, malformed reply or
// timeout raises PredictionError, and the client stays failed afterwards.
class ExternalBlackBox : public BlackBox {
 public:
  // Spawns the process and performs the handshake.
  explicit ExternalBlackBox(ExternalPredictorSpec spec);
  ~ExternalBlackBox() override;

  ExternalBlackBox(const ExternalBlackBox&) = delete;
  ExternalBlackBox& operator=(const ExternalBlackBox&) = delete;

  int label_count() const override { return label_count_; }

 protected:
  std::vector<int> PredictBatch(
      std::span<const Instance> batch) const override;

 private:
  nlohmann::json Exchange(const nlohmann::json& request) const;
  std::string ReadLine() const;
  void Shutdown() const;

  ExternalPredictorSpec spec_;
  int label_count_ = 0;
  mutable std::mutex mu_;
  mutable int pid_ = -1;
  mutable int to_child_ = -1;
  mutable int from_child_ = -1;
  mutable std::string buffer_;
  mutable bool failed_ = false;
};

// Answers the prediction protocol on `in`/`out` with `model` until `in`
// closes. Malformed requests get {"op":"error","msg":...} and the loop goes
// on.
void ServePredictionProtocol(const BlackBox& model, std::istream& in,
                             std::ostream& out);

}  // namespace ensemblecf

#endif  // ENSEMBLECF_BLACKBOX_H_
