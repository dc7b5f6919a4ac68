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

// Ensemble of base explainers. Each member runs on a sample of the known
// instances and a sample of the actionable features, the union of their
// answers is re-validated, deduplicated, and cut down to k with the
// cost-scaled greedy selection.

#ifndef ENSEMBLECF_ENSEMBLE_H_
#define ENSEMBLECF_ENSEMBLE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ensemblecf/explainers.h"
#include "ensemblecf/selection.h"
#include "json.hpp"

namespace ensemblecf {

struct EnsembleConfig {
  int pool_size = 10;
  // Draw weights of brute, tree and sphere members.
  std::array<double, 3> kind_weights = {1.0, 1.0, 1.0};
  // When non-empty, member i runs kinds[i] and pool_size is ignored.
  std::vector<ExplainerKind> kinds;
  double instance_fraction = 0.7;
  double feature_fraction = 0.5;
  // Members run on up to this many threads; results merge in member order.
  int workers = 1;
  uint64_t member_call_budget = 20000;
  SelectionConfig selection;
  BruteConfig brute;
  TreeExplainerConfig tree;
  SphereConfig sphere;

  // Throws ConfigError naming the offending field.
  void Validate() const;
  nlohmann::json ToJson() const;
  static EnsembleConfig FromJson(const nlohmann::json& json);
};

struct MemberReport {
  ExplainerKind kind = ExplainerKind::kBrute;
  uint64_t seed = 0;
  size_t instances = 0;
  std::vector<int> features;
  size_t candidates = 0;
  uint64_t bbox_calls = 0;
  double seconds = 0.0;
  // Set when the member failed; it then contributed nothing.
  std::optional<std::string> error;
};

struct ExplanationResult {
  std::vector<Counterfactual> selected;
  // Union of member outputs, in member order, before filtering.
  std::vector<Counterfactual> pool;
  // Pool after dropping invalid, non-actionable and duplicate entries.
  std::vector<Counterfactual> admissible;
  std::vector<MemberReport> members;
  int x_label = 0;
  uint64_t bbox_calls = 0;
  double seconds = 0.0;
};

// Sample without replacement of max(1, ceil(fraction * n)) indices out of n,
// returned ascending. Throws DataError when n == 0, ConfigError when fraction
// is outside (0, 1].
std::vector<size_t> SampleInstances(size_t n, double fraction, uint64_t seed);

// Uniform subset of max(1, ceil(fraction * |actionable|)) features,
// ascending. Throws DataError "no actionable features" when empty.
std::vector<int> SampleFeatures(std::span<const int> actionable,
                                double fraction, uint64_t seed);

// The master seed is ExplainRequest::seed. Member i derives its kind, its
// samples and its own seed from DeriveSeed(master, i), so growing the pool
// leaves the existing members unchanged.
class EnsembleExplainer : public CounterfactualExplainer {
 public:
  explicit EnsembleExplainer(EnsembleConfig config);

  // Full result with provenance. Propagates PredictionError from the black
  // box when x itself cannot be labeled or the final re-validation fails;
  // member failures are isolated.
  ExplanationResult ExplainDetailed(const ExplainRequest& request) const;

  std::vector<Counterfactual> Explain(
      const ExplainRequest& request) const override;
  std::string name() const override { return "ensemble"; }

  const EnsembleConfig& config() const { return config_; }

  // Member kinds as drawn for `seed`.
  std::vector<ExplainerKind> DrawKinds(uint64_t seed) const;

 private:
  EnsembleConfig config_;
};

}  // namespace ensemblecf

#endif  // ENSEMBLECF_ENSEMBLE_H_
