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

// Base k-counterfactual explainers: brute force over binned variations,
// shadow-tree paths, and growing spheres.
//
// Every explainer maps (x, b, X, A, k) to at most k counterfactuals c with
// b(c) != b(x) that only change features in A. Each one works under a
// black-box call budget; running out returns what was found so far.

#ifndef ENSEMBLECF_EXPLAINERS_H_
#define ENSEMBLECF_EXPLAINERS_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ensemblecf/blackbox.h"
#include "ensemblecf/schema.h"

namespace ensemblecf {

enum class ExplainerKind { kBrute, kTree, kSphere };

std::string_view ExplainerKindName(ExplainerKind kind);
// Throws ConfigError on unknown names.
ExplainerKind ParseExplainerKind(std::string_view name);

struct Counterfactual {
  Instance values;
  ExplainerKind source = ExplainerKind::kBrute;
  double eval_distance = 0.0;
  double search_distance = 0.0;
  std::vector<int> changed_features;
};

// Fills distances and changed features of `values` relative to `x`.
Counterfactual MakeCounterfactual(Instance values, const Instance& x,
                                  ExplainerKind source, const Dataset& data);

// a_A(c, x): c equals x on every feature outside `actionable`.
bool IsActionable(const Instance& c, const Instance& x,
                  std::span<const int> actionable);

struct ExplainRequest {
  const Instance& x;
  const BlackBox& model;
  // Schema and statistics used by the distances.
  const Dataset& data;
  // Known instances X (possibly a sample of data.instances()).
  std::span<const Instance> known;
  // Actionable feature indices A, ascending.
  std::vector<int> actionable;
  int k = 1;
  uint64_t seed = 0;
  uint64_t call_budget = 20000;
};

class CounterfactualExplainer {
 public:
  virtual ~CounterfactualExplainer() = default;
  virtual std::vector<Counterfactual> Explain(
      const ExplainRequest& request) const = 0;
  virtual std::string name() const = 0;
};

// Raised by CallBudget when an explainer exceeds its allowance.
class BudgetExhausted : public std::exception {
 public:
  const char* what() const noexcept override {
    return "black-box call budget exhausted";
  }
};

// Counting front for the black box. Throws BudgetExhausted before forwarding
// a batch that would go over the budget.
class CallBudget {
 public:
  CallBudget(const BlackBox& model, uint64_t budget)
      : model_(model), budget_(budget) {}

  std::vector<int> Predict(std::span<const Instance> batch);
  int Predict(const Instance& x);
  uint64_t used() const { return used_; }
  uint64_t remaining() const { return budget_ - used_; }

 private:
  const BlackBox& model_;
  uint64_t budget_;
  uint64_t used_ = 0;
};

// ---------------------------------------------------------------------------
// Brute force.

struct BruteConfig {
  // Bins per continuous feature.
  int bins = 10;
  // Largest number of features changed at once.
  int max_changed = 1;
};

// Representative values per feature. Entries for features outside
// `actionable` stay empty.
struct FeatureBins {
  std::vector<std::vector<double>> values;
  // True when no known instance had a decision different from x and the
  // bins were computed over every known instance.
  bool fell_back = false;
};

// Continuous features: centers of `bins` equal-width bins over [min, max] of
// the known instances whose decision differs from x's. Categorical features:
// the categories observed in that subset, ascending.
FeatureBins BinFeatures(std::span<const Instance> known,
                        std::span<const int> known_labels, int x_label,
                        const Schema& schema, std::span<const int> actionable,
                        int bins);

// Bisects the changes of c towards x while keeping b(c) != b(x): first
// delta-debugging reverts of whole features, then a binary search of each
// remaining continuous value towards x (at most 20 steps, stopping once the
// interval is below 1e-4 of the feature range). Empty when c is not valid.
std::optional<Instance> Refine(const Instance& c, const Instance& x,
                               int x_label, const Dataset& data,
                               CallBudget& budget);

class BruteForceExplainer : public CounterfactualExplainer {
 public:
  explicit BruteForceExplainer(BruteConfig config = {});
  std::vector<Counterfactual> Explain(
      const ExplainRequest& request) const override;
  std::string name() const override { return "brute"; }

 private:
  BruteConfig config_;
};

// ---------------------------------------------------------------------------
// Shadow tree.

struct TreeExplainerConfig {
  int max_depth = 8;
  int min_leaf = 5;
};

class TreeExplainer : public CounterfactualExplainer {
 public:
  explicit TreeExplainer(TreeExplainerConfig config = {});
  std::vector<Counterfactual> Explain(
      const ExplainRequest& request) const override;
  std::string name() const override { return "tree"; }

 private:
  TreeExplainerConfig config_;
};

// ---------------------------------------------------------------------------
// Growing spheres.

struct SphereConfig {
  int points_per_ring = 500;
  // Initial radius as a multiple of the distance to the farthest known
  // instance.
  double initial_radius_factor = 1.0;
  double shrink_factor = 0.5;
  int max_iterations = 20;
  int ring_refine_steps = 10;
  // Draws of the final ring while it holds fewer than k valid points.
  int final_ring_samples = 8;
};

// `count` points x_enc + z * rho / |z| with z standard normal and rho uniform
// in [lower, upper]. Coordinates outside `free_dims` (when non-empty) are left
// at x_enc.
std::vector<std::vector<double>> GenerateRing(std::span<const double> center,
                                              double lower, double upper,
                                              int count, uint64_t seed,
                                              std::span<const int> free_dims = {});

class SphereExplainer : public CounterfactualExplainer {
 public:
  // Throws ConfigError when a field is out of range.
  explicit SphereExplainer(SphereConfig config = {});
  std::vector<Counterfactual> Explain(
      const ExplainRequest& request) const override;
  std::string name() const override { return "sphere"; }

 private:
  SphereConfig config_;
};

std::unique_ptr<CounterfactualExplainer> MakeExplainer(
    ExplainerKind kind, const BruteConfig& brute,
    const TreeExplainerConfig& tree, const SphereConfig& sphere);

}  // namespace ensemblecf

#endif  // ENSEMBLECF_EXPLAINERS_H_
