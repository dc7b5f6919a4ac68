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

// CART classification tree with Gini splits. Serves as the shadow model of
// the tree explainer and as the unit of the built-in forest.
//
// Continuous splits test `x[f] <= threshold` with thresholds at midpoints of
// consecutive distinct values; categorical splits test `x[f] == c`. The
// "true" branch is always the left child.

#ifndef ENSEMBLECF_SURROGATE_TREE_H_
#define ENSEMBLECF_SURROGATE_TREE_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ensemblecf/schema.h"
#include "json.hpp"

namespace ensemblecf {

struct SplitCondition {
  enum class Op { kLessEqual, kGreater, kEqual, kNotEqual };

  int feature = 0;
  Op op = Op::kLessEqual;
  double value = 0.0;

  bool SatisfiedBy(const Instance& x) const;
  friend bool operator==(const SplitCondition&,
                         const SplitCondition&) = default;
};

struct TreeNode {
  // -1 marks a leaf.
  int feature = -1;
  bool categorical = false;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // Majority label of the training rows reaching the node.
  int label = 0;
  // Training row indices; filled on leaves only.
  std::vector<size_t> members;

  bool leaf() const { return feature < 0; }
};

struct TreePath {
  std::vector<SplitCondition> conditions;
  int label = 0;
  std::vector<size_t> members;
};

struct TreeOptions {
  // Negative means unlimited.
  int max_depth = 8;
  int min_leaf = 5;
  // Features drawn at random per node; 0 considers every feature.
  int features_per_split = 0;
  uint64_t seed = 0;
};

class DecisionTree {
 public:
  // Greedy Gini CART. Ties between candidate splits go to the lowest feature
  // index, then the lowest threshold (or category). Throws DataError on empty
  // input or misaligned labels.
  static DecisionTree Fit(const Schema& schema, std::span<const Instance> rows,
                          std::span<const int> labels,
                          const TreeOptions& options);

  int Predict(const Instance& x) const;
  // Index into nodes() of the leaf reached by x.
  int LeafOf(const Instance& x) const;

  // Root-to-leaf paths whose leaf label satisfies `accept`, in depth-first
  // order with the left branch first.
  std::vector<TreePath> EnumeratePaths(
      const std::function<bool(int)>& accept) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  size_t leaf_count() const;
  int depth() const;

  // Leaf members are not serialized.
  nlohmann::json ToJson() const;
  static DecisionTree FromJson(const nlohmann::json& json);

 private:
  std::vector<TreeNode> nodes_;
};

// Number of conditions of `path` that x violates.
int ConditionsUnsatisfied(const TreePath& path, const Instance& x);

}  // namespace ensemblecf

#endif  // ENSEMBLECF_SURROGATE_TREE_H_
