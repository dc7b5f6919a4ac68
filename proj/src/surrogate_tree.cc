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

#include "ensemblecf/surrogate_tree.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "ensemblecf/errors.h"

namespace ensemblecf {
namespace {

constexpr double kScoreTolerance = 1e-12;

double Gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

int Majority(const std::vector<int>& counts) {
  int best = 0;
  for (size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[best]) best = static_cast<int>(i);
  }
  return best;
}

struct Split {
  int feature = -1;
  bool categorical = false;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();
};

class TreeBuilder {
 public:
  TreeBuilder(const Schema& schema, std::span<const Instance> rows,
              std::span<const int> labels, const TreeOptions& options)
      : schema_(schema),
        rows_(rows),
        labels_(labels),
        options_(options),
        rng_(options.seed) {
    label_count_ = *std::max_element(labels.begin(), labels.end()) + 1;
  }

  std::vector<TreeNode> Build() {
    std::vector<size_t> all(rows_.size());
    std::iota(all.begin(), all.end(), 0);
    Grow(std::move(all), 0);
    return std::move(nodes_);
  }

 private:
  int Grow(std::vector<size_t> indices, int depth) {
    std::vector<int> counts(label_count_, 0);
    for (size_t i : indices) ++counts[labels_[i]];
    const int n = static_cast<int>(indices.size());
    const int node_id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[node_id].label = Majority(counts);

    const bool pure =
        std::count_if(counts.begin(), counts.end(),
                      [](int c) { return c > 0; }) <= 1;
    const bool depth_reached =
        options_.max_depth >= 0 && depth >= options_.max_depth;
    const int min_leaf = std::max(1, options_.min_leaf);
    if (pure || depth_reached || n < 2 * min_leaf) {
      nodes_[node_id].members = std::move(indices);
      return node_id;
    }

    const Split split = BestSplit(indices, counts, min_leaf);
    if (split.feature < 0) {
      nodes_[node_id].members = std::move(indices);
      return node_id;
    }

    std::vector<size_t> left;
    std::vector<size_t> right;
    for (size_t i : indices) {
      const double v = rows_[i][split.feature];
      const bool goes_left =
          split.categorical ? v == split.threshold : v <= split.threshold;
      (goes_left ? left : right).push_back(i);
    }
    nodes_[node_id].feature = split.feature;
    nodes_[node_id].categorical = split.categorical;
    nodes_[node_id].threshold = split.threshold;
    const int l = Grow(std::move(left), depth + 1);
    nodes_[node_id].left = l;
    const int r = Grow(std::move(right), depth + 1);
    nodes_[node_id].right = r;
    return node_id;
  }

  std::vector<int> CandidateFeatures() {
    std::vector<int> features(schema_.size());
    std::iota(features.begin(), features.end(), 0);
    const int mtry = options_.features_per_split;
    if (mtry > 0 && mtry < static_cast<int>(features.size())) {
      for (int i = 0; i < mtry; ++i) {
        std::uniform_int_distribution<int> pick(
            i, static_cast<int>(features.size()) - 1);
        std::swap(features[i], features[pick(rng_)]);
      }
      features.resize(mtry);
      std::sort(features.begin(), features.end());
    }
    return features;
  }

  Split BestSplit(const std::vector<size_t>& indices,
                  const std::vector<int>& counts, int min_leaf) {
    Split best;
    const int n = static_cast<int>(indices.size());
    std::vector<int> left_counts(label_count_);
    std::vector<int> right_counts(label_count_);
    std::vector<size_t> order = indices;

    for (int f : CandidateFeatures()) {
      if (schema_.feature(f).categorical()) {
        const int categories =
            static_cast<int>(schema_.feature(f).categories.size());
        for (int c = 0; c < categories; ++c) {
          std::fill(left_counts.begin(), left_counts.end(), 0);
          int n_left = 0;
          for (size_t i : indices) {
            if (rows_[i][f] == c) {
              ++left_counts[labels_[i]];
              ++n_left;
            }
          }
          const int n_right = n - n_left;
          if (n_left < min_leaf || n_right < min_leaf) continue;
          for (int y = 0; y < label_count_; ++y) {
            right_counts[y] = counts[y] - left_counts[y];
          }
          const double score = n_left * Gini(left_counts, n_left) +
                               n_right * Gini(right_counts, n_right);
          if (score < best.score - kScoreTolerance) {
            best = {f, true, static_cast<double>(c), score};
          }
        }
        continue;
      }

      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return rows_[a][f] < rows_[b][f];
      });
      std::fill(left_counts.begin(), left_counts.end(), 0);
      for (int pos = 0; pos + 1 < n; ++pos) {
        ++left_counts[labels_[order[pos]]];
        const double here = rows_[order[pos]][f];
        const double next = rows_[order[pos + 1]][f];
        if (here == next) continue;
        const int n_left = pos + 1;
        const int n_right = n - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        for (int y = 0; y < label_count_; ++y) {
          right_counts[y] = counts[y] - left_counts[y];
        }
        const double score = n_left * Gini(left_counts, n_left) +
                             n_right * Gini(right_counts, n_right);
        if (score < best.score - kScoreTolerance) {
          double threshold = here + (next - here) / 2.0;
          if (!(threshold < next)) threshold = here;
          best = {f, false, threshold, score};
        }
      }
    }
    return best;
  }

  const Schema& schema_;
  std::span<const Instance> rows_;
  std::span<const int> labels_;
  TreeOptions options_;
  std::mt19937_64 rng_;
  int label_count_ = 0;
  std::vector<TreeNode> nodes_;
};

SplitCondition::Op Negate(SplitCondition::Op op) {
  switch (op) {
    case SplitCondition::Op::kLessEqual:
      return SplitCondition::Op::kGreater;
    case SplitCondition::Op::kGreater:
      return SplitCondition::Op::kLessEqual;
    case SplitCondition::Op::kEqual:
      return SplitCondition::Op::kNotEqual;
    case SplitCondition::Op::kNotEqual:
      return SplitCondition::Op::kEqual;
  }
  return op;
}

}  // namespace

bool SplitCondition::SatisfiedBy(const Instance& x) const {
  const double v = x[feature];
  switch (op) {
    case Op::kLessEqual:
      return v <= value;
    case Op::kGreater:
      return v > value;
    case Op::kEqual:
      return v == value;
    case Op::kNotEqual:
      return v != value;
  }
  return false;
}

DecisionTree DecisionTree::Fit(const Schema& schema,
                               std::span<const Instance> rows,
                               std::span<const int> labels,
                               const TreeOptions& options) {
  if (rows.empty()) throw DataError("cannot fit a tree on an empty set");
  if (rows.size() != labels.size()) {
    throw DataError("tree labels are not aligned with rows");
  }
  for (int y : labels) {
    if (y < 0) throw DataError("negative label");
  }
  DecisionTree tree;
  tree.nodes_ = TreeBuilder(schema, rows, labels, options).Build();
  return tree;
}

int DecisionTree::LeafOf(const Instance& x) const {
  int node = 0;
  while (!nodes_[node].leaf()) {
    const TreeNode& n = nodes_[node];
    const double v = x[n.feature];
    const bool goes_left = n.categorical ? v == n.threshold : v <= n.threshold;
    node = goes_left ? n.left : n.right;
  }
  return node;
}

int DecisionTree::Predict(const Instance& x) const {
  return nodes_[LeafOf(x)].label;
}

std::vector<TreePath> DecisionTree::EnumeratePaths(
    const std::function<bool(int)>& accept) const {
  std::vector<TreePath> paths;
  std::vector<SplitCondition> stack;
  std::function<void(int)> visit = [&](int id) {
    const TreeNode& node = nodes_[id];
    if (node.leaf()) {
      if (accept(node.label)) paths.push_back({stack, node.label, node.members});
      return;
    }
    const SplitCondition::Op op = node.categorical
                                      ? SplitCondition::Op::kEqual
                                      : SplitCondition::Op::kLessEqual;
    stack.push_back({node.feature, op, node.threshold});
    visit(node.left);
    stack.back().op = Negate(op);
    visit(node.right);
    stack.pop_back();
  };
  if (!nodes_.empty()) visit(0);
  return paths;
}

size_t DecisionTree::leaf_count() const {
  return std::count_if(nodes_.begin(), nodes_.end(),
                       [](const TreeNode& n) { return n.leaf(); });
}

int DecisionTree::depth() const {
  std::function<int(int)> depth_of = [&](int id) -> int {
    const TreeNode& n = nodes_[id];
    if (n.leaf()) return 0;
    return 1 + std::max(depth_of(n.left), depth_of(n.right));
  };
  return nodes_.empty() ? 0 : depth_of(0);
}

nlohmann::json DecisionTree::ToJson() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& n : nodes_) {
    if (n.leaf()) {
      nodes.push_back({{"label", n.label}});
    } else {
      nodes.push_back({{"feature", n.feature},
                       {"categorical", n.categorical},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"label", n.label}});
    }
  }
  return {{"nodes", std::move(nodes)}};
}

DecisionTree DecisionTree::FromJson(const nlohmann::json& json) {
  DecisionTree tree;
  try {
    for (const auto& entry : json.at("nodes")) {
      TreeNode n;
      n.label = entry.at("label").get<int>();
      if (entry.contains("feature")) {
        n.feature = entry.at("feature").get<int>();
        n.categorical = entry.at("categorical").get<bool>();
        n.threshold = entry.at("threshold").get<double>();
        n.left = entry.at("left").get<int>();
        n.right = entry.at("right").get<int>();
      }
      tree.nodes_.push_back(std::move(n));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelParseError(std::string("model parse error: ") + e.what());
  }
  const int count = static_cast<int>(tree.nodes_.size());
  if (count == 0) throw ModelParseError("model parse error: empty tree");
  for (int i = 0; i < count; ++i) {
    const TreeNode& n = tree.nodes_[i];
    if (n.leaf()) continue;
    // Children always follow their parent in the serialized order.
    if (n.left <= i || n.right <= i || n.left >= count || n.right >= count) {
      throw ModelParseError("model parse error: bad child index");
    }
  }
  return tree;
}

int ConditionsUnsatisfied(const TreePath& path, const Instance& x) {
  int violated = 0;
  for (const SplitCondition& c : path.conditions) {
    if (!c.SatisfiedBy(x)) ++violated;
  }
  return violated;
}

}  // namespace ensemblecf
