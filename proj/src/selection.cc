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

#include "ensemblecf/selection.h"

#include <algorithm>
#include <limits>
#include <numeric>

#include "ensemblecf/distance.h"
#include "ensemblecf/errors.h"

namespace ensemblecf {

std::vector<int> KnnC(int c, const DistanceMatrix& pairwise, int h) {
  std::vector<int> others;
  for (int j = 0; j < static_cast<int>(pairwise.size()); ++j) {
    if (j != c) others.push_back(j);
  }
  std::stable_sort(others.begin(), others.end(), [&](int a, int b) {
    return pairwise[c][a] < pairwise[c][b];
  });
  if (h < static_cast<int>(others.size())) others.resize(std::max(0, h));
  return others;
}

SelectionProblem::SelectionProblem(const DistanceMatrix& pairwise,
                                   std::vector<double> to_x,
                                   const SelectionConfig& config)
    : costs_(std::move(to_x)), cost_scale_(config.cost_scale) {
  if (config.lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (config.neighborhood < 1) throw ConfigError("neighborhood must be >= 1");
  if (config.cost_scale < 0.0) throw ConfigError("cost_scale must be >= 0");
  const size_t n = costs_.size();
  if (pairwise.size() != n) {
    throw ConfigError("distance matrix does not match the candidate count");
  }
  for (const auto& row : pairwise) {
    if (row.size() != n) throw ConfigError("distance matrix is not square");
  }
  h_ = n > 1 ? std::min<int>(config.neighborhood, static_cast<int>(n) - 1) : 0;
  neighborhoods_.reserve(n);
  for (size_t c = 0; c < n; ++c) {
    neighborhoods_.push_back(KnnC(static_cast<int>(c), pairwise, h_));
    std::vector<int> same;
    for (size_t o = 0; o < n; ++o) {
      if (o != c && pairwise[c][o] == 0.0) same.push_back(static_cast<int>(o));
    }
    duplicates_.push_back(std::move(same));
  }
  double norm = 1.0;
  if (config.normalize_costs && n > 0) {
    const double largest = *std::max_element(costs_.begin(), costs_.end());
    if (largest > 0.0) norm = largest;
  }
  for (double& c : costs_) c = config.lambda * c / norm;
}

double Objective(const SelectionProblem& problem,
                 std::span<const int> subset) {
  std::vector<bool> covered(problem.size(), false);
  int coverage = 0;
  double cost = 0.0;
  for (int c : subset) {
    for (int j : problem.neighborhood(c)) {
      if (!covered[j]) {
        covered[j] = true;
        ++coverage;
      }
    }
    cost += problem.cost(c);
  }
  return coverage - cost;
}

std::vector<int> CsgSelect(const SelectionProblem& problem, int k) {
  const size_t n = problem.size();
  std::vector<int> picked;
  std::vector<bool> chosen(n, false);
  std::vector<bool> covered(n, false);
  while (static_cast<int>(picked.size()) < k) {
    int best = -1;
    double best_score = 0.0;
    for (size_t c = 0; c < n; ++c) {
      if (chosen[c]) continue;
      const auto& same = problem.duplicates(static_cast<int>(c));
      if (std::any_of(same.begin(), same.end(),
                      [&](int o) { return chosen[o]; })) {
        continue;
      }
      int gain = 0;
      for (int j : problem.neighborhood(static_cast<int>(c))) {
        if (!covered[j]) ++gain;
      }
      const double score =
          gain - problem.cost_scale() * problem.cost(static_cast<int>(c));
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(c);
      }
    }
    if (best < 0) break;
    chosen[best] = true;
    picked.push_back(best);
    for (int j : problem.neighborhood(best)) covered[j] = true;
  }
  return picked;
}

std::vector<int> ExhaustiveSelect(const SelectionProblem& problem, int k) {
  const int n = static_cast<int>(problem.size());
  std::vector<int> best;
  double best_value = 0.0;
  std::vector<int> current;
  auto visit = [&](auto&& self, int start) -> void {
    if (!current.empty()) {
      const double value = Objective(problem, current);
      if (value > best_value) {
        best_value = value;
        best = current;
      }
    }
    if (static_cast<int>(current.size()) == k) return;
    for (int c = start; c < n; ++c) {
      current.push_back(c);
      self(self, c + 1);
      current.pop_back();
    }
  };
  visit(visit, 0);
  return best;
}

std::vector<Counterfactual> SelectCounterfactuals(
    std::span<const Counterfactual> candidates, const Instance& x, int k,
    const SelectionConfig& config, const Dataset& data) {
  const size_t n = candidates.size();
  if (n == 0 || k < 1) return {};
  DistanceMatrix pairwise(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double d =
          EvalDistance(candidates[i].values, candidates[j].values, data);
      pairwise[i][j] = d;
      pairwise[j][i] = d;
    }
  }
  std::vector<double> to_x;
  to_x.reserve(n);
  for (const Counterfactual& c : candidates) {
    to_x.push_back(EvalDistance(c.values, x, data));
  }
  const SelectionProblem problem(pairwise, std::move(to_x), config);
  std::vector<Counterfactual> selected;
  if (n == 1) {
    // A lone candidate has an empty neighborhood and can never score above
    // zero; it is still the only answer available.
    selected.push_back(candidates.front());
    return selected;
  }
  for (int i : CsgSelect(problem, k)) selected.push_back(candidates[i]);
  return selected;
}

}  // namespace ensemblecf
