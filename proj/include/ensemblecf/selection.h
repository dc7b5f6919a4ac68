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

// Density-based choice of k counterfactuals out of a candidate pool:
//
//   maximize |union_{c in S} knn_C(c)| - lambda * sum_{c in S} d(c, x)
//
// over |S| <= k, where knn_C(c) are the h candidates closest to c (c itself
// excluded). The coverage term is monotone submodular and the cost term is
// modular, so a cost-scaled greedy applies.

#ifndef ENSEMBLECF_SELECTION_H_
#define ENSEMBLECF_SELECTION_H_

#include <span>
#include <vector>

#include "ensemblecf/explainers.h"
#include "ensemblecf/schema.h"

namespace ensemblecf {

struct SelectionConfig {
  double lambda = 0.5;
  // Neighborhood size h; capped at |C| - 1.
  int neighborhood = 3;
  // Divide distances to x by the largest one before applying lambda.
  bool normalize_costs = true;
  // Multiplier on the cost inside the greedy score (not in the objective).
  double cost_scale = 1.0;
};

using DistanceMatrix = std::vector<std::vector<double>>;

// The h candidates nearest to candidate `c`, excluding c. Ties keep insertion
// order. Result is ordered by distance.
std::vector<int> KnnC(int c, const DistanceMatrix& pairwise, int h);

class SelectionProblem {
 public:
  // `pairwise` is |C| x |C|; `to_x` holds d(c, x). Throws ConfigError on
  // negative lambda, h < 1, or shape mismatch.
  SelectionProblem(const DistanceMatrix& pairwise, std::vector<double> to_x,
                   const SelectionConfig& config);

  size_t size() const { return costs_.size(); }
  int neighborhood_size() const { return h_; }
  const std::vector<int>& neighborhood(int c) const { return neighborhoods_[c]; }
  // lambda * d(c, x), normalized when configured.
  double cost(int c) const { return costs_[c]; }
  double cost_scale() const { return cost_scale_; }
  // Other candidates at distance zero from c.
  const std::vector<int>& duplicates(int c) const { return duplicates_[c]; }

 private:
  std::vector<std::vector<int>> neighborhoods_;
  std::vector<std::vector<int>> duplicates_;
  std::vector<double> costs_;
  int h_ = 0;
  double cost_scale_ = 1.0;
};

// Objective value of `subset` (indices into the pool).
double Objective(const SelectionProblem& problem, std::span<const int> subset);

// Greedy: repeatedly add the candidate with the largest coverage gain minus
// scaled cost, skipping non-positive scores; stops at k picks or when no
// candidate scores above zero. Ties go to the earliest candidate. A copy of
// an already picked candidate adds nothing and is never picked. Returns
// indices in pick order.
std::vector<int> CsgSelect(const SelectionProblem& problem, int k);

// Exhaustive maximizer over all subsets of size <= k. Exponential; meant for
// small pools.
std::vector<int> ExhaustiveSelect(const SelectionProblem& problem, int k);

// Builds the problem from candidates under the evaluation distance and runs
// CsgSelect. Candidates are expected deduplicated.
std::vector<Counterfactual> SelectCounterfactuals(
    std::span<const Counterfactual> candidates, const Instance& x, int k,
    const SelectionConfig& config, const Dataset& data);

}  // namespace ensemblecf

#endif  // ENSEMBLECF_SELECTION_H_
