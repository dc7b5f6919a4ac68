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

// Two distinct distances live here. The search distance steers the base
// explainers; the evaluation distance (MAD-normalized) is what the metrics
// and the selection objective report. They must not be interchanged.

#ifndef ENSEMBLECF_DISTANCE_H_
#define ENSEMBLECF_DISTANCE_H_

#include <span>

#include "ensemblecf/schema.h"

namespace ensemblecf {

enum class DistanceKind { kSearch, kEvaluation };

// Plain L2 norm of a - b. Throws std::invalid_argument on length mismatch.
double Euclidean(std::span<const double> a, std::span<const double> b);

// Tabular data: (m_con/m) * (1/m_con) * Euclidean over min/max-scaled
// continuous values plus (m_cat/m) * Jaccard dissimilarity of the categorical
// attribute-value pairs. Series and images use the plain Euclidean distance.
double SearchDistance(const Instance& a, const Instance& b,
                      const Schema& schema,
                      std::span<const FeatureStats> stats);

// (1/m_con) * sum |a_i - b_i| / MAD_i + (1/m_cat) * sum 1[a_i != b_i].
double EvalDistance(const Instance& a, const Instance& b, const Schema& schema,
                    std::span<const FeatureStats> stats);

inline double SearchDistance(const Instance& a, const Instance& b,
                             const Dataset& data) {
  return SearchDistance(a, b, data.schema(), data.stats());
}

inline double EvalDistance(const Instance& a, const Instance& b,
                           const Dataset& data) {
  return EvalDistance(a, b, data.schema(), data.stats());
}

// Indices where a and b differ.
std::vector<int> ChangedFeatures(const Instance& a, const Instance& b);

}  // namespace ensemblecf

#endif  // ENSEMBLECF_DISTANCE_H_
