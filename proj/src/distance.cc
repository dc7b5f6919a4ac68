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

#include "ensemblecf/distance.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ensemblecf {
namespace {

void CheckShapes(const Instance& a, const Instance& b, const Schema& schema,
                 std::span<const FeatureStats> stats) {
  if (a.size() != schema.size() || b.size() != schema.size()) {
    throw std::invalid_argument("instance does not match the schema width (" +
                                std::to_string(a.size()) + ", " +
                                std::to_string(b.size()) + " vs " +
                                std::to_string(schema.size()) + ")");
  }
  if (stats.size() != schema.size()) {
    throw std::invalid_argument("statistics do not match the schema");
  }
}

}  // namespace

double Euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("euclidean: length mismatch");
  }
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double SearchDistance(const Instance& a, const Instance& b,
                      const Schema& schema,
                      std::span<const FeatureStats> stats) {
  CheckShapes(a, b, schema, stats);
  if (schema.data_kind() != DataKind::kTabular) return Euclidean(a, b);

  // Each part is weighted by its share of the features, so a schema without
  // one of the parts gives the other full weight.
  const double m = static_cast<double>(schema.size());
  double distance = 0.0;
  const auto& con = schema.continuous();
  if (!con.empty()) {
    double sum = 0.0;
    for (int f : con) {
      double range = stats[f].max - stats[f].min;
      if (!(range > 0.0)) range = 1.0;
      const double d = (a[f] - b[f]) / range;
      sum += d * d;
    }
    const double m_con = static_cast<double>(con.size());
    distance += (m_con / m) * std::sqrt(sum) / m_con;
  }
  const auto& cat = schema.categorical();
  if (!cat.empty()) {
    // Jaccard over the attribute-value pair sets of the two instances.
    int matches = 0;
    for (int f : cat) matches += (a[f] == b[f]) ? 1 : 0;
    const double m_cat = static_cast<double>(cat.size());
    const double jaccard = 1.0 - matches / (2.0 * m_cat - matches);
    distance += (m_cat / m) * jaccard;
  }
  return distance;
}

double EvalDistance(const Instance& a, const Instance& b, const Schema& schema,
                    std::span<const FeatureStats> stats) {
  CheckShapes(a, b, schema, stats);
  double distance = 0.0;
  const auto& con = schema.continuous();
  if (!con.empty()) {
    double sum = 0.0;
    for (int f : con) sum += std::abs(a[f] - b[f]) / stats[f].mad;
    distance += sum / static_cast<double>(con.size());
  }
  const auto& cat = schema.categorical();
  if (!cat.empty()) {
    int mismatches = 0;
    for (int f : cat) mismatches += (a[f] != b[f]) ? 1 : 0;
    distance += mismatches / static_cast<double>(cat.size());
  }
  return distance;
}

std::vector<int> ChangedFeatures(const Instance& a, const Instance& b) {
  std::vector<int> changed;
  const size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) changed.push_back(static_cast<int>(i));
  }
  return changed;
}

}  // namespace ensemblecf
