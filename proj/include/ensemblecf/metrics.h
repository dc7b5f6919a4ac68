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

// Evaluation measures for a counterfactual set C of an instance x.
//
// Distances are the MAD-scaled evaluation distance of the reference dataset.
// Measures that are undefined for an empty C are absent rather than zero.

#ifndef ENSEMBLECF_METRICS_H_
#define ENSEMBLECF_METRICS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ensemblecf/blackbox.h"
#include "ensemblecf/explainers.h"
#include "ensemblecf/schema.h"
#include "json.hpp"

namespace ensemblecf {

inline constexpr size_t kMetricCount = 11;
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "size",      "act",       "impl", "dis_dist",        "dis_count",
    "div_dist",  "div_count", "dipo", "inst",            "runtime_seconds",
    "bbox_calls"};

struct MetricsReport {
  double size = 0.0;
  double act = 0.0;
  std::optional<double> impl;
  std::optional<double> dis_dist;
  std::optional<double> dis_count;
  std::optional<double> div_dist;
  std::optional<double> div_count;
  std::optional<double> dipo;
  std::optional<double> inst;
  double runtime_seconds = 0.0;
  double bbox_calls = 0.0;

  // In kMetricNames order.
  std::array<std::optional<double>, kMetricCount> Values() const;
  static MetricsReport FromValues(
      const std::array<std::optional<double>, kMetricCount>& values);
};

struct PairMetric {
  double dist = 0.0;
  double count = 0.0;
};

// |C| / k. Throws ConfigError when k < 1.
double MetricSize(size_t count, int k);

// Share of C (over k) that only changes actionable features.
double MetricAct(std::span<const Instance> cfs, const Instance& x,
                 std::span<const int> actionable, int k);

// Mean distance from each c to its nearest known instance.
std::optional<double> MetricImpl(std::span<const Instance> cfs,
                                 std::span<const Instance> known,
                                 const Dataset& data);

// Mean distance to x and share of changed feature values.
std::optional<PairMetric> MetricDis(std::span<const Instance> cfs,
                                    const Instance& x, const Dataset& data);

// Mean pairwise distance and mismatch share over all |C|^2 ordered pairs.
std::optional<PairMetric> MetricDiv(std::span<const Instance> cfs,
                                    const Dataset& data);

// Accuracy of a 1-nearest-neighbor classifier trained on C then x (ties go to
// the earlier training point) over the k nearest known instances with the
// same decision as x and the k nearest with a different one. Known instances
// equal to x are skipped. Absent when either side has fewer than k members.
std::optional<double> MetricDipo(std::span<const Instance> cfs,
                                 std::span<const int> cf_labels,
                                 const Instance& x, int x_label,
                                 std::span<const Instance> known,
                                 std::span<const int> known_labels, int k,
                                 const Dataset& data);
// Same, labeling everything with `model`.
std::optional<double> MetricDipo(std::span<const Instance> cfs,
                                 const Instance& x,
                                 std::span<const Instance> known,
                                 const BlackBox& model, int k,
                                 const Dataset& data);

// Mean distance between C and C' of a neighbor x', divided by
// 1 + d(x, x').
std::optional<double> MetricInst(const Instance& x,
                                 std::span<const Instance> cfs,
                                 const Instance& neighbor,
                                 std::span<const Instance> neighbor_cfs,
                                 const Dataset& data);

// Index of the known instance nearest to x (ties to the lower index) with
// the same label, skipping instances equal to x. Empty when there is none.
std::optional<size_t> NearestSameLabel(const Instance& x, int x_label,
                                       std::span<const Instance> known,
                                       std::span<const int> known_labels,
                                       const Dataset& data);

struct EvaluationOptions {
  int k = 4;
  uint64_t seed = 0;
  std::vector<int> actionable;
  // Instances are evaluated on up to this many threads.
  int workers = 1;
  uint64_t call_budget = 20000;
};

struct InstanceEvaluation {
  size_t index = 0;
  // Empty when the explainer failed on this instance.
  std::optional<MetricsReport> report;
  std::string error;
  std::vector<Counterfactual> counterfactuals;
};

struct EvaluationSummary {
  std::vector<InstanceEvaluation> rows;
  // Column means over the rows where the value is present.
  MetricsReport mean;
  std::array<size_t, kMetricCount> counts{};
  size_t failures = 0;
};

// Explains each of `instances` (and, for instability, its nearest same-label
// neighbor in `data`) and scores the result against the rows of `data`.
// Per-instance failures are recorded and excluded from the means.
EvaluationSummary EvaluateRun(const CounterfactualExplainer& explainer,
                              std::span<const Instance> instances,
                              const BlackBox& model, const Dataset& data,
                              const EvaluationOptions& options);

// One row per instance plus a final "mean" row; absent values are empty.
void WriteMetricsCsv(const EvaluationSummary& summary, std::ostream& out);
nlohmann::json MetricsToJson(const EvaluationSummary& summary);

}  // namespace ensemblecf

#endif  // ENSEMBLECF_METRICS_H_
