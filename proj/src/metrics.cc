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

#include "ensemblecf/metrics.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <limits>
#include <numeric>
#include <thread>

#include "ensemblecf/distance.h"
#include "ensemblecf/errors.h"
#include "ensemblecf/random.h"

namespace ensemblecf {
namespace {

double MismatchShare(const Instance& a, const Instance& b) {
  if (a.empty()) return 0.0;
  size_t differ = 0;
  for (size_t i = 0; i < a.size(); ++i) differ += a[i] != b[i] ? 1 : 0;
  return static_cast<double>(differ) / static_cast<double>(a.size());
}

// Indices of the `k` known instances nearest to x whose label matches
// (`same`) or differs from x_label.
std::vector<size_t> NearestSide(const Instance& x, int x_label, bool same,
                                std::span<const Instance> known,
                                std::span<const int> known_labels,
                                const Dataset& data) {
  std::vector<std::pair<double, size_t>> side;
  for (size_t i = 0; i < known.size(); ++i) {
    if ((known_labels[i] == x_label) != same) continue;
    if (known[i] == x) continue;
    side.emplace_back(EvalDistance(known[i], x, data), i);
  }
  std::sort(side.begin(), side.end());
  std::vector<size_t> out;
  out.reserve(side.size());
  for (const auto& [d, i] : side) out.push_back(i);
  return out;
}

std::string FormatValue(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", *v);
  return buf;
}

std::vector<Instance> Values(std::span<const Counterfactual> cfs) {
  std::vector<Instance> out;
  out.reserve(cfs.size());
  for (const Counterfactual& c : cfs) out.push_back(c.values);
  return out;
}

}  // namespace

std::array<std::optional<double>, kMetricCount> MetricsReport::Values() const {
  return {size,     act,       impl, dis_dist,        dis_count,
          div_dist, div_count, dipo, inst,            runtime_seconds,
          bbox_calls};
}

MetricsReport MetricsReport::FromValues(
    const std::array<std::optional<double>, kMetricCount>& values) {
  MetricsReport r;
  r.size = values[0].value_or(0.0);
  r.act = values[1].value_or(0.0);
  r.impl = values[2];
  r.dis_dist = values[3];
  r.dis_count = values[4];
  r.div_dist = values[5];
  r.div_count = values[6];
  r.dipo = values[7];
  r.inst = values[8];
  r.runtime_seconds = values[9].value_or(0.0);
  r.bbox_calls = values[10].value_or(0.0);
  return r;
}

double MetricSize(size_t count, int k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  return static_cast<double>(count) / k;
}

double MetricAct(std::span<const Instance> cfs, const Instance& x,
                 std::span<const int> actionable, int k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  size_t ok = 0;
  for (const Instance& c : cfs) ok += IsActionable(c, x, actionable) ? 1 : 0;
  return static_cast<double>(ok) / k;
}

std::optional<double> MetricImpl(std::span<const Instance> cfs,
                                 std::span<const Instance> known,
                                 const Dataset& data) {
  if (cfs.empty() || known.empty()) return std::nullopt;
  double total = 0.0;
  for (const Instance& c : cfs) {
    double best = std::numeric_limits<double>::infinity();
    for (const Instance& r : known) {
      best = std::min(best, EvalDistance(c, r, data));
    }
    total += best;
  }
  return total / static_cast<double>(cfs.size());
}

std::optional<PairMetric> MetricDis(std::span<const Instance> cfs,
                                    const Instance& x, const Dataset& data) {
  if (cfs.empty()) return std::nullopt;
  PairMetric out;
  for (const Instance& c : cfs) {
    out.dist += EvalDistance(x, c, data);
    out.count += MismatchShare(c, x);
  }
  out.dist /= static_cast<double>(cfs.size());
  out.count /= static_cast<double>(cfs.size());
  return out;
}

std::optional<PairMetric> MetricDiv(std::span<const Instance> cfs,
                                    const Dataset& data) {
  if (cfs.empty()) return std::nullopt;
  PairMetric out;
  for (size_t i = 0; i < cfs.size(); ++i) {
    for (size_t j = i + 1; j < cfs.size(); ++j) {
      out.dist += 2.0 * EvalDistance(cfs[i], cfs[j], data);
      out.count += 2.0 * MismatchShare(cfs[i], cfs[j]);
    }
  }
  const double pairs = static_cast<double>(cfs.size() * cfs.size());
  out.dist /= pairs;
  out.count /= pairs;
  return out;
}

std::optional<double> MetricDipo(std::span<const Instance> cfs,
                                 std::span<const int> cf_labels,
                                 const Instance& x, int x_label,
                                 std::span<const Instance> known,
                                 std::span<const int> known_labels, int k,
                                 const Dataset& data) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (cf_labels.size() != cfs.size() || known_labels.size() != known.size()) {
    throw ConfigError("labels do not match instances");
  }
  std::vector<size_t> same =
      NearestSide(x, x_label, true, known, known_labels, data);
  std::vector<size_t> other =
      NearestSide(x, x_label, false, known, known_labels, data);
  if (same.size() < static_cast<size_t>(k) ||
      other.size() < static_cast<size_t>(k)) {
    return std::nullopt;
  }
  same.resize(k);
  other.resize(k);

  std::vector<const Instance*> train;
  std::vector<int> train_labels;
  for (size_t i = 0; i < cfs.size(); ++i) {
    train.push_back(&cfs[i]);
    train_labels.push_back(cf_labels[i]);
  }
  train.push_back(&x);
  train_labels.push_back(x_label);

  size_t correct = 0;
  for (const std::vector<size_t>* side : {&same, &other}) {
    for (size_t idx : *side) {
      double best = std::numeric_limits<double>::infinity();
      int predicted = 0;
      for (size_t t = 0; t < train.size(); ++t) {
        const double d = EvalDistance(known[idx], *train[t], data);
        if (d < best) {
          best = d;
          predicted = train_labels[t];
        }
      }
      correct += predicted == known_labels[idx] ? 1 : 0;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(2 * k);
}

std::optional<double> MetricDipo(std::span<const Instance> cfs,
                                 const Instance& x,
                                 std::span<const Instance> known,
                                 const BlackBox& model, int k,
                                 const Dataset& data) {
  const std::vector<int> cf_labels =
      cfs.empty() ? std::vector<int>{} : model.Predict(cfs);
  const std::vector<int> known_labels =
      known.empty() ? std::vector<int>{} : model.Predict(known);
  return MetricDipo(cfs, cf_labels, x, model.Predict(x), known, known_labels,
                    k, data);
}

std::optional<double> MetricInst(const Instance& x,
                                 std::span<const Instance> cfs,
                                 const Instance& neighbor,
                                 std::span<const Instance> neighbor_cfs,
                                 const Dataset& data) {
  if (cfs.empty() || neighbor_cfs.empty()) return std::nullopt;
  double total = 0.0;
  for (const Instance& c : cfs) {
    for (const Instance& c2 : neighbor_cfs) total += EvalDistance(c, c2, data);
  }
  total /= static_cast<double>(cfs.size() * neighbor_cfs.size());
  return total / (1.0 + EvalDistance(x, neighbor, data));
}

std::optional<size_t> NearestSameLabel(const Instance& x, int x_label,
                                       std::span<const Instance> known,
                                       std::span<const int> known_labels,
                                       const Dataset& data) {
  std::optional<size_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < known.size(); ++i) {
    if (known_labels[i] != x_label || known[i] == x) continue;
    const double d = EvalDistance(x, known[i], data);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

EvaluationSummary EvaluateRun(const CounterfactualExplainer& explainer,
                              std::span<const Instance> instances,
                              const BlackBox& model, const Dataset& data,
                              const EvaluationOptions& options) {
  if (options.k < 1) throw ConfigError("k must be >= 1");
  if (options.workers < 1) throw ConfigError("workers must be >= 1");
  EvaluationSummary summary;
  summary.rows.resize(instances.size());
  if (instances.empty()) return summary;

  const std::vector<Instance>& known = data.instances();
  const std::vector<int> known_labels = model.Predict(known);

  auto evaluate = [&](size_t i) {
    InstanceEvaluation& row = summary.rows[i];
    row.index = i;
    const Instance& x = instances[i];
    const uint64_t seed = DeriveSeed(options.seed, i);
    try {
      const CountingBlackBox counted(model);
      const auto start = std::chrono::steady_clock::now();
      const ExplainRequest request{
          .x = x,
          .model = counted,
          .data = data,
          .known = known,
          .actionable = options.actionable,
          .k = options.k,
          .seed = seed,
          .call_budget = options.call_budget,
      };
      row.counterfactuals = explainer.Explain(request);
      MetricsReport r;
      r.runtime_seconds = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start)
                              .count();
      r.bbox_calls = static_cast<double>(counted.instance_calls());

      const std::vector<Instance> cfs = Values(row.counterfactuals);
      const int x_label = model.Predict(x);
      r.size = MetricSize(cfs.size(), options.k);
      r.act = MetricAct(cfs, x, options.actionable, options.k);
      r.impl = MetricImpl(cfs, known, data);
      if (auto dis = MetricDis(cfs, x, data)) {
        r.dis_dist = dis->dist;
        r.dis_count = dis->count;
      }
      if (auto div = MetricDiv(cfs, data)) {
        r.div_dist = div->dist;
        r.div_count = div->count;
      }
      const std::vector<int> cf_labels =
          cfs.empty() ? std::vector<int>{} : model.Predict(cfs);
      r.dipo = MetricDipo(cfs, cf_labels, x, x_label, known, known_labels,
                          options.k, data);
      if (!cfs.empty()) {
        if (auto j = NearestSameLabel(x, x_label, known, known_labels, data)) {
          const ExplainRequest neighbor_request{
              .x = known[*j],
              .model = model,
              .data = data,
              .known = known,
              .actionable = options.actionable,
              .k = options.k,
              .seed = seed,
              .call_budget = options.call_budget,
          };
          const std::vector<Instance> neighbor_cfs =
              Values(explainer.Explain(neighbor_request));
          r.inst = MetricInst(x, cfs, known[*j], neighbor_cfs, data);
        }
      }
      row.report = r;
    } catch (const std::exception& e) {
      row.report.reset();
      row.error = e.what();
    }
  };

  const size_t workers =
      std::min<size_t>(static_cast<size_t>(options.workers), instances.size());
  if (workers <= 1) {
    for (size_t i = 0; i < instances.size(); ++i) evaluate(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t i = next++; i < instances.size(); i = next++) evaluate(i);
      });
    }
    for (std::thread& t : pool) t.join();
  }

  std::array<double, kMetricCount> sums{};
  for (const InstanceEvaluation& row : summary.rows) {
    if (!row.report) {
      ++summary.failures;
      continue;
    }
    const auto values = row.report->Values();
    for (size_t m = 0; m < kMetricCount; ++m) {
      if (!values[m]) continue;
      sums[m] += *values[m];
      ++summary.counts[m];
    }
  }
  std::array<std::optional<double>, kMetricCount> means;
  for (size_t m = 0; m < kMetricCount; ++m) {
    if (summary.counts[m] > 0) {
      means[m] = sums[m] / static_cast<double>(summary.counts[m]);
    }
  }
  summary.mean = MetricsReport::FromValues(means);
  return summary;
}

void WriteMetricsCsv(const EvaluationSummary& summary, std::ostream& out) {
  out << "index";
  for (std::string_view name : kMetricNames) out << ',' << name;
  out << '\n';
  for (const InstanceEvaluation& row : summary.rows) {
    out << row.index;
    if (row.report) {
      for (const auto& v : row.report->Values()) out << ',' << FormatValue(v);
    } else {
      for (size_t m = 0; m < kMetricCount; ++m) out << ',';
    }
    out << '\n';
  }
  out << "mean";
  const auto means = summary.mean.Values();
  for (size_t m = 0; m < kMetricCount; ++m) {
    out << ','
        << (summary.counts[m] > 0 ? FormatValue(means[m]) : std::string());
  }
  out << '\n';
}

nlohmann::json MetricsToJson(const EvaluationSummary& summary) {
  auto to_json = [](const std::array<std::optional<double>, kMetricCount>& v) {
    nlohmann::json obj = nlohmann::json::object();
    for (size_t m = 0; m < kMetricCount; ++m) {
      obj[std::string(kMetricNames[m])] =
          v[m] ? nlohmann::json(*v[m]) : nlohmann::json(nullptr);
    }
    return obj;
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const InstanceEvaluation& row : summary.rows) {
    nlohmann::json entry = {{"index", row.index}};
    if (row.report) {
      entry["metrics"] = to_json(row.report->Values());
    } else {
      entry["error"] = row.error;
    }
    rows.push_back(std::move(entry));
  }
  std::array<std::optional<double>, kMetricCount> means = summary.mean.Values();
  nlohmann::json counts = nlohmann::json::object();
  for (size_t m = 0; m < kMetricCount; ++m) {
    if (summary.counts[m] == 0) means[m].reset();
    counts[std::string(kMetricNames[m])] = summary.counts[m];
  }
  return {{"instances", rows},
          {"mean", to_json(means)},
          {"counts", counts},
          {"failures", summary.failures}};
}

}  // namespace ensemblecf
