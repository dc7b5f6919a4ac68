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

#include "ensemblecf/ensemble.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "ensemblecf/errors.h"
#include "ensemblecf/random.h"

namespace ensemblecf {
namespace {

double SecondsSince(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

size_t SampleSize(size_t n, double fraction) {
  const double wanted = std::ceil(fraction * static_cast<double>(n));
  return std::clamp<size_t>(static_cast<size_t>(wanted), 1, n);
}

void CheckFraction(double fraction, const char* name) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError(std::string(name) + " must be in (0, 1]");
  }
}

ExplainerKind DrawKind(const std::array<double, 3>& weights, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> draw(weights.begin(), weights.end());
  return static_cast<ExplainerKind>(draw(rng));
}

}  // namespace

void EnsembleConfig::Validate() const {
  if (kinds.empty() && pool_size < 1) throw ConfigError("pool_size must be >= 1");
  double total = 0.0;
  for (double w : kind_weights) {
    if (w < 0.0) throw ConfigError("kind weights must be >= 0");
    total += w;
  }
  if (kinds.empty() && !(total > 0.0)) {
    throw ConfigError("at least one kind weight must be positive");
  }
  CheckFraction(instance_fraction, "instance_fraction");
  CheckFraction(feature_fraction, "feature_fraction");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (member_call_budget < 1) {
    throw ConfigError("member_call_budget must be >= 1");
  }
  if (selection.lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (selection.neighborhood < 1) {
    throw ConfigError("neighborhood must be >= 1");
  }
  // The explainer constructors check their own configurations.
  BruteForceExplainer{brute};
  TreeExplainer{tree};
  SphereExplainer{sphere};
}

nlohmann::json EnsembleConfig::ToJson() const {
  nlohmann::json kind_names = nlohmann::json::array();
  for (ExplainerKind k : kinds) kind_names.push_back(ExplainerKindName(k));
  return {
      {"pool_size", pool_size},
      {"kind_weights", kind_weights},
      {"kinds", kind_names},
      {"instance_fraction", instance_fraction},
      {"feature_fraction", feature_fraction},
      {"workers", workers},
      {"member_call_budget", member_call_budget},
      {"selection",
       {{"lambda", selection.lambda},
        {"neighborhood", selection.neighborhood},
        {"normalize_costs", selection.normalize_costs},
        {"cost_scale", selection.cost_scale}}},
      {"brute", {{"bins", brute.bins}, {"max_changed", brute.max_changed}}},
      {"tree", {{"max_depth", tree.max_depth}, {"min_leaf", tree.min_leaf}}},
      {"sphere",
       {{"points_per_ring", sphere.points_per_ring},
        {"initial_radius_factor", sphere.initial_radius_factor},
        {"shrink_factor", sphere.shrink_factor},
        {"max_iterations", sphere.max_iterations},
        {"ring_refine_steps", sphere.ring_refine_steps},
        {"final_ring_samples", sphere.final_ring_samples}}},
  };
}

EnsembleConfig EnsembleConfig::FromJson(const nlohmann::json& json) {
  EnsembleConfig c;
  try {
    c.pool_size = json.value("pool_size", c.pool_size);
    c.kind_weights = json.value("kind_weights", c.kind_weights);
    for (const auto& k : json.value("kinds", nlohmann::json::array())) {
      c.kinds.push_back(ParseExplainerKind(k.get<std::string>()));
    }
    c.instance_fraction = json.value("instance_fraction", c.instance_fraction);
    c.feature_fraction = json.value("feature_fraction", c.feature_fraction);
    c.workers = json.value("workers", c.workers);
    c.member_call_budget =
        json.value("member_call_budget", c.member_call_budget);
    if (json.contains("selection")) {
      const auto& s = json.at("selection");
      c.selection.lambda = s.value("lambda", c.selection.lambda);
      c.selection.neighborhood =
          s.value("neighborhood", c.selection.neighborhood);
      c.selection.normalize_costs =
          s.value("normalize_costs", c.selection.normalize_costs);
      c.selection.cost_scale = s.value("cost_scale", c.selection.cost_scale);
    }
    if (json.contains("brute")) {
      const auto& b = json.at("brute");
      c.brute.bins = b.value("bins", c.brute.bins);
      c.brute.max_changed = b.value("max_changed", c.brute.max_changed);
    }
    if (json.contains("tree")) {
      const auto& t = json.at("tree");
      c.tree.max_depth = t.value("max_depth", c.tree.max_depth);
      c.tree.min_leaf = t.value("min_leaf", c.tree.min_leaf);
    }
    if (json.contains("sphere")) {
      const auto& s = json.at("sphere");
      c.sphere.points_per_ring =
          s.value("points_per_ring", c.sphere.points_per_ring);
      c.sphere.initial_radius_factor =
          s.value("initial_radius_factor", c.sphere.initial_radius_factor);
      c.sphere.shrink_factor = s.value("shrink_factor", c.sphere.shrink_factor);
      c.sphere.max_iterations =
          s.value("max_iterations", c.sphere.max_iterations);
      c.sphere.ring_refine_steps =
          s.value("ring_refine_steps", c.sphere.ring_refine_steps);
      c.sphere.final_ring_samples =
          s.value("final_ring_samples", c.sphere.final_ring_samples);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("ensemble config: ") + e.what());
  }
  c.Validate();
  return c;
}

std::vector<size_t> SampleInstances(size_t n, double fraction, uint64_t seed) {
  if (n == 0) throw DataError("no instances to sample");
  CheckFraction(fraction, "instance_fraction");
  const size_t size = SampleSize(n, fraction);
  std::vector<size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  if (size < n) {
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i < size; ++i) {
      std::uniform_int_distribution<size_t> pick(i, n - 1);
      std::swap(indices[i], indices[pick(rng)]);
    }
    indices.resize(size);
    std::sort(indices.begin(), indices.end());
  }
  return indices;
}

std::vector<int> SampleFeatures(std::span<const int> actionable,
                                double fraction, uint64_t seed) {
  if (actionable.empty()) throw DataError("no actionable features");
  CheckFraction(fraction, "feature_fraction");
  std::vector<int> features(actionable.begin(), actionable.end());
  const size_t size = SampleSize(features.size(), fraction);
  if (size < features.size()) {
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i < size; ++i) {
      std::uniform_int_distribution<size_t> pick(i, features.size() - 1);
      std::swap(features[i], features[pick(rng)]);
    }
    features.resize(size);
  }
  std::sort(features.begin(), features.end());
  return features;
}

EnsembleExplainer::EnsembleExplainer(EnsembleConfig config)
    : config_(std::move(config)) {
  config_.Validate();
}

std::vector<ExplainerKind> EnsembleExplainer::DrawKinds(uint64_t seed) const {
  if (!config_.kinds.empty()) return config_.kinds;
  std::vector<ExplainerKind> kinds;
  for (int i = 0; i < config_.pool_size; ++i) {
    kinds.push_back(
        DrawKind(config_.kind_weights, DeriveSeed(DeriveSeed(seed, i), 1)));
  }
  return kinds;
}

ExplanationResult EnsembleExplainer::ExplainDetailed(
    const ExplainRequest& request) const {
  const auto start = std::chrono::steady_clock::now();
  const CountingBlackBox model(request.model);
  const Instance& x = request.x;
  request.data.schema().Validate(x);
  if (request.k < 1) throw ConfigError("k must be >= 1");

  ExplanationResult result;
  result.x_label = model.Predict(x);

  std::vector<int> actionable = request.actionable;
  std::sort(actionable.begin(), actionable.end());
  const std::vector<ExplainerKind> kinds = DrawKinds(request.seed);
  const size_t members = kinds.size();
  result.members.resize(members);
  std::vector<std::vector<Counterfactual>> outputs(members);

  auto run_member = [&](size_t i) {
    MemberReport& report = result.members[i];
    const uint64_t member_seed = DeriveSeed(request.seed, i);
    report.kind = kinds[i];
    report.seed = DeriveSeed(member_seed, 4);
    const auto member_start = std::chrono::steady_clock::now();
    const CountingBlackBox member_model(static_cast<const BlackBox&>(model));
    try {
      std::vector<Instance> known;
      if (!request.known.empty()) {
        for (size_t r : SampleInstances(request.known.size(),
                                        config_.instance_fraction,
                                        DeriveSeed(member_seed, 2))) {
          known.push_back(request.known[r]);
        }
      }
      report.instances = known.size();
      report.features = SampleFeatures(actionable, config_.feature_fraction,
                                       DeriveSeed(member_seed, 3));
      const auto explainer = MakeExplainer(kinds[i], config_.brute,
                                           config_.tree, config_.sphere);
      const ExplainRequest member_request{
          .x = x,
          .model = member_model,
          .data = request.data,
          .known = known,
          .actionable = report.features,
          .k = request.k,
          .seed = report.seed,
          .call_budget = config_.member_call_budget,
      };
      outputs[i] = explainer->Explain(member_request);
    } catch (const std::exception& e) {
      outputs[i].clear();
      report.error = e.what();
    }
    report.candidates = outputs[i].size();
    report.bbox_calls = member_model.instance_calls();
    report.seconds = SecondsSince(member_start);
  };

  const size_t workers =
      std::min<size_t>(static_cast<size_t>(config_.workers), members);
  if (workers <= 1) {
    for (size_t i = 0; i < members; ++i) run_member(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    for (size_t t = 0; t < workers; ++t) {
      threads.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < members; i = next.fetch_add(1)) {
          run_member(i);
        }
      });
    }
    for (auto& t : threads) t.join();
  }

  for (auto& out : outputs) {
    for (auto& c : out) result.pool.push_back(std::move(c));
  }

  // Members are not trusted: validity and actionability are checked again.
  std::vector<Instance> values;
  values.reserve(result.pool.size());
  for (const Counterfactual& c : result.pool) values.push_back(c.values);
  const std::vector<int> labels = model.Predict(values);
  for (size_t i = 0; i < result.pool.size(); ++i) {
    const Counterfactual& c = result.pool[i];
    if (labels[i] == result.x_label) continue;
    if (!request.data.schema().Conforms(c.values)) continue;
    if (!IsActionable(c.values, x, actionable)) continue;
    const bool duplicate =
        std::any_of(result.admissible.begin(), result.admissible.end(),
                    [&](const Counterfactual& o) { return o.values == c.values; });
    if (duplicate) continue;
    result.admissible.push_back(c);
  }
  result.selected = SelectCounterfactuals(result.admissible, x, request.k,
                                          config_.selection, request.data);
  result.bbox_calls = model.instance_calls();
  result.seconds = SecondsSince(start);
  return result;
}

std::vector<Counterfactual> EnsembleExplainer::Explain(
    const ExplainRequest& request) const {
  return ExplainDetailed(request).selected;
}

}  // namespace ensemblecf
