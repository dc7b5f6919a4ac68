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

#include "ensemblecf/explainers.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "ensemblecf/distance.h"
#include "ensemblecf/errors.h"
#include "ensemblecf/random.h"
#include "ensemblecf/surrogate_tree.h"

namespace ensemblecf {
namespace {

constexpr int kMaxValueBisectionSteps = 20;
constexpr double kValueTolerance = 1e-4;
// Upper bound on the brute-force variation list held in memory.
constexpr size_t kMaxVariations = 2000000;
constexpr size_t kBruteChunk = 512;

bool Contains(std::span<const int> sorted, int value) {
  return std::binary_search(sorted.begin(), sorted.end(), value);
}

double FeatureRange(const Dataset& data, int f) {
  const FeatureStats& s = data.stats()[f];
  const double range = s.max - s.min;
  return range > 0.0 ? range : 1.0;
}

// Appends `candidate` unless an equal instance is already present.
bool AppendUnique(std::vector<Instance>& found, Instance candidate) {
  if (std::find(found.begin(), found.end(), candidate) != found.end()) {
    return false;
  }
  found.push_back(std::move(candidate));
  return true;
}

std::vector<Counterfactual> ToCounterfactuals(std::vector<Instance> found,
                                              const Instance& x,
                                              ExplainerKind source,
                                              const Dataset& data) {
  std::vector<Counterfactual> out;
  out.reserve(found.size());
  for (Instance& c : found) {
    out.push_back(MakeCounterfactual(std::move(c), x, source, data));
  }
  return out;
}

}  // namespace

std::string_view ExplainerKindName(ExplainerKind kind) {
  switch (kind) {
    case ExplainerKind::kBrute:
      return "brute";
    case ExplainerKind::kTree:
      return "tree";
    case ExplainerKind::kSphere:
      return "sphere";
  }
  return "brute";
}

ExplainerKind ParseExplainerKind(std::string_view name) {
  if (name == "brute") return ExplainerKind::kBrute;
  if (name == "tree") return ExplainerKind::kTree;
  if (name == "sphere") return ExplainerKind::kSphere;
  throw ConfigError("unknown explainer \"" + std::string(name) + "\"");
}

Counterfactual MakeCounterfactual(Instance values, const Instance& x,
                                  ExplainerKind source, const Dataset& data) {
  Counterfactual cf;
  cf.eval_distance = EvalDistance(values, x, data);
  cf.search_distance = SearchDistance(values, x, data);
  cf.changed_features = ChangedFeatures(values, x);
  cf.values = std::move(values);
  cf.source = source;
  return cf;
}

bool IsActionable(const Instance& c, const Instance& x,
                  std::span<const int> actionable) {
  if (c.size() != x.size()) return false;
  std::vector<int> allowed(actionable.begin(), actionable.end());
  std::sort(allowed.begin(), allowed.end());
  for (size_t i = 0; i < c.size(); ++i) {
    if (c[i] != x[i] && !Contains(allowed, static_cast<int>(i))) return false;
  }
  return true;
}

std::vector<int> CallBudget::Predict(std::span<const Instance> batch) {
  if (batch.size() > budget_ - used_) throw BudgetExhausted();
  used_ += batch.size();
  return model_.Predict(batch);
}

int CallBudget::Predict(const Instance& x) {
  return Predict(std::span<const Instance>(&x, 1)).front();
}

// ---------------------------------------------------------------------------
// Brute force.

FeatureBins BinFeatures(std::span<const Instance> known,
                        std::span<const int> known_labels, int x_label,
                        const Schema& schema, std::span<const int> actionable,
                        int bins) {
  if (bins < 2) throw ConfigError("brute force needs at least 2 bins");
  FeatureBins result;
  result.values.resize(schema.size());
  std::vector<const Instance*> subset;
  for (size_t i = 0; i < known.size(); ++i) {
    if (known_labels[i] != x_label) subset.push_back(&known[i]);
  }
  if (subset.empty()) {
    result.fell_back = true;
    for (const Instance& row : known) subset.push_back(&row);
  }
  if (subset.empty()) return result;

  for (int f : actionable) {
    std::vector<double>& values = result.values[f];
    if (schema.feature(f).categorical()) {
      std::set<double> seen;
      for (const Instance* row : subset) seen.insert((*row)[f]);
      values.assign(seen.begin(), seen.end());
      continue;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Instance* row : subset) {
      lo = std::min(lo, (*row)[f]);
      hi = std::max(hi, (*row)[f]);
    }
    if (lo == hi) {
      values.push_back(lo);
      continue;
    }
    const double width = (hi - lo) / bins;
    for (int b = 0; b < bins; ++b) values.push_back(lo + (b + 0.5) * width);
  }
  return result;
}

std::optional<Instance> Refine(const Instance& c, const Instance& x,
                               int x_label, const Dataset& data,
                               CallBudget& budget) {
  if (budget.Predict(c) == x_label) return std::nullopt;
  Instance current = c;
  try {
    // Delta-debugging over the changed features: revert whole chunks while
    // the decision stays flipped.
    std::vector<int> changed = ChangedFeatures(current, x);
    size_t granularity = 2;
    while (changed.size() >= 2) {
      bool reduced = false;
      const size_t n = changed.size();
      for (size_t chunk = 0; chunk < granularity && !reduced; ++chunk) {
        const size_t begin = chunk * n / granularity;
        const size_t end = (chunk + 1) * n / granularity;
        if (begin == end) continue;
        Instance candidate = current;
        for (size_t i = begin; i < end; ++i) {
          candidate[changed[i]] = x[changed[i]];
        }
        if (budget.Predict(candidate) != x_label) {
          current = std::move(candidate);
          changed.erase(changed.begin() + begin, changed.begin() + end);
          granularity = std::max<size_t>(granularity - 1, 2);
          reduced = true;
        }
      }
      if (!reduced) {
        if (granularity >= changed.size()) break;
        granularity = std::min(granularity * 2, changed.size());
      }
    }

    // Binary search of each surviving continuous value towards x.
    for (int f : changed) {
      if (data.schema().feature(f).categorical()) continue;
      const double tolerance = kValueTolerance * FeatureRange(data, f);
      double lo = x[f];
      double hi = current[f];
      for (int step = 0; step < kMaxValueBisectionSteps; ++step) {
        if (std::abs(hi - lo) < tolerance) break;
        const double mid = lo + (hi - lo) / 2.0;
        if (mid == lo || mid == hi) break;
        Instance candidate = current;
        candidate[f] = mid;
        if (budget.Predict(candidate) != x_label) {
          hi = mid;
          current = std::move(candidate);
        } else {
          lo = mid;
        }
      }
    }
  } catch (const BudgetExhausted&) {
    // `current` is valid at every step.
  }
  return current;
}

BruteForceExplainer::BruteForceExplainer(BruteConfig config)
    : config_(config) {
  if (config_.bins < 2) throw ConfigError("brute force needs bins >= 2");
  if (config_.max_changed < 1) {
    throw ConfigError("brute force needs max_changed >= 1");
  }
}

std::vector<Counterfactual> BruteForceExplainer::Explain(
    const ExplainRequest& request) const {
  const Instance& x = request.x;
  const Dataset& data = request.data;
  CallBudget budget(request.model, request.call_budget);
  std::vector<Instance> found;
  try {
    const int x_label = budget.Predict(x);
    if (request.known.empty() || request.actionable.empty()) return {};
    const std::vector<int> known_labels = budget.Predict(request.known);
    FeatureBins bins =
        BinFeatures(request.known, known_labels, x_label, data.schema(),
                    request.actionable, config_.bins);

    // Representatives per feature, nearest to x first, without x's own value.
    std::vector<int> features;
    for (int f : request.actionable) {
      auto& values = bins.values[f];
      values.erase(std::remove(values.begin(), values.end(), x[f]),
                   values.end());
      std::stable_sort(values.begin(), values.end(), [&](double a, double b) {
        return std::abs(a - x[f]) < std::abs(b - x[f]);
      });
      if (!values.empty()) features.push_back(f);
    }
    const int max_changed =
        std::min<int>(config_.max_changed, static_cast<int>(features.size()));

    struct Variation {
      Instance values;
      std::vector<int> changed;
      double distance;
    };
    std::vector<Variation> variations;

    // Subsets in lexicographic order, then the product of their values.
    std::vector<int> pick;
    std::function<void(size_t)> enumerate_subsets = [&](size_t start) {
      if (!pick.empty()) {
        std::vector<size_t> digit(pick.size(), 0);
        for (;;) {
          Instance v = x;
          std::vector<int> changed;
          for (size_t i = 0; i < pick.size(); ++i) {
            v[features[pick[i]]] = bins.values[features[pick[i]]][digit[i]];
            changed.push_back(features[pick[i]]);
          }
          if (variations.size() >= kMaxVariations) {
            throw ConfigError("brute force enumeration is too large");
          }
          const double d = SearchDistance(v, x, data);
          variations.push_back({std::move(v), std::move(changed), d});
          // Odometer step, last feature fastest.
          size_t i = pick.size();
          while (i > 0 &&
                 ++digit[i - 1] == bins.values[features[pick[i - 1]]].size()) {
            digit[i - 1] = 0;
            --i;
          }
          if (i == 0) break;
        }
      }
      if (static_cast<int>(pick.size()) == max_changed) return;
      for (size_t f = start; f < features.size(); ++f) {
        pick.push_back(static_cast<int>(f));
        enumerate_subsets(f + 1);
        pick.pop_back();
      }
    };
    enumerate_subsets(0);

    std::stable_sort(variations.begin(), variations.end(),
                     [](const Variation& a, const Variation& b) {
                       if (a.distance != b.distance) {
                         return a.distance < b.distance;
                       }
                       return a.changed < b.changed;
                     });

    for (size_t begin = 0;
         begin < variations.size() &&
         static_cast<int>(found.size()) < request.k;
         begin += kBruteChunk) {
      const size_t end = std::min(variations.size(), begin + kBruteChunk);
      std::vector<Instance> chunk;
      for (size_t i = begin; i < end; ++i) chunk.push_back(variations[i].values);
      const std::vector<int> labels = budget.Predict(chunk);
      for (size_t i = 0; i < chunk.size(); ++i) {
        if (labels[i] == x_label) continue;
        std::optional<Instance> refined =
            Refine(chunk[i], x, x_label, data, budget);
        if (refined) AppendUnique(found, std::move(*refined));
        if (static_cast<int>(found.size()) >= request.k) break;
      }
    }
  } catch (const BudgetExhausted&) {
  }
  std::vector<Counterfactual> out =
      ToCounterfactuals(std::move(found), x, ExplainerKind::kBrute, data);
  std::stable_sort(out.begin(), out.end(),
                   [](const Counterfactual& a, const Counterfactual& b) {
                     return a.search_distance < b.search_distance;
                   });
  return out;
}

// ---------------------------------------------------------------------------
// Shadow tree.

TreeExplainer::TreeExplainer(TreeExplainerConfig config) : config_(config) {
  if (config_.min_leaf < 1) throw ConfigError("tree needs min_leaf >= 1");
}

std::vector<Counterfactual> TreeExplainer::Explain(
    const ExplainRequest& request) const {
  const Instance& x = request.x;
  const Dataset& data = request.data;
  CallBudget budget(request.model, request.call_budget);
  std::vector<Instance> found;
  try {
    const int x_label = budget.Predict(x);
    if (request.known.size() < static_cast<size_t>(config_.min_leaf) ||
        request.actionable.empty()) {
      return {};
    }
    const std::vector<int> labels = budget.Predict(request.known);
    TreeOptions options;
    options.max_depth = config_.max_depth;
    options.min_leaf = config_.min_leaf;
    options.seed = request.seed;
    const DecisionTree tree =
        DecisionTree::Fit(data.schema(), request.known, labels, options);

    std::vector<int> actionable = request.actionable;
    std::sort(actionable.begin(), actionable.end());
    std::vector<TreePath> paths =
        tree.EnumeratePaths([&](int label) { return label != x_label; });
    std::erase_if(paths, [&](const TreePath& path) {
      for (const SplitCondition& c : path.conditions) {
        if (!Contains(actionable, c.feature) && !c.SatisfiedBy(x)) return true;
      }
      return false;
    });
    std::vector<int> unsatisfied;
    for (const TreePath& p : paths) {
      unsatisfied.push_back(ConditionsUnsatisfied(p, x));
    }
    std::vector<size_t> order(paths.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return unsatisfied[a] < unsatisfied[b];
    });

    // One candidate per path: the nearest member with non-actionable
    // features overwritten by x's values.
    std::vector<Instance> candidates;
    for (size_t p : order) {
      const TreePath& path = paths[p];
      if (path.members.empty()) continue;
      size_t best = path.members.front();
      double best_distance = std::numeric_limits<double>::infinity();
      for (size_t member : path.members) {
        const double d = SearchDistance(request.known[member], x, data);
        if (d < best_distance) {
          best_distance = d;
          best = member;
        }
      }
      Instance c = request.known[best];
      for (size_t f = 0; f < c.size(); ++f) {
        if (!Contains(actionable, static_cast<int>(f))) c[f] = x[f];
      }
      if (c == x) continue;
      candidates.push_back(std::move(c));
    }
    if (candidates.empty()) return {};
    const std::vector<int> verdicts = budget.Predict(candidates);
    for (size_t i = 0; i < candidates.size(); ++i) {
      if (verdicts[i] == x_label) continue;
      AppendUnique(found, std::move(candidates[i]));
      if (static_cast<int>(found.size()) >= request.k) break;
    }
  } catch (const BudgetExhausted&) {
  }
  return ToCounterfactuals(std::move(found), x, ExplainerKind::kTree, data);
}

// ---------------------------------------------------------------------------
// Growing spheres.

std::vector<std::vector<double>> GenerateRing(std::span<const double> center,
                                              double lower, double upper,
                                              int count, uint64_t seed,
                                              std::span<const int> free_dims) {
  std::vector<int> dims(free_dims.begin(), free_dims.end());
  if (dims.empty()) {
    dims.resize(center.size());
    std::iota(dims.begin(), dims.end(), 0);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gaussian(0.0, 1.0);
  std::uniform_real_distribution<double> radius(lower, upper);
  std::vector<std::vector<double>> points;
  points.reserve(std::max(0, count));
  std::vector<double> z(dims.size());
  for (int p = 0; p < count; ++p) {
    double norm = 0.0;
    while (norm == 0.0) {
      double sq = 0.0;
      for (double& v : z) {
        v = gaussian(rng);
        sq += v * v;
      }
      norm = std::sqrt(sq);
    }
    const double rho = lower == upper ? lower : radius(rng);
    std::vector<double> point(center.begin(), center.end());
    for (size_t i = 0; i < dims.size(); ++i) {
      point[dims[i]] += z[i] * rho / norm;
    }
    points.push_back(std::move(point));
  }
  return points;
}

SphereExplainer::SphereExplainer(SphereConfig config) : config_(config) {
  if (config_.points_per_ring < 1 || config_.initial_radius_factor <= 0.0 ||
      config_.max_iterations < 1 || config_.ring_refine_steps < 0 ||
      config_.final_ring_samples < 1 ||
      !(config_.shrink_factor > 0.0 && config_.shrink_factor < 1.0)) {
    throw ConfigError("invalid sphere configuration");
  }
}

std::vector<Counterfactual> SphereExplainer::Explain(
    const ExplainRequest& request) const {
  const Instance& x = request.x;
  const Dataset& data = request.data;
  const Schema& schema = data.schema();
  CallBudget budget(request.model, request.call_budget);

  // Search space: one-hot encoding with continuous columns divided by the
  // feature's standard deviation, centered on x.
  const OneHotLayout layout(schema);
  const std::vector<double> x_encoded = layout.Encode(x);
  std::vector<double> scale(layout.width(), 1.0);
  for (int f : schema.continuous()) {
    const double sd = data.stats()[f].stddev;
    scale[layout.span(f).offset] = sd > 0.0 ? sd : 1.0;
  }
  std::vector<int> free_dims;
  for (int f : request.actionable) {
    const auto& span = layout.span(f);
    for (int j = 0; j < span.width; ++j) free_dims.push_back(span.offset + j);
  }
  std::sort(free_dims.begin(), free_dims.end());
  auto to_space = [&](const Instance& v) {
    std::vector<double> u = layout.Encode(v);
    for (size_t j = 0; j < u.size(); ++j) u[j] = (u[j] - x_encoded[j]) / scale[j];
    return u;
  };
  const std::vector<double> origin(layout.width(), 0.0);

  struct Point {
    Instance values;
    double radius;
  };
  uint64_t ring_index = 0;
  // Valid points of a freshly sampled ring [lower, upper].
  auto sample_valid = [&](int x_label, double lower,
                          double upper) -> std::vector<Point> {
    const auto ring =
        GenerateRing(origin, lower, upper, config_.points_per_ring,
                     DeriveSeed(request.seed, ring_index++), free_dims);
    std::vector<Instance> decoded;
    decoded.reserve(ring.size());
    std::vector<double> encoded(layout.width());
    for (const auto& u : ring) {
      for (size_t j = 0; j < u.size(); ++j) {
        encoded[j] = x_encoded[j] + u[j] * scale[j];
      }
      decoded.push_back(layout.Decode(encoded));
    }
    const std::vector<int> labels = budget.Predict(decoded);
    std::vector<Point> valid;
    for (size_t i = 0; i < decoded.size(); ++i) {
      if (labels[i] == x_label) continue;
      const double r = Euclidean(to_space(decoded[i]), origin);
      valid.push_back({std::move(decoded[i]), r});
    }
    return valid;
  };

  std::vector<Point> last_valid;
  try {
    const int x_label = budget.Predict(x);
    if (free_dims.empty()) return {};

    double farthest = 0.0;
    for (const Instance& row : request.known) {
      farthest = std::max(farthest, Euclidean(to_space(row), origin));
    }
    if (!(farthest > 0.0)) farthest = 1.0;
    double radius = config_.initial_radius_factor * farthest;

    double lower = 0.0;
    double upper = radius;
    int iterations = 1;
    std::vector<Point> valid = sample_valid(x_label, 0.0, radius);
    if (!valid.empty()) {
      // Shrink the ball until it holds no valid point.
      last_valid = std::move(valid);
      bool bracketed = false;
      while (iterations < config_.max_iterations) {
        const double smaller = radius * config_.shrink_factor;
        ++iterations;
        valid = sample_valid(x_label, 0.0, smaller);
        if (valid.empty()) {
          lower = smaller;
          upper = radius;
          bracketed = true;
          break;
        }
        radius = smaller;
        last_valid = std::move(valid);
      }
      if (!bracketed) {
        lower = 0.0;
        upper = radius;
      }
    } else {
      // Nothing valid inside the initial ball: grow outwards ring by ring.
      bool found_any = false;
      while (iterations < config_.max_iterations) {
        const double larger = radius / config_.shrink_factor;
        ++iterations;
        valid = sample_valid(x_label, radius, larger);
        if (!valid.empty()) {
          lower = radius;
          upper = larger;
          last_valid = std::move(valid);
          found_any = true;
          break;
        }
        radius = larger;
      }
      if (!found_any) return {};
    }

    // Bisect the bracket so the final ring straddles the decision boundary.
    for (int step = 0; step < config_.ring_refine_steps; ++step) {
      const double mid = lower + (upper - lower) / 2.0;
      valid = sample_valid(x_label, lower, mid);
      if (valid.empty()) {
        lower = mid;
      } else {
        upper = mid;
        last_valid = std::move(valid);
      }
    }
    // The final ring is resampled until it holds k valid points.
    std::vector<Point> final_ring;
    for (int round = 0; round < config_.final_ring_samples; ++round) {
      for (Point& p : sample_valid(x_label, lower, upper)) {
        final_ring.push_back(std::move(p));
      }
      if (static_cast<int>(final_ring.size()) >= request.k) break;
    }
    if (!final_ring.empty()) last_valid = std::move(final_ring);
  } catch (const BudgetExhausted&) {
  }

  std::stable_sort(last_valid.begin(), last_valid.end(),
                   [](const Point& a, const Point& b) {
                     return a.radius < b.radius;
                   });
  std::vector<Instance> found;
  for (Point& p : last_valid) {
    if (static_cast<int>(found.size()) >= request.k) break;
    AppendUnique(found, std::move(p.values));
  }
  return ToCounterfactuals(std::move(found), x, ExplainerKind::kSphere, data);
}

std::unique_ptr<CounterfactualExplainer> MakeExplainer(
    ExplainerKind kind, const BruteConfig& brute,
    const TreeExplainerConfig& tree, const SphereConfig& sphere) {
  switch (kind) {
    case ExplainerKind::kBrute:
      return std::make_unique<BruteForceExplainer>(brute);
    case ExplainerKind::kTree:
      return std::make_unique<TreeExplainer>(tree);
    case ExplainerKind::kSphere:
      return std::make_unique<SphereExplainer>(sphere);
  }
  throw ConfigError("unknown explainer kind");
}

}  // namespace ensemblecf
