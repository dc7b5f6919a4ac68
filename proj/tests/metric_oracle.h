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


// A frozen six-instance mixed dataset and straightforward re-implementations
// of the evaluation measures, shared by the unit and acceptance tests.

#ifndef ENSEMBLECF_TESTS_METRIC_ORACLE_H_
#define ENSEMBLECF_TESTS_METRIC_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "ensemblecf/metrics.h"
#include "ensemblecf/schema.h"

namespace ensemblecf::oracle {

// Both continuous features have MAD 2 on these rows (worked out by hand).
inline Dataset FrozenData() {
  const Schema schema({{"a", FeatureKind::kContinuous, true, {}},
                       {"b", FeatureKind::kContinuous, true, {}},
                       {"color", FeatureKind::kCategorical, false,
                        {"red", "green", "blue"}}});
  return Dataset(schema, {{0, 10, 0},
                          {1, 12, 1},
                          {2, 11, 0},
                          {4, 15, 2},
                          {5, 13, 1},
                          {7, 20, 0}});
}

inline int FrozenLabel(const Instance& v) { return v[0] + v[1] / 5 > 5; }

inline Instance FrozenX() { return {1.5, 11, 0}; }
inline Instance FrozenNeighbor() { return {2, 11, 0}; }

inline std::vector<Instance> FrozenCfs() {
  return {{3.5, 12, 0}, {2.5, 14, 2}, {4, 15, 2}};
}
inline std::vector<Instance> FrozenNeighborCfs() {
  return {{4, 11, 0}, {2, 16, 1}};
}

inline double Dist(const Instance& p, const Instance& q) {
  return (std::abs(p[0] - q[0]) / 2 + std::abs(p[1] - q[1]) / 2) / 2 +
         (p[2] != q[2] ? 1.0 : 0.0);
}

inline double Mismatch(const Instance& p, const Instance& q) {
  double n = 0;
  for (size_t i = 0; i < p.size(); ++i) n += p[i] != q[i];
  return n / p.size();
}

struct Expected {
  double impl;
  double dis_dist;
  double dis_count;
  double div_dist;
  double div_count;
  std::optional<double> dipo;
  double inst;
};

inline Expected Compute(const std::vector<Instance>& known,
                        const Instance& x, const std::vector<Instance>& cfs,
                        const Instance& neighbor,
                        const std::vector<Instance>& neighbor_cfs, int k) {
  Expected e{};
  for (const Instance& c : cfs) {
    double best = 1e300;
    for (const Instance& r : known) best = std::min(best, Dist(c, r));
    e.impl += best / cfs.size();
    e.dis_dist += Dist(c, x) / cfs.size();
    e.dis_count += Mismatch(c, x) / cfs.size();
    for (const Instance& o : cfs) {
      e.div_dist += Dist(c, o) / (cfs.size() * cfs.size());
      e.div_count += Mismatch(c, o) / (cfs.size() * cfs.size());
    }
  }

  const int x_label = FrozenLabel(x);
  std::vector<size_t> order(known.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) {
    return Dist(known[i], x) < Dist(known[j], x);
  });
  std::vector<Instance> same;
  std::vector<Instance> other;
  for (size_t i : order) {
    if (known[i] == x) continue;
    auto& side = FrozenLabel(known[i]) == x_label ? same : other;
    if (static_cast<int>(side.size()) < k) side.push_back(known[i]);
  }
  if (static_cast<int>(same.size()) == k &&
      static_cast<int>(other.size()) == k) {
    std::vector<Instance> train = cfs;
    train.push_back(x);
    int correct = 0;
    for (const auto* side : {&same, &other}) {
      for (const Instance& q : *side) {
        size_t best = 0;
        for (size_t t = 1; t < train.size(); ++t) {
          if (Dist(q, train[t]) < Dist(q, train[best])) best = t;
        }
        correct += FrozenLabel(train[best]) == FrozenLabel(q);
      }
    }
    e.dipo = static_cast<double>(correct) / (2 * k);
  }

  for (const Instance& c : cfs) {
    for (const Instance& o : neighbor_cfs) {
      e.inst += Dist(c, o) / (cfs.size() * neighbor_cfs.size());
    }
  }
  e.inst /= 1 + Dist(x, neighbor);
  return e;
}

}  // namespace ensemblecf::oracle

#endif  // ENSEMBLECF_TESTS_METRIC_ORACLE_H_
