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

#include "ensemblecf/fixtures.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ensemblecf/errors.h"

namespace ensemblecf {
namespace {

using Rng = std::mt19937_64;

Feature Continuous(std::string name, bool actionable = true) {
  return Feature{.name = std::move(name),
                 .kind = FeatureKind::kContinuous,
                 .actionable = actionable,
                 .categories = {}};
}

Feature Categorical(std::string name, int count, bool actionable = true) {
  std::vector<std::string> categories;
  for (int i = 0; i < count; ++i) {
    categories.push_back(name.substr(0, 3) + std::to_string(i));
  }
  return Feature{.name = std::move(name),
                 .kind = FeatureKind::kCategorical,
                 .actionable = actionable,
                 .categories = std::move(categories)};
}

TargetSpec BinaryTarget() { return TargetSpec{"class", {"neg", "pos"}}; }

int Pick(Rng& rng, const std::vector<double>& weights) {
  std::discrete_distribution<int> dist(weights.begin(), weights.end());
  return dist(rng);
}

}  // namespace

Dataset BlobFixture(uint64_t seed, size_t n) {
  std::vector<Feature> features;
  for (int i = 0; i < 6; ++i) {
    features.push_back(Continuous("x" + std::to_string(i), i != 5));
  }
  features.push_back(Categorical("color", 3));
  features.push_back(Categorical("region", 2, false));
  Schema schema(std::move(features), DataKind::kTabular, 0, 0, false,
                BinaryTarget());

  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Instance> rows;
  std::vector<int> labels;
  for (size_t r = 0; r < n; ++r) {
    const int label = static_cast<int>(r % 2);
    const double center = label == 0 ? -0.5 : 0.5;
    Instance x;
    for (int i = 0; i < 6; ++i) x.push_back(center + noise(rng));
    x.push_back(Pick(rng, label == 0 ? std::vector<double>{0.6, 0.3, 0.1}
                                     : std::vector<double>{0.1, 0.3, 0.6}));
    x.push_back(Pick(rng, {0.5, 0.5}));
    rows.push_back(std::move(x));
    labels.push_back(label);
  }
  return Dataset(std::move(schema), std::move(rows), std::move(labels));
}

Dataset GermanFixture(uint64_t seed, size_t n) {
  // Continuous first, then categorical, in the usual column order of the
  // credit data: name, category count, actionable.
  std::vector<Feature> features = {
      Continuous("duration"),
      Continuous("credit_amount"),
      Continuous("installment_rate"),
      Continuous("residence_since"),
      Continuous("age", false),
      Continuous("existing_credits"),
      Continuous("num_dependents"),
      Categorical("checking_status", 4),
      Categorical("credit_history", 5),
      Categorical("purpose", 10),
      Categorical("savings_status", 5),
      Categorical("employment", 5),
      Categorical("personal_status", 4, false),
      Categorical("other_parties", 3),
      Categorical("property_magnitude", 4),
      Categorical("other_payment_plans", 3),
      Categorical("housing", 3),
      Categorical("job", 4),
      Categorical("own_telephone", 2),
      Categorical("foreign_worker", 2, false),
  };
  Schema schema(std::move(features), DataKind::kTabular, 0, 0, false,
                BinaryTarget());

  Rng rng(seed);
  std::normal_distribution<double> gaussian(0.0, 1.0);
  std::uniform_int_distribution<int> four(1, 4);
  std::vector<Instance> rows;
  std::vector<int> labels;
  for (size_t r = 0; r < n; ++r) {
    Instance x;
    const double duration =
        std::clamp(std::round(20.0 + 12.0 * gaussian(rng)), 4.0, 72.0);
    const double amount = std::clamp(
        std::round(std::exp(7.8 + 0.7 * gaussian(rng) + duration / 60.0)),
        250.0, 18500.0);
    const double age =
        std::clamp(std::round(35.0 + 11.0 * gaussian(rng)), 19.0, 75.0);
    x.push_back(duration);
    x.push_back(amount);
    x.push_back(four(rng));
    x.push_back(four(rng));
    x.push_back(age);
    x.push_back(Pick(rng, {0.63, 0.33, 0.03, 0.01}) + 1.0);
    x.push_back(Pick(rng, {0.85, 0.15}) + 1.0);
    const int checking = Pick(rng, {0.27, 0.27, 0.06, 0.40});
    const int history = Pick(rng, {0.04, 0.05, 0.53, 0.09, 0.29});
    const int savings = Pick(rng, {0.60, 0.10, 0.06, 0.05, 0.19});
    const int employment = Pick(rng, {0.06, 0.17, 0.34, 0.17, 0.26});
    x.push_back(checking);
    x.push_back(history);
    x.push_back(Pick(rng, {0.23, 0.10, 0.18, 0.28, 0.01, 0.02, 0.05, 0.01,
                           0.10, 0.02}));
    x.push_back(savings);
    x.push_back(employment);
    x.push_back(Pick(rng, {0.05, 0.31, 0.55, 0.09}));
    x.push_back(Pick(rng, {0.91, 0.04, 0.05}));
    x.push_back(Pick(rng, {0.28, 0.23, 0.33, 0.16}));
    x.push_back(Pick(rng, {0.14, 0.05, 0.81}));
    x.push_back(Pick(rng, {0.18, 0.71, 0.11}));
    x.push_back(Pick(rng, {0.02, 0.20, 0.63, 0.15}));
    x.push_back(Pick(rng, {0.60, 0.40}));
    x.push_back(Pick(rng, {0.96, 0.04}));

    // Latent risk score; about 30% of the applicants end up as bad risks.
    double score = 0.04 * (duration - 20.0) + 0.00012 * (amount - 3000.0) +
                   0.25 * (x[2] - 2.5) - 0.02 * (age - 35.0) +
                   0.8 * gaussian(rng);
    static constexpr double kChecking[] = {0.9, 0.4, -0.3, -1.0};
    static constexpr double kHistory[] = {1.0, 0.8, 0.0, -0.2, -0.6};
    static constexpr double kSavings[] = {0.4, 0.2, -0.2, -0.5, -0.3};
    static constexpr double kEmployment[] = {0.4, 0.3, 0.0, -0.3, -0.2};
    score += kChecking[checking] + kHistory[history] + kSavings[savings] +
             kEmployment[employment];
    rows.push_back(std::move(x));
    labels.push_back(score > 0.55 ? 1 : 0);
  }
  return Dataset(std::move(schema), std::move(rows), std::move(labels));
}

Dataset SeriesFixture(uint64_t seed, size_t n) {
  constexpr int kLength = 24;
  Schema schema(Schema::Continuous(kLength).features(), DataKind::kSeries,
                kLength, 1, false, BinaryTarget());
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 0.15);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::vector<Instance> rows;
  std::vector<int> labels;
  for (size_t r = 0; r < n; ++r) {
    const int label = static_cast<int>(r % 2);
    const double peak = (label == 0 ? 9.0 : 19.0) + jitter(rng);
    Instance x(kLength);
    for (int t = 0; t < kLength; ++t) {
      const double d = (t - peak) / 3.0;
      x[t] = 0.3 + std::exp(-0.5 * d * d) +
             0.1 * std::sin(2.0 * std::numbers::pi * t / kLength) + noise(rng);
    }
    rows.push_back(std::move(x));
    labels.push_back(label);
  }
  return Dataset(std::move(schema), std::move(rows), std::move(labels));
}

Dataset ImageFixture(uint64_t seed, size_t n) {
  constexpr int kSide = 8;
  Schema schema(Schema::Continuous(kSide * kSide).features(),
                DataKind::kImage, kSide, kSide, false, BinaryTarget());
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::uniform_int_distribution<int> offset(0, 1);
  std::vector<Instance> rows;
  std::vector<int> labels;
  for (size_t r = 0; r < n; ++r) {
    const int label = static_cast<int>(r % 2);
    const int phase = offset(rng);
    Instance x(kSide * kSide);
    for (int y = 0; y < kSide; ++y) {
      for (int col = 0; col < kSide; ++col) {
        const int line = label == 0 ? y : col;
        const double ink = (line + phase) % 2 == 0 ? 1.0 : 0.0;
        x[y * kSide + col] = std::clamp(ink + noise(rng), 0.0, 1.0);
      }
    }
    rows.push_back(std::move(x));
    labels.push_back(label);
  }
  return Dataset(std::move(schema), std::move(rows), std::move(labels));
}

std::vector<std::string> FixtureNames() {
  return {"blobs", "german", "series", "image"};
}

Dataset MakeFixture(const std::string& name, uint64_t seed) {
  if (name == "blobs") return BlobFixture(seed);
  if (name == "german") return GermanFixture(seed);
  if (name == "series") return SeriesFixture(seed);
  if (name == "image") return ImageFixture(seed);
  throw ConfigError("unknown fixture \"" + name + "\"");
}

}  // namespace ensemblecf
