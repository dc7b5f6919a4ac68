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

#include <gtest/gtest.h>

#include <random>

namespace ensemblecf {
namespace {

Feature Con(const std::string& name) {
  return {name, FeatureKind::kContinuous, true, {}};
}
Feature Cat(const std::string& name) {
  return {name, FeatureKind::kCategorical, true, {"a", "b", "c"}};
}

TEST(EuclideanTest, Basics) {
  EXPECT_DOUBLE_EQ(Euclidean(std::vector<double>{0, 0},
                             std::vector<double>{3, 4}),
                   5.0);
  EXPECT_DOUBLE_EQ(Euclidean(std::vector<double>{2}, std::vector<double>{-1}),
                   3.0);
  EXPECT_DOUBLE_EQ(Euclidean(std::vector<double>{1, 2},
                             std::vector<double>{1, 2}),
                   0.0);
  EXPECT_THROW(Euclidean(std::vector<double>{1}, std::vector<double>{1, 2}),
               std::invalid_argument);
}

TEST(SearchDistanceTest, CategoricalJaccard) {
  const Schema cats({Cat("p"), Cat("q")});
  const std::vector<FeatureStats> stats(2);
  EXPECT_DOUBLE_EQ(SearchDistance({0, 1}, {0, 1}, cats, stats), 0.0);
  EXPECT_DOUBLE_EQ(SearchDistance({0, 1}, {1, 2}, cats, stats), 1.0);
  EXPECT_NEAR(SearchDistance({0, 1}, {0, 2}, cats, stats), 2.0 / 3.0, 1e-15);
}

TEST(SearchDistanceTest, ContinuousScaledByRange) {
  const Schema con({Con("u"), Con("v")});
  std::vector<FeatureStats> stats(2);
  stats[0].min = 0;
  stats[0].max = 10;
  stats[1].min = 5;
  stats[1].max = 5;  // zero range counts as 1
  // (1/2) * sqrt(0.3^2 + 2^2)
  EXPECT_NEAR(SearchDistance({1, 5}, {4, 7}, con, stats),
              0.5 * std::sqrt(0.09 + 4.0), 1e-15);
}

TEST(SearchDistanceTest, MixedWeightsByFeatureShare) {
  const Schema mixed({Con("u"), Cat("p")});
  std::vector<FeatureStats> stats(2);
  stats[0].min = 0;
  stats[0].max = 4;
  // Continuous part 2/4 = 0.5 at weight 1/2; categorical Jaccard 1 at 1/2.
  EXPECT_NEAR(SearchDistance({0, 0}, {2, 1}, mixed, stats), 0.75, 1e-15);
}

TEST(SearchDistanceTest, SeriesUseEuclidean) {
  const Schema series = Schema::Continuous(2, DataKind::kSeries);
  std::vector<FeatureStats> stats(2);
  EXPECT_DOUBLE_EQ(SearchDistance({0, 0}, {3, 4}, series, stats), 5.0);
}

TEST(EvalDistanceTest, HandExamples) {
  const Schema one({Con("u")});
  std::vector<FeatureStats> stats(1);
  stats[0].mad = 2.0;
  EXPECT_DOUBLE_EQ(EvalDistance({4}, {8}, one, stats), 2.0);
  EXPECT_DOUBLE_EQ(EvalDistance({4}, {4}, one, stats), 0.0);

  const Schema mixed({Con("u"), Cat("p"), Cat("q")});
  std::vector<FeatureStats> mixed_stats(3);
  mixed_stats[0].mad = 1.0;
  EXPECT_DOUBLE_EQ(EvalDistance({1, 0, 2}, {2, 0, 1}, mixed, mixed_stats),
                   1.5);
}

TEST(EvalDistanceTest, AllDifferAtOneMadIsTwo) {
  const Schema mixed({Con("u"), Con("v"), Cat("p"), Cat("q")});
  std::vector<FeatureStats> stats(4);
  stats[0].mad = 0.5;
  stats[1].mad = 3.0;
  EXPECT_DOUBLE_EQ(EvalDistance({0, 0, 0, 0}, {0.5, -3, 1, 2}, mixed, stats),
                   2.0);
}

TEST(DistanceProperties, NonNegativeSymmetricIdentity) {
  const Schema mixed({Con("u"), Con("v"), Cat("p"), Cat("q"), Con("w")});
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 3);
  std::uniform_int_distribution<int> c(0, 2);
  auto draw = [&] {
    return Instance{g(rng), g(rng), double(c(rng)), double(c(rng)), g(rng)};
  };
  std::vector<Instance> rows;
  for (int i = 0; i < 60; ++i) rows.push_back(draw());
  const Dataset data(mixed, rows);
  for (int t = 0; t < 200; ++t) {
    const Instance a = draw();
    const Instance b = draw();
    using Fn = double (*)(const Instance&, const Instance&, const Schema&,
                          std::span<const FeatureStats>);
    for (Fn d : {static_cast<Fn>(&SearchDistance),
                 static_cast<Fn>(&EvalDistance)}) {
      const double ab = d(a, b, mixed, data.stats());
      EXPECT_GE(ab, 0.0);
      EXPECT_DOUBLE_EQ(ab, d(b, a, mixed, data.stats()));
      EXPECT_EQ(d(a, a, mixed, data.stats()), 0.0);
    }
  }
}

TEST(DistanceProperties, EvalInvariantUnderFeatureRescaling) {
  const Schema con({Con("u"), Con("v")});
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0, 1);
  std::vector<Instance> rows;
  for (int i = 0; i < 41; ++i) rows.push_back({g(rng), g(rng)});
  std::vector<Instance> scaled = rows;
  for (Instance& r : scaled) r[0] *= 8.0;  // power of two keeps it exact
  const Dataset a(con, rows);
  const Dataset b(con, scaled);
  for (int i = 0; i + 1 < 41; ++i) {
    EXPECT_DOUBLE_EQ(EvalDistance(rows[i], rows[i + 1], a),
                     EvalDistance(scaled[i], scaled[i + 1], b));
  }
}

TEST(ChangedFeaturesTest, ListsDifferingIndices) {
  EXPECT_EQ(ChangedFeatures({1, 2, 3, 4}, {1, 0, 3, 5}),
            (std::vector<int>{1, 3}));
  EXPECT_TRUE(ChangedFeatures({1, 2}, {1, 2}).empty());
}

}  // namespace
}  // namespace ensemblecf
