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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ensemblecf/distance.h"
#include "ensemblecf/errors.h"
#include "ensemblecf/fixtures.h"
#include "metric_oracle.h"

namespace ensemblecf {
namespace {

// Five points on a line; MAD 1, so evaluation distance is |a - b|.
Dataset UnitLine() {
  return Dataset(Schema::Continuous(1, DataKind::kTabular),
                 {{0}, {1}, {2}, {3}, {4}});
}

Dataset Categorical4() {
  std::vector<Feature> features;
  for (int i = 0; i < 4; ++i) {
    features.push_back({"c" + std::to_string(i), FeatureKind::kCategorical,
                        true, {"u", "v", "w"}});
  }
  return Dataset(Schema(features), {{0, 0, 0, 0}, {1, 1, 1, 1}});
}

TEST(MetricSizeTest, Examples) {
  EXPECT_DOUBLE_EQ(MetricSize(5, 10), 0.5);
  EXPECT_DOUBLE_EQ(MetricSize(0, 4), 0.0);
  EXPECT_DOUBLE_EQ(MetricSize(4, 4), 1.0);
  EXPECT_THROW(MetricSize(1, 0), ConfigError);
}

TEST(MetricActTest, Examples) {
  const Instance x = {0, 0};
  const std::vector<int> first = {0};
  const std::vector<Instance> both = {{1, 0}, {2, 0}};
  EXPECT_DOUBLE_EQ(MetricAct(both, x, first, 2), 1.0);
  EXPECT_DOUBLE_EQ(MetricAct({}, x, first, 2), 0.0);
  const std::vector<Instance> one = {{1, 0}, {1, 1}};
  EXPECT_DOUBLE_EQ(MetricAct(one, x, first, 4), 0.25);
  EXPECT_THROW(MetricAct(one, x, first, 0), ConfigError);
}

TEST(MetricImplTest, Examples) {
  const Dataset data = UnitLine();
  EXPECT_DOUBLE_EQ(*MetricImpl(std::vector<Instance>{{1}, {3}},
                               data.instances(), data),
                   0.0);
  EXPECT_DOUBLE_EQ(
      *MetricImpl(std::vector<Instance>{{6}}, data.instances(), data), 2.0);
  EXPECT_DOUBLE_EQ(*MetricImpl(std::vector<Instance>{{5}, {7}},
                               data.instances(), data),
                   2.0);
  EXPECT_FALSE(MetricImpl({}, data.instances(), data).has_value());
}

TEST(MetricDisTest, Examples) {
  const Dataset data = Categorical4();
  const Instance x = {0, 0, 0, 0};
  const auto one = MetricDis(std::vector<Instance>{{1, 0, 0, 0}}, x, data);
  EXPECT_DOUBLE_EQ(one->count, 0.25);
  const auto same = MetricDis(std::vector<Instance>{x}, x, data);
  EXPECT_DOUBLE_EQ(same->dist, 0.0);
  EXPECT_DOUBLE_EQ(same->count, 0.0);
  const auto two = MetricDis(
      std::vector<Instance>{{1, 0, 0, 0}, {1, 2, 1, 0}}, x, data);
  EXPECT_DOUBLE_EQ(two->count, 0.5);
  EXPECT_FALSE(MetricDis({}, x, data).has_value());
}

TEST(MetricDivTest, Examples) {
  const Dataset data = Categorical4();
  const auto single = MetricDiv(std::vector<Instance>{{1, 2, 0, 1}}, data);
  EXPECT_DOUBLE_EQ(single->dist, 0.0);
  EXPECT_DOUBLE_EQ(single->count, 0.0);
  const auto twins =
      MetricDiv(std::vector<Instance>{{1, 2, 0, 1}, {1, 2, 0, 1}}, data);
  EXPECT_DOUBLE_EQ(twins->dist, 0.0);
  EXPECT_DOUBLE_EQ(twins->count, 0.0);
  const auto apart =
      MetricDiv(std::vector<Instance>{{0, 0, 0, 0}, {1, 1, 1, 1}}, data);
  EXPECT_DOUBLE_EQ(apart->count, 0.5);
  EXPECT_FALSE(MetricDiv({}, data).has_value());
}

TEST(MetricDivTest, PermutationInvariant) {
  const Dataset data = GermanFixture(3, 50);
  std::vector<Instance> cfs(data.instances().begin(),
                            data.instances().begin() + 6);
  const auto a = MetricDiv(cfs, data);
  std::reverse(cfs.begin(), cfs.end());
  std::swap(cfs[1], cfs[4]);
  const auto b = MetricDiv(cfs, data);
  EXPECT_NEAR(a->dist, b->dist, 1e-12);
  EXPECT_NEAR(a->count, b->count, 1e-12);
}

TEST(MetricDipoTest, OneDimensionalExample) {
  const Dataset data = UnitLine();
  const std::vector<Instance> cfs = {{2}};
  const std::vector<int> cf_labels = {1};
  const std::vector<Instance> known = {{0.5}, {1.8}};
  const std::vector<int> known_labels = {0, 1};
  EXPECT_DOUBLE_EQ(
      *MetricDipo(cfs, cf_labels, {0}, 0, known, known_labels, 1, data), 1.0);
  EXPECT_DOUBLE_EQ(
      *MetricDipo({}, {}, {0}, 0, known, known_labels, 1, data), 0.5);
  EXPECT_FALSE(
      MetricDipo(cfs, cf_labels, {0}, 0, known, known_labels, 2, data)
          .has_value());
}

TEST(MetricDipoTest, MemorizedNeighborsAndXSkipped) {
  const Dataset data = UnitLine();
  const std::vector<Instance> known = {{0}, {0.5}, {1.8}};
  const std::vector<int> known_labels = {0, 0, 1};
  const std::vector<Instance> cfs = {{1.8}};
  const std::vector<int> cf_labels = {1};
  EXPECT_DOUBLE_EQ(
      *MetricDipo(cfs, cf_labels, {0}, 0, known, known_labels, 1, data), 1.0);
}

TEST(MetricDipoTest, TiesGoToEarlierTrainingPoint) {
  const Dataset data = UnitLine();
  // The query 1 sits halfway between c = 2 and x = 0; c comes first.
  const std::vector<Instance> known = {{1}, {3}};
  const std::vector<int> known_labels = {0, 1};
  const std::vector<Instance> cfs = {{2}};
  const std::vector<int> cf_labels = {1};
  EXPECT_DOUBLE_EQ(
      *MetricDipo(cfs, cf_labels, {0}, 0, known, known_labels, 1, data), 0.5);
}

TEST(MetricInstTest, Examples) {
  const Dataset data = UnitLine();
  const std::vector<Instance> c = {{3}};
  EXPECT_DOUBLE_EQ(*MetricInst({0}, c, {1}, c, data), 0.0);
  const std::vector<Instance> other = {{5}};
  EXPECT_DOUBLE_EQ(*MetricInst({0}, c, {0}, other, data), 2.0);
  EXPECT_DOUBLE_EQ(*MetricInst({0}, c, {1}, other, data), 1.0);
  EXPECT_FALSE(MetricInst({0}, {}, {1}, c, data).has_value());
  EXPECT_FALSE(MetricInst({0}, c, {1}, {}, data).has_value());
}

TEST(MetricInstTest, ScalesLinearly) {
  const Dataset data = UnitLine();
  const std::vector<Instance> c = {{1}, {2}};
  const std::vector<Instance> d = {{4}, {0.5}};
  const std::vector<Instance> c3 = {{3}, {6}};
  const std::vector<Instance> d3 = {{12}, {1.5}};
  EXPECT_NEAR(*MetricInst({0}, c3, {0.5}, d3, data),
              3 * *MetricInst({0}, c, {0.5}, d, data), 1e-12);
}

TEST(NearestSameLabelTest, SkipsXAndOtherLabels) {
  const Dataset data = UnitLine();
  const std::vector<Instance> known = {{0}, {1}, {0.8}, {3}};
  const std::vector<int> labels = {0, 1, 0, 0};
  EXPECT_EQ(NearestSameLabel({0}, 0, known, labels, data), 2u);
  const std::vector<int> alone = {0, 1, 1, 1};
  EXPECT_FALSE(NearestSameLabel({0}, 0, known, alone, data).has_value());
}

TEST(FrozenFixtureTest, MatchesHandCodedOracle) {
  const Dataset data = oracle::FrozenData();
  ASSERT_DOUBLE_EQ(data.stats()[0].mad, 2.0);
  ASSERT_DOUBLE_EQ(data.stats()[1].mad, 2.0);
  const Instance x = oracle::FrozenX();
  const auto cfs = oracle::FrozenCfs();
  const auto ncfs = oracle::FrozenNeighborCfs();
  const FunctionBlackBox model(oracle::FrozenLabel, 2);
  for (const Instance& c : cfs) EXPECT_NE(model.Predict(c), model.Predict(x));

  for (int k : {1, 2, 3}) {
    const auto e = oracle::Compute(data.instances(), x, cfs,
                                   oracle::FrozenNeighbor(), ncfs, k);
    EXPECT_NEAR(*MetricImpl(cfs, data.instances(), data), e.impl, 1e-9);
    const auto dis = MetricDis(cfs, x, data);
    EXPECT_NEAR(dis->dist, e.dis_dist, 1e-9);
    EXPECT_NEAR(dis->count, e.dis_count, 1e-9);
    const auto div = MetricDiv(cfs, data);
    EXPECT_NEAR(div->dist, e.div_dist, 1e-9);
    EXPECT_NEAR(div->count, e.div_count, 1e-9);
    const auto dipo = MetricDipo(cfs, x, data.instances(), model, k, data);
    ASSERT_EQ(dipo.has_value(), e.dipo.has_value()) << "k=" << k;
    if (dipo) EXPECT_NEAR(*dipo, *e.dipo, 1e-9) << "k=" << k;
    EXPECT_NEAR(*MetricInst(x, cfs, oracle::FrozenNeighbor(), ncfs, data),
                e.inst, 1e-9);
  }
  EXPECT_NEAR(MetricAct(cfs, x, data.schema().ActionableFeatures(), 3),
              1.0 / 3, 1e-12);
}

TEST(MetricBoundsTest, RandomizedInputsStayInRange) {
  const Dataset data = GermanFixture(11, 120);
  const auto actionable = data.schema().ActionableFeatures();
  const FunctionBlackBox model(
      [](const Instance& v) { return v[0] + v[1] > v[2]; }, 2);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<size_t> pick(0, data.size() - 1);
    std::uniform_int_distribution<int> count(0, 6);
    const Instance& x = data.instance(pick(rng));
    std::vector<Instance> cfs;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) cfs.push_back(data.instance(pick(rng)));
    const int k = 6;
    const double size = MetricSize(cfs.size(), k);
    const double act = MetricAct(cfs, x, actionable, k);
    EXPECT_GE(size, 0.0);
    EXPECT_LE(size, 1.0);
    EXPECT_GE(act, 0.0);
    EXPECT_LE(act, size);
    if (auto dis = MetricDis(cfs, x, data)) {
      EXPECT_GE(dis->count, 0.0);
      EXPECT_LE(dis->count, 1.0);
    }
    if (auto div = MetricDiv(cfs, data)) {
      EXPECT_GE(div->count, 0.0);
      EXPECT_LE(div->count, 1.0);
    }
    if (auto dipo = MetricDipo(cfs, x, data.instances(), model, 3, data)) {
      EXPECT_GE(*dipo, 0.0);
      EXPECT_LE(*dipo, 1.0);
    }
    // Every c was drawn from X.
    if (!cfs.empty()) {
      EXPECT_DOUBLE_EQ(*MetricImpl(cfs, data.instances(), data), 0.0);
    }
  }
}

TEST(MetricImplTest, ZeroOnlyForKnownInstances) {
  const Dataset data = UnitLine();
  EXPECT_GT(*MetricImpl(std::vector<Instance>{{1}, {2.5}}, data.instances(),
                        data),
            0.0);
}

class EchoExplainer : public CounterfactualExplainer {
 public:
  // Returns the known instances with a different decision, nearest first.
  std::vector<Counterfactual> Explain(
      const ExplainRequest& request) const override {
    const int label = request.model.Predict(request.x);
    std::vector<Counterfactual> out;
    for (const Instance& r : request.known) {
      if (request.model.Predict(r) != label) {
        out.push_back(MakeCounterfactual(r, request.x, ExplainerKind::kTree,
                                         request.data));
      }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return a.eval_distance < b.eval_distance;
    });
    if (out.size() > static_cast<size_t>(request.k)) out.resize(request.k);
    return out;
  }
  std::string name() const override { return "echo"; }
};

class ThrowingExplainer : public CounterfactualExplainer {
 public:
  std::vector<Counterfactual> Explain(const ExplainRequest&) const override {
    throw PredictionError("boom");
  }
  std::string name() const override { return "throwing"; }
};

TEST(EvaluateRunTest, EmptyRun) {
  const Dataset data = UnitLine();
  const FunctionBlackBox model([](const Instance& v) { return v[0] > 2; }, 2);
  const auto summary = EvaluateRun(EchoExplainer(), {}, model, data, {});
  EXPECT_TRUE(summary.rows.empty());
  EXPECT_EQ(summary.failures, 0u);
  for (size_t c : summary.counts) EXPECT_EQ(c, 0u);
}

TEST(EvaluateRunTest, EndogenousExplainerHasZeroImplausibility) {
  const Dataset data = GermanFixture(2, 200);
  const FunctionBlackBox model(
      [](const Instance& v) { return v[1] > 2500; }, 2);
  EvaluationOptions options;
  options.k = 3;
  options.seed = 5;
  options.actionable = data.schema().ActionableFeatures();
  const std::vector<Instance> instances(data.instances().begin(),
                                        data.instances().begin() + 6);
  const auto summary =
      EvaluateRun(EchoExplainer(), instances, model, data, options);
  ASSERT_EQ(summary.rows.size(), 6u);
  for (const auto& row : summary.rows) {
    ASSERT_TRUE(row.report.has_value());
    EXPECT_DOUBLE_EQ(*row.report->impl, 0.0);
    EXPECT_DOUBLE_EQ(row.report->size, 1.0);
    EXPECT_LE(row.report->act, row.report->size);
    EXPECT_TRUE(row.report->inst.has_value());
    EXPECT_GT(row.report->bbox_calls, 0.0);
  }
  EXPECT_DOUBLE_EQ(*summary.mean.impl, 0.0);
}

TEST(EvaluateRunTest, FailuresAreCountedAndParallelMatchesSerial) {
  const Dataset data = UnitLine();
  const FunctionBlackBox model([](const Instance& v) { return v[0] > 2; }, 2);
  EvaluationOptions options;
  options.k = 1;
  options.actionable = {0};
  const std::vector<Instance> instances = {{0}, {4}, {1}};
  const auto failed =
      EvaluateRun(ThrowingExplainer(), instances, model, data, options);
  EXPECT_EQ(failed.failures, 3u);
  EXPECT_EQ(failed.counts[0], 0u);
  for (const auto& row : failed.rows) {
    EXPECT_FALSE(row.report.has_value());
    EXPECT_NE(row.error.find("boom"), std::string::npos);
  }

  const auto serial =
      EvaluateRun(EchoExplainer(), instances, model, data, options);
  options.workers = 3;
  const auto parallel =
      EvaluateRun(EchoExplainer(), instances, model, data, options);
  ASSERT_EQ(serial.rows.size(), parallel.rows.size());
  for (size_t i = 0; i < serial.rows.size(); ++i) {
    EXPECT_EQ(serial.rows[i].index, parallel.rows[i].index);
    EXPECT_EQ(serial.rows[i].report->dis_dist,
              parallel.rows[i].report->dis_dist);
  }
  EXPECT_DOUBLE_EQ(*serial.mean.dis_dist, *parallel.mean.dis_dist);
}

TEST(WriteMetricsCsvTest, RowsAndMeanRow) {
  const Dataset data = UnitLine();
  const FunctionBlackBox model([](const Instance& v) { return v[0] > 2; }, 2);
  EvaluationOptions options;
  options.k = 2;
  options.actionable = {0};
  const std::vector<Instance> instances = {{0}, {4}, {1}, {3}};
  const auto summary =
      EvaluateRun(EchoExplainer(), instances, model, data, options);
  std::ostringstream csv;
  WriteMetricsCsv(summary, csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0],
            "index,size,act,impl,dis_dist,dis_count,div_dist,div_count,dipo,"
            "inst,runtime_seconds,bbox_calls");
  EXPECT_EQ(rows[1].substr(0, 4), "0,1,");
  EXPECT_EQ(rows[5].substr(0, 7), "mean,1,");

  const auto json = MetricsToJson(summary);
  EXPECT_EQ(json["instances"].size(), 4u);
}

}  // namespace
}  // namespace ensemblecf
