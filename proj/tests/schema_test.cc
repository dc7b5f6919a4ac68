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


#include "ensemblecf/schema.h"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ensemblecf/errors.h"

namespace ensemblecf {
namespace {

Schema ColorSchema() {
  return Schema({{"size", FeatureKind::kContinuous, true, {}},
                 {"color", FeatureKind::kCategorical, true,
                  {"red", "green", "blue"}},
                 {"age", FeatureKind::kContinuous, false, {}}},
                DataKind::kTabular, 0, 0, false,
                TargetSpec{"y", {"no", "yes"}});
}

TEST(MadTest, MatchesHandComputedValues) {
  const std::vector<double> a = {1, 1, 2, 2, 4, 6, 9};
  EXPECT_DOUBLE_EQ(Mad(a), 1.0);
  const std::vector<double> b = {0, 10};
  EXPECT_DOUBLE_EQ(Mad(b), 5.0);
  EXPECT_THROW(Mad(std::vector<double>{}), std::invalid_argument);
}

TEST(MadTest, ZeroMadFallsBackToMedianOfOthers) {
  const Schema schema = Schema::Continuous(3, DataKind::kSeries);
  // Feature 0 is constant; features 1 and 2 have MAD 1 and 3.
  const std::vector<Instance> rows = {
      {5, 0, 0}, {5, 1, 3}, {5, 2, 6}, {5, 3, 9}, {5, 4, 12}};
  const auto stats = ComputeStats(schema, rows);
  EXPECT_DOUBLE_EQ(stats[1].mad, 1.0);
  EXPECT_DOUBLE_EQ(stats[2].mad, 3.0);
  EXPECT_DOUBLE_EQ(stats[0].mad, 2.0);

  const std::vector<Instance> flat = {{1, 1, 1}, {1, 1, 1}};
  for (const FeatureStats& s : ComputeStats(schema, flat)) {
    EXPECT_DOUBLE_EQ(s.mad, 1.0);
  }
}

TEST(SchemaTest, RejectsBrokenInvariants) {
  EXPECT_THROW(Schema(std::vector<Feature>{}), DataError);
  EXPECT_THROW(Schema({{"a", FeatureKind::kContinuous, true, {}},
                       {"a", FeatureKind::kContinuous, true, {}}}),
               DataError);
  EXPECT_THROW(Schema({{"c", FeatureKind::kCategorical, true, {"only"}}}),
               DataError);
  EXPECT_THROW(Schema({{"a", FeatureKind::kContinuous, false, {}}}), DataError);
  EXPECT_NO_THROW(Schema({{"a", FeatureKind::kContinuous, false, {}}},
                         DataKind::kTabular, 0, 0, true));
  EXPECT_THROW(Schema({{"c", FeatureKind::kCategorical, true, {"p", "q"}}},
                      DataKind::kSeries),
               DataError);
  EXPECT_THROW(Schema::Continuous(6, DataKind::kImage, 2, 2), DataError);
}

TEST(SchemaTest, JsonRoundTrip) {
  const Schema schema = ColorSchema();
  const Schema back = Schema::FromJson(schema.ToJson());
  EXPECT_EQ(schema, back);
  EXPECT_EQ(back.continuous(), (std::vector<int>{0, 2}));
  EXPECT_EQ(back.categorical(), (std::vector<int>{1}));
  EXPECT_EQ(back.ActionableFeatures(), (std::vector<int>{0, 1}));
  EXPECT_EQ(back.FeatureIndex("color"), 1);
  EXPECT_EQ(back.FeatureIndex("nope"), -1);
}

TEST(SchemaTest, ImageSchemaFromDimensions) {
  const Schema schema = Schema::FromJson(
      {{"data_kind", "image"}, {"width", 28}, {"height", 28}});
  EXPECT_EQ(schema.size(), 784u);
  EXPECT_EQ(schema.data_kind(), DataKind::kImage);
  const Schema series =
      Schema::FromJson({{"data_kind", "series"}, {"length", 24}});
  EXPECT_EQ(series.size(), 24u);
  EXPECT_EQ(series.width(), 24);
  EXPECT_EQ(series.height(), 1);
}

TEST(SchemaTest, ConformsChecksCategoryIndices) {
  const Schema schema = ColorSchema();
  EXPECT_TRUE(schema.Conforms({1.5, 2, 30}));
  EXPECT_FALSE(schema.Conforms({1.5, 3, 30}));
  EXPECT_FALSE(schema.Conforms({1.5, 0.5, 30}));
  EXPECT_FALSE(schema.Conforms({1.5, 0}));
  EXPECT_THROW(schema.Validate({1.5, 7, 30}), DataError);
}

TEST(DatasetTest, ParsesCategoriesByName) {
  const Dataset data = Dataset::ParseCsv(
      "size,color,age,y\n1.5,blue,30,yes\n2,red,41,no\n", ColorSchema());
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data.instance(0), (Instance{1.5, 2, 30}));
  EXPECT_EQ(data.labels(), (std::vector<int>{1, 0}));
}

TEST(DatasetTest, ParseErrors) {
  EXPECT_THROW(Dataset::ParseCsv("size,color,age,y\n", ColorSchema()),
               DataError);
  EXPECT_THROW(
      Dataset::ParseCsv("size,color,age,y\n1,purple,3,no\n", ColorSchema()),
      DataError);
  EXPECT_THROW(Dataset::ParseCsv("size,color,age,y\n1,red,3\n", ColorSchema()),
               DataError);
  EXPECT_THROW(
      Dataset::ParseCsv("size,colour,age,y\n1,red,3,no\n", ColorSchema()),
      DataError);
  EXPECT_THROW(
      Dataset::ParseCsv("size,color,age,y\nbig,red,3,no\n", ColorSchema()),
      DataError);
  EXPECT_THROW(Dataset::ParseCsv("size,color,age,y\n,red,3,no\n", ColorSchema()),
               DataError);
  try {
    Dataset::ParseCsv("size,color,age,y\n", ColorSchema());
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "no instances");
  }
}

TEST(DatasetTest, HandlesBomAndQuotes) {
  const Dataset data = Dataset::ParseCsv(
      "\xEF\xBB\xBFsize,color,age,y\n\"1.5\",\"green\",30,yes\r\n",
      ColorSchema());
  EXPECT_EQ(data.instance(0), (Instance{1.5, 1, 30}));
}

TEST(DatasetTest, CsvFileRoundTrip) {
  const Dataset data = Dataset::ParseCsv(
      "size,color,age,y\n1.25,blue,30,yes\n2,red,41,no\n-3.5,green,22,no\n",
      ColorSchema());
  const auto dir = std::filesystem::temp_directory_path() / "ecf_schema_test";
  std::filesystem::create_directories(dir);
  const std::string csv = (dir / "d.csv").string();
  const std::string schema = (dir / "d.json").string();
  data.WriteCsv(csv);
  std::ofstream(schema) << data.schema().ToJson().dump();
  const Dataset back = Dataset::LoadCsv(csv, schema);
  EXPECT_EQ(back.instances(), data.instances());
  EXPECT_EQ(back.labels(), data.labels());
  std::filesystem::remove_all(dir);
}

TEST(DatasetTest, SubsetRecomputesStats) {
  const Schema schema = Schema::Continuous(1, DataKind::kSeries);
  const Dataset data(schema, {{0}, {10}, {20}, {30}});
  const std::vector<size_t> idx = {0, 1};
  const Dataset sub = data.Subset(idx);
  EXPECT_EQ(sub.size(), 2u);
  EXPECT_DOUBLE_EQ(sub.stats()[0].max, 10.0);
  EXPECT_DOUBLE_EQ(data.stats()[0].max, 30.0);
}

TEST(OneHotLayoutTest, EncodeDecode) {
  const Schema schema = ColorSchema();
  const OneHotLayout layout(schema);
  EXPECT_EQ(layout.width(), 5);
  EXPECT_EQ(layout.span(1).offset, 1);
  EXPECT_EQ(layout.span(1).width, 3);
  EXPECT_EQ(layout.span(2).offset, 4);
  const Instance x = {0.5, 2, 40};
  const auto v = layout.Encode(x);
  EXPECT_EQ(v, (std::vector<double>{0.5, 0, 0, 1, 40}));
  EXPECT_EQ(layout.Decode(v), x);
  // Argmax snap, ties to the lowest index.
  EXPECT_EQ(layout.Decode(std::vector<double>{1, 0.3, 0.3, 0.1, 2}),
            (Instance{1, 0, 2}));
}

}  // namespace
}  // namespace ensemblecf
