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

// Feature metadata, datasets, per-feature statistics and one-hot layouts.
//
// Instances are plain vectors of doubles aligned with a Schema. Continuous
// features store their value, categorical features store the category index
// (0-based, in the order the categories are listed in the schema).

#ifndef ENSEMBLECF_SCHEMA_H_
#define ENSEMBLECF_SCHEMA_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ensemblecf {

using Instance = std::vector<double>;

enum class FeatureKind { kContinuous, kCategorical };
enum class DataKind { kTabular, kSeries, kImage };

std::string_view DataKindName(DataKind kind);

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  bool actionable = true;
  // Categorical only, at least two entries.
  std::vector<std::string> categories;

  bool categorical() const { return kind == FeatureKind::kCategorical; }
};

// Label column of a dataset file. Labels are stored as category indices.
struct TargetSpec {
  std::string name;
  std::vector<std::string> categories;
};

class Schema {
 public:
  Schema() = default;

  // Throws DataError when the invariants do not hold: unique names, >= 2
  // categories per categorical feature, at least one actionable feature
  // (unless `allow_no_actionable`), series/image schemas all-continuous and
  // image schemas with width * height == number of features.
  explicit Schema(std::vector<Feature> features,
                  DataKind data_kind = DataKind::kTabular, int width = 0,
                  int height = 0, bool allow_no_actionable = false,
                  std::optional<TargetSpec> target = std::nullopt);

  // All-continuous, all-actionable schema of `m` features named f0..f{m-1}.
  static Schema Continuous(int m, DataKind data_kind = DataKind::kSeries,
                           int width = 0, int height = 0);

  static Schema FromJson(const nlohmann::json& json);
  static Schema Load(const std::string& path);
  nlohmann::json ToJson() const;

  size_t size() const { return features_.size(); }
  const Feature& feature(size_t i) const { return features_[i]; }
  const std::vector<Feature>& features() const { return features_; }
  DataKind data_kind() const { return data_kind_; }
  int width() const { return width_; }
  int height() const { return height_; }
  bool allow_no_actionable() const { return allow_no_actionable_; }
  const std::optional<TargetSpec>& target() const { return target_; }

  const std::vector<int>& continuous() const { return continuous_; }
  const std::vector<int>& categorical() const { return categorical_; }
  std::vector<int> ActionableFeatures() const;

  // -1 when absent.
  int FeatureIndex(std::string_view name) const;

  bool Conforms(const Instance& x) const;
  // Throws DataError naming the first violation.
  void Validate(const Instance& x) const;

  friend bool operator==(const Schema& a, const Schema& b);

 private:
  std::vector<Feature> features_;
  DataKind data_kind_ = DataKind::kTabular;
  int width_ = 0;
  int height_ = 0;
  bool allow_no_actionable_ = false;
  std::optional<TargetSpec> target_;
  std::vector<int> continuous_;
  std::vector<int> categorical_;
};

// Statistics of one continuous feature. Categorical entries stay zeroed.
struct FeatureStats {
  double mad = 0.0;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

double Median(std::vector<double> values);

// Median absolute deviation from the median, without any zero fallback.
// Throws std::invalid_argument on an empty list.
double Mad(std::span<const double> values);

// Per-feature statistics. A zero MAD is replaced by the median of the nonzero
// MADs of the other continuous features, or 1 when every MAD is zero.
std::vector<FeatureStats> ComputeStats(const Schema& schema,
                                       std::span<const Instance> rows);

class Dataset {
 public:
  // Throws DataError on an empty row list, non-conforming rows, or labels
  // misaligned with rows. `labels` may be empty.
  Dataset(Schema schema, std::vector<Instance> rows,
          std::vector<int> labels = {});

  // CSV with a header row. Columns must match the schema features by name and
  // order, followed by the target column when the schema declares one.
  static Dataset LoadCsv(const std::string& csv_path,
                         const std::string& schema_path);
  static Dataset ParseCsv(std::string_view csv_text, Schema schema);

  // Writes the CSV counterpart of LoadCsv (category labels, not indices).
  void WriteCsv(const std::string& path) const;

  const Schema& schema() const { return schema_; }
  const std::vector<Instance>& instances() const { return rows_; }
  const Instance& instance(size_t i) const { return rows_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  bool has_labels() const { return !labels_.empty(); }
  const std::vector<FeatureStats>& stats() const { return stats_; }
  size_t size() const { return rows_.size(); }

  // Rows at `indices` (and their labels); statistics are recomputed.
  Dataset Subset(std::span<const size_t> indices) const;

 private:
  Schema schema_;
  std::vector<Instance> rows_;
  std::vector<int> labels_;
  std::vector<FeatureStats> stats_;
};

// Column spans of each feature after one-hot encoding.
class OneHotLayout {
 public:
  struct Span {
    int offset = 0;
    int width = 1;
  };

  explicit OneHotLayout(const Schema& schema);

  int width() const { return width_; }
  size_t feature_count() const { return spans_.size(); }
  const Span& span(size_t feature) const { return spans_[feature]; }
  bool categorical(size_t feature) const { return is_categorical_[feature]; }

  std::vector<double> Encode(const Instance& x) const;
  // Categorical blocks decode to their argmax, lowest index on ties.
  Instance Decode(std::span<const double> v) const;

 private:
  std::vector<Span> spans_;
  std::vector<bool> is_categorical_;
  int width_ = 0;
};

}  // namespace ensemblecf

#endif  // ENSEMBLECF_SCHEMA_H_
