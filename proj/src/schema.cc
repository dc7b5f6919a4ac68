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

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ensemblecf/errors.h"

namespace ensemblecf {
namespace {

DataKind ParseDataKind(const std::string& name) {
  if (name == "tabular") return DataKind::kTabular;
  if (name == "series") return DataKind::kSeries;
  if (name == "image") return DataKind::kImage;
  throw DataError("unknown data_kind \"" + name + "\"");
}

std::string Trim(std::string_view s) {
  size_t begin = 0;
  size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) {
    ++begin;
  }
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) {
    --end;
  }
  std::string out(s.substr(begin, end - begin));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> cells;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      current.push_back(c);
    } else if (c == ',' && !quoted) {
      cells.push_back(Trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  cells.push_back(Trim(current));
  return cells;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int CategoryIndex(const std::vector<std::string>& categories,
                  const std::string& value) {
  auto it = std::find(categories.begin(), categories.end(), value);
  if (it == categories.end()) return -1;
  return static_cast<int>(it - categories.begin());
}

double ParseNumber(const std::string& cell, const std::string& feature,
                   size_t line_number) {
  if (cell.empty()) {
    throw DataError("missing value for feature \"" + feature + "\" at line " +
                    std::to_string(line_number));
  }
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE ||
      !std::isfinite(value)) {
    throw DataError("non-numeric value \"" + cell + "\" for feature \"" +
                    feature + "\" at line " + std::to_string(line_number));
  }
  return value;
}

}  // namespace

std::string_view DataKindName(DataKind kind) {
  switch (kind) {
    case DataKind::kTabular:
      return "tabular";
    case DataKind::kSeries:
      return "series";
    case DataKind::kImage:
      return "image";
  }
  return "tabular";
}

Schema::Schema(std::vector<Feature> features, DataKind data_kind, int width,
               int height, bool allow_no_actionable,
               std::optional<TargetSpec> target)
    : features_(std::move(features)),
      data_kind_(data_kind),
      width_(width),
      height_(height),
      allow_no_actionable_(allow_no_actionable),
      target_(std::move(target)) {
  if (features_.empty()) throw DataError("schema has no features");
  std::set<std::string> names;
  bool any_actionable = false;
  for (size_t i = 0; i < features_.size(); ++i) {
    const Feature& f = features_[i];
    if (!names.insert(f.name).second) {
      throw DataError("duplicate feature name \"" + f.name + "\"");
    }
    if (f.categorical()) {
      if (f.categories.size() < 2) {
        throw DataError("categorical feature \"" + f.name +
                        "\" needs at least 2 categories");
      }
      if (std::set<std::string>(f.categories.begin(), f.categories.end())
              .size() != f.categories.size()) {
        throw DataError("duplicate category in feature \"" + f.name + "\"");
      }
      categorical_.push_back(static_cast<int>(i));
    } else {
      continuous_.push_back(static_cast<int>(i));
    }
    any_actionable = any_actionable || f.actionable;
  }
  if (!any_actionable && !allow_no_actionable_) {
    throw DataError("schema has no actionable feature");
  }
  if (data_kind_ != DataKind::kTabular && !categorical_.empty()) {
    throw DataError("series and image schemas must be all-continuous");
  }
  if (data_kind_ == DataKind::kImage) {
    if (width_ <= 0 || height_ <= 0 ||
        static_cast<size_t>(width_) * static_cast<size_t>(height_) !=
            features_.size()) {
      throw DataError("image width x height must equal the feature count");
    }
  }
  if (data_kind_ == DataKind::kSeries && width_ == 0) {
    width_ = static_cast<int>(features_.size());
    height_ = 1;
  }
  if (target_ && target_->categories.size() < 2) {
    throw DataError("target needs at least 2 categories");
  }
}

Schema Schema::Continuous(int m, DataKind data_kind, int width, int height) {
  std::vector<Feature> features;
  features.reserve(m);
  for (int i = 0; i < m; ++i) {
    features.push_back({"f" + std::to_string(i), FeatureKind::kContinuous,
                        true, {}});
  }
  return Schema(std::move(features), data_kind, width, height);
}

Schema Schema::FromJson(const nlohmann::json& json) {
  try {
    const DataKind kind =
        ParseDataKind(json.value("data_kind", std::string("tabular")));
    const int width = json.value("width", 0);
    const int height = json.value("height", 0);
    std::vector<Feature> features;
    if (json.contains("features")) {
      for (const auto& f : json.at("features")) {
        Feature feature;
        feature.name = f.at("name").get<std::string>();
        const std::string fkind = f.value("kind", std::string("continuous"));
        if (fkind == "categorical") {
          feature.kind = FeatureKind::kCategorical;
          feature.categories =
              f.at("categories").get<std::vector<std::string>>();
        } else if (fkind != "continuous") {
          throw DataError("unknown feature kind \"" + fkind + "\"");
        }
        feature.actionable = f.value("actionable", true);
        features.push_back(std::move(feature));
      }
    } else {
      // Series and images may give only their length or dimensions.
      int m = json.value("length", 0);
      if (kind == DataKind::kImage) m = width * height;
      for (int i = 0; i < m; ++i) {
        features.push_back({"f" + std::to_string(i),
                            FeatureKind::kContinuous, true, {}});
      }
    }
    std::optional<TargetSpec> target;
    if (json.contains("target")) {
      const auto& t = json.at("target");
      target = TargetSpec{t.at("name").get<std::string>(),
                          t.at("categories").get<std::vector<std::string>>()};
    }
    return Schema(std::move(features), kind, width, height,
                  json.value("allow_no_actionable", false), std::move(target));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("schema parse error: ") + e.what());
  }
}

Schema Schema::Load(const std::string& path) {
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("schema parse error in " + path + ": " + e.what());
  }
  return FromJson(json);
}

nlohmann::json Schema::ToJson() const {
  nlohmann::json json;
  json["data_kind"] = std::string(DataKindName(data_kind_));
  if (data_kind_ == DataKind::kImage) {
    json["width"] = width_;
    json["height"] = height_;
  }
  if (allow_no_actionable_) json["allow_no_actionable"] = true;
  nlohmann::json features = nlohmann::json::array();
  for (const Feature& f : features_) {
    nlohmann::json entry = {{"name", f.name},
                            {"kind", f.categorical() ? "categorical"
                                                     : "continuous"},
                            {"actionable", f.actionable}};
    if (f.categorical()) entry["categories"] = f.categories;
    features.push_back(std::move(entry));
  }
  json["features"] = std::move(features);
  if (target_) {
    json["target"] = {{"name", target_->name},
                      {"categories", target_->categories}};
  }
  return json;
}

std::vector<int> Schema::ActionableFeatures() const {
  std::vector<int> out;
  for (size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].actionable) out.push_back(static_cast<int>(i));
  }
  return out;
}

int Schema::FeatureIndex(std::string_view name) const {
  for (size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

bool Schema::Conforms(const Instance& x) const {
  if (x.size() != features_.size()) return false;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) return false;
    if (features_[i].categorical()) {
      const double v = x[i];
      if (v != std::floor(v) || v < 0 ||
          v >= static_cast<double>(features_[i].categories.size())) {
        return false;
      }
    }
  }
  return true;
}

void Schema::Validate(const Instance& x) const {
  if (x.size() != features_.size()) {
    throw DataError("instance has " + std::to_string(x.size()) +
                    " values, schema has " + std::to_string(features_.size()));
  }
  for (size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw DataError("non-finite value for feature \"" + features_[i].name +
                      "\"");
    }
    if (features_[i].categorical()) {
      const double v = x[i];
      if (v != std::floor(v) || v < 0 ||
          v >= static_cast<double>(features_[i].categories.size())) {
        throw DataError("invalid category index for feature \"" +
                        features_[i].name + "\"");
      }
    }
  }
}

bool operator==(const Schema& a, const Schema& b) {
  return a.ToJson() == b.ToJson();
}

double Median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty list");
  const size_t n = values.size();
  const size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

double Mad(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mad of empty list");
  const double median = Median({values.begin(), values.end()});
  std::vector<double> deviations;
  deviations.reserve(values.size());
  for (double v : values) deviations.push_back(std::abs(v - median));
  return Median(std::move(deviations));
}

std::vector<FeatureStats> ComputeStats(const Schema& schema,
                                       std::span<const Instance> rows) {
  std::vector<FeatureStats> stats(schema.size());
  if (rows.empty()) return stats;
  std::vector<double> column(rows.size());
  std::vector<double> nonzero_mads;
  for (int f : schema.continuous()) {
    for (size_t r = 0; r < rows.size(); ++r) column[r] = rows[r][f];
    FeatureStats& s = stats[f];
    s.min = *std::min_element(column.begin(), column.end());
    s.max = *std::max_element(column.begin(), column.end());
    s.median = Median(column);
    s.mad = Mad(column);
    double sum = 0.0;
    for (double v : column) sum += v;
    s.mean = sum / static_cast<double>(column.size());
    double sq = 0.0;
    for (double v : column) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(column.size()));
    if (s.mad > 0.0) nonzero_mads.push_back(s.mad);
  }
  const double fallback =
      nonzero_mads.empty() ? 1.0 : Median(std::move(nonzero_mads));
  for (int f : schema.continuous()) {
    if (stats[f].mad <= 0.0) stats[f].mad = fallback;
  }
  return stats;
}

Dataset::Dataset(Schema schema, std::vector<Instance> rows,
                 std::vector<int> labels)
    : schema_(std::move(schema)),
      rows_(std::move(rows)),
      labels_(std::move(labels)) {
  if (rows_.empty()) throw DataError("no instances");
  for (size_t r = 0; r < rows_.size(); ++r) {
    if (!schema_.Conforms(rows_[r])) {
      throw DataError("row " + std::to_string(r) +
                      " does not conform to the schema");
    }
  }
  if (!labels_.empty() && labels_.size() != rows_.size()) {
    throw DataError("labels are not aligned with rows");
  }
  for (int label : labels_) {
    if (label < 0) throw DataError("negative label");
  }
  stats_ = ComputeStats(schema_, rows_);
}

Dataset Dataset::ParseCsv(std::string_view csv_text, Schema schema) {
  std::vector<std::string> lines;
  {
    std::string line;
    std::istringstream in{std::string(csv_text)};
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  while (!lines.empty() && Trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw DataError("missing CSV header");
  // A UTF-8 byte order mark is tolerated on the header.
  if (lines[0].rfind("\xEF\xBB\xBF", 0) == 0) lines[0] = lines[0].substr(3);

  const std::vector<std::string> header = SplitCsvLine(lines[0]);
  const size_t m = schema.size();
  const bool with_target = schema.target().has_value();
  const size_t expected = m + (with_target ? 1 : 0);
  if (header.size() != expected) {
    throw DataError("column count mismatch: CSV has " +
                    std::to_string(header.size()) + " columns, schema has " +
                    std::to_string(expected));
  }
  for (size_t i = 0; i < m; ++i) {
    if (header[i] != schema.feature(i).name) {
      throw DataError("column " + std::to_string(i) + " is \"" + header[i] +
                      "\", schema expects \"" + schema.feature(i).name + "\"");
    }
  }
  if (with_target && header[m] != schema.target()->name) {
    throw DataError("last column is \"" + header[m] +
                    "\", schema expects target \"" + schema.target()->name +
                    "\"");
  }

  std::vector<Instance> rows;
  std::vector<int> labels;
  for (size_t l = 1; l < lines.size(); ++l) {
    if (Trim(lines[l]).empty()) continue;
    const std::vector<std::string> cells = SplitCsvLine(lines[l]);
    if (cells.size() != expected) {
      throw DataError("column count mismatch at line " + std::to_string(l + 1));
    }
    Instance row(m);
    for (size_t i = 0; i < m; ++i) {
      const Feature& f = schema.feature(i);
      if (f.categorical()) {
        const int idx = CategoryIndex(f.categories, cells[i]);
        if (idx < 0) {
          throw DataError("unknown category \"" + cells[i] +
                          "\" for feature \"" + f.name + "\" at line " +
                          std::to_string(l + 1));
        }
        row[i] = idx;
      } else {
        row[i] = ParseNumber(cells[i], f.name, l + 1);
      }
    }
    if (with_target) {
      const int idx = CategoryIndex(schema.target()->categories, cells[m]);
      if (idx < 0) {
        throw DataError("unknown label \"" + cells[m] + "\" at line " +
                        std::to_string(l + 1));
      }
      labels.push_back(idx);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no instances");
  return Dataset(std::move(schema), std::move(rows), std::move(labels));
}

Dataset Dataset::LoadCsv(const std::string& csv_path,
                         const std::string& schema_path) {
  return ParseCsv(ReadFile(csv_path), Schema::Load(schema_path));
}

void Dataset::WriteCsv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.precision(std::numeric_limits<double>::max_digits10);
  const size_t m = schema_.size();
  const bool with_target = schema_.target().has_value() && has_labels();
  for (size_t i = 0; i < m; ++i) {
    if (i > 0) out << ',';
    out << schema_.feature(i).name;
  }
  if (with_target) out << ',' << schema_.target()->name;
  out << '\n';
  for (size_t r = 0; r < rows_.size(); ++r) {
    for (size_t i = 0; i < m; ++i) {
      if (i > 0) out << ',';
      const Feature& f = schema_.feature(i);
      if (f.categorical()) {
        out << f.categories[static_cast<size_t>(rows_[r][i])];
      } else {
        out << rows_[r][i];
      }
    }
    if (with_target) {
      out << ',' << schema_.target()->categories[labels_[r]];
    }
    out << '\n';
  }
}

Dataset Dataset::Subset(std::span<const size_t> indices) const {
  std::vector<Instance> rows;
  std::vector<int> labels;
  rows.reserve(indices.size());
  for (size_t i : indices) {
    rows.push_back(rows_.at(i));
    if (has_labels()) labels.push_back(labels_[i]);
  }
  return Dataset(schema_, std::move(rows), std::move(labels));
}

OneHotLayout::OneHotLayout(const Schema& schema) {
  spans_.reserve(schema.size());
  for (const Feature& f : schema.features()) {
    const int w = f.categorical() ? static_cast<int>(f.categories.size()) : 1;
    spans_.push_back({width_, w});
    is_categorical_.push_back(f.categorical());
    width_ += w;
  }
}

std::vector<double> OneHotLayout::Encode(const Instance& x) const {
  if (x.size() != spans_.size()) {
    throw DataError("instance width does not match the one-hot layout");
  }
  std::vector<double> out(width_, 0.0);
  for (size_t f = 0; f < spans_.size(); ++f) {
    const Span& s = spans_[f];
    if (is_categorical_[f]) {
      out[s.offset + static_cast<int>(x[f])] = 1.0;
    } else {
      out[s.offset] = x[f];
    }
  }
  return out;
}

Instance OneHotLayout::Decode(std::span<const double> v) const {
  if (v.size() != static_cast<size_t>(width_)) {
    throw DataError("encoded vector width does not match the one-hot layout");
  }
  Instance x(spans_.size());
  for (size_t f = 0; f < spans_.size(); ++f) {
    const Span& s = spans_[f];
    if (is_categorical_[f]) {
      int best = 0;
      for (int j = 1; j < s.width; ++j) {
        if (v[s.offset + j] > v[s.offset + best]) best = j;
      }
      x[f] = best;
    } else {
      x[f] = v[s.offset];
    }
  }
  return x;
}

}  // namespace ensemblecf
