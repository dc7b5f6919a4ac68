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

#include "ensemblecf/codec.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "ensemblecf/errors.h"

namespace ensemblecf {
namespace {

constexpr int kMaxPowerIterations = 5000;
constexpr double kPowerTolerance = 1e-14;
// Relative eigenvalue below which a direction counts as rank deficiency.
constexpr double kRankTolerance = 1e-12;

int CeilDiv(int a, int b) { return (a + b - 1) / b; }

double Dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

void CheckWidth(size_t got, int expected, const char* what) {
  if (got != static_cast<size_t>(expected)) {
    throw DataError(std::string(what) + " width " + std::to_string(got) +
                    " does not match codec width " + std::to_string(expected));
  }
}

// b' = b o decode.
class DecodingBlackBox : public BlackBox {
 public:
  DecodingBlackBox(const BlackBox& inner, const Codec& codec)
      : inner_(inner), codec_(codec) {}
  int label_count() const override { return inner_.label_count(); }

 protected:
  std::vector<int> PredictBatch(
      std::span<const Instance> batch) const override {
    std::vector<Instance> decoded;
    decoded.reserve(batch.size());
    for (const Instance& z : batch) decoded.push_back(codec_.Decode(z));
    return inner_.Predict(decoded);
  }

 private:
  const BlackBox& inner_;
  const Codec& codec_;
};

}  // namespace

IdentityCodec::IdentityCodec(int m) : m_(m) {
  if (m < 1) throw ConfigError("identity codec needs m >= 1");
}

std::unique_ptr<IdentityCodec> IdentityCodec::ForSchema(const Schema& schema) {
  if (!schema.categorical().empty()) {
    throw ConfigError(
        "identity codec needs an all-continuous schema (series or images)");
  }
  return std::make_unique<IdentityCodec>(static_cast<int>(schema.size()));
}

std::vector<double> IdentityCodec::Encode(const Instance& x) const {
  CheckWidth(x.size(), m_, "instance");
  return x;
}

Instance IdentityCodec::Decode(std::span<const double> z) const {
  CheckWidth(z.size(), m_, "latent vector");
  return Instance(z.begin(), z.end());
}

KernelCodec::KernelCodec(int width, int height, int s)
    : width_(width), height_(height), s_(s) {
  if (width < 1 || height < 1 || s < 1) {
    throw ConfigError("kernel codec needs positive dimensions");
  }
  const int limit = height == 1 ? width : std::min(width, height);
  if (s >= limit) throw ConfigError("kernel too large");
  cells_x_ = CeilDiv(width, s);
  cells_y_ = height == 1 ? 1 : CeilDiv(height, s);
}

std::vector<double> KernelCodec::Encode(const Instance& x) const {
  CheckWidth(x.size(), width_ * height_, "instance");
  const int kernel_y = height_ == 1 ? 1 : s_;
  std::vector<double> z(static_cast<size_t>(cells_x_) * cells_y_, 0.0);
  for (int cy = 0; cy < cells_y_; ++cy) {
    for (int cx = 0; cx < cells_x_; ++cx) {
      double sum = 0.0;
      for (int dy = 0; dy < kernel_y; ++dy) {
        // Cells hanging over the edge reuse the last row/column.
        const int py = std::min(cy * kernel_y + dy, height_ - 1);
        for (int dx = 0; dx < s_; ++dx) {
          const int px = std::min(cx * s_ + dx, width_ - 1);
          sum += x[static_cast<size_t>(py) * width_ + px];
        }
      }
      z[static_cast<size_t>(cy) * cells_x_ + cx] = sum / (kernel_y * s_);
    }
  }
  return z;
}

Instance KernelCodec::Decode(std::span<const double> z) const {
  CheckWidth(z.size(), cells_x_ * cells_y_, "latent vector");
  const int kernel_y = height_ == 1 ? 1 : s_;
  Instance x(static_cast<size_t>(width_) * height_);
  for (int py = 0; py < height_; ++py) {
    for (int px = 0; px < width_; ++px) {
      x[static_cast<size_t>(py) * width_ + px] =
          z[static_cast<size_t>(py / kernel_y) * cells_x_ + px / s_];
    }
  }
  return x;
}

std::unique_ptr<LinearCodec> LinearCodec::Fit(std::span<const Instance> rows,
                                              int q, uint64_t seed) {
  if (rows.empty()) throw ConfigError("linear codec needs training rows");
  const size_t m = rows.front().size();
  if (q < 1 || static_cast<size_t>(q) > m) {
    throw ConfigError("linear codec needs 1 <= q <= m");
  }
  if (rows.size() <= static_cast<size_t>(q)) {
    throw ConfigError("linear codec needs more rows than q");
  }
  std::unique_ptr<LinearCodec> codec(new LinearCodec());
  codec->requested_ = q;
  codec->mean_.assign(m, 0.0);
  for (const Instance& r : rows) {
    CheckWidth(r.size(), static_cast<int>(m), "row");
    for (size_t j = 0; j < m; ++j) codec->mean_[j] += r[j];
  }
  for (double& v : codec->mean_) v /= static_cast<double>(rows.size());

  std::vector<std::vector<double>> cov(m, std::vector<double>(m, 0.0));
  std::vector<double> centered(m);
  for (const Instance& r : rows) {
    for (size_t j = 0; j < m; ++j) centered[j] = r[j] - codec->mean_[j];
    for (size_t a = 0; a < m; ++a) {
      for (size_t b = a; b < m; ++b) cov[a][b] += centered[a] * centered[b];
    }
  }
  double trace = 0.0;
  for (size_t a = 0; a < m; ++a) {
    for (size_t b = a; b < m; ++b) {
      cov[a][b] /= static_cast<double>(rows.size());
      cov[b][a] = cov[a][b];
    }
    trace += cov[a][a];
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gaussian(0.0, 1.0);
  auto orthonormalize = [&](std::vector<double>& v) {
    // Two Gram-Schmidt passes keep the basis orthogonal to working precision.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& c : codec->components_) {
        const double proj = Dot(v, c);
        for (size_t j = 0; j < m; ++j) v[j] -= proj * c[j];
      }
    }
    const double norm = std::sqrt(Dot(v, v));
    if (norm > 0.0) {
      for (double& e : v) e /= norm;
    }
    return norm;
  };

  std::vector<double> next(m);
  for (int component = 0; component < q; ++component) {
    std::vector<double> v(m);
    for (double& e : v) e = gaussian(rng);
    if (orthonormalize(v) == 0.0) break;
    double eigenvalue = 0.0;
    for (int it = 0; it < kMaxPowerIterations; ++it) {
      for (size_t a = 0; a < m; ++a) next[a] = Dot(cov[a], v);
      eigenvalue = Dot(v, next);
      if (orthonormalize(next) == 0.0) {
        eigenvalue = 0.0;
        break;
      }
      double change = 0.0;
      for (size_t j = 0; j < m; ++j) change += std::abs(next[j] - v[j]);
      v.swap(next);
      if (change < kPowerTolerance * static_cast<double>(m)) break;
    }
    if (!(eigenvalue > kRankTolerance * std::max(trace, 1e-300))) break;
    // Sign convention: first nonzero entry positive.
    for (double e : v) {
      if (std::abs(e) > 1e-12) {
        if (e < 0.0) {
          for (double& f : v) f = -f;
        }
        break;
      }
    }
    codec->components_.push_back(std::move(v));
  }
  if (codec->components_.empty()) {
    throw ConfigError("linear codec: training rows have zero variance");
  }
  return codec;
}

std::vector<double> LinearCodec::Encode(const Instance& x) const {
  CheckWidth(x.size(), input_width(), "instance");
  std::vector<double> centered(x.size());
  for (size_t j = 0; j < x.size(); ++j) centered[j] = x[j] - mean_[j];
  std::vector<double> z;
  z.reserve(components_.size());
  for (const auto& c : components_) z.push_back(Dot(c, centered));
  return z;
}

Instance LinearCodec::Decode(std::span<const double> z) const {
  CheckWidth(z.size(), latent_width(), "latent vector");
  Instance x = mean_;
  for (size_t k = 0; k < components_.size(); ++k) {
    for (size_t j = 0; j < x.size(); ++j) x[j] += z[k] * components_[k][j];
  }
  return x;
}

std::shared_ptr<const Codec> MakeCodec(const std::string& spec,
                                       const Schema& schema,
                                       std::span<const Instance> rows,
                                       uint64_t seed) {
  const size_t colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  int arg = 0;
  if (colon != std::string::npos) {
    try {
      size_t used = 0;
      arg = std::stoi(spec.substr(colon + 1), &used);
      if (used != spec.size() - colon - 1) throw std::invalid_argument(spec);
    } catch (const std::exception&) {
      throw ConfigError("bad codec spec \"" + spec + "\"");
    }
  }
  if (name == "identity" && colon == std::string::npos) {
    return IdentityCodec::ForSchema(schema);
  }
  if (name == "kernel" && colon != std::string::npos) {
    if (schema.data_kind() == DataKind::kTabular) {
      throw ConfigError("kernel codec needs a series or image schema");
    }
    return std::make_shared<KernelCodec>(schema.width(), schema.height(), arg);
  }
  if (name == "linear" && colon != std::string::npos) {
    if (!schema.categorical().empty()) {
      throw ConfigError("linear codec needs an all-continuous schema");
    }
    return LinearCodec::Fit(rows, arg, seed);
  }
  throw ConfigError("bad codec spec \"" + spec + "\"");
}

LatentExplainer::LatentExplainer(
    std::shared_ptr<const CounterfactualExplainer> inner,
    std::shared_ptr<const Codec> codec)
    : inner_(std::move(inner)), codec_(std::move(codec)) {
  if (!inner_ || !codec_) throw ConfigError("latent explainer needs both parts");
}

std::vector<Counterfactual> LatentExplainer::Explain(
    const ExplainRequest& request) const {
  return Explain(request, nullptr);
}

std::vector<Counterfactual> LatentExplainer::Explain(
    const ExplainRequest& request, size_t* dropped_out) const {
  const Schema& schema = request.data.schema();
  if (codec_->input_width() != static_cast<int>(schema.size())) {
    throw ConfigError("codec width does not match the schema");
  }
  const std::vector<double> z_x = codec_->Encode(request.x);
  std::vector<Instance> latent_rows;
  latent_rows.reserve(request.known.size());
  for (const Instance& row : request.known) {
    latent_rows.push_back(codec_->Encode(row));
  }
  if (latent_rows.empty()) latent_rows.push_back(z_x);
  const Dataset latent(Schema::Continuous(codec_->latent_width()),
                       std::move(latent_rows));
  std::vector<int> all_latent(codec_->latent_width());
  for (int j = 0; j < codec_->latent_width(); ++j) all_latent[j] = j;

  const DecodingBlackBox latent_model(request.model, *codec_);
  const ExplainRequest latent_request{
      .x = z_x,
      .model = latent_model,
      .data = latent,
      .known = latent.instances(),
      .actionable = all_latent,
      .k = request.k,
      .seed = request.seed,
      .call_budget = request.call_budget,
  };
  const std::vector<Counterfactual> found = inner_->Explain(latent_request);

  // Decoding is lossy: re-check every answer with the original black box.
  std::vector<Instance> decoded;
  std::vector<ExplainerKind> sources;
  for (const Counterfactual& c : found) {
    Instance d = codec_->Decode(c.values);
    if (!schema.Conforms(d)) continue;
    if (std::find(decoded.begin(), decoded.end(), d) != decoded.end()) continue;
    decoded.push_back(std::move(d));
    sources.push_back(c.source);
  }
  std::vector<Counterfactual> out;
  size_t dropped = found.size() - decoded.size();
  if (!decoded.empty()) {
    const int x_label = request.model.Predict(request.x);
    const std::vector<int> labels = request.model.Predict(decoded);
    for (size_t i = 0; i < decoded.size(); ++i) {
      if (labels[i] == x_label) {
        ++dropped;
        continue;
      }
      out.push_back(MakeCounterfactual(std::move(decoded[i]), request.x,
                                       sources[i], request.data));
    }
  }
  if (dropped_out) *dropped_out = dropped;
  return out;
}

}  // namespace ensemblecf
