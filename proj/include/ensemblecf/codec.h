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

// Encoder/decoder pairs that let any explainer search a continuous latent
// space. A wrapped explainer runs on (encode(x), b o decode, encode(X)) with
// every latent feature actionable, decodes what it finds and keeps only the
// instances the original black box still sees as counterfactuals.

#ifndef ENSEMBLECF_CODEC_H_
#define ENSEMBLECF_CODEC_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ensemblecf/explainers.h"
#include "ensemblecf/schema.h"

namespace ensemblecf {

enum class CodecKind { kIdentity, kKernel, kLinear };

class Codec {
 public:
  virtual ~Codec() = default;

  virtual std::vector<double> Encode(const Instance& x) const = 0;
  virtual Instance Decode(std::span<const double> z) const = 0;

  virtual CodecKind kind() const = 0;
  virtual int input_width() const = 0;
  virtual int latent_width() const = 0;
  virtual std::string name() const = 0;
};

class IdentityCodec : public Codec {
 public:
  // Throws ConfigError when m < 1.
  explicit IdentityCodec(int m);
  // Throws ConfigError on schemas with categorical features.
  static std::unique_ptr<IdentityCodec> ForSchema(const Schema& schema);

  std::vector<double> Encode(const Instance& x) const override;
  Instance Decode(std::span<const double> z) const override;
  CodecKind kind() const override { return CodecKind::kIdentity; }
  int input_width() const override { return m_; }
  int latent_width() const override { return m_; }
  std::string name() const override { return "identity"; }

 private:
  int m_;
};

// Average pooling over s x s cells with stride s (length-s windows when
// height == 1), edge cells padded by replicating the last row/column.
// Decoding is nearest-neighbor upsampling.
class KernelCodec : public Codec {
 public:
  // Throws ConfigError "kernel too large" when s >= min(width, height)
  // (s >= width for series).
  KernelCodec(int width, int height, int s);

  std::vector<double> Encode(const Instance& x) const override;
  Instance Decode(std::span<const double> z) const override;
  CodecKind kind() const override { return CodecKind::kKernel; }
  int input_width() const override { return width_ * height_; }
  int latent_width() const override { return cells_x_ * cells_y_; }
  std::string name() const override {
    return "kernel:" + std::to_string(s_);
  }

 private:
  int width_;
  int height_;
  int s_;
  int cells_x_;
  int cells_y_;
};

// Projection on the top-q principal directions of the training rows, found by
// power iteration with deflation. Decoding maps back through the transposed
// basis and adds the mean.
class LinearCodec : public Codec {
 public:
  // Throws ConfigError when q < 1, q > m or |rows| <= q. When the data has
  // rank < q, q shrinks to the rank and `reduced()` reports it.
  static std::unique_ptr<LinearCodec> Fit(std::span<const Instance> rows,
                                          int q, uint64_t seed);

  std::vector<double> Encode(const Instance& x) const override;
  Instance Decode(std::span<const double> z) const override;
  CodecKind kind() const override { return CodecKind::kLinear; }
  int input_width() const override { return static_cast<int>(mean_.size()); }
  int latent_width() const override {
    return static_cast<int>(components_.size());
  }
  std::string name() const override {
    return "linear:" + std::to_string(latent_width());
  }

  // Orthonormal rows; first nonzero entry of each is positive.
  const std::vector<std::vector<double>>& components() const {
    return components_;
  }
  const std::vector<double>& mean() const { return mean_; }
  bool reduced() const { return requested_ != latent_width(); }

 private:
  LinearCodec() = default;

  std::vector<double> mean_;
  std::vector<std::vector<double>> components_;
  int requested_ = 0;
};

// Parses "identity", "kernel:S" or "linear:Q". Kernel codecs need an image or
// series schema; the linear codec is fitted on `rows`.
std::shared_ptr<const Codec> MakeCodec(const std::string& spec,
                                       const Schema& schema,
                                       std::span<const Instance> rows,
                                       uint64_t seed);

// Runs `inner` in the latent space of `codec`.
class LatentExplainer : public CounterfactualExplainer {
 public:
  LatentExplainer(std::shared_ptr<const CounterfactualExplainer> inner,
                  std::shared_ptr<const Codec> codec);

  // Throws ConfigError when the codec width does not match the schema.
  // Decoded counterfactuals that are not valid under the original black box
  // are dropped; their count goes to `dropped_out` when non-null.
  std::vector<Counterfactual> Explain(
      const ExplainRequest& request) const override;
  std::vector<Counterfactual> Explain(const ExplainRequest& request,
                                      size_t* dropped_out) const;
  std::string name() const override {
    return inner_->name() + "@" + codec_->name();
  }

 private:
  std::shared_ptr<const CounterfactualExplainer> inner_;
  std::shared_ptr<const Codec> codec_;
};

}  // namespace ensemblecf

#endif  // ENSEMBLECF_CODEC_H_
