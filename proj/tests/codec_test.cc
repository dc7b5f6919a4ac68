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

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "ensemblecf/blackbox.h"
#include "ensemblecf/errors.h"
#include "ensemblecf/fixtures.h"

namespace ensemblecf {
namespace {

Instance RandomImage(int pixels, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance x(pixels);
  for (double& v : x) v = u(rng);
  return x;
}

// Rows of rank `rank` in `m` dimensions, shifted by a constant mean.
std::vector<Instance> LowRank(int n, int m, int rank, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> basis(rank, std::vector<double>(m));
  for (auto& b : basis) {
    for (double& v : b) v = g(rng);
  }
  std::vector<Instance> rows;
  for (int i = 0; i < n; ++i) {
    Instance x(m, 0.0);
    for (int r = 0; r < rank; ++r) {
      const double w = g(rng) * (rank - r + 1);
      for (int j = 0; j < m; ++j) x[j] += w * basis[r][j];
    }
    for (int j = 0; j < m; ++j) x[j] += 0.5 * j;
    rows.push_back(std::move(x));
  }
  return rows;
}

double MaxAbsDiff(const Instance& a, const Instance& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

TEST(IdentityCodecTest, RoundTripIsExact) {
  const IdentityCodec codec(5);
  const Instance x = {1.5, -2, 0, 3.25, 1e9};
  const auto z = codec.Encode(x);
  EXPECT_EQ(z, x);
  EXPECT_EQ(codec.Decode(z), x);
  EXPECT_EQ(codec.latent_width(), 5);
  EXPECT_THROW(IdentityCodec(0), ConfigError);
  EXPECT_THROW(IdentityCodec::ForSchema(BlobFixture().schema()), ConfigError);
  EXPECT_THROW(codec.Encode(Instance{1, 2}), DataError);
}

TEST(KernelCodecTest, LatentSizes) {
  EXPECT_EQ(KernelCodec(28, 28, 4).latent_width(), 49);
  EXPECT_EQ(KernelCodec(28, 28, 7).latent_width(), 16);
  EXPECT_EQ(KernelCodec(8, 8, 3).latent_width(), 9);
  EXPECT_EQ(KernelCodec(24, 1, 4).latent_width(), 6);
  EXPECT_EQ(KernelCodec(28, 28, 4).name(), "kernel:4");
}

TEST(KernelCodecTest, TooLarge) {
  try {
    KernelCodec(8, 8, 8);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("kernel too large"),
              std::string::npos);
  }
  EXPECT_THROW(KernelCodec(24, 1, 24), ConfigError);
  EXPECT_NO_THROW(KernelCodec(24, 1, 23));
}

TEST(KernelCodecTest, AveragesCells) {
  const KernelCodec codec(4, 4, 2);
  Instance x(16);
  for (int i = 0; i < 16; ++i) x[i] = i;
  // Row-major 4x4: top-left cell holds 0, 1, 4, 5.
  const auto z = codec.Encode(x);
  EXPECT_EQ(z, (std::vector<double>{2.5, 4.5, 10.5, 12.5}));
  const Instance back = codec.Decode(z);
  EXPECT_DOUBLE_EQ(back[0], 2.5);
  EXPECT_DOUBLE_EQ(back[5], 2.5);
  EXPECT_DOUBLE_EQ(back[15], 12.5);
}

TEST(KernelCodecTest, EdgeCellsReplicate) {
  const KernelCodec codec(5, 1, 2);
  const auto z = codec.Encode(Instance{1, 3, 5, 7, 9});
  EXPECT_EQ(z, (std::vector<double>{2, 6, 9}));
  EXPECT_EQ(codec.Decode(z), (Instance{2, 2, 6, 6, 9}));
}

TEST(KernelCodecTest, EncodeDecodeEncodeIsStable) {
  for (const auto& [w, h, s] : std::vector<std::tuple<int, int, int>>{
           {28, 28, 4}, {28, 28, 7}, {8, 8, 3}, {24, 1, 5}, {10, 6, 4}}) {
    const KernelCodec codec(w, h, s);
    const Instance x = RandomImage(w * h, w + h + s);
    const auto z = codec.Encode(x);
    const auto again = codec.Encode(codec.Decode(z));
    ASSERT_EQ(z.size(), again.size());
    for (size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(z[i], again[i], 1e-12);
  }
}

TEST(LinearCodecTest, MatchesEigenDecomposition) {
  const int m = 10;
  const auto rows = LowRank(200, m, 3, 5);
  const auto codec = LinearCodec::Fit(rows, 3, 1);
  ASSERT_EQ(codec->latent_width(), 3);
  EXPECT_FALSE(codec->reduced());

  Eigen::MatrixXd data(rows.size(), m);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < m; ++j) data(i, j) = rows[i][j];
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  for (int j = 0; j < m; ++j) EXPECT_NEAR(codec->mean()[j], mean(j), 1e-9);
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(rows.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXd expected = solver.eigenvectors().col(m - 1 - c);
    double dot = 0.0;
    for (int j = 0; j < m; ++j) dot += expected(j) * codec->components()[c][j];
    EXPECT_NEAR(std::abs(dot), 1.0, 1e-6) << "component " << c;
  }
  for (const auto& component : codec->components()) {
    for (double v : component) {
      if (std::abs(v) > 1e-12) {
        EXPECT_GT(v, 0.0);
        break;
      }
    }
  }
  for (const Instance& x : rows) {
    EXPECT_LE(MaxAbsDiff(codec->Decode(codec->Encode(x)), x), 1e-6);
  }
}

TEST(LinearCodecTest, RankReduction) {
  const auto rows = LowRank(100, 8, 2, 9);
  const auto codec = LinearCodec::Fit(rows, 5, 1);
  EXPECT_EQ(codec->latent_width(), 2);
  EXPECT_TRUE(codec->reduced());
  EXPECT_EQ(codec->name(), "linear:2");
  for (const Instance& x : rows) {
    EXPECT_LE(MaxAbsDiff(codec->Decode(codec->Encode(x)), x), 1e-6);
  }
}

TEST(LinearCodecTest, Errors) {
  const auto rows = LowRank(20, 4, 2, 1);
  EXPECT_THROW(LinearCodec::Fit(rows, 0, 1), ConfigError);
  EXPECT_THROW(LinearCodec::Fit(rows, 5, 1), ConfigError);
  const std::vector<Instance> few(rows.begin(), rows.begin() + 3);
  EXPECT_THROW(LinearCodec::Fit(few, 3, 1), ConfigError);
  const std::vector<Instance> flat(10, Instance{1, 2, 3, 4});
  EXPECT_THROW(LinearCodec::Fit(flat, 1, 1), ConfigError);
}

TEST(MakeCodecTest, Specs) {
  const Dataset series = SeriesFixture(3, 60);
  const Dataset image = ImageFixture(3, 40);
  const Dataset blobs = BlobFixture(3, 40);
  EXPECT_EQ(MakeCodec("identity", series.schema(), series.instances(), 1)
                ->latent_width(),
            24);
  EXPECT_EQ(MakeCodec("kernel:2", image.schema(), image.instances(), 1)
                ->latent_width(),
            16);
  EXPECT_EQ(MakeCodec("kernel:4", series.schema(), series.instances(), 1)
                ->latent_width(),
            6);
  EXPECT_EQ(MakeCodec("linear:3", series.schema(), series.instances(), 1)
                ->kind(),
            CodecKind::kLinear);
  EXPECT_THROW(MakeCodec("kernel:2", blobs.schema(), blobs.instances(), 1),
               ConfigError);
  EXPECT_THROW(MakeCodec("linear:2", blobs.schema(), blobs.instances(), 1),
               ConfigError);
  EXPECT_THROW(MakeCodec("kernel:x", image.schema(), image.instances(), 1),
               ConfigError);
  EXPECT_THROW(MakeCodec("pca", image.schema(), image.instances(), 1),
               ConfigError);
}

class LatentExplainerTest
    : public ::testing::TestWithParam<std::pair<std::string, std::string>> {};

TEST_P(LatentExplainerTest, OutputsAreValidInTheOriginalSpace) {
  const auto& [fixture, spec] = GetParam();
  const Dataset data = MakeFixture(fixture, 5);
  const auto forest = ForestModel::Fit(data, {.n_trees = 8, .seed = 5});
  const auto codec = MakeCodec(spec, data.schema(), data.instances(), 5);
  const LatentExplainer explainer(
      std::make_shared<SphereExplainer>(SphereConfig{}), codec);
  size_t found = 0;
  for (size_t i = 0; i < 4; ++i) {
    const Instance& x = data.instance(i);
    const ExplainRequest request{.x = x,
                                 .model = *forest,
                                 .data = data,
                                 .known = data.instances(),
                                 .actionable =
                                     data.schema().ActionableFeatures(),
                                 .k = 3,
                                 .seed = 40 + i};
    size_t dropped = 0;
    const auto cfs = explainer.Explain(request, &dropped);
    const int x_label = forest->Predict(x);
    for (const Counterfactual& c : cfs) {
      EXPECT_NE(forest->Predict(c.values), x_label);
      EXPECT_TRUE(data.schema().Conforms(c.values));
      EXPECT_EQ(c.values.size(), x.size());
    }
    found += cfs.size();
  }
  EXPECT_GT(found, 0u);
}

INSTANTIATE_TEST_SUITE_P(
    Codecs, LatentExplainerTest,
    ::testing::Values(std::make_pair("series", "identity"),
                      std::make_pair("series", "kernel:4"),
                      std::make_pair("series", "linear:4"),
                      std::make_pair("image", "kernel:2"),
                      std::make_pair("image", "linear:6")));

TEST(LatentExplainerTest, WidthMismatch) {
  const Dataset data = SeriesFixture(2, 40);
  const FunctionBlackBox model([](const Instance& x) { return x[0] > 0; }, 2);
  const LatentExplainer explainer(std::make_shared<SphereExplainer>(
                                      SphereConfig{}),
                                  std::make_shared<IdentityCodec>(5));
  const ExplainRequest request{.x = data.instance(0),
                               .model = model,
                               .data = data,
                               .known = data.instances(),
                               .actionable = data.schema().ActionableFeatures(),
                               .k = 2};
  EXPECT_THROW(explainer.Explain(request), ConfigError);
}

}  // namespace
}  // namespace ensemblecf
