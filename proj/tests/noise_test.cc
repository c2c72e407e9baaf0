/*
 * Copyright 2026 The nodedp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "nodedp/noise.h"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "nodedp/common.h"
#include "nodedp/stats.h"

namespace nodedp {
namespace {

std::vector<double> Coordinate(NoiseKind kind, double sigma, Eigen::Index dim, int n, std::uint64_t seed,
                               Eigen::Index coord = 0) {
  Rng rng = MakeRng(seed, Stream::kNoise);
  const NoiseSpec spec{kind, sigma, dim};
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (double& x : xs) x = SampleNoise(spec, rng)[coord];
  return xs;
}

TEST(NoiseTest, ZeroSigmaGivesZeroVector) {
  Rng rng = MakeRng(1, Stream::kNoise);
  EXPECT_TRUE(SampleSml({NoiseKind::kSml, 0.0, 5}, rng).isZero());
  EXPECT_TRUE(SampleGaussian({NoiseKind::kGaussian, 0.0, 5}, rng).isZero());
}

TEST(NoiseTest, InvalidSpecRejected) {
  Rng rng = MakeRng(1, Stream::kNoise);
  EXPECT_THROW(SampleSml({NoiseKind::kSml, -1.0, 5}, rng), ConfigError);
  EXPECT_THROW(SampleSml({NoiseKind::kSml, 1.0, 0}, rng), ConfigError);
}

TEST(NoiseTest, ParseKinds) {
  EXPECT_EQ(ParseNoiseKind("sml"), NoiseKind::kSml);
  EXPECT_EQ(ParseNoiseKind("laplace"), NoiseKind::kSml);
  EXPECT_EQ(ParseNoiseKind("gaussian"), NoiseKind::kGaussian);
  EXPECT_THROW(ParseNoiseKind("cauchy"), ConfigError);
}

TEST(SmlTest, StdDevAndKurtosis) {
  const double sigma = 2.0;
  const stats::Moments m = stats::ComputeMoments(Coordinate(NoiseKind::kSml, sigma, 1, 1000000, 3));
  EXPECT_NEAR(m.mean, 0.0, 0.01);
  EXPECT_NEAR(m.stddev, sigma, 0.01 * sigma);
  EXPECT_NEAR(m.kurtosis, 6.0, 0.2);
}

TEST(SmlTest, SharedScaleCouplesCoordinates) {
  Rng rng = MakeRng(4, Stream::kNoise);
  const NoiseSpec spec{NoiseKind::kSml, 1.0, 2};
  const int n = 1000000;
  std::vector<double> x1(n), x2(n), s1(n), s2(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd v = SampleSml(spec, rng);
    x1[i] = v[0];
    x2[i] = v[1];
    s1[i] = v[0] * v[0];
    s2[i] = v[1] * v[1];
  }
  EXPECT_NEAR(stats::Correlation(x1, x2), 0.0, 0.005);
  // Cov(x1^2, x2^2) = sigma^4 Var(W) = sigma^4 and Var(x^2) = 5 sigma^4.
  EXPECT_NEAR(stats::Correlation(s1, s2), 0.2, 0.05);
}

TEST(SmlTest, MarginalMatchesLaplaceDensity) {
  const double sigma = 1.5;
  const std::vector<double> xs = Coordinate(NoiseKind::kSml, sigma, 4, 1000000, 5, 2);
  const int bins = 80;
  const double lo = -8.0 * sigma, hi = 8.0 * sigma, w = (hi - lo) / bins;
  std::vector<std::int64_t> observed(bins + 2, 0);
  for (double x : xs) {
    const int b = x < lo ? 0 : x >= hi ? bins + 1 : 1 + static_cast<int>((x - lo) / w);
    ++observed[static_cast<std::size_t>(std::min(b, bins + 1))];
  }
  std::vector<double> probs(bins + 2);
  probs[0] = SmlMarginalCdf(lo, sigma);
  for (int b = 0; b < bins; ++b) {
    probs[static_cast<std::size_t>(b) + 1] = SmlMarginalCdf(lo + (b + 1) * w, sigma) - SmlMarginalCdf(lo + b * w, sigma);
  }
  probs[bins + 1] = 1.0 - SmlMarginalCdf(hi, sigma);
  EXPECT_GT(stats::ChiSquareGoodnessOfFit(observed, probs).p_value, 0.01);
}

TEST(SmlTest, RotationInvariant) {
  // A projection on a random unit direction has the same law as a coordinate.
  Rng rng = MakeRng(6, Stream::kNoise);
  const NoiseSpec spec{NoiseKind::kSml, 1.0, 3};
  Eigen::Vector3d u(0.3, -0.5, 0.8);
  u.normalize();
  const int n = 200000;
  std::vector<double> coord(n), proj(n);
  for (int i = 0; i < n; ++i) coord[i] = SampleSml(spec, rng)[0];
  for (int i = 0; i < n; ++i) proj[i] = u.dot(SampleSml(spec, rng));
  EXPECT_GT(stats::KsTwoSample(coord, proj).p_value, 0.01);
}

TEST(SmlTest, DensityAndCdf) {
  EXPECT_NEAR(SmlMarginalDensity(0.0, 1.0), 1.0 / std::sqrt(2.0), 1e-12);
  const double sigma = 0.7;
  const int steps = 400000;
  const double a = -20 * sigma, h = 40 * sigma / steps;
  double integral = 0.0;
  for (int i = 0; i < steps; ++i) integral += SmlMarginalDensity(a + (i + 0.5) * h, sigma) * h;
  EXPECT_NEAR(integral, 1.0, 1e-6);
  EXPECT_DOUBLE_EQ(SmlMarginalCdf(0.0, sigma), 0.5);
  EXPECT_NEAR(SmlMarginalCdf(1.0, sigma) + SmlMarginalCdf(-1.0, sigma), 1.0, 1e-15);
}

TEST(GaussianTest, KurtosisAndNorm) {
  const stats::Moments m = stats::ComputeMoments(Coordinate(NoiseKind::kGaussian, 1.0, 1, 1000000, 7));
  EXPECT_NEAR(m.kurtosis, 3.0, 0.1);
  Rng rng = MakeRng(8, Stream::kNoise);
  const NoiseSpec spec{NoiseKind::kGaussian, 1.0, 2};
  double total = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) total += SampleGaussian(spec, rng).squaredNorm();
  EXPECT_NEAR(total / n, 2.0, 0.02);
}

TEST(NoiseTest, SeedDeterminism) {
  const NoiseSpec spec{NoiseKind::kSml, 1.0, 10};
  Rng a = MakeRng(9, Stream::kNoise);
  Rng b = MakeRng(9, Stream::kNoise);
  Rng c = MakeRng(10, Stream::kNoise);
  const Eigen::VectorXd va = SampleSml(spec, a);
  EXPECT_EQ(va, SampleSml(spec, b));
  EXPECT_NE(va, SampleSml(spec, c));
}

}  // namespace
}  // namespace nodedp
