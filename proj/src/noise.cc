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

#include "nodedp/common.h"

namespace nodedp {

std::string ToString(NoiseKind kind) { return kind == NoiseKind::kSml ? "sml" : "gaussian"; }

NoiseKind ParseNoiseKind(const std::string& name) {
  if (name == "sml" || name == "laplace") return NoiseKind::kSml;
  if (name == "gaussian") return NoiseKind::kGaussian;
  throw ConfigError("unknown noise kind '" + name + "' (expected sml or gaussian)");
}

void NoiseSpec::Validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("noise: sigma must be finite and >= 0");
  if (dim < 1) throw ConfigError("noise: dim must be >= 1");
}

Eigen::VectorXd SampleGaussian(const NoiseSpec& spec, Rng& rng) {
  spec.Validate();
  if (spec.sigma == 0.0) return Eigen::VectorXd::Zero(spec.dim);
  std::normal_distribution<double> normal(0.0, spec.sigma);
  Eigen::VectorXd z(spec.dim);
  for (Eigen::Index i = 0; i < spec.dim; ++i) z[i] = normal(rng);
  return z;
}

Eigen::VectorXd SampleSml(const NoiseSpec& spec, Rng& rng) {
  spec.Validate();
  if (spec.sigma == 0.0) return Eigen::VectorXd::Zero(spec.dim);
  Eigen::VectorXd z = SampleGaussian(spec, rng);
  std::exponential_distribution<double> exp1(1.0);
  return std::sqrt(exp1(rng)) * z;
}

Eigen::VectorXd SampleNoise(const NoiseSpec& spec, Rng& rng) {
  return spec.kind == NoiseKind::kSml ? SampleSml(spec, rng) : SampleGaussian(spec, rng);
}

double SmlMarginalDensity(double x, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("SmlMarginalDensity: sigma must be > 0");
  return std::exp(-std::sqrt(2.0) * std::abs(x) / sigma) / (std::sqrt(2.0) * sigma);
}

double SmlMarginalCdf(double x, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("SmlMarginalCdf: sigma must be > 0");
  const double t = std::exp(-std::sqrt(2.0) * std::abs(x) / sigma);
  return x < 0.0 ? 0.5 * t : 1.0 - 0.5 * t;
}

}  // namespace nodedp
