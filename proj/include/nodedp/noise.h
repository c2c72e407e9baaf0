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

#ifndef NODEDP_NOISE_H_
#define NODEDP_NOISE_H_

#include <string>

#include <Eigen/Dense>

#include "nodedp/random.h"

namespace nodedp {

enum class NoiseKind { kSml, kGaussian };

std::string ToString(NoiseKind kind);
NoiseKind ParseNoiseKind(const std::string& name);

// `sigma` is the coordinate-wise standard deviation: both kinds have
// covariance sigma^2 * I. sigma == 0 yields the zero vector.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::kSml;
  double sigma = 1.0;
  Eigen::Index dim = 1;

  void Validate() const;
};

// Symmetric multivariate Laplace: sqrt(W) * Z with one W ~ Exp(1) shared by
// all coordinates and Z ~ N(0, sigma^2 I). Spherical, not coordinate-wise
// independent.
Eigen::VectorXd SampleSml(const NoiseSpec& spec, Rng& rng);

Eigen::VectorXd SampleGaussian(const NoiseSpec& spec, Rng& rng);

Eigen::VectorXd SampleNoise(const NoiseSpec& spec, Rng& rng);

// Univariate marginal of SML: Laplace with standard deviation sigma,
// (1 / (sqrt2 sigma)) exp(-sqrt2 |x| / sigma).
double SmlMarginalDensity(double x, double sigma);
double SmlMarginalCdf(double x, double sigma);

}  // namespace nodedp

#endif  // NODEDP_NOISE_H_
