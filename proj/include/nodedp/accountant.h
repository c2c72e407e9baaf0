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

#ifndef NODEDP_ACCOUNTANT_H_
#define NODEDP_ACCOUNTANT_H_

#include <optional>
#include <vector>

#include "json.hpp"
#include "nodedp/noise.h"

namespace nodedp {

// Distribution of the sensitivity index k between adjacent runs: k = 0.5 when
// the differing node is a central, integer k when it is a peripheral of k
// sub-graphs (and k + 0.5 for both at once when overlap is not enforced).
struct RhoPmf {
  std::vector<double> support;
  std::vector<double> log_probs;

  double probability(std::size_t i) const;
  double ProbabilityOf(double k) const;  // 0 if k is not in the support
  double TotalMass() const;
};

// Per-edge probability that a given out-neighbor of the differing node is a
// central AND samples it: q_b * min(1, M / D_out). Zero when D_out == 0.
double NeighborSuccessProbability(int d_out, double base_rate, double multiplier);

// Log of the binomial PMF, exact at the boundaries p = 0 and p = 1.
double LogBinomialPmf(int k, int n, double p);

RhoPmf RhoPmfEnforced(int d_out, double base_rate, double multiplier);
RhoPmf RhoPmfNoEnforce(int d_out, double base_rate, double multiplier);
RhoPmf RhoPmfFor(bool enforce_no_overlap, int d_out, double base_rate, double multiplier);

// Renyi divergence of order alpha between two univariate Laplace laws with
// standard deviation sigma whose means are k apart. Evaluated in log space.
double LaplaceRenyiDivergence(double k, double alpha, double sigma);

// B_k = alpha e^{sqrt2 (alpha-1) k / sigma} / (2 alpha - 1) + 1/2, an upper
// bound on exp((alpha-1) * LaplaceRenyiDivergence(k, alpha, sigma)).
double LogBkSml(double k, double alpha, double sigma);
double BkSml(double k, double alpha, double sigma);  // throws NumericError on overflow

// exp((alpha-1) D_alpha) for two Gaussians k apart: alpha (alpha-1) k^2 / (2 sigma^2) in log.
double LogBkGaussian(double k, double alpha, double sigma);

std::vector<double> DefaultAlphaGrid();  // 1.1, 1.2, ..., 10.0

struct AccountantConfig {
  double base_rate = 0.01;  // q_b
  double multiplier = 1.0;  // M
  int iterations = 1;       // T
  double delta = 1e-5;
  std::vector<double> alpha_grid = DefaultAlphaGrid();
  int max_dout = 0;  // usually |G| - 1
  bool enforce_no_overlap = true;
  NoiseKind noise = NoiseKind::kSml;

  void Validate() const;
};

// log E_{k ~ rho(d_out)}[B_k] by direct summation over the PMF support.
double LogExpectedBk(const AccountantConfig& cfg, int d_out, double alpha, double sigma);

// Same quantity for SML via the binomial moment generating function,
// E[e^{c k}] = (1 - p + p e^c)^D. O(1) per out-degree.
double LogExpectedBkSmlClosedForm(const AccountantConfig& cfg, int d_out, double alpha, double sigma);

struct GammaResult {
  double gamma = 0.0;
  int argmax_dout = 0;
  // Set when the scan stopped early because gamma already exceeded the
  // caller's threshold; gamma is then a lower bound.
  bool stopped_early = false;
};

// gamma = T / (alpha - 1) * max_{D in [0, max_dout]} log E_{rho(D)}[B_k].
GammaResult RdpGamma(const AccountantConfig& cfg, double alpha, double sigma,
                     std::optional<double> stop_above = std::nullopt);

// epsilon = gamma + log((alpha-1)/alpha) - (log delta + log alpha) / (alpha-1),
// with gamma already composed over T iterations.
double RdpToDp(double gamma, double alpha, double delta);

struct PrivacyGuarantee {
  double epsilon = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  int argmax_dout = 0;
};

// Best (smallest) epsilon over the alpha grid.
PrivacyGuarantee ComputeEpsilon(const AccountantConfig& cfg, double sigma);

struct Calibration {
  double sigma = 0.0;
  PrivacyGuarantee guarantee;
};

inline constexpr double kMinCalibratedSigma = 1e-3;
inline constexpr double kMaxCalibratedSigma = 1e6;
inline constexpr double kCalibrationRelTol = 1e-3;

// Smallest sigma in [1e-3, 1e6] (to relative tolerance 1e-3) whose best
// epsilon is <= eps_target. Throws CalibrationError when unreachable.
Calibration CalibrateSigma(double eps_target, const AccountantConfig& cfg);

// Gaussian sigma whose A_k exponent alpha (alpha-1) k^2 / (2 sigma^2) equals
// the SML exponent sqrt2 (alpha-1) k / sigma_sml.
double GaussianSigmaToMatchAk(double k, double alpha, double sigma_sml);

// Ceiling on per-class precision of any class-aligned classifier that reads
// (eps, delta)-DP per-node embeddings: (e^eps + delta (C-1)) / (C-1 + e^eps).
double PrecisionUpperBound(double eps, double delta, int num_classes);

nlohmann::json ToJson(const PrivacyGuarantee& g);

}  // namespace nodedp

#endif  // NODEDP_ACCOUNTANT_H_
