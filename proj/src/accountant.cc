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

#include "nodedp/accountant.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nodedp/common.h"

namespace nodedp {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAddExp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Streaming log-sum-exp.
class LogSumAccumulator {
 public:
  void Add(double x) {
    if (x == kNegInf) return;
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }
  double Result() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

void CheckAlphaSigma(double alpha, double sigma) {
  if (!(alpha > 1.0)) throw ConfigError("alpha must be > 1");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
}

// Calls visit(k, log Bi(k; n, p)) for k = 0..n, skipping zero-mass terms.
template <typename Visit>
void ForEachLogBinomial(int n, double p, Visit&& visit) {
  if (p <= 0.0) {
    visit(0, 0.0);
    return;
  }
  if (p >= 1.0) {
    visit(n, 0.0);
    return;
  }
  const double log_odds = std::log(p) - std::log1p(-p);
  double lb = n * std::log1p(-p);
  for (int k = 0; k <= n; ++k) {
    visit(k, lb);
    if (k < n) lb += std::log(static_cast<double>(n - k) / static_cast<double>(k + 1)) + log_odds;
  }
}

template <typename LogB>
double LogExpectationOverRho(bool enforce, int d_out, double q_b, double m, LogB&& log_b) {
  const double p = NeighborSuccessProbability(d_out, q_b, m);
  const double log_q = q_b > 0.0 ? std::log(q_b) : kNegInf;
  const double log_1mq = q_b < 1.0 ? std::log1p(-q_b) : kNegInf;
  LogSumAccumulator acc;
  if (enforce) {
    acc.Add(log_q + log_b(0.5));
    ForEachLogBinomial(d_out, p, [&](int k, double lb) { acc.Add(log_1mq + lb + log_b(k)); });
  } else {
    ForEachLogBinomial(d_out, p, [&](int k, double lb) {
      acc.Add(log_1mq + lb + log_b(k));
      acc.Add(log_q + lb + log_b(k + 0.5));
    });
  }
  return acc.Result();
}

}  // namespace

double RhoPmf::probability(std::size_t i) const { return std::exp(log_probs.at(i)); }

double RhoPmf::ProbabilityOf(double k) const {
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] == k) total += std::exp(log_probs[i]);
  }
  return total;
}

double RhoPmf::TotalMass() const {
  double total = 0.0;
  for (double lp : log_probs) total += std::exp(lp);
  return total;
}

double NeighborSuccessProbability(int d_out, double base_rate, double multiplier) {
  if (d_out <= 0 || multiplier <= 0.0) return 0.0;
  return base_rate * std::min(1.0, multiplier / d_out);
}

double LogBinomialPmf(int k, int n, double p) {
  if (k < 0 || k > n) return kNegInf;
  if (p <= 0.0) return k == 0 ? 0.0 : kNegInf;
  if (p >= 1.0) return k == n ? 0.0 : kNegInf;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
         (n - k) * std::log1p(-p);
}

namespace {

void CheckRhoArgs(int d_out, double q_b, double m) {
  if (d_out < 0) throw ConfigError("rho: out-degree must be >= 0, got " + std::to_string(d_out));
  if (!(q_b >= 0.0 && q_b <= 1.0)) throw ConfigError("rho: q_b must be in [0, 1]");
  if (!(m >= 0.0)) throw ConfigError("rho: M must be >= 0");
}

}  // namespace

RhoPmf RhoPmfEnforced(int d_out, double q_b, double m) {
  CheckRhoArgs(d_out, q_b, m);
  const double p = NeighborSuccessProbability(d_out, q_b, m);
  const double log_1mq = q_b < 1.0 ? std::log1p(-q_b) : kNegInf;
  RhoPmf pmf;
  for (int k = 0; k <= d_out; ++k) {
    pmf.support.push_back(k);
    pmf.log_probs.push_back(log_1mq + LogBinomialPmf(k, d_out, p));
  }
  pmf.support.push_back(0.5);
  pmf.log_probs.push_back(q_b > 0.0 ? std::log(q_b) : kNegInf);
  return pmf;
}

RhoPmf RhoPmfNoEnforce(int d_out, double q_b, double m) {
  CheckRhoArgs(d_out, q_b, m);
  const double p = NeighborSuccessProbability(d_out, q_b, m);
  const double log_q = q_b > 0.0 ? std::log(q_b) : kNegInf;
  const double log_1mq = q_b < 1.0 ? std::log1p(-q_b) : kNegInf;
  RhoPmf pmf;
  for (int k = 0; k <= d_out; ++k) {
    pmf.support.push_back(k);
    pmf.log_probs.push_back(log_1mq + LogBinomialPmf(k, d_out, p));
  }
  for (int k = 0; k <= d_out; ++k) {
    pmf.support.push_back(k + 0.5);
    pmf.log_probs.push_back(log_q + LogBinomialPmf(k, d_out, p));
  }
  return pmf;
}

RhoPmf RhoPmfFor(bool enforce_no_overlap, int d_out, double q_b, double m) {
  return enforce_no_overlap ? RhoPmfEnforced(d_out, q_b, m) : RhoPmfNoEnforce(d_out, q_b, m);
}

double LaplaceRenyiDivergence(double k, double alpha, double sigma) {
  CheckAlphaSigma(alpha, sigma);
  k = std::abs(k);
  if (k == 0.0) return 0.0;
  const double x = std::sqrt(2.0) * k / sigma;
  const double log_bracket = LogAddExp(std::log(alpha / (2.0 * alpha - 1.0)) + (alpha - 1.0) * x,
                                       std::log((alpha - 1.0) / (2.0 * alpha - 1.0)) - alpha * x);
  return log_bracket / (alpha - 1.0);
}

double LogBkSml(double k, double alpha, double sigma) {
  CheckAlphaSigma(alpha, sigma);
  return LogAddExp(std::log(alpha / (2.0 * alpha - 1.0)) + std::sqrt(2.0) * (alpha - 1.0) * k / sigma,
                   std::log(0.5));
}

double BkSml(double k, double alpha, double sigma) {
  const double b = std::exp(LogBkSml(k, alpha, sigma));
  if (!std::isfinite(b)) throw NumericError("B_k overflows; use LogBkSml");
  return b;
}

double LogBkGaussian(double k, double alpha, double sigma) {
  CheckAlphaSigma(alpha, sigma);
  return alpha * (alpha - 1.0) * k * k / (2.0 * sigma * sigma);
}

std::vector<double> DefaultAlphaGrid() {
  std::vector<double> grid;
  for (int i = 11; i <= 100; ++i) grid.push_back(i / 10.0);
  return grid;
}

void AccountantConfig::Validate() const {
  if (!(base_rate > 0.0 && base_rate <= 1.0)) throw ConfigError("accountant: q_b must be in (0, 1]");
  if (!(multiplier >= 0.0)) throw ConfigError("accountant: M must be >= 0");
  if (iterations < 0) throw ConfigError("accountant: T must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("accountant: delta must be in (0, 1)");
  if (alpha_grid.empty()) throw ConfigError("accountant: empty alpha grid");
  for (double a : alpha_grid) {
    if (!(a > 1.0)) throw ConfigError("accountant: alpha values must be > 1");
  }
  if (max_dout < 0) throw ConfigError("accountant: max_dout must be >= 0");
}

double LogExpectedBk(const AccountantConfig& cfg, int d_out, double alpha, double sigma) {
  CheckAlphaSigma(alpha, sigma);
  CheckRhoArgs(d_out, cfg.base_rate, cfg.multiplier);
  if (cfg.noise == NoiseKind::kSml) {
    const double log_a = std::log(alpha / (2.0 * alpha - 1.0));
    const double c = std::sqrt(2.0) * (alpha - 1.0) / sigma;
    const double log_half = std::log(0.5);
    return LogExpectationOverRho(cfg.enforce_no_overlap, d_out, cfg.base_rate, cfg.multiplier,
                                 [&](double k) { return LogAddExp(log_a + c * k, log_half); });
  }
  const double c = alpha * (alpha - 1.0) / (2.0 * sigma * sigma);
  return LogExpectationOverRho(cfg.enforce_no_overlap, d_out, cfg.base_rate, cfg.multiplier,
                               [&](double k) { return c * k * k; });
}

double LogExpectedBkSmlClosedForm(const AccountantConfig& cfg, int d_out, double alpha, double sigma) {
  CheckAlphaSigma(alpha, sigma);
  CheckRhoArgs(d_out, cfg.base_rate, cfg.multiplier);
  const double q = cfg.base_rate;
  const double p = NeighborSuccessProbability(d_out, q, cfg.multiplier);
  const double log_a = std::log(alpha / (2.0 * alpha - 1.0));
  const double log_half = std::log(0.5);
  const double c = std::sqrt(2.0) * (alpha - 1.0) / sigma;
  // log E_Bin[e^{c k}] = D log(1 - p + p e^c)
  double log_mgf = 0.0;
  if (d_out > 0 && p > 0.0) {
    const double log_1mp = p < 1.0 ? std::log1p(-p) : kNegInf;
    log_mgf = d_out * LogAddExp(log_1mp, std::log(p) + c);
  }
  const double log_q = q > 0.0 ? std::log(q) : kNegInf;
  const double log_1mq = q < 1.0 ? std::log1p(-q) : kNegInf;
  const double neighbor_part = LogAddExp(log_a + log_mgf, log_half);  // E_Bin[B_k]
  if (cfg.enforce_no_overlap) {
    return LogAddExp(log_1mq + neighbor_part, log_q + LogBkSml(0.5, alpha, sigma));
  }
  const double shifted_part = LogAddExp(log_a + 0.5 * c + log_mgf, log_half);  // E_Bin[B_{k+0.5}]
  return LogAddExp(log_1mq + neighbor_part, log_q + shifted_part);
}

GammaResult RdpGamma(const AccountantConfig& cfg, double alpha, double sigma, std::optional<double> stop_above) {
  cfg.Validate();
  CheckAlphaSigma(alpha, sigma);
  GammaResult result;
  if (cfg.iterations == 0) return result;
  const double scale = cfg.iterations / (alpha - 1.0);
  double best = kNegInf;
  // Large out-degrees dominate for Gaussian noise, so scan from the top; the
  // early exit then triggers after a single O(max_dout) evaluation.
  for (int d = cfg.max_dout; d >= 0; --d) {
    const double v = cfg.noise == NoiseKind::kSml ? LogExpectedBkSmlClosedForm(cfg, d, alpha, sigma)
                                                  : LogExpectedBk(cfg, d, alpha, sigma);
    if (std::isnan(v)) throw NumericError("log E[B_k] is NaN at D_out=" + std::to_string(d));
    if (v > best) {
      best = v;
      result.argmax_dout = d;
    }
    if (stop_above && scale * best > *stop_above) {
      result.stopped_early = true;
      break;
    }
  }
  result.gamma = scale * best;
  if (!std::isfinite(result.gamma)) {
    throw NumericError("RDP gamma is not finite (alpha=" + std::to_string(alpha) +
                       ", sigma=" + std::to_string(sigma) + ")");
  }
  return result;
}

double RdpToDp(double gamma, double alpha, double delta) {
  if (!(alpha > 1.0)) throw ConfigError("RdpToDp: alpha must be > 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("RdpToDp: delta must be in (0, 1)");
  return gamma + std::log((alpha - 1.0) / alpha) - (std::log(delta) + std::log(alpha)) / (alpha - 1.0);
}

PrivacyGuarantee ComputeEpsilon(const AccountantConfig& cfg, double sigma) {
  cfg.Validate();
  PrivacyGuarantee best;
  best.epsilon = std::numeric_limits<double>::infinity();
  best.delta = cfg.delta;
  for (double alpha : cfg.alpha_grid) {
    // An alpha whose gamma exceeds this budget cannot beat the current best.
    std::optional<double> budget;
    if (std::isfinite(best.epsilon)) budget = best.epsilon - RdpToDp(0.0, alpha, cfg.delta);
    const GammaResult g = RdpGamma(cfg, alpha, sigma, budget);
    if (g.stopped_early) continue;
    const double eps = RdpToDp(g.gamma, alpha, cfg.delta);
    if (eps < best.epsilon) {
      best.epsilon = eps;
      best.alpha = alpha;
      best.gamma = g.gamma;
      best.argmax_dout = g.argmax_dout;
    }
  }
  return best;
}

namespace {

// True when some alpha in the grid certifies eps_target at this sigma.
bool MeetsTarget(const AccountantConfig& cfg, double sigma, double eps_target) {
  for (double alpha : cfg.alpha_grid) {
    const double gamma_budget =
        eps_target - std::log((alpha - 1.0) / alpha) + (std::log(cfg.delta) + std::log(alpha)) / (alpha - 1.0);
    if (gamma_budget < 0.0) continue;
    const GammaResult g = RdpGamma(cfg, alpha, sigma, gamma_budget);
    if (!g.stopped_early && g.gamma <= gamma_budget) return true;
  }
  return false;
}

}  // namespace

Calibration CalibrateSigma(double eps_target, const AccountantConfig& cfg) {
  cfg.Validate();
  if (!(eps_target > 0.0) || !std::isfinite(eps_target)) {
    throw CalibrationError("target epsilon must be finite and > 0");
  }
  auto ok = [&](double s) { return MeetsTarget(cfg, s, eps_target); };
  if (!ok(kMaxCalibratedSigma)) {
    throw CalibrationError("epsilon=" + std::to_string(eps_target) + " is unreachable for sigma <= 1e6 (T=" +
                           std::to_string(cfg.iterations) + ", q_b=" + std::to_string(cfg.base_rate) +
                           ", delta=" + std::to_string(cfg.delta) +
                           ", largest alpha=" + std::to_string(*std::max_element(cfg.alpha_grid.begin(), cfg.alpha_grid.end())) +
                           "); the alpha grid or T bounds the reachable epsilon");
  }
  double lo, hi;
  if (ok(1.0)) {
    hi = 1.0;
    lo = 0.5;
    while (lo > kMinCalibratedSigma && ok(lo)) {
      hi = lo;
      lo /= 2.0;
    }
    if (lo <= kMinCalibratedSigma) {
      lo = kMinCalibratedSigma;
      if (ok(lo)) hi = lo;
    }
  } else {
    lo = 1.0;
    hi = 2.0;
    while (!ok(hi)) {
      lo = hi;
      hi = std::min(hi * 2.0, kMaxCalibratedSigma);
    }
  }
  while (hi - lo > kCalibrationRelTol * hi) {
    const double mid = std::sqrt(lo * hi);
    if (ok(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  Calibration c;
  c.sigma = hi;
  c.guarantee = ComputeEpsilon(cfg, hi);
  return c;
}

double GaussianSigmaToMatchAk(double k, double alpha, double sigma_sml) {
  if (!(k > 0.0)) throw ConfigError("GaussianSigmaToMatchAk: k must be > 0");
  if (!(alpha > 1.0) || !(sigma_sml > 0.0)) throw ConfigError("GaussianSigmaToMatchAk: need alpha > 1, sigma > 0");
  return std::sqrt(alpha * k * sigma_sml / (2.0 * std::sqrt(2.0)));
}

double PrecisionUpperBound(double eps, double delta, int num_classes) {
  if (num_classes < 2) throw ConfigError("PrecisionUpperBound: need C >= 2");
  if (!(eps >= 0.0)) throw ConfigError("PrecisionUpperBound: need eps >= 0");
  if (!(delta >= 0.0 && delta < 1.0)) throw ConfigError("PrecisionUpperBound: need 0 <= delta < 1");
  const double c1 = num_classes - 1.0;
  if (!std::isfinite(eps)) return 1.0;
  // Divide through by e^eps to stay finite for large eps.
  const double inv = std::exp(-eps);
  return std::min(1.0, (1.0 + delta * c1 * inv) / (c1 * inv + 1.0));
}

nlohmann::json ToJson(const PrivacyGuarantee& g) {
  return {{"epsilon", g.epsilon}, {"delta", g.delta}, {"alpha", g.alpha}, {"gamma", g.gamma},
          {"argmax_dout", g.argmax_dout}};
}

}  // namespace nodedp
