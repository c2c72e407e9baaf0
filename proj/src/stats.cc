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

#include "nodedp/stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "nodedp/common.h"

namespace nodedp::stats {

Moments ComputeMoments(std::span<const double> xs) {
  Moments m;
  if (xs.empty()) return m;
  const double n = static_cast<double>(xs.size());
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double c = x - m.mean;
    const double c2 = c * c;
    m2 += c2;
    m4 += c2 * c2;
  }
  m2 /= n;
  m4 /= n;
  m.stddev = std::sqrt(m2);
  m.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
  return m;
}

double Correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.empty()) throw ConfigError("Correlation: size mismatch");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

Interval ClopperPearson(std::int64_t successes, std::int64_t trials, double confidence) {
  if (trials <= 0 || successes < 0 || successes > trials) {
    throw ConfigError("ClopperPearson: need 0 <= successes <= trials, trials > 0");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("ClopperPearson: confidence in (0,1)");
  const double tail = (1.0 - confidence) / 2.0;
  const double x = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  Interval ci;
  ci.lo = successes == 0 ? 0.0 : boost::math::ibeta_inv(x, n - x + 1.0, tail);
  ci.hi = successes == trials ? 1.0 : boost::math::ibeta_inv(x + 1.0, n - x, 1.0 - tail);
  return ci;
}

ChiSquareResult ChiSquareGoodnessOfFit(std::span<const std::int64_t> observed,
                                       std::span<const double> expected_probs,
                                       double min_expected) {
  if (observed.size() != expected_probs.size() || observed.empty()) {
    throw ConfigError("ChiSquareGoodnessOfFit: size mismatch");
  }
  const double total =
      static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::int64_t{0}));
  std::vector<double> obs_cells, exp_cells;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += static_cast<double>(observed[i]);
    e_acc += expected_probs[i] * total;
    if (e_acc >= min_expected) {
      obs_cells.push_back(o_acc);
      exp_cells.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (obs_cells.empty()) {
      obs_cells.push_back(o_acc);
      exp_cells.push_back(e_acc);
    } else {
      obs_cells.back() += o_acc;
      exp_cells.back() += e_acc;
    }
  }
  ChiSquareResult r;
  for (std::size_t i = 0; i < obs_cells.size(); ++i) {
    const double d = obs_cells[i] - exp_cells[i];
    r.statistic += d * d / exp_cells[i];
  }
  r.dof = static_cast<int>(obs_cells.size()) - 1;
  if (r.dof <= 0) {
    r.dof = 0;
    r.p_value = 1.0;
    return r;
  }
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

double KolmogorovSurvival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

KsResult KsOneSample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw ConfigError("KsOneSample: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, KolmogorovSurvival((sn + 0.12 + 0.11 / sn) * d)};
}

KsResult KsTwoSample(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) throw ConfigError("KsTwoSample: empty sample");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double n = static_cast<double>(xs.size()), m = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xs.size() && j < ys.size()) {
    const double v = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] <= v) ++i;
    while (j < ys.size() && ys[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = std::sqrt(n * m / (n + m));
  return {d, KolmogorovSurvival((ne + 0.12 + 0.11 / ne) * d)};
}

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace nodedp::stats
