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

#ifndef NODEDP_STATS_H_
#define NODEDP_STATS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace nodedp::stats {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
  // Non-excess kurtosis: E[(x-mean)^4] / var^2 (3 for a Gaussian).
  double kurtosis = 0.0;
};

Moments ComputeMoments(std::span<const double> xs);

double Correlation(std::span<const double> xs, std::span<const double> ys);

// Two-sided exact binomial (Clopper-Pearson) interval for `successes` out of
// `trials` at the given confidence level.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};
Interval ClopperPearson(std::int64_t successes, std::int64_t trials, double confidence);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

// Pearson goodness of fit. Adjacent cells are pooled left to right until each
// pooled cell has expected count >= min_expected.
ChiSquareResult ChiSquareGoodnessOfFit(std::span<const std::int64_t> observed,
                                       std::span<const double> expected_probs,
                                       double min_expected = 5.0);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Asymptotic Kolmogorov survival function Q_KS(lambda).
double KolmogorovSurvival(double lambda);

KsResult KsOneSample(std::vector<double> xs, const std::function<double(double)>& cdf);
KsResult KsTwoSample(std::vector<double> xs, std::vector<double> ys);

double NormalCdf(double x);

}  // namespace nodedp::stats

#endif  // NODEDP_STATS_H_
