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

// Acceptance gate: one PASS/FAIL line per criterion. Exits nonzero when any
// criterion fails. Tolerances and runtime limits are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nodedp/accountant.h"
#include "nodedp/audit.h"
#include "nodedp/gnn.h"
#include "nodedp/graph.h"
#include "nodedp/noise.h"
#include "nodedp/random.h"
#include "nodedp/sampler.h"
#include "nodedp/stats.h"
#include "nodedp/trainer.h"

namespace nodedp {
namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void Report(int id, const char* name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const bool in_time = secs < limit_seconds;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("[%s] %2d %s: %s%s (%.3f s, limit %.3g s)\n", pass ? "PASS" : "FAIL", id, name, o.details.c_str(),
              in_time ? "" : " [over time limit]", secs, limit_seconds);
  std::fflush(stdout);
}

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

// 1
Outcome PmfNormalization() {
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<int> d(0, 500);
  std::uniform_real_distribution<double> q(0.0, 1.0), m(0.0, 50.0);
  double worst = 0.0;
  bool nonneg = true;
  for (int i = 0; i < 200; ++i) {
    const int dout = d(rng);
    const double qb = q(rng), mult = m(rng);
    for (const RhoPmf& pmf : {RhoPmfEnforced(dout, qb, mult), RhoPmfNoEnforce(dout, qb, mult)}) {
      worst = std::max(worst, std::abs(pmf.TotalMass() - 1.0));
      for (std::size_t j = 0; j < pmf.support.size(); ++j) nonneg = nonneg && pmf.probability(j) >= 0.0;
    }
  }
  return {worst <= 1e-12 && nonneg, Fmt("max |mass - 1| = %.2e, nonnegative = %s", worst, nonneg ? "yes" : "no")};
}

// 2
Outcome SamplerMatchesAccountant() {
  const Graph g_star = GenErdosRenyi(49, 0.08, 2, 2, 31);
  SamplerConfig cfg;
  cfg.base_rate = 0.3;
  cfg.multiplier = 2.0;
  const int trials = 100000;
  std::string details;
  bool pass = true;
  for (int dout : {0, 1, 3, 8}) {
    std::vector<NodeId> targets;
    for (int i = 0; i < dout; ++i) targets.push_back(static_cast<NodeId>(5 * i + 1));
    const Graph whole = AddNode(g_star, std::vector<double>{0.5, -0.5}, 1, targets);
    const RhoPmf rho = RhoPmfEnforced(dout, cfg.base_rate, cfg.multiplier);
    std::map<double, std::int64_t> counts;
    for (int t = 0; t < trials; ++t) {
      ++counts[CoupledAdjacentSampleOn(whole, cfg, MixKey(900 + dout, {static_cast<std::uint64_t>(t)})).k];
    }
    std::vector<std::int64_t> observed;
    std::vector<double> expected;
    for (std::size_t i = 0; i < rho.support.size(); ++i) {
      observed.push_back(counts[rho.support[i]]);
      expected.push_back(rho.probability(i));
      counts.erase(rho.support[i]);
    }
    const bool in_support = counts.empty();
    const double p = stats::ChiSquareGoodnessOfFit(observed, expected).p_value;
    pass = pass && in_support && p > 0.01;
    details += Fmt("D=%d p=%.3f%s; ", dout, p, in_support ? "" : " (k outside support)");
  }
  return {pass, details};
}

// 3
Outcome ClosedForms() {
  bool zero = true;
  for (double alpha : {1.1, 2.0, 10.0}) {
    for (double sigma : {0.1, 1.0, 30.0}) zero = zero && LaplaceRenyiDivergence(0.0, alpha, sigma) == 0.0;
  }
  int points = 0, violations = 0;
  for (double k : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 400.0}) {
    for (double alpha : {1.1, 1.5, 2.0, 3.0, 5.0, 7.0, 8.5, 9.0, 9.5, 10.0}) {
      for (double sigma : {0.1, 0.3, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0, 1000.0}) {
        const double lhs = (alpha - 1) * LaplaceRenyiDivergence(k, alpha, sigma);
        const double rhs = LogBkSml(k, alpha, sigma);
        if (lhs > rhs + 1e-12 * std::max(1.0, std::abs(rhs))) ++violations;
        ++points;
      }
    }
  }
  AccountantConfig cfg;
  cfg.base_rate = 0.5;
  cfg.multiplier = 1.0;
  cfg.iterations = 1;
  cfg.max_dout = 0;
  const double gamma = RdpGamma(cfg, 2.0, 1.0).gamma;
  const double err = std::abs(gamma - std::log(1.50937));
  return {zero && violations == 0 && points == 1000 && err <= 1e-4,
          Fmt("divergence(0) = 0: %s; dominance violations %d/%d; |gamma - ln 1.50937| = %.1e", zero ? "yes" : "no",
              violations, points, err)};
}

// 4
Outcome GaussianMatch() {
  const double s = GaussianSigmaToMatchAk(1e4, 2.0, 1.0);
  return {s >= 82.0 && s <= 86.0, Fmt("sigma_gauss = %.3f", s)};
}

// 5
Outcome PrecisionBounds() {
  const double a = PrecisionUpperBound(2.0, 1e-5, 10);
  const double b = PrecisionUpperBound(2.0, 0.0, 4);
  const bool rounds = std::round(b * 1000.0) == 711.0;
  return {a >= 0.450 && a <= 0.452 && rounds, Fmt("C=10: %.5f; C=4: %.5f", a, b)};
}

// 6
Outcome NoiseMoments() {
  const double sigma = 2.0;
  const Eigen::Index dim = 4;
  const int n = 1000000;
  const NoiseSpec spec{NoiseKind::kSml, sigma, dim};
  Rng rng = MakeRng(6, Stream::kNoise);
  std::normal_distribution<double> normal;
  Eigen::VectorXd u(dim);
  for (Eigen::Index i = 0; i < dim; ++i) u[i] = normal(rng);
  u.normalize();
  std::vector<std::vector<double>> coords(static_cast<std::size_t>(dim), std::vector<double>(n));
  std::vector<double> projected(n);
  for (int s = 0; s < n; ++s) {
    const Eigen::VectorXd x = SampleSml(spec, rng);
    for (Eigen::Index i = 0; i < dim; ++i) coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)] = x[i];
    projected[static_cast<std::size_t>(s)] = u.dot(x);
  }
  double worst_sd = 0.0, worst_kurt = 0.0;
  for (const auto& c : coords) {
    const stats::Moments m = stats::ComputeMoments(c);
    worst_sd = std::max(worst_sd, std::abs(m.stddev / sigma - 1.0));
    worst_kurt = std::max(worst_kurt, std::abs(m.kurtosis - 6.0));
  }
  const auto cdf = [sigma](double x) { return SmlMarginalCdf(x, sigma); };
  const double ks_p = stats::KsOneSample(projected, cdf).p_value;

  // Width 0.1 sigma bins over [-8 sigma, 8 sigma] plus two tails.
  const double lo = -8 * sigma, width = 0.1 * sigma;
  const int bins = 160;
  std::vector<std::int64_t> observed(bins + 2, 0);
  for (double x : coords[0]) {
    const double pos = (x - lo) / width;
    const int b = pos < 0 ? 0 : (pos >= bins ? bins + 1 : static_cast<int>(pos) + 1);
    ++observed[static_cast<std::size_t>(b)];
  }
  std::vector<double> expected(bins + 2);
  expected[0] = cdf(lo);
  for (int b = 0; b < bins; ++b) expected[static_cast<std::size_t>(b + 1)] = cdf(lo + (b + 1) * width) - cdf(lo + b * width);
  expected[bins + 1] = 1.0 - cdf(lo + bins * width);
  const double chi_p = stats::ChiSquareGoodnessOfFit(observed, expected).p_value;
  return {worst_sd <= 0.01 && worst_kurt <= 0.2 && ks_p > 0.01 && chi_p > 0.01,
          Fmt("max |sd/sigma - 1| = %.4f, max |kurtosis - 6| = %.3f, rotated KS p = %.3f, marginal chi2 p = %.3f",
              worst_sd, worst_kurt, ks_p, chi_p)};
}

// 7
double FiniteDifferenceError(const ModelParams& params, const SubGraph& sub) {
  const LossAndGradient lg = LossAndGrad(params, sub);
  const double h = 1e-5;
  Eigen::VectorXd fd(params.values.size());
  ModelParams q = params;
  for (Eigen::Index i = 0; i < params.values.size(); ++i) {
    q.values[i] = params.values[i] + h;
    const double up = LossAndGrad(q, sub).loss;
    q.values[i] = params.values[i] - h;
    const double down = LossAndGrad(q, sub).loss;
    q.values[i] = params.values[i];
    fd[i] = (up - down) / (2 * h);
  }
  return (fd - lg.grad.values).norm() / std::max(1e-12, fd.norm());
}

Outcome GradientsMatchFiniteDifferences() {
  std::string details;
  bool pass = true;
  std::mt19937_64 rng(7);
  for (Arch arch : {Arch::kGcn, Arch::kGin, Arch::kSage}) {
    double worst = 0.0;
    for (int s = 0; s < 50; ++s) {
      const Graph g = GenErdosRenyi(12, 0.35, 5, 3, 100 + static_cast<std::uint64_t>(s));
      const NodeId central = static_cast<NodeId>(rng() % 12);
      std::vector<NodeId> peripherals;
      for (NodeId j : g.in_neighbors(central)) {
        if (rng() % 4 != 0) peripherals.push_back(j);
      }
      const SubGraph sub = InduceSubGraph(g, central, peripherals);
      ModelParams p = InitModel({arch, 5, 6, 3}, 200 + static_cast<std::uint64_t>(s));
      std::normal_distribution<double> noise(0.0, 0.3);
      for (Eigen::Index i = 0; i < p.values.size(); ++i) p.values[i] += noise(rng);
      worst = std::max(worst, FiniteDifferenceError(p, sub));
    }
    pass = pass && worst <= 1e-4;
    details += Fmt("%s max rel err %.1e; ", ToString(arch).c_str(), worst);
  }
  return {pass, details};
}

// 8
Outcome SensitivityBound() {
  PlantedClassesOptions opt;
  opt.n = 40;
  opt.d = 8;
  opt.num_classes = 2;
  opt.p_intra = 0.15;
  opt.p_inter = 0.05;
  opt.class_separation = 3.0;
  const Graph g_star = GenPlantedClasses(opt, 8);
  SamplerConfig cfg;
  cfg.base_rate = 0.4;
  cfg.multiplier = 3.0;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> feat(0.0, 2.0);
  int central = 0, neighbor = 0, violations = 0;
  double worst_central = 0.0, worst_ratio = 0.0;
  const Arch arches[] = {Arch::kGcn, Arch::kGin, Arch::kSage};
  for (int b = 0; b < 1000; ++b) {
    const Arch arch = arches[b % 3];
    NodeSpec z;
    for (int i = 0; i < opt.d; ++i) z.feature.push_back(feat(rng));
    z.label = static_cast<int>(rng() % 2);
    const int targets = static_cast<int>(rng() % 12);
    for (NodeId i = 0; i < opt.n; ++i) {
      if (static_cast<int>(rng() % static_cast<std::uint64_t>(opt.n)) < targets) z.out_targets.push_back(i);
    }
    for (NodeId i = 0; i < opt.n; ++i) {
      if (rng() % 10 == 0) z.in_sources.push_back(i);
    }
    const CoupledSample c = CoupledAdjacentSample(g_star, z, cfg, 5000 + static_cast<std::uint64_t>(b));
    const ModelParams p = InitModel({arch, opt.d, 8, 2}, static_cast<std::uint64_t>(b));
    const Eigen::VectorXd a = ClippedGradientSum(p, c.star, true).sum;
    const Eigen::VectorXd a2 = ClippedGradientSum(p, c.prime, true).sum;
    const double diff = (a - a2).norm();
    if (c.z_central) {
      ++central;
      worst_central = std::max(worst_central, diff);
      if (diff > 0.5 + 1e-9) ++violations;
    } else {
      ++neighbor;
      if (diff > c.k * 1.0 + 1e-9) ++violations;
      if (c.k > 0) worst_ratio = std::max(worst_ratio, diff / c.k);
    }
  }
  return {violations == 0 && central > 0 && neighbor > 0,
          Fmt("%d central / %d neighbor batches, violations %d, max central diff %.4f, max diff/k %.4f", central,
              neighbor, violations, worst_central, worst_ratio)};
}

// 9 and 10: the synthetic desk task.
struct DeskTask {
  static constexpr int kSeeds = 5;
  static Graph MakeGraph(int seed) {
    PlantedClassesOptions o;
    o.n = 2000;
    o.d = 16;
    o.num_classes = 4;
    o.p_intra = 0.005;
    o.p_inter = 0.0005;
    o.class_separation = 5.0;
    return GenPlantedClasses(o, 100 + static_cast<std::uint64_t>(seed));
  }
  static NodeSplit MakeSplit(const Graph& g, int seed) {
    return SplitTrainTest(g.node_count(), 0.8, 100 + static_cast<std::uint64_t>(seed));
  }
  static TrainConfig Config(int seed) {
    TrainConfig c;
    c.iterations = 100;
    c.learning_rate = 0.02;
    c.base_rate = 0.1;
    c.hidden_dim = 32;
    c.seed = static_cast<std::uint64_t>(seed);
    return c;
  }
  // Accuracy per seed; eps <= 0 means non-private.
  static std::vector<double> Run(double eps, NoiseKind noise, bool enforce) {
    std::vector<double> acc;
    for (int s = 0; s < kSeeds; ++s) {
      const Graph g = MakeGraph(s);
      const NodeSplit split = MakeSplit(g, s);
      TrainConfig c = Config(s);
      c.noise = noise;
      c.enforce_no_overlap = enforce;
      if (eps > 0) c.eps_target = eps;
      acc.push_back(Train(g, split, c).report.eval.accuracy);
    }
    return acc;
  }
};

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string Join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += Fmt("%s%.3f", s.empty() ? "" : " ", x);
  return s;
}

std::vector<double> sml_eps2;

Outcome EndToEnd() {
  const std::vector<double> clean = DeskTask::Run(0.0, NoiseKind::kSml, true);
  const std::vector<double> eps8 = DeskTask::Run(8.0, NoiseKind::kSml, true);
  sml_eps2 = DeskTask::Run(2.0, NoiseKind::kSml, true);
  const bool clean_ok = std::all_of(clean.begin(), clean.end(), [](double a) { return a >= 0.85; });
  const auto above = std::count_if(eps8.begin(), eps8.end(), [](double a) { return a >= 0.4; });
  const double m2 = Mean(sml_eps2), m8 = Mean(eps8), minf = Mean(clean);
  const bool monotone = m2 <= m8 && m8 <= minf;
  return {clean_ok && above >= 4 && monotone,
          Fmt("sigma=0 [%s]; eps=8 [%s] (%d/5 >= 0.4); means eps 2/8/inf = %.3f/%.3f/%.3f", Join(clean).c_str(),
              Join(eps8).c_str(), static_cast<int>(above), m2, m8, minf)};
}

Outcome Ablation() {
  if (sml_eps2.empty()) sml_eps2 = DeskTask::Run(2.0, NoiseKind::kSml, true);
  const std::vector<double> gauss = DeskTask::Run(2.0, NoiseKind::kGaussian, true);
  const std::vector<double> loose = DeskTask::Run(2.0, NoiseKind::kSml, false);
  const double sml = Mean(sml_eps2), g = Mean(gauss), l = Mean(loose);
  return {sml >= g && sml >= l,
          Fmt("eps=2 means: SML enforced %.3f, Gaussian %.3f, SML not enforced %.3f", sml, g, l)};
}

// 11
Outcome AuditSoundness() {
  const Graph g = DeskTask::MakeGraph(0);
  const NodeSplit split = DeskTask::MakeSplit(g, 0);
  const std::size_t trials = 10000;
  std::map<double, double> accuracy;
  std::string details;
  bool pass = true;
  for (double eps : {2.0, 8.0, 16.0}) {
    TrainConfig c = DeskTask::Config(0);
    // Each audit observation is one release, so the audited guarantee is a
    // single-iteration one.
    c.iterations = 1;
    c.eps_target = eps;
    const AuditObservations obs = RunAudit(g, split, c, trials);
    const AuditResult r = EmpiricalEpsilon(obs, obs.guarantee.delta, 0.95);
    accuracy[eps] = r.best_attack_accuracy;
    const bool sound = r.empirical_eps <= obs.guarantee.epsilon;
    if (eps <= 8.0) pass = pass && sound;
    details += Fmt("eps=%g: sigma %.3f, empirical %.3f <= %.3f, attack acc %.4f; ", eps, obs.sigma, r.empirical_eps,
                   obs.guarantee.epsilon, r.best_attack_accuracy);
  }
  pass = pass && accuracy[2.0] <= accuracy[16.0];
  return {pass, details};
}

// 12
Outcome Impact() {
  ImpactConfig cfg;
  cfg.n = 100;
  cfg.num_classes = 10;
  cfg.repeats = 100;
  cfg.chi_grid = {0.1, 0.3, 0.5, 0.7, 0.9};
  cfg.seed = 12;
  const std::vector<ImpactRow> rows = ImpactExperiment(cfg);
  int inversions = 0;
  std::string means;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    means += Fmt("%s%.4f", means.empty() ? "" : " ", rows[i].mean_delta);
    if (i > 0 && rows[i].mean_delta < rows[i - 1].mean_delta) ++inversions;
  }
  return {inversions <= 1, Fmt("mean delta over chi 0.1..0.9 = [%s], inversions %d", means.c_str(), inversions)};
}

}  // namespace
}  // namespace nodedp

int main() {
  using namespace nodedp;
  Report(1, "pmf-normalization", 1.0, PmfNormalization);
  Report(2, "sampler-accountant-consistency", 30.0, SamplerMatchesAccountant);
  Report(3, "closed-forms", 1.0, ClosedForms);
  Report(4, "gaussian-sigma-match", 1e-3, GaussianMatch);
  Report(5, "precision-bound", 1e-3, PrecisionBounds);
  Report(6, "noise-moments", 10.0, NoiseMoments);
  Report(7, "gradient-finite-differences", 10.0, GradientsMatchFiniteDifferences);
  Report(8, "sensitivity-bound", 60.0, SensitivityBound);
  Report(9, "end-to-end-learning", 600.0, EndToEnd);
  Report(10, "ablation-direction", 900.0, Ablation);
  Report(11, "audit-soundness", 1200.0, AuditSoundness);
  Report(12, "impact-monotone", 300.0, Impact);
  std::printf("%s: %d of 12 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
