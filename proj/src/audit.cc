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

#include "nodedp/audit.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "nodedp/common.h"
#include "nodedp/random.h"
#include "nodedp/stats.h"

namespace nodedp {

Eigen::VectorXd DiracCanary(double k, Eigen::Index dim) {
  if (dim < 1) throw ConfigError("canary dimension must be >= 1");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
  c[0] = k;
  return c;
}

double CanaryScore(const Eigen::VectorXd& g_t, const Eigen::VectorXd& canary) {
  if (g_t.size() != canary.size()) {
    throw ConfigError("canary dimension " + std::to_string(canary.size()) + " != parameter count " +
                      std::to_string(g_t.size()));
  }
  return g_t.dot(canary);
}

AuditObservations RunAudit(const Graph& g, const NodeSplit& split, const TrainConfig& cfg, std::size_t trials,
                           std::optional<int> audited_dout) {
  cfg.Validate();
  if (cfg.noise != NoiseKind::kSml) throw ConfigError("audit: only SML noise is audited");
  if (trials == 0) throw ConfigError("audit: trials must be >= 1");
  const ResolvedNoise noise = ResolveNoise(cfg, g.node_count());

  AuditObservations obs;
  obs.sigma = noise.sigma;
  obs.guarantee = noise.guarantee;
  obs.audited_dout = audited_dout.value_or(g.max_out_degree());
  if (obs.audited_dout < 0) throw ConfigError("audit: audited D_out must be >= 0");
  obs.trials = trials;

  const RhoPmf rho = RhoPmfFor(cfg.enforce_no_overlap, obs.audited_dout, cfg.base_rate, cfg.multiplier);
  std::vector<double> weights(rho.support.size());
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = rho.probability(i);
  std::discrete_distribution<std::size_t> draw_k(weights.begin(), weights.end());
  std::bernoulli_distribution insert(cfg.base_rate);

  const ParamLayout layout{cfg.arch, g.dim(), cfg.hidden_dim, g.num_classes()};
  ModelParams params = InitModel(layout, cfg.seed);
  const SamplerConfig sampler = MakeSamplerConfig(cfg);
  const NoiseSpec spec{cfg.noise, noise.sigma, layout.size()};
  Rng noise_rng = MakeRng(cfg.seed, Stream::kNoise);
  Rng audit_rng = MakeRng(cfg.seed, Stream::kAudit);

  obs.o_star.reserve(trials);
  obs.o_prime.reserve(trials);
  obs.canary_norms.reserve(trials);
  obs.inserted.reserve(trials);
  for (std::size_t t = 1; t <= trials; ++t) {
    const std::uint64_t key = MixKey(cfg.seed, {static_cast<std::uint64_t>(Stream::kSampler), t});
    const SubGraphBatch batch = HeterPoisson(g, split.train_ids, sampler, key);
    ClippedSum cs = ClippedGradientSum(params, batch, cfg.train_gin_lambda, cfg.threads);

    const double k = rho.support[draw_k(audit_rng)];
    const Eigen::VectorXd canary = DiracCanary(k, layout.size());
    const bool inserted = insert(audit_rng);
    // Adding g^c to one clipped gradient changes the sum by exactly g^c.
    if (inserted) cs.sum += canary;
    const PrivateGradient g_t = Privatize(std::move(cs.sum), spec, noise_rng);

    const double prime = CanaryScore(g_t.values(), canary);
    obs.o_prime.push_back(prime);
    obs.o_star.push_back(prime - canary.squaredNorm());
    obs.canary_norms.push_back(k);
    obs.inserted.push_back(inserted);
    ApplyUpdate(params, g_t, cfg.learning_rate);
  }
  return obs;
}

namespace {

// Candidate thresholds: -inf and every distinct pooled score. For threshold
// tau, negatives are o_star > tau (false positives) and o_prime <= tau (false
// negatives).
struct Sweep {
  std::vector<double> thresholds;
  std::vector<std::int64_t> false_pos;
  std::vector<std::int64_t> false_neg;
};

Sweep SweepThresholds(std::span<const double> o_star, std::span<const double> o_prime) {
  if (o_star.empty() || o_prime.empty()) throw ConfigError("audit: both observation lists must be nonempty");
  std::vector<double> s(o_star.begin(), o_star.end());
  std::vector<double> p(o_prime.begin(), o_prime.end());
  std::sort(s.begin(), s.end());
  std::sort(p.begin(), p.end());
  std::vector<double> pooled;
  pooled.reserve(s.size() + p.size() + 1);
  pooled.push_back(-std::numeric_limits<double>::infinity());
  std::merge(s.begin(), s.end(), p.begin(), p.end(), std::back_inserter(pooled));
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  Sweep out;
  out.thresholds = std::move(pooled);
  out.false_pos.reserve(out.thresholds.size());
  out.false_neg.reserve(out.thresholds.size());
  std::size_t is = 0, ip = 0;
  for (double tau : out.thresholds) {
    while (is < s.size() && s[is] <= tau) ++is;
    while (ip < p.size() && p[ip] <= tau) ++ip;
    out.false_pos.push_back(static_cast<std::int64_t>(s.size() - is));
    out.false_neg.push_back(static_cast<std::int64_t>(ip));
  }
  return out;
}

double SafeLog(double x) { return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity(); }

}  // namespace

AttackResult AttackAccuracy(std::span<const double> o_star, std::span<const double> o_prime) {
  const Sweep sw = SweepThresholds(o_star, o_prime);
  const auto n_star = static_cast<double>(o_star.size());
  const auto n_prime = static_cast<double>(o_prime.size());
  AttackResult best{-1.0, 0.0};
  for (std::size_t i = 0; i < sw.thresholds.size(); ++i) {
    const double tnr = 1.0 - static_cast<double>(sw.false_pos[i]) / n_star;
    const double tpr = 1.0 - static_cast<double>(sw.false_neg[i]) / n_prime;
    const double acc = 0.5 * (tpr + tnr);
    if (acc > best.accuracy) best = {acc, sw.thresholds[i]};
  }
  return best;
}

AttackResult AttackAccuracy(const AuditObservations& obs) { return AttackAccuracy(obs.o_star, obs.o_prime); }

AuditResult EmpiricalEpsilon(std::span<const double> o_star, std::span<const double> o_prime, double delta,
                             double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("audit: confidence must be in (0, 1)");
  if (!(delta >= 0.0 && delta < 1.0)) throw ConfigError("audit: delta must be in [0, 1)");
  const Sweep sw = SweepThresholds(o_star, o_prime);
  const auto n_star = static_cast<std::int64_t>(o_star.size());
  const auto n_prime = static_cast<std::int64_t>(o_prime.size());

  AuditResult r;
  r.confidence = confidence;
  r.trials = std::max(o_star.size(), o_prime.size());
  r.best_attack_accuracy = AttackAccuracy(o_star, o_prime).accuracy;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sw.thresholds.size(); ++i) {
    const double fpr_hi = stats::ClopperPearson(sw.false_pos[i], n_star, confidence).hi;
    const double fnr_hi = stats::ClopperPearson(sw.false_neg[i], n_prime, confidence).hi;
    const double eps = std::max(SafeLog(1.0 - delta - fpr_hi) - SafeLog(fnr_hi),
                                SafeLog(1.0 - delta - fnr_hi) - SafeLog(fpr_hi));
    if (eps > best) {
      best = eps;
      r.threshold = sw.thresholds[i];
      r.fpr_hi = fpr_hi;
      r.fnr_hi = fnr_hi;
    }
  }
  r.empirical_eps = std::max(0.0, best);
  return r;
}

AuditResult EmpiricalEpsilon(const AuditObservations& obs, double delta, double confidence) {
  AuditResult r = EmpiricalEpsilon(obs.o_star, obs.o_prime, delta, confidence);
  r.theoretical_eps = obs.guarantee.epsilon;
  return r;
}

void WriteAuditCsv(const AuditObservations& obs, std::ostream& out) {
  out << "trial,score_star,score_prime,k,inserted\n";
  out.precision(17);
  for (std::size_t t = 0; t < obs.o_star.size(); ++t) {
    out << t + 1 << ',' << obs.o_star[t] << ',' << obs.o_prime[t] << ',' << obs.canary_norms[t] << ','
        << (obs.inserted[t] ? 1 : 0) << '\n';
  }
}

nlohmann::json ToJson(const AuditResult& result) {
  nlohmann::json j;
  j["best_attack_accuracy"] = result.best_attack_accuracy;
  j["empirical_eps"] = result.empirical_eps;
  j["threshold"] = result.threshold;
  j["confidence"] = result.confidence;
  j["fpr_hi"] = result.fpr_hi;
  j["fnr_hi"] = result.fnr_hi;
  if (std::isinf(result.theoretical_eps)) {
    j["theoretical_eps"] = "inf";
  } else {
    j["theoretical_eps"] = result.theoretical_eps;
  }
  j["trials"] = result.trials;
  return j;
}

}  // namespace nodedp
