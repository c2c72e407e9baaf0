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

#ifndef NODEDP_AUDIT_H_
#define NODEDP_AUDIT_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "nodedp/graph.h"
#include "nodedp/trainer.h"

namespace nodedp {

// Paired scores from white-box canary trials. Per trial t with canary
// g^c = [k, 0, ..., 0] and released gradient g^t:
//   o_prime[t] = <g^t, g^c>,  o_star[t] = <g^t - g^c, g^c>.
struct AuditObservations {
  std::vector<double> o_star;
  std::vector<double> o_prime;
  std::vector<double> canary_norms;  // k per trial
  std::vector<bool> inserted;        // whether the canary entered g^t
  std::size_t trials = 0;
  double sigma = 0.0;
  PrivacyGuarantee guarantee;  // theoretical guarantee of the audited setting
  int audited_dout = 0;
};

struct AttackResult {
  double accuracy = 0.5;  // (TPR + TNR) / 2
  double threshold = 0.0; // predict "canary" when score > threshold
};

struct AuditResult {
  double best_attack_accuracy = 0.5;
  double empirical_eps = 0.0;
  double threshold = 0.0;
  double confidence = 0.95;
  double fpr_hi = 1.0;
  double fnr_hi = 1.0;
  double theoretical_eps = 0.0;
  std::size_t trials = 0;
};

// [k, 0, ..., 0] of the given dimension.
Eigen::VectorXd DiracCanary(double k, Eigen::Index dim);

// <g_t, canary>; throws ConfigError when the dimensions differ.
double CanaryScore(const Eigen::VectorXd& g_t, const Eigen::VectorXd& canary);

// Runs `trials` iterations of private training with canary insertion. Sigma is
// resolved from cfg exactly as Train does; k is drawn from the sensitivity PMF
// at `audited_dout` (default: the graph's maximum out-degree).
AuditObservations RunAudit(const Graph& g, const NodeSplit& split, const TrainConfig& cfg, std::size_t trials,
                           std::optional<int> audited_dout = std::nullopt);

// Threshold sweep over the pooled scores. Throws ConfigError when either list
// is empty.
AttackResult AttackAccuracy(std::span<const double> o_star, std::span<const double> o_prime);
AttackResult AttackAccuracy(const AuditObservations& obs);

// Clopper-Pearson upper bounds on FPR and FNR at the best threshold, then
// max(ln((1-delta-FPR_hi)/FNR_hi), ln((1-delta-FNR_hi)/FPR_hi)), floored at 0.
AuditResult EmpiricalEpsilon(std::span<const double> o_star, std::span<const double> o_prime, double delta,
                             double confidence = 0.95);
AuditResult EmpiricalEpsilon(const AuditObservations& obs, double delta, double confidence = 0.95);

void WriteAuditCsv(const AuditObservations& obs, std::ostream& out);
nlohmann::json ToJson(const AuditResult& result);

}  // namespace nodedp

#endif  // NODEDP_AUDIT_H_
