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

#ifndef NODEDP_TRAINER_H_
#define NODEDP_TRAINER_H_

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "nodedp/accountant.h"
#include "nodedp/gnn.h"
#include "nodedp/graph.h"
#include "nodedp/noise.h"
#include "nodedp/sampler.h"

namespace nodedp {

struct TrainConfig {
  int iterations = 100;          // T
  double learning_rate = 0.05;   // eta
  double base_rate = 0.05;       // q_b
  double multiplier = 1.0;       // M
  double sigma = 0.0;            // used when eps_target is unset; 0 = non-private
  std::optional<double> eps_target;
  double delta = 1e-5;
  std::optional<int> max_dout;   // accountant's out-degree range, default |G| - 1
  std::vector<double> alpha_grid = DefaultAlphaGrid();
  Arch arch = Arch::kGcn;
  Eigen::Index hidden_dim = 128;
  bool train_gin_lambda = true;
  std::uint64_t seed = 0;
  int n_test = 13;               // neighbors sampled per test node
  bool enforce_no_overlap = true;
  NullPolicy null_policy = NullPolicy::kDetach;
  NoiseKind noise = NoiseKind::kSml;
  int threads = 1;

  void Validate() const;
};

AccountantConfig MakeAccountantConfig(const TrainConfig& cfg, NodeId graph_size);
SamplerConfig MakeSamplerConfig(const TrainConfig& cfg);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> precision;  // per class; 0 for classes never predicted
  double mean_precision = 0.0;
  std::size_t evaluated = 0;
};

EvalResult ScorePredictions(const std::vector<int>& predicted, const std::vector<int>& truth, int num_classes);

struct RunReport {
  std::vector<double> losses;  // mean sub-graph loss per iteration, NaN for empty batches
  EvalResult eval;
  double sigma = 0.0;
  double epsilon = 0.0;  // +inf when sigma == 0
  double delta = 0.0;
  double alpha = 0.0;
  int argmax_dout = 0;
  std::size_t total_subgraphs = 0;
  bool zero_coverage = false;
  NoiseKind noise = NoiseKind::kSml;
  double wall_seconds = 0.0;
};

nlohmann::json ToJson(const RunReport& report);

// Noisy gradient sum. Only obtainable through Privatize, which consumes the
// clipped sum, so the model update cannot see the un-noised vector.
class PrivateGradient {
 public:
  const Eigen::VectorXd& values() const { return values_; }

 private:
  friend PrivateGradient Privatize(Eigen::VectorXd&& clipped_sum, const NoiseSpec& spec, Rng& rng);
  explicit PrivateGradient(Eigen::VectorXd v) : values_(std::move(v)) {}
  Eigen::VectorXd values_;
};

PrivateGradient Privatize(Eigen::VectorXd&& clipped_sum, const NoiseSpec& spec, Rng& rng);

// w <- w - eta * g
void ApplyUpdate(ModelParams& params, const PrivateGradient& g, double learning_rate);

struct ClippedSum {
  Eigen::VectorXd sum;      // sum of per-sub-graph gradients clipped at 0.5
  double mean_loss = 0.0;   // NaN for an empty batch
  std::vector<Eigen::VectorXd> clipped;  // kept only when requested
};

// Per-sub-graph gradients, clipped, summed in batch order (bit-identical for
// any thread count).
ClippedSum ClippedGradientSum(const ModelParams& params, const SubGraphBatch& batch, bool train_gin_lambda,
                              int threads = 1, bool keep_individual = false);

class TrainObserver {
 public:
  virtual ~TrainObserver() = default;
  virtual void OnIteration(int /*t*/, const SubGraphBatch& /*batch*/, const PrivateGradient& /*g*/,
                           const ModelParams& /*before_update*/) {}
};

struct TrainResult {
  ModelParams params;
  RunReport report;
};

// Resolves sigma (calibrating when eps_target is set), then runs T rounds of:
// sample sub-graphs over the train ids -> per-sub-graph gradient -> clip ->
// sum -> add noise -> SGD step. Finishes with Evaluate on the test ids.
TrainResult Train(const Graph& g, const NodeSplit& split, const TrainConfig& cfg,
                  TrainObserver* observer = nullptr);

struct ResolvedNoise {
  double sigma = 0.0;
  PrivacyGuarantee guarantee;  // epsilon = +inf for sigma == 0
};
ResolvedNoise ResolveNoise(const TrainConfig& cfg, NodeId graph_size);

// Transductive evaluation: every test node sees at most n_test of its
// in-neighbors, drawn only from the test ids. When `access_log` is set it
// receives the id of every node whose features were read.
EvalResult Evaluate(const ModelParams& params, const Graph& g, const NodeSplit& split, const TrainConfig& cfg,
                    std::vector<NodeId>* access_log = nullptr);

// Inductive evaluation on a graph disjoint from training: every node is a test
// node and may use any of its in-neighbors (subject to n_test).
EvalResult EvaluateInductive(const ModelParams& params, const Graph& test_graph, const TrainConfig& cfg);

struct ImpactConfig {
  NodeId n = 100;
  double p = 0.1;
  Eigen::Index d = 16;
  int num_classes = 10;
  std::vector<double> chi_grid{0.0, 0.1, 0.3, 0.5, 0.7, 0.9};
  int repeats = 100;
  std::uint64_t seed = 0;
  Arch arch = Arch::kGcn;
  Eigen::Index hidden_dim = 16;
};

struct ImpactRow {
  double chi = 0.0;
  double mean_delta = 0.0;
  double sd_delta = 0.0;
};

// For each repeat: random base graph and model, full-graph gradient g*, then a
// new node with round(chi * n) out-edges and gradient g'; records ||g* - g'||.
// Within a repeat every chi shares the base graph, model, new node and a
// nested target order.
std::vector<ImpactRow> ImpactExperiment(const ImpactConfig& cfg);

}  // namespace nodedp

#endif  // NODEDP_TRAINER_H_
