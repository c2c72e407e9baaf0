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

#include "nodedp/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "nodedp/common.h"
#include "nodedp/random.h"

namespace nodedp {

void TrainConfig::Validate() const {
  if (iterations < 1) throw ConfigError("train: T must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be > 0");
  if (!(base_rate >= 0.0 && base_rate <= 1.0)) throw ConfigError("train: q_b must be in [0, 1]");
  if (!(multiplier >= 0.0)) throw ConfigError("train: M must be >= 0");
  if (!(sigma >= 0.0)) throw ConfigError("train: sigma must be >= 0");
  if (eps_target && !(*eps_target > 0.0)) throw ConfigError("train: eps target must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("train: delta must be in (0, 1)");
  if (hidden_dim < 1) throw ConfigError("train: hidden dim must be >= 1");
  if (n_test < 0) throw ConfigError("train: N_test must be >= 0");
  if (threads < 1) throw ConfigError("train: threads must be >= 1");
}

AccountantConfig MakeAccountantConfig(const TrainConfig& cfg, NodeId graph_size) {
  AccountantConfig a;
  a.base_rate = cfg.base_rate;
  a.multiplier = cfg.multiplier;
  a.iterations = cfg.iterations;
  a.delta = cfg.delta;
  a.alpha_grid = cfg.alpha_grid;
  a.max_dout = cfg.max_dout.value_or(std::max<NodeId>(graph_size - 1, 0));
  a.enforce_no_overlap = cfg.enforce_no_overlap;
  a.noise = cfg.noise;
  return a;
}

SamplerConfig MakeSamplerConfig(const TrainConfig& cfg) {
  SamplerConfig s;
  s.base_rate = cfg.base_rate;
  s.multiplier = cfg.multiplier;
  s.enforce_no_overlap = cfg.enforce_no_overlap;
  s.null_policy = cfg.null_policy;
  s.mode = SampleMode::kTrain;
  return s;
}

EvalResult ScorePredictions(const std::vector<int>& predicted, const std::vector<int>& truth, int num_classes) {
  if (predicted.size() != truth.size()) throw ConfigError("ScorePredictions: size mismatch");
  EvalResult r;
  r.evaluated = truth.size();
  r.precision.assign(static_cast<std::size_t>(num_classes), 0.0);
  if (truth.empty()) return r;
  std::vector<std::size_t> predicted_count(static_cast<std::size_t>(num_classes), 0);
  std::vector<std::size_t> true_positive(static_cast<std::size_t>(num_classes), 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto c = static_cast<std::size_t>(predicted[i]);
    ++predicted_count[c];
    if (predicted[i] == truth[i]) {
      ++correct;
      ++true_positive[c];
    }
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  for (std::size_t c = 0; c < r.precision.size(); ++c) {
    if (predicted_count[c] > 0) r.precision[c] = static_cast<double>(true_positive[c]) / static_cast<double>(predicted_count[c]);
  }
  r.mean_precision = std::accumulate(r.precision.begin(), r.precision.end(), 0.0) / num_classes;
  return r;
}

nlohmann::json ToJson(const RunReport& report) {
  nlohmann::json j;
  j["losses"] = report.losses;
  j["accuracy"] = report.eval.accuracy;
  j["precision"] = report.eval.precision;
  j["mean_precision"] = report.eval.mean_precision;
  j["evaluated"] = report.eval.evaluated;
  j["sigma"] = report.sigma;
  j["noise"] = ToString(report.noise);
  if (std::isinf(report.epsilon)) {
    j["epsilon"] = "inf";
  } else {
    j["epsilon"] = report.epsilon;
  }
  j["delta"] = report.delta;
  j["alpha"] = report.alpha;
  j["argmax_dout"] = report.argmax_dout;
  j["total_subgraphs"] = report.total_subgraphs;
  j["zero_coverage"] = report.zero_coverage;
  j["wall_seconds"] = report.wall_seconds;
  return j;
}

PrivateGradient Privatize(Eigen::VectorXd&& clipped_sum, const NoiseSpec& spec, Rng& rng) {
  Eigen::VectorXd g = std::move(clipped_sum);
  if (spec.dim != g.size()) throw ConfigError("Privatize: noise dimension does not match gradient");
  g += SampleNoise(spec, rng);
  return PrivateGradient(std::move(g));
}

void ApplyUpdate(ModelParams& params, const PrivateGradient& g, double learning_rate) {
  params.values.noalias() -= learning_rate * g.values();
}

ClippedSum ClippedGradientSum(const ModelParams& params, const SubGraphBatch& batch, bool train_gin_lambda,
                              int threads, bool keep_individual) {
  const std::size_t b = batch.subgraphs.size();
  std::vector<Eigen::VectorXd> clipped(b);
  std::vector<double> losses(b, 0.0);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      LossAndGradient lg = LossAndGrad(params, batch.subgraphs[i]);
      if (params.layout.arch == Arch::kGin && !train_gin_lambda) lg.grad.lambda() = 0.0;
      losses[i] = lg.loss;
      clipped[i] = ClipGradient(lg.grad).values;
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || b < 2 * workers) {
    work(0, b);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (b + workers - 1) / workers;
    for (std::size_t start = 0; start < b; start += chunk) pool.emplace_back(work, start, std::min(b, start + chunk));
  }
  ClippedSum out;
  out.sum = Eigen::VectorXd::Zero(params.layout.size());
  for (const auto& g : clipped) out.sum += g;
  out.mean_loss = b == 0 ? std::numeric_limits<double>::quiet_NaN()
                         : std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(b);
  if (keep_individual) out.clipped = std::move(clipped);
  return out;
}

ResolvedNoise ResolveNoise(const TrainConfig& cfg, NodeId graph_size) {
  ResolvedNoise r;
  const AccountantConfig acct = MakeAccountantConfig(cfg, graph_size);
  if (cfg.eps_target) {
    if (cfg.base_rate <= 0.0) throw CalibrationError("cannot calibrate with q_b = 0");
    const Calibration c = CalibrateSigma(*cfg.eps_target, acct);
    r.sigma = c.sigma;
    r.guarantee = c.guarantee;
  } else if (cfg.sigma == 0.0) {
    r.sigma = 0.0;
    r.guarantee.epsilon = std::numeric_limits<double>::infinity();
    r.guarantee.delta = cfg.delta;
  } else {
    r.sigma = cfg.sigma;
    if (cfg.base_rate > 0.0) {
      r.guarantee = ComputeEpsilon(acct, cfg.sigma);
    } else {
      r.guarantee.epsilon = 0.0;  // nothing is ever sampled
      r.guarantee.delta = cfg.delta;
    }
  }
  return r;
}

TrainResult Train(const Graph& g, const NodeSplit& split, const TrainConfig& cfg, TrainObserver* observer) {
  cfg.Validate();
  const auto started = std::chrono::steady_clock::now();
  const ResolvedNoise noise = ResolveNoise(cfg, g.node_count());

  ParamLayout layout{cfg.arch, g.dim(), cfg.hidden_dim, g.num_classes()};
  TrainResult result{InitModel(layout, cfg.seed), {}};
  RunReport& report = result.report;
  report.sigma = noise.sigma;
  report.epsilon = noise.guarantee.epsilon;
  report.delta = noise.guarantee.delta;
  report.alpha = noise.guarantee.alpha;
  report.argmax_dout = noise.guarantee.argmax_dout;
  report.noise = cfg.noise;

  const SamplerConfig sampler = MakeSamplerConfig(cfg);
  const NoiseSpec spec{cfg.noise, noise.sigma, layout.size()};
  Rng noise_rng = MakeRng(cfg.seed, Stream::kNoise);

  for (int t = 1; t <= cfg.iterations; ++t) {
    const std::uint64_t key = MixKey(cfg.seed, {static_cast<std::uint64_t>(Stream::kSampler), static_cast<std::uint64_t>(t)});
    const SubGraphBatch batch = HeterPoisson(g, split.train_ids, sampler, key);
    report.total_subgraphs += batch.subgraphs.size();
    ClippedSum cs = ClippedGradientSum(result.params, batch, cfg.train_gin_lambda, cfg.threads);
    if (!batch.subgraphs.empty() && !std::isfinite(cs.mean_loss)) {
      throw NumericError("non-finite loss at iteration " + std::to_string(t) +
                         "; try a smaller learning rate (eta=" + std::to_string(cfg.learning_rate) + ")");
    }
    report.losses.push_back(cs.mean_loss);
    const PrivateGradient private_grad = Privatize(std::move(cs.sum), spec, noise_rng);
    if (observer) observer->OnIteration(t, batch, private_grad, result.params);
    ApplyUpdate(result.params, private_grad, cfg.learning_rate);
    if (!result.params.values.allFinite()) {
      throw NumericError("parameters diverged at iteration " + std::to_string(t));
    }
  }
  report.zero_coverage = report.total_subgraphs == 0;
  report.eval = Evaluate(result.params, g, split, cfg);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

namespace {

EvalResult EvaluateNodes(const ModelParams& params, const Graph& g, std::span<const NodeId> nodes,
                         const std::vector<bool>& allowed, const TrainConfig& cfg,
                         std::vector<NodeId>* access_log) {
  std::vector<int> predicted, truth;
  predicted.reserve(nodes.size());
  truth.reserve(nodes.size());
  for (NodeId u : nodes) {
    Rng rng = MakeRng(cfg.seed, Stream::kEval, static_cast<std::uint64_t>(u));
    const SubGraph sub = InferenceSubGraph(g, u, allowed, cfg.n_test, rng);
    if (access_log) {
      for (int r = 0; r < sub.member_count(); ++r) access_log->push_back(sub.global_id(r));
    }
    predicted.push_back(Predict(params, sub));
    truth.push_back(g.label(u));
  }
  return ScorePredictions(predicted, truth, g.num_classes());
}

}  // namespace

EvalResult Evaluate(const ModelParams& params, const Graph& g, const NodeSplit& split, const TrainConfig& cfg,
                    std::vector<NodeId>* access_log) {
  const std::vector<bool> allowed = MaskOf(split.test_ids, g.node_count());
  return EvaluateNodes(params, g, split.test_ids, allowed, cfg, access_log);
}

EvalResult EvaluateInductive(const ModelParams& params, const Graph& test_graph, const TrainConfig& cfg) {
  std::vector<NodeId> nodes(static_cast<std::size_t>(test_graph.node_count()));
  std::iota(nodes.begin(), nodes.end(), 0);
  const std::vector<bool> allowed(nodes.size(), true);
  return EvaluateNodes(params, test_graph, nodes, allowed, cfg, nullptr);
}

std::vector<ImpactRow> ImpactExperiment(const ImpactConfig& cfg) {
  if (cfg.repeats < 1) throw ConfigError("impact: repeats must be >= 1");
  for (double chi : cfg.chi_grid) {
    if (!(chi >= 0.0 && chi <= 1.0)) throw ConfigError("impact: chi must be in [0, 1]");
  }
  const std::size_t m = cfg.chi_grid.size();
  std::vector<std::vector<double>> deltas(m);
  const ParamLayout layout{cfg.arch, cfg.d, cfg.hidden_dim, cfg.num_classes};
  for (int r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t rep_seed = MixKey(cfg.seed, {static_cast<std::uint64_t>(r)});
    const Graph base = GenErdosRenyi(cfg.n, cfg.p, cfg.d, cfg.num_classes, rep_seed);
    const ModelParams params = InitModel(layout, rep_seed);
    const Eigen::VectorXd g_star = WholeGraphLossAndGrad(params, base).grad.values;

    Rng rng = MakeRng(rep_seed, Stream::kGen, 1);
    std::normal_distribution<double> normal;
    std::vector<double> feature(static_cast<std::size_t>(cfg.d));
    for (double& f : feature) f = normal(rng);
    const int label = std::uniform_int_distribution<int>(0, cfg.num_classes - 1)(rng);
    std::vector<NodeId> order(static_cast<std::size_t>(cfg.n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    for (std::size_t c = 0; c < m; ++c) {
      const auto count = static_cast<std::size_t>(std::llround(cfg.chi_grid[c] * cfg.n));
      const std::span<const NodeId> targets(order.data(), count);
      const Graph prime = AddNodeWithOutEdges(base, feature, label, targets);
      const Eigen::VectorXd g_prime = WholeGraphLossAndGrad(params, prime).grad.values;
      deltas[c].push_back((g_star - g_prime).norm());
    }
  }
  std::vector<ImpactRow> rows;
  for (std::size_t c = 0; c < m; ++c) {
    const auto& d = deltas[c];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double var = 0.0;
    for (double x : d) var += (x - mean) * (x - mean);
    var /= d.size() > 1 ? static_cast<double>(d.size() - 1) : 1.0;
    rows.push_back({cfg.chi_grid[c], mean, std::sqrt(var)});
  }
  return rows;
}

}  // namespace nodedp
