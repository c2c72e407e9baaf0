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

#include "nodedp/sampler.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace nodedp {
namespace {

constexpr std::uint64_t kCentralTag = 0xC3;
constexpr std::uint64_t kEdgeTag = 0xE7;

}  // namespace

void SamplerConfig::Validate() const {
  if (!(base_rate >= 0.0 && base_rate <= 1.0)) throw ConfigError("sampler: q_b must be in [0, 1]");
  if (!(multiplier >= 0.0) || !std::isfinite(multiplier)) throw ConfigError("sampler: M must be >= 0");
}

bool operator==(const SubGraph& a, const SubGraph& b) {
  return a.central == b.central && a.label == b.label && a.peripherals == b.peripherals &&
         a.nulled == b.nulled && a.local_edges == b.local_edges &&
         a.features.rows() == b.features.rows() && a.features.cols() == b.features.cols() &&
         a.features == b.features;
}

double NeighborInclusionProbability(int out_degree, double multiplier) {
  if (multiplier <= 0.0) return 0.0;
  if (out_degree <= 0) return 1.0;
  return std::min(1.0, multiplier / out_degree);
}

std::vector<NodeId> NeighborSampling(const Graph& g, std::span<const NodeId> candidates,
                                     double multiplier, Rng& rng) {
  std::uniform_real_distribution<double> unif;
  return NeighborSampling(g, candidates, multiplier, [&](NodeId) { return unif(rng); });
}

SubGraph InduceSubGraph(const Graph& g, NodeId central, std::vector<NodeId> peripherals) {
  std::sort(peripherals.begin(), peripherals.end());
  SubGraph sub;
  sub.central = central;
  sub.label = g.label(central);
  sub.peripherals = std::move(peripherals);
  sub.nulled.assign(sub.peripherals.size(), false);
  const int m = sub.member_count();
  sub.features.resize(m, g.dim());
  sub.features.row(0) = g.feature(central);
  for (int r = 1; r < m; ++r) sub.features.row(r) = g.feature(sub.global_id(r));

  auto local_of = [&](NodeId v) -> int {
    if (v == central) return 0;
    auto it = std::lower_bound(sub.peripherals.begin(), sub.peripherals.end(), v);
    if (it == sub.peripherals.end() || *it != v) return -1;
    return static_cast<int>(it - sub.peripherals.begin()) + 1;
  };
  for (int a = 0; a < m; ++a) {
    for (NodeId v : g.out_neighbors(sub.global_id(a))) {
      const int b = local_of(v);
      if (b >= 0) sub.local_edges.push_back({a, b});
    }
  }
  std::sort(sub.local_edges.begin(), sub.local_edges.end(),
            [](const LocalEdge& x, const LocalEdge& y) { return std::tie(x.src, x.dst) < std::tie(y.src, y.dst); });
  return sub;
}

SubGraphBatch HeterPoisson(const Graph& whole, std::span<const NodeId> input_ids,
                           const SamplerConfig& cfg, std::uint64_t stream_key) {
  cfg.Validate();
  const NodeId n = whole.node_count();
  const std::vector<bool> input_mask = MaskOf(input_ids, n);
  std::vector<bool> candidate_mask = input_mask;
  if (cfg.mode == SampleMode::kInference) {
    candidate_mask = MaskOf(cfg.test_ids, n);
    for (NodeId i : input_ids) {
      if (!candidate_mask[static_cast<std::size_t>(i)]) {
        throw ConfigError("HeterPoisson: inference input node " + std::to_string(i) + " is not a test node");
      }
    }
  }

  std::vector<NodeId> centrals;
  for (NodeId i : input_ids) {
    if (UniformFromKey(MixKey(stream_key, {kCentralTag, static_cast<std::uint64_t>(i)})) < cfg.base_rate) {
      centrals.push_back(i);
    }
  }
  std::sort(centrals.begin(), centrals.end());
  centrals.erase(std::unique(centrals.begin(), centrals.end()), centrals.end());

  SubGraphBatch batch;
  batch.subgraphs.reserve(centrals.size());
  std::vector<NodeId> candidates;
  for (NodeId i : centrals) {
    candidates.clear();
    for (NodeId j : whole.in_neighbors(i)) {
      if (candidate_mask[static_cast<std::size_t>(j)]) candidates.push_back(j);
    }
    auto coin = [&](NodeId j) {
      return UniformFromKey(MixKey(stream_key, {kEdgeTag, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)}));
    };
    batch.subgraphs.push_back(InduceSubGraph(whole, i, NeighborSampling(whole, candidates, cfg.multiplier, coin)));
  }
  batch.central_set = std::move(centrals);

  if (cfg.enforce_no_overlap) {
    const std::vector<bool> central_mask = MaskOf(batch.central_set, n);
    for (SubGraph& sub : batch.subgraphs) {
      for (std::size_t r = 0; r < sub.peripherals.size(); ++r) {
        ++batch.overlap_checks;
        if (!central_mask[static_cast<std::size_t>(sub.peripherals[r])]) continue;
        const int local = static_cast<int>(r) + 1;
        sub.nulled[r] = true;
        sub.features.row(local).setZero();
        if (cfg.null_policy == NullPolicy::kDetach) {
          std::erase_if(sub.local_edges, [local](const LocalEdge& e) { return e.src == local || e.dst == local; });
        }
      }
    }
  }
  return batch;
}

CoupledSample CoupledAdjacentSampleOn(const Graph& whole, const SamplerConfig& cfg, std::uint64_t seed) {
  CoupledSample out;
  out.z = whole.node_count() - 1;
  std::vector<NodeId> ids(static_cast<std::size_t>(whole.node_count()));
  for (NodeId i = 0; i < whole.node_count(); ++i) ids[static_cast<std::size_t>(i)] = i;
  const std::span<const NodeId> all(ids);
  out.star = HeterPoisson(whole, all.first(ids.size() - 1), cfg, seed);
  out.prime = HeterPoisson(whole, all, cfg, seed);

  out.z_central = std::binary_search(out.prime.central_set.begin(), out.prime.central_set.end(), out.z);
  int live_peripheral = 0, any_peripheral = 0;
  for (const SubGraph& sub : out.prime.subgraphs) {
    auto it = std::lower_bound(sub.peripherals.begin(), sub.peripherals.end(), out.z);
    if (it == sub.peripherals.end() || *it != out.z) continue;
    ++any_peripheral;
    if (!sub.nulled[static_cast<std::size_t>(it - sub.peripherals.begin())]) ++live_peripheral;
  }
  if (out.z_central) {
    out.k = 0.5 + (cfg.enforce_no_overlap ? 0.0 : static_cast<double>(live_peripheral));
  } else {
    out.k = static_cast<double>(any_peripheral);
  }
  return out;
}

CoupledSample CoupledAdjacentSample(const Graph& g_star, const NodeSpec& z, const SamplerConfig& cfg,
                                    std::uint64_t seed) {
  Graph whole = AddNode(g_star, z.feature, z.label, z.out_targets, z.in_sources);
  CoupledSample out = CoupledAdjacentSampleOn(whole, cfg, seed);
  out.whole = std::move(whole);
  return out;
}

SubGraph InferenceSubGraph(const Graph& g, NodeId node, const std::vector<bool>& allowed,
                           int max_neighbors, Rng& rng) {
  std::vector<NodeId> pool;
  for (NodeId j : g.in_neighbors(node)) {
    if (allowed[static_cast<std::size_t>(j)]) pool.push_back(j);
  }
  if (max_neighbors >= 0 && static_cast<int>(pool.size()) > max_neighbors) {
    // Partial Fisher-Yates: the first max_neighbors slots are a uniform subset.
    for (int r = 0; r < max_neighbors; ++r) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(r), pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(r)], pool[pick(rng)]);
    }
    pool.resize(static_cast<std::size_t>(max_neighbors));
  }
  return InduceSubGraph(g, node, std::move(pool));
}

nlohmann::json BatchToJson(const SubGraphBatch& batch) {
  nlohmann::json j;
  j["central_set"] = batch.central_set;
  j["overlap_checks"] = batch.overlap_checks;
  nlohmann::json subs = nlohmann::json::array();
  for (const SubGraph& s : batch.subgraphs) {
    nlohmann::json e;
    e["central"] = s.central;
    e["label"] = s.label;
    e["peripherals"] = s.peripherals;
    std::vector<int> nulled(s.nulled.begin(), s.nulled.end());
    e["nulled"] = nulled;
    nlohmann::json edges = nlohmann::json::array();
    for (const LocalEdge& le : s.local_edges) edges.push_back({le.src, le.dst});
    e["local_edges"] = std::move(edges);
    subs.push_back(std::move(e));
  }
  j["subgraphs"] = std::move(subs);
  return j;
}

}  // namespace nodedp
