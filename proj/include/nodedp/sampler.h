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

#ifndef NODEDP_SAMPLER_H_
#define NODEDP_SAMPLER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "nodedp/graph.h"
#include "nodedp/random.h"

namespace nodedp {

enum class SampleMode { kTrain, kInference };

// What happens to a peripheral that is also a central elsewhere in the batch.
enum class NullPolicy {
  // Zero its feature row and drop its incident edges inside the sub-graph, so
  // the aggregation sees exactly what it would see without the node.
  kDetach,
  // Zero its feature row only; its edges still count in degree terms.
  kZeroFeatures,
};

struct SamplerConfig {
  double base_rate = 0.01;   // q_b, probability that a node becomes a central
  double multiplier = 1.0;   // M
  bool enforce_no_overlap = true;
  NullPolicy null_policy = NullPolicy::kDetach;
  SampleMode mode = SampleMode::kTrain;
  std::vector<NodeId> test_ids;  // candidate pool in inference mode

  void Validate() const;
};

struct LocalEdge {
  int src = 0;
  int dst = 0;
  friend bool operator==(const LocalEdge&, const LocalEdge&) = default;
};

// A one-hop sub-graph around a central node. Local index 0 is the central,
// local index r + 1 is peripherals[r].
struct SubGraph {
  NodeId central = 0;
  std::vector<NodeId> peripherals;  // sorted
  FeatureMatrix features;
  std::vector<LocalEdge> local_edges;  // sorted by (src, dst)
  std::vector<bool> nulled;            // per peripheral
  int label = 0;

  int member_count() const { return static_cast<int>(peripherals.size()) + 1; }
  NodeId global_id(int local) const { return local == 0 ? central : peripherals[static_cast<std::size_t>(local - 1)]; }
};

bool operator==(const SubGraph& a, const SubGraph& b);

struct SubGraphBatch {
  std::vector<SubGraph> subgraphs;  // ordered by central id
  std::vector<NodeId> central_set;  // sorted
  // Peripheral slots inspected by the overlap pass.
  std::size_t overlap_checks = 0;
};

// Probability that a neighbor with the given whole-graph out-degree is kept:
// min(1, M / out_degree).
double NeighborInclusionProbability(int out_degree, double multiplier);

// Keeps each candidate independently with NeighborInclusionProbability. The
// coin for candidate i is `coin(i)`, a uniform draw in [0, 1).
template <typename CoinFn>
std::vector<NodeId> NeighborSampling(const Graph& g, std::span<const NodeId> candidates,
                                     double multiplier, CoinFn&& coin) {
  std::vector<NodeId> kept;
  for (NodeId i : candidates) {
    if (coin(i) < NeighborInclusionProbability(g.out_degree(i), multiplier)) kept.push_back(i);
  }
  return kept;
}

std::vector<NodeId> NeighborSampling(const Graph& g, std::span<const NodeId> candidates,
                                     double multiplier, Rng& rng);

// Samples centrals among `input_ids` and their in-neighbors (restricted to the
// input set, or to the test ids in inference mode), builds induced sub-graphs
// and applies the overlap pass. Out-degrees are read from `whole`.
//
// All coins are keyed by (stream_key, node[, neighbor]) so two runs with the
// same key agree on every coin they share.
SubGraphBatch HeterPoisson(const Graph& whole, std::span<const NodeId> input_ids,
                           const SamplerConfig& cfg, std::uint64_t stream_key);

// The node that differs between two adjacent input graphs.
struct NodeSpec {
  std::vector<double> feature;
  int label = 0;
  std::vector<NodeId> out_targets;
  std::vector<NodeId> in_sources;
};

struct CoupledSample {
  Graph whole;                // g_star plus z
  NodeId z = 0;
  SubGraphBatch star;         // input graph without z
  SubGraphBatch prime;        // input graph with z
  // 0.5 when z is a central (plus the count of sub-graphs that contain z as a
  // live peripheral when overlap enforcement is off), otherwise the number of
  // sub-graphs that contain z as a peripheral.
  double k = 0.0;
  bool z_central = false;
};

CoupledSample CoupledAdjacentSample(const Graph& g_star, const NodeSpec& z,
                                    const SamplerConfig& cfg, std::uint64_t seed);

// Same as above on a prebuilt whole graph whose last node is z. Avoids
// rebuilding the graph in Monte Carlo loops.
CoupledSample CoupledAdjacentSampleOn(const Graph& whole, const SamplerConfig& cfg,
                                      std::uint64_t seed);

// Test-time sub-graph: up to `max_neighbors` in-neighbors of `node` drawn
// uniformly without replacement from those with allowed[j] set. A negative
// limit keeps every allowed neighbor.
SubGraph InferenceSubGraph(const Graph& g, NodeId node, const std::vector<bool>& allowed,
                           int max_neighbors, Rng& rng);

// Induced sub-graph on {central} U peripherals with no nulling.
SubGraph InduceSubGraph(const Graph& g, NodeId central, std::vector<NodeId> peripherals);

nlohmann::json BatchToJson(const SubGraphBatch& batch);

}  // namespace nodedp

#endif  // NODEDP_SAMPLER_H_
