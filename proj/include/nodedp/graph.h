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

#ifndef NODEDP_GRAPH_H_
#define NODEDP_GRAPH_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nodedp/common.h"
#include "json.hpp"

namespace nodedp {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct BuildOptions {
  // Emit both directions of every input edge; mirrored duplicates collapse.
  bool symmetrize = false;
};

// Directed graph with per-node features and class labels. Immutable after
// construction: the mutating operations below return new graphs.
//
// Adjacency lists are sorted by node id. Self-loops are dropped at build time;
// the aggregators add the self term themselves.
class Graph {
 public:
  Graph() = default;

  static Graph Build(FeatureMatrix features, std::vector<int> labels, int num_classes,
                     std::span<const Edge> edges, BuildOptions options = {});

  NodeId node_count() const { return static_cast<NodeId>(labels_.size()); }
  Eigen::Index dim() const { return features_.cols(); }
  int num_classes() const { return num_classes_; }
  std::size_t edge_count() const { return edge_count_; }

  const FeatureMatrix& features() const { return features_; }
  auto feature(NodeId i) const { return features_.row(i); }
  int label(NodeId i) const { return labels_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& labels() const { return labels_; }

  std::span<const NodeId> out_neighbors(NodeId i) const { return out_[static_cast<std::size_t>(i)]; }
  std::span<const NodeId> in_neighbors(NodeId i) const { return in_[static_cast<std::size_t>(i)]; }
  int out_degree(NodeId i) const { return static_cast<int>(out_[static_cast<std::size_t>(i)].size()); }
  int in_degree(NodeId i) const { return static_cast<int>(in_[static_cast<std::size_t>(i)].size()); }
  int max_out_degree() const;

  bool HasEdge(NodeId src, NodeId dst) const;
  std::vector<Edge> Edges() const;

  bool operator==(const Graph& other) const;

 private:
  FeatureMatrix features_;
  std::vector<int> labels_;
  int num_classes_ = 0;
  std::vector<std::vector<NodeId>> out_;
  std::vector<std::vector<NodeId>> in_;
  std::size_t edge_count_ = 0;
};

struct NodeSplit {
  std::vector<NodeId> train_ids;  // sorted
  std::vector<NodeId> test_ids;   // sorted
};

// Node file rows: `id,label,f_1,...,f_d` (a non-numeric first row is a header).
// Edge file rows: `src dst`, whitespace separated; blank and `#` lines skipped.
Graph LoadGraph(const std::string& node_path, const std::string& edge_path,
                BuildOptions options = {});
void SaveGraph(const Graph& g, const std::string& node_path, const std::string& edge_path);
nlohmann::json GraphToJson(const Graph& g);

Graph GenErdosRenyi(NodeId n, double p, Eigen::Index d, int num_classes, std::uint64_t seed);

struct PlantedClassesOptions {
  NodeId n = 1000;
  Eigen::Index d = 8;
  int num_classes = 2;
  double p_intra = 0.01;
  double p_inter = 0.001;
  double class_separation = 4.0;
};

// Class c gets features N(mu_c, I) with mu_c = (separation / sqrt 2) e_c, so
// every pair of class means is `class_separation` apart. Requires d >= C.
// Labels are balanced (i mod C, shuffled).
Graph GenPlantedClasses(const PlantedClassesOptions& options, std::uint64_t seed);

// Appends node n = g.node_count() with edges n -> t for t in out_targets and
// s -> n for s in in_sources.
Graph AddNode(const Graph& g, std::span<const double> feature, int label,
              std::span<const NodeId> out_targets, std::span<const NodeId> in_sources = {});
inline Graph AddNodeWithOutEdges(const Graph& g, std::span<const double> feature, int label,
                                 std::span<const NodeId> targets) {
  return AddNode(g, feature, label, targets, {});
}

// Removes node `id` and its edges; ids above it shift down by one.
Graph RemoveNode(const Graph& g, NodeId id);

NodeSplit SplitTrainTest(NodeId node_count, double train_fraction, std::uint64_t seed);

// Membership mask of size node_count.
std::vector<bool> MaskOf(std::span<const NodeId> ids, NodeId node_count);

}  // namespace nodedp

#endif  // NODEDP_GRAPH_H_
