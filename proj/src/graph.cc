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

#include "nodedp/graph.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "nodedp/random.h"

namespace nodedp {
namespace {

std::vector<std::string_view> SplitFields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
bool ParseNumber(std::string_view s, T& out) {
  s = Trim(s);
  if (s.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars for double is available in libstdc++ 11.
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  } else {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  }
}

}  // namespace

Graph Graph::Build(FeatureMatrix features, std::vector<int> labels, int num_classes,
                   std::span<const Edge> edges, BuildOptions options) {
  const auto n = static_cast<NodeId>(labels.size());
  if (features.rows() != n) {
    throw IntegrityError("feature rows (" + std::to_string(features.rows()) +
                         ") != label count (" + std::to_string(n) + ")");
  }
  if (num_classes < 1) throw IntegrityError("num_classes must be >= 1");
  for (NodeId i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= num_classes) {
      throw IntegrityError("node " + std::to_string(i) + " has label " + std::to_string(y) +
                           " outside [0, " + std::to_string(num_classes) + ")");
    }
  }

  Graph g;
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  g.num_classes_ = num_classes;
  g.out_.assign(static_cast<std::size_t>(n), {});
  g.in_.assign(static_cast<std::size_t>(n), {});

  auto check = [n](const Edge& e) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      throw IntegrityError("edge " + std::to_string(e.src) + " -> " + std::to_string(e.dst) +
                           " references a node outside [0, " + std::to_string(n) + ")");
    }
  };
  for (const Edge& e : edges) {
    check(e);
    if (e.src == e.dst) continue;
    g.out_[static_cast<std::size_t>(e.src)].push_back(e.dst);
    if (options.symmetrize) g.out_[static_cast<std::size_t>(e.dst)].push_back(e.src);
  }
  for (NodeId i = 0; i < n; ++i) {
    auto& adj = g.out_[static_cast<std::size_t>(i)];
    std::sort(adj.begin(), adj.end());
    auto dup = std::adjacent_find(adj.begin(), adj.end());
    if (dup != adj.end()) {
      if (!options.symmetrize) {
        throw IntegrityError("duplicate edge " + std::to_string(i) + " -> " + std::to_string(*dup));
      }
      adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    g.edge_count_ += adj.size();
    for (NodeId j : adj) g.in_[static_cast<std::size_t>(j)].push_back(i);
  }
  // in_ lists are filled in increasing source order, so already sorted.
  return g;
}

int Graph::max_out_degree() const {
  int m = 0;
  for (const auto& adj : out_) m = std::max(m, static_cast<int>(adj.size()));
  return m;
}

bool Graph::HasEdge(NodeId src, NodeId dst) const {
  const auto& adj = out_[static_cast<std::size_t>(src)];
  return std::binary_search(adj.begin(), adj.end(), dst);
}

std::vector<Edge> Graph::Edges() const {
  std::vector<Edge> edges;
  edges.reserve(edge_count_);
  for (NodeId i = 0; i < node_count(); ++i) {
    for (NodeId j : out_neighbors(i)) edges.push_back({i, j});
  }
  return edges;
}

bool Graph::operator==(const Graph& other) const {
  return num_classes_ == other.num_classes_ && labels_ == other.labels_ &&
         features_.rows() == other.features_.rows() && features_.cols() == other.features_.cols() &&
         features_ == other.features_ && out_ == other.out_ && in_ == other.in_;
}

Graph LoadGraph(const std::string& node_path, const std::string& edge_path, BuildOptions options) {
  std::ifstream nodes(node_path);
  if (!nodes) throw IntegrityError("cannot open node file " + node_path);

  struct Row {
    NodeId id;
    int label;
    std::vector<double> feats;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  long dim = -1;
  while (std::getline(nodes, line)) {
    ++line_no;
    std::string_view view = Trim(line);
    if (view.empty()) continue;
    auto fields = SplitFields(view, ',');
    Row row;
    if (!ParseNumber(fields[0], row.id)) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw ParseError(node_path, line_no, "bad node id '" + std::string(Trim(fields[0])) + "'");
    }
    if (fields.size() < 2 || !ParseNumber(fields[1], row.label)) {
      throw ParseError(node_path, line_no, "missing or bad label");
    }
    row.feats.resize(fields.size() - 2);
    for (std::size_t k = 2; k < fields.size(); ++k) {
      if (!ParseNumber(fields[k], row.feats[k - 2])) {
        throw ParseError(node_path, line_no, "bad feature value '" + std::string(Trim(fields[k])) + "'");
      }
    }
    if (dim < 0) dim = static_cast<long>(row.feats.size());
    if (static_cast<long>(row.feats.size()) != dim) {
      throw ParseError(node_path, line_no,
                       "expected " + std::to_string(dim) + " features, got " + std::to_string(row.feats.size()));
    }
    if (row.label < 0) throw ParseError(node_path, line_no, "negative label");
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<NodeId>(rows.size());
  std::vector<int> seen(rows.size(), 0);
  FeatureMatrix features(n, std::max(dim, 0L));
  std::vector<int> labels(rows.size());
  int max_label = -1;
  for (const Row& r : rows) {
    if (r.id < 0 || r.id >= n) {
      throw IntegrityError("node id " + std::to_string(r.id) + " is not a dense 0-based id (n=" +
                           std::to_string(n) + ")");
    }
    if (seen[static_cast<std::size_t>(r.id)]++) throw IntegrityError("duplicate node id " + std::to_string(r.id));
    for (long k = 0; k < dim; ++k) features(r.id, k) = r.feats[static_cast<std::size_t>(k)];
    labels[static_cast<std::size_t>(r.id)] = r.label;
    max_label = std::max(max_label, r.label);
  }

  std::ifstream edge_file(edge_path);
  if (!edge_file) throw IntegrityError("cannot open edge file " + edge_path);
  std::vector<Edge> edges;
  line_no = 0;
  while (std::getline(edge_file, line)) {
    ++line_no;
    std::string_view view = Trim(line);
    if (view.empty() || view.front() == '#') continue;
    std::istringstream ss{std::string(view)};
    std::string a, b, extra;
    Edge e;
    if (!(ss >> a >> b) || (ss >> extra) || !ParseNumber(std::string_view(a), e.src) ||
        !ParseNumber(std::string_view(b), e.dst)) {
      throw ParseError(edge_path, line_no, "expected 'src dst'");
    }
    edges.push_back(e);
  }
  return Graph::Build(std::move(features), std::move(labels), std::max(max_label + 1, 1), edges, options);
}

void SaveGraph(const Graph& g, const std::string& node_path, const std::string& edge_path) {
  std::ofstream nodes(node_path);
  if (!nodes) throw IntegrityError("cannot write " + node_path);
  nodes << "id,label";
  for (Eigen::Index k = 0; k < g.dim(); ++k) nodes << ",f_" << (k + 1);
  nodes << '\n';
  char buf[64];
  for (NodeId i = 0; i < g.node_count(); ++i) {
    nodes << i << ',' << g.label(i);
    for (Eigen::Index k = 0; k < g.dim(); ++k) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), g.features()(i, k));
      nodes << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    nodes << '\n';
  }
  std::ofstream edges(edge_path);
  if (!edges) throw IntegrityError("cannot write " + edge_path);
  for (const Edge& e : g.Edges()) edges << e.src << ' ' << e.dst << '\n';
}

nlohmann::json GraphToJson(const Graph& g) {
  nlohmann::json j;
  j["node_count"] = g.node_count();
  j["dim"] = g.dim();
  j["num_classes"] = g.num_classes();
  j["labels"] = g.labels();
  nlohmann::json feats = nlohmann::json::array();
  for (NodeId i = 0; i < g.node_count(); ++i) {
    std::vector<double> row(g.feature(i).begin(), g.feature(i).end());
    feats.push_back(row);
  }
  j["features"] = std::move(feats);
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.Edges()) edges.push_back({e.src, e.dst});
  j["edges"] = std::move(edges);
  return j;
}

Graph GenErdosRenyi(NodeId n, double p, Eigen::Index d, int num_classes, std::uint64_t seed) {
  if (n < 1) throw ConfigError("GenErdosRenyi: n must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("GenErdosRenyi: p must be in [0, 1]");
  if (num_classes < 1 || d < 0) throw ConfigError("GenErdosRenyi: bad d or C");
  Rng rng = MakeRng(seed, Stream::kGen);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> label_dist(0, num_classes - 1);
  std::uniform_real_distribution<double> unif;

  FeatureMatrix features(n, d);
  for (NodeId i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) features(i, k) = normal(rng);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& y : labels) y = label_dist(rng);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = 0; j < n; ++j) {
      if (i == j) continue;
      if (unif(rng) < p) edges.push_back({i, j});
    }
  }
  return Graph::Build(std::move(features), std::move(labels), num_classes, edges);
}

Graph GenPlantedClasses(const PlantedClassesOptions& o, std::uint64_t seed) {
  if (o.n < 1 || o.num_classes < 1) throw ConfigError("GenPlantedClasses: n and C must be >= 1");
  if (o.d < o.num_classes) throw ConfigError("GenPlantedClasses: need d >= C for orthogonal class means");
  if (!(0.0 <= o.p_inter && o.p_inter <= o.p_intra && o.p_intra <= 1.0)) {
    throw ConfigError("GenPlantedClasses: need 0 <= p_inter <= p_intra <= 1");
  }
  if (o.class_separation < 0.0) throw ConfigError("GenPlantedClasses: separation must be >= 0");
  Rng rng = MakeRng(seed, Stream::kGen);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;

  std::vector<int> labels(static_cast<std::size_t>(o.n));
  for (NodeId i = 0; i < o.n; ++i) labels[static_cast<std::size_t>(i)] = i % o.num_classes;
  std::shuffle(labels.begin(), labels.end(), rng);

  const double offset = o.class_separation / std::sqrt(2.0);
  FeatureMatrix features(o.n, o.d);
  for (NodeId i = 0; i < o.n; ++i) {
    for (Eigen::Index k = 0; k < o.d; ++k) features(i, k) = normal(rng);
    features(i, labels[static_cast<std::size_t>(i)]) += offset;
  }
  std::vector<Edge> edges;
  for (NodeId i = 0; i < o.n; ++i) {
    for (NodeId j = 0; j < o.n; ++j) {
      if (i == j) continue;
      const double p = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? o.p_intra : o.p_inter;
      if (unif(rng) < p) edges.push_back({i, j});
    }
  }
  return Graph::Build(std::move(features), std::move(labels), o.num_classes, edges);
}

Graph AddNode(const Graph& g, std::span<const double> feature, int label,
              std::span<const NodeId> out_targets, std::span<const NodeId> in_sources) {
  const NodeId n = g.node_count();
  if (static_cast<Eigen::Index>(feature.size()) != g.dim()) {
    throw IntegrityError("AddNode: feature has dimension " + std::to_string(feature.size()) +
                         ", graph has " + std::to_string(g.dim()));
  }
  auto check_unique = [n](std::span<const NodeId> ids, const char* what) {
    std::vector<NodeId> sorted(ids.begin(), ids.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw IntegrityError(std::string("AddNode: duplicate ") + what);
    }
    for (NodeId t : sorted) {
      if (t < 0 || t >= n) throw IntegrityError(std::string("AddNode: ") + what + " " + std::to_string(t) + " does not exist");
    }
  };
  check_unique(out_targets, "target");
  check_unique(in_sources, "source");

  FeatureMatrix features(n + 1, g.dim());
  features.topRows(n) = g.features();
  for (Eigen::Index k = 0; k < g.dim(); ++k) features(n, k) = feature[static_cast<std::size_t>(k)];
  std::vector<int> labels = g.labels();
  labels.push_back(label);
  std::vector<Edge> edges = g.Edges();
  for (NodeId t : out_targets) edges.push_back({n, t});
  for (NodeId s : in_sources) edges.push_back({s, n});
  return Graph::Build(std::move(features), std::move(labels), std::max(g.num_classes(), label + 1), edges);
}

Graph RemoveNode(const Graph& g, NodeId id) {
  const NodeId n = g.node_count();
  if (id < 0 || id >= n) throw IntegrityError("RemoveNode: node " + std::to_string(id) + " does not exist");
  auto remap = [id](NodeId v) { return v > id ? v - 1 : v; };
  FeatureMatrix features(n - 1, g.dim());
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(n - 1));
  for (NodeId i = 0; i < n; ++i) {
    if (i == id) continue;
    features.row(remap(i)) = g.feature(i);
    labels.push_back(g.label(i));
  }
  std::vector<Edge> edges;
  for (const Edge& e : g.Edges()) {
    if (e.src == id || e.dst == id) continue;
    edges.push_back({remap(e.src), remap(e.dst)});
  }
  return Graph::Build(std::move(features), std::move(labels), g.num_classes(), edges);
}

NodeSplit SplitTrainTest(NodeId node_count, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("SplitTrainTest: train_fraction must be in (0, 1)");
  }
  std::vector<NodeId> perm(static_cast<std::size_t>(node_count));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = MakeRng(seed, Stream::kSplit);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * node_count));
  NodeSplit split;
  split.train_ids.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_ids.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

std::vector<bool> MaskOf(std::span<const NodeId> ids, NodeId node_count) {
  std::vector<bool> mask(static_cast<std::size_t>(node_count), false);
  for (NodeId i : ids) {
    if (i < 0 || i >= node_count) throw IntegrityError("MaskOf: id " + std::to_string(i) + " out of range");
    mask[static_cast<std::size_t>(i)] = true;
  }
  return mask;
}

}  // namespace nodedp
