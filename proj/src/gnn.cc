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

#include "nodedp/gnn.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "nodedp/common.h"
#include "nodedp/random.h"

namespace nodedp {
namespace {

using InLists = std::vector<std::vector<int>>;

InLists InListsOf(const SubGraph& sub) {
  InLists in(static_cast<std::size_t>(sub.member_count()));
  for (const LocalEdge& e : sub.local_edges) in[static_cast<std::size_t>(e.dst)].push_back(e.src);
  return in;
}

template <typename Features, typename InOf>
Eigen::VectorXd Aggregate(Arch arch, double lambda, int u, const Features& x, InOf&& in_of) {
  const auto& nb = in_of(u);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(x.cols());
  switch (arch) {
    case Arch::kGcn: {
      const double du = static_cast<double>(nb.size()) + 1.0;
      a += x.row(u).transpose() / du;
      for (int j : nb) {
        const double dj = static_cast<double>(in_of(j).size()) + 1.0;
        a += x.row(j).transpose() / std::sqrt(dj * du);
      }
      break;
    }
    case Arch::kGin: {
      a += (1.0 + lambda) * x.row(u).transpose();
      for (int j : nb) a += x.row(j).transpose();
      break;
    }
    case Arch::kSage: {
      a += x.row(u).transpose();
      for (int j : nb) a += x.row(j).transpose();
      a /= static_cast<double>(nb.size()) + 1.0;
      break;
    }
  }
  return a;
}

double Elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double EluGrad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

ForwardCache Head(const ModelParams& params, Eigen::VectorXd aggregated) {
  ForwardCache c;
  c.aggregated = std::move(aggregated);
  c.pre = params.w_update().transpose() * c.aggregated + params.b_update();
  c.hidden = c.pre.unaryExpr(&Elu);
  c.logits = params.w_head().transpose() * c.hidden + params.b_head();
  return c;
}

// Cross-entropy of `label` and accumulation of weight * d(loss)/d(params).
template <typename Row>
double BackpropInto(const ModelParams& params, const ForwardCache& c, int label, const Row& x_u,
                    double weight, GradientVector& grad) {
  const double m = c.logits.maxCoeff();
  const Eigen::VectorXd shifted = (c.logits.array() - m).matrix();
  const double log_z = std::log(shifted.array().exp().sum());
  const double loss = log_z - shifted[label];

  Eigen::VectorXd dz = (shifted.array() - log_z).exp().matrix();
  dz[label] -= 1.0;
  dz *= weight;
  grad.w_head().noalias() += c.hidden * dz.transpose();
  grad.b_head() += dz;
  const Eigen::VectorXd dpre = ((params.w_head() * dz).array() * c.pre.unaryExpr(&EluGrad).array()).matrix();
  grad.w_update().noalias() += c.aggregated * dpre.transpose();
  grad.b_update() += dpre;
  if (params.layout.arch == Arch::kGin) {
    grad.lambda() += (params.w_update() * dpre).dot(x_u.transpose());
  }
  return loss;
}

void CheckShapes(const ModelParams& params, Eigen::Index feature_dim) {
  if (params.values.size() != params.layout.size()) throw ConfigError("model: parameter vector has wrong length");
  if (feature_dim != params.layout.d_in) {
    throw ConfigError("model: feature dimension " + std::to_string(feature_dim) + " != d_in " +
                      std::to_string(params.layout.d_in));
  }
}

}  // namespace

std::string ToString(Arch arch) {
  switch (arch) {
    case Arch::kGcn: return "gcn";
    case Arch::kGin: return "gin";
    case Arch::kSage: return "sage";
  }
  return "?";
}

Arch ParseArch(const std::string& name) {
  if (name == "gcn") return Arch::kGcn;
  if (name == "gin") return Arch::kGin;
  if (name == "sage") return Arch::kSage;
  throw ConfigError("unknown architecture '" + name + "' (expected gcn, gin or sage)");
}

ModelParams InitModel(const ParamLayout& layout, std::uint64_t seed) {
  if (layout.d_in < 1 || layout.d_hid < 1 || layout.num_classes < 1) throw ConfigError("model: dims must be >= 1");
  ModelParams p(layout);
  Rng rng = MakeRng(seed, Stream::kInit);
  auto glorot = [&rng](auto&& w) {
    const double r = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> u(-r, r);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
  };
  glorot(p.w_update());
  glorot(p.w_head());
  return p;
}

ForwardCache Forward(const ModelParams& params, const SubGraph& sub) {
  CheckShapes(params, sub.features.cols());
  const InLists in = InListsOf(sub);
  auto in_of = [&in](int v) -> const std::vector<int>& { return in[static_cast<std::size_t>(v)]; };
  return Head(params, Aggregate(params.layout.arch, params.lambda(), 0, sub.features, in_of));
}

int Predict(const ModelParams& params, const SubGraph& sub) {
  Eigen::Index arg = 0;
  Forward(params, sub).logits.maxCoeff(&arg);
  return static_cast<int>(arg);
}

LossAndGradient LossAndGrad(const ModelParams& params, const SubGraph& sub) {
  if (sub.label < 0 || sub.label >= params.layout.num_classes) throw ConfigError("model: label out of range");
  const ForwardCache c = Forward(params, sub);
  LossAndGradient out{0.0, GradientVector(params.layout)};
  out.loss = BackpropInto(params, c, sub.label, sub.features.row(0), 1.0, out.grad);
  return out;
}

LossAndGradient WholeGraphLossAndGrad(const ModelParams& params, const Graph& g) {
  CheckShapes(params, g.dim());
  LossAndGradient out{0.0, GradientVector(params.layout)};
  const NodeId n = g.node_count();
  if (n == 0) return out;
  // Whole-graph in-lists as int spans; NodeId is int32 so reuse the storage.
  auto in_of = [&g](int v) { return g.in_neighbors(v); };
  const double w = 1.0 / static_cast<double>(n);
  for (NodeId u = 0; u < n; ++u) {
    const ForwardCache c = Head(params, Aggregate(params.layout.arch, params.lambda(), u, g.features(), in_of));
    out.loss += w * BackpropInto(params, c, g.label(u), g.feature(u), w, out.grad);
  }
  return out;
}

GradientVector ClipGradient(const GradientVector& grad, double threshold) {
  GradientVector out = grad;
  const double norm = grad.values.norm();
  if (norm > threshold) out.values *= threshold / norm;
  return out;
}

nlohmann::json ToJson(const ParamLayout& layout) {
  return {{"arch", ToString(layout.arch)}, {"d_in", layout.d_in}, {"d_hid", layout.d_hid},
          {"num_classes", layout.num_classes}, {"param_count", layout.size()}};
}

void SaveCheckpoint(const ModelParams& params, const std::string& blob_path, const std::string& header_path) {
  static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes little-endian");
  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw IntegrityError("cannot write " + blob_path);
  blob.write(reinterpret_cast<const char*>(params.values.data()),
             static_cast<std::streamsize>(params.values.size() * sizeof(double)));
  nlohmann::json header = ToJson(params.layout);
  header["format"] = "f64le";
  std::ofstream h(header_path);
  if (!h) throw IntegrityError("cannot write " + header_path);
  h << header.dump(2) << '\n';
}

ModelParams LoadCheckpoint(const std::string& blob_path, const std::string& header_path) {
  std::ifstream h(header_path);
  if (!h) throw IntegrityError("cannot open " + header_path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(h);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("bad checkpoint header " + header_path + ": " + e.what());
  }
  ParamLayout layout;
  layout.arch = ParseArch(header.at("arch").get<std::string>());
  layout.d_in = header.at("d_in").get<Eigen::Index>();
  layout.d_hid = header.at("d_hid").get<Eigen::Index>();
  layout.num_classes = header.at("num_classes").get<Eigen::Index>();
  if (header.at("param_count").get<Eigen::Index>() != layout.size()) {
    throw IntegrityError("checkpoint header param_count does not match its shapes");
  }
  ModelParams p(layout);
  std::ifstream blob(blob_path, std::ios::binary | std::ios::ate);
  if (!blob) throw IntegrityError("cannot open " + blob_path);
  const auto bytes = static_cast<std::size_t>(blob.tellg());
  if (bytes != static_cast<std::size_t>(layout.size()) * sizeof(double)) {
    throw IntegrityError("checkpoint blob has " + std::to_string(bytes) + " bytes, expected " +
                         std::to_string(layout.size() * static_cast<Eigen::Index>(sizeof(double))));
  }
  blob.seekg(0);
  blob.read(reinterpret_cast<char*>(p.values.data()), static_cast<std::streamsize>(bytes));
  return p;
}

}  // namespace nodedp
