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

#ifndef NODEDP_GNN_H_
#define NODEDP_GNN_H_

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "json.hpp"
#include "nodedp/graph.h"
#include "nodedp/sampler.h"

namespace nodedp {

enum class Arch { kGcn, kGin, kSage };

std::string ToString(Arch arch);
Arch ParseArch(const std::string& name);

inline constexpr double kClipThreshold = 0.5;

// Layout of the flat parameter vector:
//   [ W_update (d_in x d_hid, column-major) | b_update (d_hid) |
//     W_head (d_hid x C, column-major) | b_head (C) | lambda (GIN only) ]
struct ParamLayout {
  Arch arch = Arch::kGcn;
  Eigen::Index d_in = 0;
  Eigen::Index d_hid = 0;
  Eigen::Index num_classes = 0;

  Eigen::Index w_update_offset() const { return 0; }
  Eigen::Index b_update_offset() const { return d_in * d_hid; }
  Eigen::Index w_head_offset() const { return b_update_offset() + d_hid; }
  Eigen::Index b_head_offset() const { return w_head_offset() + d_hid * num_classes; }
  Eigen::Index lambda_offset() const { return b_head_offset() + num_classes; }
  Eigen::Index size() const { return lambda_offset() + (arch == Arch::kGin ? 1 : 0); }

  friend bool operator==(const ParamLayout&, const ParamLayout&) = default;
};

// Flat vector plus typed views. Used both for model weights and gradients.
template <typename Tag>
struct FlatParams {
  ParamLayout layout;
  Eigen::VectorXd values;

  FlatParams() = default;
  explicit FlatParams(const ParamLayout& l) : layout(l), values(Eigen::VectorXd::Zero(l.size())) {}

  auto w_update() { return Eigen::Map<Eigen::MatrixXd>(values.data() + layout.w_update_offset(), layout.d_in, layout.d_hid); }
  auto w_update() const { return Eigen::Map<const Eigen::MatrixXd>(values.data() + layout.w_update_offset(), layout.d_in, layout.d_hid); }
  auto b_update() { return values.segment(layout.b_update_offset(), layout.d_hid); }
  auto b_update() const { return values.segment(layout.b_update_offset(), layout.d_hid); }
  auto w_head() { return Eigen::Map<Eigen::MatrixXd>(values.data() + layout.w_head_offset(), layout.d_hid, layout.num_classes); }
  auto w_head() const { return Eigen::Map<const Eigen::MatrixXd>(values.data() + layout.w_head_offset(), layout.d_hid, layout.num_classes); }
  auto b_head() { return values.segment(layout.b_head_offset(), layout.num_classes); }
  auto b_head() const { return values.segment(layout.b_head_offset(), layout.num_classes); }
  double& lambda() { return values[layout.lambda_offset()]; }
  double lambda() const { return layout.arch == Arch::kGin ? values[layout.lambda_offset()] : 0.0; }
};

struct ModelTag {};
struct GradientTag {};
using ModelParams = FlatParams<ModelTag>;
using GradientVector = FlatParams<GradientTag>;

// Glorot-uniform weights, zero biases, lambda = 0.
ModelParams InitModel(const ParamLayout& layout, std::uint64_t seed);

struct ForwardCache {
  Eigen::VectorXd aggregated;  // AGG over the central's neighborhood, d_in
  Eigen::VectorXd pre;         // W_update^T aggregated + b_update
  Eigen::VectorXd hidden;      // elu(pre)
  Eigen::VectorXd logits;      // W_head^T hidden + b_head
};

// One aggregation step for the central node (local index 0) over the
// sub-graph's in-edges, then elu(phi) and a linear head.
//   GCN:  sum_{j in NB(u) U {u}} x_j / sqrt(d_j d_u), d = in-degree + 1
//   GIN:  sum_{j in NB(u)} x_j + (1 + lambda) x_u
//   SAGE: mean over NB(u) U {u}
ForwardCache Forward(const ModelParams& params, const SubGraph& sub);

int Predict(const ModelParams& params, const SubGraph& sub);

struct LossAndGradient {
  double loss = 0.0;
  GradientVector grad;
};

// Softmax cross-entropy of the central node's label, with its exact gradient.
LossAndGradient LossAndGrad(const ModelParams& params, const SubGraph& sub);

// Mean cross-entropy over every node of `g` (each node aggregating over its
// in-neighbors in the whole graph), with the gradient of that mean.
LossAndGradient WholeGraphLossAndGrad(const ModelParams& params, const Graph& g);

// g * min(1, threshold / ||g||).
GradientVector ClipGradient(const GradientVector& grad, double threshold = kClipThreshold);

// Binary blob of little-endian doubles plus a JSON header describing shapes.
void SaveCheckpoint(const ModelParams& params, const std::string& blob_path, const std::string& header_path);
ModelParams LoadCheckpoint(const std::string& blob_path, const std::string& header_path);

nlohmann::json ToJson(const ParamLayout& layout);

}  // namespace nodedp

#endif  // NODEDP_GNN_H_
