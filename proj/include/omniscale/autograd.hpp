/*
 * Copyright 2026 The omniscale Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef OMNISCALE_AUTOGRAD_HPP
#define OMNISCALE_AUTOGRAD_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "omniscale/tensor.hpp"

namespace omniscale {

/// Trainable tensor that outlives any single tape. Gradients accumulate into
/// `grad` on every backward pass until zero_grad().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string name, Tensor value);

  void zero_grad();
};

enum class Mode { kTrain, kEval };

/// Per-channel running statistics of a batch-norm layer.
struct RunningStats {
  Eigen::ArrayXd mean;
  Eigen::ArrayXd var;
  double momentum = 0.1;

  explicit RunningStats(Index channels = 0)
      : mean(Eigen::ArrayXd::Zero(channels)), var(Eigen::ArrayXd::Ones(channels)) {}
};

class Tape;

// Handle to a node recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

/// Linear record of a forward computation. Nodes are appended after their
/// inputs, so walking the record backwards visits every node after all of its
/// consumers; backward() relies on that and makes exactly one pass.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Var constant(Tensor value);
  Var parameter(Parameter& p);

  // Used by operators: appends a node computed from `inputs`.
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  // Gradient buffer of node `id`, allocated as zeros on first access.
  Tensor& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return nodes_.at(id).grad.size() > 0; }

  /// Reverse pass seeded with d(out)/d(out) = 1 (scalar outputs).
  void backward(Var out);
  /// Reverse pass seeded with an arbitrary cotangent; computes the
  /// vector-Jacobian product seed^T * J for every upstream node.
  void backward(Var out, const Tensor& seed);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

// Operators. Each records one node and knows its own vector-Jacobian product.

/// Stride-1 cross-correlation with "same" zero padding: floor((k-1)/2) on the
/// left, ceil((k-1)/2) on the right. input (B, Cin, L), weight (Cout, Cin, K)
/// -> (B, Cout, L). No bias.
Var conv1d(Var input, Var weight);

/// Per-channel normalization over (batch, length), eps = 1e-5. Training mode
/// uses batch statistics and updates `stats`; eval mode uses `stats`.
Var batchnorm1d(Var input, Var gamma, Var beta, RunningStats& stats, Mode mode);

Var relu(Var x);
Var add(Var a, Var b);
Var concat_channels(std::span<const Var> parts);
Var slice_channels(Var x, Index begin, Index count);
// (B, C, L) -> (B, C)
Var global_average_pool(Var x);
// x (B, Fin), weight (Fout, Fin), bias (1, Fout) -> (B, Fout)
Var linear(Var x, Var weight, Var bias);
/// Mean over the batch of -log softmax(logits)[label]; returns a (1, 1) node.
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

// Row-wise softmax of a (B, K) tensor, no tape.
Tensor softmax(const Tensor& logits);

inline constexpr double kBatchNormEps = 1e-5;

/// Adam moments for one parameter.
struct AdamState {
  Tensor m;
  Tensor v;
  long step = 0;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of every parameter from its accumulated
/// grad. `states` is resized and zero-initialised on first use.
void adam_step(std::span<Parameter* const> params, std::vector<AdamState>& states,
               const AdamOptions& options);

}  // namespace omniscale

#endif  // OMNISCALE_AUTOGRAD_HPP
