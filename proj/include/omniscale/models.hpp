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

#ifndef OMNISCALE_MODELS_HPP
#define OMNISCALE_MODELS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "omniscale/autograd.hpp"
#include "omniscale/kernel_config.hpp"

namespace omniscale {

// Conv weights of the reference FCN on univariate input:
// 1*128*8 + 128*256*5 + 256*128*3.
inline constexpr std::int64_t kFcnReferenceWeights = 263168;
inline constexpr std::array<int, 3> kFcnKernels{8, 5, 3};
inline constexpr std::array<int, 3> kFcnChannels{128, 256, 128};

enum class ModelKind { kOsCnn, kOsCnnRes, kMosCnn, kFcn, kFcnScaled };
enum class FcnMode { kReference, kFixedChannels, kFixedSize };

std::string to_string(ModelKind kind);
std::string to_string(FcnMode mode);
FcnMode parse_fcn_mode(const std::string& text);

/// Architecture request. The OS family derives its kernel lists from
/// series_length (or rf_override) and its branch channels from weight_budget
/// unless branch_channels is given explicitly.
struct ModelSpec {
  ModelKind kind = ModelKind::kOsCnn;
  int depth = 1;  // stacked OS blocks, OS_CNN_RES only
  int n_classes = 2;
  int n_variates = 1;
  std::int64_t series_length = 0;
  std::optional<std::int64_t> rf_override;
  std::int64_t weight_budget = kFcnReferenceWeights;
  std::optional<int> branch_channels;
  FcnMode fcn_mode = FcnMode::kReference;
  double rf_scale = 1.0;  // FCN kernel-size multiplier

  void validate() const;
};

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

/// Parses the CLI spelling: os-cnn, os-cnn-res:K, mos-cnn, fcn.
ModelSpec parse_model_kind(const std::string& text);

/// Kernel sizes and channels of a (possibly scaled) FCN.
struct FcnGeometry {
  std::array<int, 3> kernels = kFcnKernels;
  std::array<int, 3> channels = kFcnChannels;
};

FcnGeometry fcn_geometry(double rf_scale, FcnMode mode, int in_channels = 1);
std::int64_t fcn_conv_weights(const FcnGeometry& geometry, int in_channels = 1);

/// One layer of parallel same-padded convolutions whose outputs are
/// concatenated, batch-normalized and passed through ReLU. A single-kernel
/// layer is an ordinary conv -> BN -> ReLU block.
struct ConvLayer {
  KernelList kernels;
  int in_channels = 0;
  int branch_channels = 0;
  std::vector<Parameter> weights;  // one (branch_channels, in_channels, k) per kernel
  Parameter gamma;
  Parameter beta;
  RunningStats stats;

  int out_channels() const { return branch_channels * static_cast<int>(kernels.size()); }
};

struct ConvBlock {
  std::vector<ConvLayer> layers;
  bool residual = false;
  std::optional<Parameter> projection;  // (out, in, 1) when residual and in != out

  int in_channels() const { return layers.front().in_channels; }
  int out_channels() const { return layers.back().out_channels(); }
};

/// Builds one block of conv layers with fan-in uniform initialization. A
/// residual block whose input width differs from its output width gets a
/// kernel-size-1 projection on the skip path.
ConvBlock make_conv_block(const std::vector<KernelList>& layer_kernel_lists, int in_channels, int branch_channels,
                          bool residual, const std::string& name_prefix, std::uint64_t seed);

class Model {
 public:
  Model() = default;
  Model(ModelSpec spec, std::vector<ConvBlock> variate_blocks, std::vector<ConvBlock> blocks, int n_classes,
        std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<ConvBlock>& variate_blocks() const { return variate_blocks_; }
  const std::vector<ConvBlock>& blocks() const { return blocks_; }
  std::vector<ConvBlock>& mutable_blocks() { return blocks_; }
  std::vector<ConvBlock>& mutable_variate_blocks() { return variate_blocks_; }
  const Parameter& head_weight() const { return head_weight_; }
  const Parameter& head_bias() const { return head_bias_; }
  Parameter& head_bias() { return head_bias_; }
  std::uint64_t seed() const { return seed_; }

  // Genotype of each OS block in evaluation order (per-variate blocks first).
  std::vector<OSBlockSpec> block_specs() const;

  /// Input (B, n_variates, L) -> feature map (B, C, L) before pooling.
  Var features(Tape& tape, Var input, Mode mode);
  /// Input (B, n_variates, L) -> logits (B, n_classes).
  Var forward(Tape& tape, Var input, Mode mode);
  Var forward(Tape& tape, const Tensor& input, Mode mode) { return forward(tape, tape.constant(input), mode); }

  // Eval-mode class probabilities (B, n_classes).
  Tensor predict_proba(const Tensor& input);

  /// Every trainable tensor (conv and FC weights, BN affine, FC bias).
  std::vector<Parameter*> parameters();
  /// Named state for checkpoints: parameters plus BN running statistics.
  std::vector<std::pair<std::string, Tensor>> state() const;
  void load_state(const std::vector<std::pair<std::string, Tensor>>& named);

  /// Conv and FC weights only (no BN, no bias).
  std::int64_t weight_count() const;
  std::int64_t conv_weight_count() const;
  std::int64_t head_weight_count() const { return head_weight_.value.size(); }

  // Largest receptive field along any path through the feature extractor.
  std::int64_t max_receptive_field() const;

  nlohmann::json fingerprint() const;

 private:
  ModelSpec spec_;
  std::vector<ConvBlock> variate_blocks_;  // MOS-CNN only, one per variate
  std::vector<ConvBlock> blocks_;
  Parameter head_weight_;
  Parameter head_bias_;
  std::uint64_t seed_ = 0;
};

/// Kernel lists of the OS block for a spec (select_max_prime over the series
/// length, or over rf_override).
std::vector<KernelList> os_kernel_lists(const ModelSpec& spec);

// Branch channels the spec resolves to (explicit or budget-solved).
int resolve_branch_channels(const ModelSpec& spec);

Model build_os_cnn(ModelSpec spec, std::uint64_t seed);
Model build_os_cnn_res(int depth, ModelSpec spec, std::uint64_t seed);
Model build_mos_cnn(ModelSpec spec, std::uint64_t seed);
Model build_fcn_baseline(double rf_scale, FcnMode mode, ModelSpec spec, std::uint64_t seed);
// Dispatches on spec.kind.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

/// Five OS-CNN-RES(2) members with seeds seed, seed+1, ...
std::vector<Model> build_uos_cnn(ModelSpec spec, std::uint64_t seed);

/// Arithmetic mean of per-model probability tables (each (B, K)).
Tensor ensemble_mean(std::span<const Tensor> probabilities);
Tensor ensemble_predict(std::span<Model* const> models, const Tensor& input);
std::vector<int> argmax_rows(const Tensor& probabilities);

}  // namespace omniscale

#endif  // OMNISCALE_MODELS_HPP
