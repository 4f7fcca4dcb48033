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

#include "omniscale/models.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace omniscale {

namespace {

constexpr std::uint64_t kHeadSeedSalt = 0x9e3779b97f4a7c15ULL;

Tensor uniform_fan_in(Shape shape, Index fan_in, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.array()) v = dist(rng);
  return t;
}

ConvLayer make_layer(const KernelList& kernels, int in, int c, const std::string& prefix, std::mt19937_64& rng) {
  ConvLayer layer;
  layer.kernels = kernels;
  layer.in_channels = in;
  layer.branch_channels = c;
  for (int k : kernels) {
    layer.weights.emplace_back(prefix + ".k" + std::to_string(k) + ".weight",
                               uniform_fan_in({c, in, k}, static_cast<Index>(in) * k, rng));
  }
  const Index out = layer.out_channels();
  layer.gamma = Parameter(prefix + ".bn.gamma", Tensor::full({1, out}, 1.0));
  layer.beta = Parameter(prefix + ".bn.beta", Tensor::zeros({1, out}));
  layer.stats = RunningStats(out);
  return layer;
}

ConvBlock make_block(const std::vector<KernelList>& lists, int in, int c, bool residual, const std::string& prefix,
                     std::mt19937_64& rng) {
  ConvBlock block;
  int channels = in;
  for (std::size_t l = 0; l < lists.size(); ++l) {
    block.layers.push_back(make_layer(lists[l], channels, c, prefix + ".layer" + std::to_string(l + 1), rng));
    channels = block.layers.back().out_channels();
  }
  block.residual = residual;
  if (residual && block.in_channels() != block.out_channels()) {
    block.projection = Parameter(prefix + ".projection.weight",
                                 uniform_fan_in({block.out_channels(), in, 1}, in, rng));
  }
  return block;
}

std::int64_t block_weights(const std::vector<KernelList>& lists, int in, int c, bool residual) {
  const auto cost = count_block_weights(OSBlockSpec{lists, c, in});
  const std::int64_t out = static_cast<std::int64_t>(c) * static_cast<std::int64_t>(lists.back().size());
  return cost.total_weights + (residual && out != in ? out * in : 0);
}

Var layer_forward(Tape& tape, ConvLayer& layer, Var x, Mode mode, std::optional<Var> skip) {
  std::vector<Var> branches;
  branches.reserve(layer.weights.size());
  for (auto& w : layer.weights) branches.push_back(conv1d(x, tape.parameter(w)));
  Var h = branches.size() == 1 ? branches.front() : concat_channels(branches);
  h = batchnorm1d(h, tape.parameter(layer.gamma), tape.parameter(layer.beta), layer.stats, mode);
  if (skip) h = add(h, *skip);
  return relu(h);
}

Var block_forward(Tape& tape, ConvBlock& block, Var x, Mode mode) {
  std::optional<Var> skip;
  if (block.residual) skip = block.projection ? conv1d(x, tape.parameter(*block.projection)) : x;
  Var h = x;
  for (std::size_t l = 0; l < block.layers.size(); ++l) {
    const bool last = l + 1 == block.layers.size();
    h = layer_forward(tape, block.layers[l], h, mode, last ? skip : std::nullopt);
  }
  return h;
}

std::int64_t block_rf(const ConvBlock& block) {
  std::int64_t rf = 1;
  for (const auto& layer : block.layers) rf += layer.kernels.back() - 1;
  return rf;
}

void collect(ConvBlock& block, std::vector<Parameter*>& out) {
  for (auto& layer : block.layers) {
    for (auto& w : layer.weights) out.push_back(&w);
    out.push_back(&layer.gamma);
    out.push_back(&layer.beta);
  }
  if (block.projection) out.push_back(&*block.projection);
}

}  // namespace

ConvBlock make_conv_block(const std::vector<KernelList>& layer_kernel_lists, int in_channels, int branch_channels,
                          bool residual, const std::string& name_prefix, std::uint64_t seed) {
  OSBlockSpec{layer_kernel_lists, branch_channels, in_channels}.validate();
  std::mt19937_64 rng(seed);
  return make_block(layer_kernel_lists, in_channels, branch_channels, residual, name_prefix, rng);
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kOsCnn: return "os-cnn";
    case ModelKind::kOsCnnRes: return "os-cnn-res";
    case ModelKind::kMosCnn: return "mos-cnn";
    case ModelKind::kFcn: return "fcn";
    case ModelKind::kFcnScaled: return "fcn-scaled";
  }
  return "unknown";
}

std::string to_string(FcnMode mode) {
  switch (mode) {
    case FcnMode::kReference: return "reference";
    case FcnMode::kFixedChannels: return "fixed_channels";
    case FcnMode::kFixedSize: return "fixed_size";
  }
  return "unknown";
}

FcnMode parse_fcn_mode(const std::string& text) {
  if (text == "reference") return FcnMode::kReference;
  if (text == "fixed_channels" || text == "fixed-channels") return FcnMode::kFixedChannels;
  if (text == "fixed_size" || text == "fixed-size") return FcnMode::kFixedSize;
  throw InvalidArgument("unknown FCN mode '" + text + "'");
}

void ModelSpec::validate() const {
  if (n_classes < 2) throw InvalidArgument("model needs at least 2 classes");
  if (n_variates < 1) throw InvalidArgument("model needs at least 1 variate");
  switch (kind) {
    case ModelKind::kOsCnnRes:
      if (depth < 1 || depth > 3) throw InvalidArgument("OS-CNN-RES depth must be 1, 2 or 3");
      [[fallthrough]];
    case ModelKind::kOsCnn:
    case ModelKind::kMosCnn:
      if (series_length < 1 && !rf_override) throw InvalidArgument("OS models need the series length");
      if (rf_override && *rf_override < 1) throw InvalidArgument("rf_override must be positive");
      if (branch_channels && *branch_channels < 1) throw InvalidArgument("branch_channels must be positive");
      if (kind == ModelKind::kMosCnn && n_variates < 2)
        throw InvalidArgument("MOS-CNN needs at least 2 variates; use OS-CNN");
      break;
    case ModelKind::kFcn:
    case ModelKind::kFcnScaled:
      if (!(rf_scale > 0.0)) throw InvalidArgument("rf_scale must be positive");
      break;
  }
}

void to_json(nlohmann::json& j, const ModelSpec& spec) {
  j = nlohmann::json{{"kind", to_string(spec.kind)},       {"depth", spec.depth},
                     {"n_classes", spec.n_classes},        {"n_variates", spec.n_variates},
                     {"series_length", spec.series_length}, {"weight_budget", spec.weight_budget},
                     {"fcn_mode", to_string(spec.fcn_mode)}, {"rf_scale", spec.rf_scale}};
  j["rf_override"] = spec.rf_override ? nlohmann::json(*spec.rf_override) : nlohmann::json(nullptr);
  j["branch_channels"] = spec.branch_channels ? nlohmann::json(*spec.branch_channels) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ModelSpec& spec) {
  const std::string kind = j.at("kind").get<std::string>();
  spec = parse_model_kind(kind == "os-cnn-res" ? kind + ":" + std::to_string(j.value("depth", 1)) : kind);
  j.at("n_classes").get_to(spec.n_classes);
  j.at("n_variates").get_to(spec.n_variates);
  j.at("series_length").get_to(spec.series_length);
  spec.weight_budget = j.value("weight_budget", kFcnReferenceWeights);
  spec.fcn_mode = parse_fcn_mode(j.value("fcn_mode", std::string("reference")));
  spec.rf_scale = j.value("rf_scale", 1.0);
  if (j.contains("rf_override") && !j["rf_override"].is_null()) spec.rf_override = j["rf_override"].get<std::int64_t>();
  if (j.contains("branch_channels") && !j["branch_channels"].is_null())
    spec.branch_channels = j["branch_channels"].get<int>();
}

ModelSpec parse_model_kind(const std::string& text) {
  ModelSpec spec;
  if (text == "os-cnn") {
    spec.kind = ModelKind::kOsCnn;
  } else if (text.rfind("os-cnn-res", 0) == 0) {
    spec.kind = ModelKind::kOsCnnRes;
    spec.depth = 2;
    if (text.size() > 10) {
      if (text[10] != ':') throw InvalidArgument("expected os-cnn-res:K, got '" + text + "'");
      try {
        std::size_t used = 0;
        spec.depth = std::stoi(text.substr(11), &used);
        if (used != text.size() - 11) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw InvalidArgument("bad residual depth in '" + text + "'");
      }
    }
  } else if (text == "mos-cnn") {
    spec.kind = ModelKind::kMosCnn;
  } else if (text == "fcn") {
    spec.kind = ModelKind::kFcn;
  } else if (text == "fcn-scaled") {
    spec.kind = ModelKind::kFcnScaled;
  } else {
    throw InvalidArgument("unknown model '" + text + "'");
  }
  return spec;
}

std::int64_t fcn_conv_weights(const FcnGeometry& g, int in_channels) {
  return static_cast<std::int64_t>(in_channels) * g.channels[0] * g.kernels[0] +
         static_cast<std::int64_t>(g.channels[0]) * g.channels[1] * g.kernels[1] +
         static_cast<std::int64_t>(g.channels[1]) * g.channels[2] * g.kernels[2];
}

FcnGeometry fcn_geometry(double rf_scale, FcnMode mode, int in_channels) {
  if (!(rf_scale > 0.0)) throw InvalidArgument("rf_scale must be positive");
  FcnGeometry g;
  if (mode == FcnMode::kReference) return g;
  for (std::size_t i = 0; i < 3; ++i) {
    const long k = std::lround(kFcnKernels[i] * rf_scale);
    if (k < 1) throw InvalidArgument("rf_scale " + std::to_string(rf_scale) + " shrinks a kernel below 1");
    g.kernels[i] = static_cast<int>(k);
  }
  if (mode == FcnMode::kFixedChannels) return g;

  // Fixed size: scale all channels by a common factor a solving
  // in*128a*k1 + 128a*256a*k2 + 256a*128a*k3 = budget, then search nearby
  // integer channel triples for the closest weight count.
  const std::int64_t budget = fcn_conv_weights(FcnGeometry{}, in_channels);
  const double lin = static_cast<double>(in_channels) * kFcnChannels[0] * g.kernels[0];
  const double quad = static_cast<double>(kFcnChannels[0]) * kFcnChannels[1] * g.kernels[1] +
                      static_cast<double>(kFcnChannels[1]) * kFcnChannels[2] * g.kernels[2];
  const double a = (-lin + std::sqrt(lin * lin + 4.0 * quad * static_cast<double>(budget))) / (2.0 * quad);
  FcnGeometry best = g;
  std::int64_t best_gap = std::numeric_limits<std::int64_t>::max();
  const int c1 = static_cast<int>(std::lround(kFcnChannels[0] * a));
  const int c2 = static_cast<int>(std::lround(kFcnChannels[1] * a));
  const int c3 = static_cast<int>(std::lround(kFcnChannels[2] * a));
  for (int d1 = -2; d1 <= 2; ++d1)
    for (int d2 = -3; d2 <= 3; ++d2)
      for (int d3 = -2; d3 <= 2; ++d3) {
        FcnGeometry cand = g;
        cand.channels = {std::max(1, c1 + d1), std::max(1, c2 + d2), std::max(1, c3 + d3)};
        const std::int64_t gap = std::llabs(fcn_conv_weights(cand, in_channels) - budget);
        if (gap < best_gap) {
          best_gap = gap;
          best = cand;
        }
      }
  if (static_cast<double>(best_gap) > 0.02 * static_cast<double>(budget))
    throw InvalidArgument("cannot hold FCN weights within 2% of the budget at rf_scale " + std::to_string(rf_scale));
  return best;
}

std::vector<KernelList> os_kernel_lists(const ModelSpec& spec) {
  const int m = spec.rf_override ? select_max_prime_for_rf(*spec.rf_override) : select_max_prime(spec.series_length);
  return OSBlockSpec::canonical(m).layer_kernel_lists;
}

int resolve_branch_channels(const ModelSpec& spec) {
  spec.validate();
  if (spec.branch_channels) return *spec.branch_channels;
  const auto lists = os_kernel_lists(spec);
  const std::int64_t out_per_c = static_cast<std::int64_t>(lists.back().size());
  switch (spec.kind) {
    case ModelKind::kOsCnn:
      return allocate_channels(spec.weight_budget, lists, spec.n_variates);
    case ModelKind::kOsCnnRes:
      return largest_channels_within(spec.weight_budget, [&](int c) {
        std::int64_t total = block_weights(lists, spec.n_variates, c, false);
        for (int b = 1; b < spec.depth; ++b) total += block_weights(lists, static_cast<int>(out_per_c * c), c, true);
        return total;
      });
    case ModelKind::kMosCnn:
      return largest_channels_within(spec.weight_budget, [&](int c) {
        return spec.n_variates * block_weights(lists, 1, c, false) +
               block_weights(lists, static_cast<int>(spec.n_variates * out_per_c * c), c, false);
      });
    default:
      throw InvalidArgument("branch channels only apply to OS models");
  }
}

Model::Model(ModelSpec spec, std::vector<ConvBlock> variate_blocks, std::vector<ConvBlock> blocks, int n_classes,
             std::uint64_t seed)
    : spec_(std::move(spec)), variate_blocks_(std::move(variate_blocks)), blocks_(std::move(blocks)), seed_(seed) {
  std::mt19937_64 rng(seed ^ kHeadSeedSalt);
  const int features = blocks_.back().out_channels();
  head_weight_ = Parameter("head.weight", uniform_fan_in({n_classes, features}, features, rng));
  head_bias_ = Parameter("head.bias", Tensor::zeros({1, n_classes}));
}

std::vector<OSBlockSpec> Model::block_specs() const {
  std::vector<OSBlockSpec> specs;
  auto add_spec = [&](const ConvBlock& b) {
    OSBlockSpec s;
    for (const auto& layer : b.layers) s.layer_kernel_lists.push_back(layer.kernels);
    s.branch_channels = b.layers.front().branch_channels;
    s.in_channels = b.in_channels();
    specs.push_back(std::move(s));
  };
  for (const auto& b : variate_blocks_) add_spec(b);
  for (const auto& b : blocks_) add_spec(b);
  return specs;
}

Var Model::features(Tape& tape, Var input, Mode mode) {
  const Tensor& x = input.value();
  if (x.rank() != 3 || x.dim(1) != spec_.n_variates)
    throw InvalidArgument("model expects input (batch, " + std::to_string(spec_.n_variates) + ", length), got " +
                          shape_string(x.shape()));
  Var h = input;
  if (!variate_blocks_.empty()) {
    std::vector<Var> per_variate;
    for (std::size_t v = 0; v < variate_blocks_.size(); ++v)
      per_variate.push_back(block_forward(tape, variate_blocks_[v], slice_channels(input, static_cast<Index>(v), 1), mode));
    h = concat_channels(per_variate);
  }
  for (auto& block : blocks_) h = block_forward(tape, block, h, mode);
  return h;
}

Var Model::forward(Tape& tape, Var input, Mode mode) {
  Var pooled = global_average_pool(features(tape, input, mode));
  return linear(pooled, tape.parameter(head_weight_), tape.parameter(head_bias_));
}

Tensor Model::predict_proba(const Tensor& input) {
  Tape tape;
  return softmax(forward(tape, input, Mode::kEval).value());
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& b : variate_blocks_) collect(b, out);
  for (auto& b : blocks_) collect(b, out);
  out.push_back(&head_weight_);
  out.push_back(&head_bias_);
  return out;
}

std::vector<std::pair<std::string, Tensor>> Model::state() const {
  std::vector<std::pair<std::string, Tensor>> named;
  auto add_block = [&](const ConvBlock& b) {
    for (const auto& layer : b.layers) {
      for (const auto& w : layer.weights) named.emplace_back(w.name, w.value);
      named.emplace_back(layer.gamma.name, layer.gamma.value);
      named.emplace_back(layer.beta.name, layer.beta.value);
      const std::string prefix = layer.gamma.name.substr(0, layer.gamma.name.size() - 5);  // strip "gamma"
      const Index c = layer.stats.mean.size();
      named.emplace_back(prefix + "running_mean", Tensor({1, c}, layer.stats.mean));
      named.emplace_back(prefix + "running_var", Tensor({1, c}, layer.stats.var));
    }
    if (b.projection) named.emplace_back(b.projection->name, b.projection->value);
  };
  for (const auto& b : variate_blocks_) add_block(b);
  for (const auto& b : blocks_) add_block(b);
  named.emplace_back(head_weight_.name, head_weight_.value);
  named.emplace_back(head_bias_.name, head_bias_.value);
  return named;
}

void Model::load_state(const std::vector<std::pair<std::string, Tensor>>& named) {
  std::map<std::string, const Tensor*> lookup;
  for (const auto& [name, t] : named) lookup[name] = &t;
  auto fetch = [&](const std::string& name, const Shape& shape) -> const Tensor& {
    auto it = lookup.find(name);
    if (it == lookup.end()) throw InvalidArgument("checkpoint is missing '" + name + "'");
    if (it->second->shape() != shape)
      throw InvalidArgument("checkpoint tensor '" + name + "' has shape " + shape_string(it->second->shape()) +
                            ", expected " + shape_string(shape));
    return *it->second;
  };
  auto load_param = [&](Parameter& p) {
    p.value = fetch(p.name, p.value.shape());
    p.zero_grad();
  };
  auto load_block = [&](ConvBlock& b) {
    for (auto& layer : b.layers) {
      for (auto& w : layer.weights) load_param(w);
      load_param(layer.gamma);
      load_param(layer.beta);
      const std::string prefix = layer.gamma.name.substr(0, layer.gamma.name.size() - 5);
      const Index c = layer.stats.mean.size();
      layer.stats.mean = fetch(prefix + "running_mean", {1, c}).array();
      layer.stats.var = fetch(prefix + "running_var", {1, c}).array();
    }
    if (b.projection) load_param(*b.projection);
  };
  for (auto& b : variate_blocks_) load_block(b);
  for (auto& b : blocks_) load_block(b);
  load_param(head_weight_);
  load_param(head_bias_);
}

std::int64_t Model::conv_weight_count() const {
  std::int64_t total = 0;
  auto add_block = [&](const ConvBlock& b) {
    for (const auto& layer : b.layers)
      for (const auto& w : layer.weights) total += w.value.size();
    if (b.projection) total += b.projection->value.size();
  };
  for (const auto& b : variate_blocks_) add_block(b);
  for (const auto& b : blocks_) add_block(b);
  return total;
}

std::int64_t Model::weight_count() const { return conv_weight_count() + head_weight_count(); }

std::int64_t Model::max_receptive_field() const {
  std::int64_t rf = 1;
  if (!variate_blocks_.empty()) rf += block_rf(variate_blocks_.front()) - 1;
  for (const auto& b : blocks_) rf += block_rf(b) - 1;
  return rf;
}

nlohmann::json Model::fingerprint() const {
  nlohmann::json j;
  j["spec"] = spec_;
  j["block_specs"] = block_specs();
  j["weight_count"] = weight_count();
  j["conv_weight_count"] = conv_weight_count();
  j["max_receptive_field"] = max_receptive_field();
  j["seed"] = seed_;
  j["init"] = "uniform(+-1/sqrt(fan_in)) weights; zero FC bias; BN gamma=1 beta=0";
  j["layer_order"] = "conv branches -> concat -> batchnorm -> [residual add] -> relu";
  j["padding"] = "same; left floor((k-1)/2), right ceil((k-1)/2)";
  return j;
}

Model build_os_cnn(ModelSpec spec, std::uint64_t seed) {
  spec.kind = ModelKind::kOsCnn;
  spec.depth = 1;
  const int c = resolve_branch_channels(spec);
  std::mt19937_64 rng(seed);
  std::vector<ConvBlock> blocks{make_block(os_kernel_lists(spec), spec.n_variates, c, false, "block0", rng)};
  spec.branch_channels = c;
  const int classes = spec.n_classes;
  return Model(std::move(spec), {}, std::move(blocks), classes, seed);
}

Model build_os_cnn_res(int depth, ModelSpec spec, std::uint64_t seed) {
  spec.kind = ModelKind::kOsCnnRes;
  spec.depth = depth;
  const int c = resolve_branch_channels(spec);
  const auto lists = os_kernel_lists(spec);
  std::mt19937_64 rng(seed);
  std::vector<ConvBlock> blocks;
  int in = spec.n_variates;
  for (int b = 0; b < depth; ++b) {
    blocks.push_back(make_block(lists, in, c, b > 0, "block" + std::to_string(b), rng));
    in = blocks.back().out_channels();
  }
  spec.branch_channels = c;
  const int classes = spec.n_classes;
  return Model(std::move(spec), {}, std::move(blocks), classes, seed);
}

Model build_mos_cnn(ModelSpec spec, std::uint64_t seed) {
  spec.kind = ModelKind::kMosCnn;
  const int c = resolve_branch_channels(spec);
  const auto lists = os_kernel_lists(spec);
  std::mt19937_64 rng(seed);
  std::vector<ConvBlock> per_variate;
  for (int v = 0; v < spec.n_variates; ++v)
    per_variate.push_back(make_block(lists, 1, c, false, "variate" + std::to_string(v), rng));
  const int joined = spec.n_variates * per_variate.front().out_channels();
  std::vector<ConvBlock> blocks{make_block(lists, joined, c, false, "block0", rng)};
  spec.branch_channels = c;
  const int classes = spec.n_classes;
  return Model(std::move(spec), std::move(per_variate), std::move(blocks), classes, seed);
}

Model build_fcn_baseline(double rf_scale, FcnMode mode, ModelSpec spec, std::uint64_t seed) {
  spec.kind = mode == FcnMode::kReference ? ModelKind::kFcn : ModelKind::kFcnScaled;
  spec.fcn_mode = mode;
  spec.rf_scale = mode == FcnMode::kReference ? 1.0 : rf_scale;
  spec.validate();
  const FcnGeometry g = fcn_geometry(spec.rf_scale, mode, spec.n_variates);
  std::mt19937_64 rng(seed);
  ConvBlock block;
  int in = spec.n_variates;
  for (std::size_t l = 0; l < 3; ++l) {
    block.layers.push_back(make_layer({g.kernels[l]}, in, g.channels[l], "fcn.layer" + std::to_string(l + 1), rng));
    in = g.channels[l];
  }
  const int classes = spec.n_classes;
  return Model(std::move(spec), {}, {std::move(block)}, classes, seed);
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::kOsCnn: return build_os_cnn(spec, seed);
    case ModelKind::kOsCnnRes: return build_os_cnn_res(spec.depth, spec, seed);
    case ModelKind::kMosCnn: return build_mos_cnn(spec, seed);
    case ModelKind::kFcn: return build_fcn_baseline(1.0, FcnMode::kReference, spec, seed);
    case ModelKind::kFcnScaled: return build_fcn_baseline(spec.rf_scale, spec.fcn_mode, spec, seed);
  }
  throw InvalidArgument("unknown model kind");
}

std::vector<Model> build_uos_cnn(ModelSpec spec, std::uint64_t seed) {
  std::vector<Model> members;
  for (std::uint64_t i = 0; i < 5; ++i) members.push_back(build_os_cnn_res(2, spec, seed + i));
  return members;
}

Tensor ensemble_mean(std::span<const Tensor> probabilities) {
  if (probabilities.empty()) throw InvalidArgument("ensemble needs at least one member");
  Tensor mean = probabilities.front();
  for (std::size_t i = 1; i < probabilities.size(); ++i) {
    if (!probabilities[i].same_shape(mean))
      throw InvalidArgument("ensemble members disagree on shape: " + shape_string(probabilities[i].shape()) + " vs " +
                            shape_string(mean.shape()));
    mean.array() += probabilities[i].array();
  }
  mean.array() /= static_cast<double>(probabilities.size());
  return mean;
}

Tensor ensemble_predict(std::span<Model* const> models, const Tensor& input) {
  if (models.empty()) throw InvalidArgument("ensemble needs at least one member");
  std::vector<Tensor> probs;
  for (Model* m : models) {
    if (m->spec().n_classes != models.front()->spec().n_classes)
      throw InvalidArgument("ensemble members disagree on class count");
    probs.push_back(m->predict_proba(input));
  }
  return ensemble_mean(probs);
}

std::vector<int> argmax_rows(const Tensor& probabilities) {
  std::vector<int> out;
  const auto m = probabilities.matrix();
  for (Index r = 0; r < m.rows(); ++r) {
    Index best = 0;
    m.row(r).maxCoeff(&best);
    out.push_back(static_cast<int>(best));
  }
  return out;
}

}  // namespace omniscale
