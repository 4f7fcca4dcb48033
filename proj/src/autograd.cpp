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

#include "omniscale/autograd.hpp"

#include <cmath>
#include <sstream>

namespace omniscale {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ')';
  return os.str();
}

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros(value.shape())) {}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) grad = Tensor::zeros(value.shape());
  grad.array().setZero();
}

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  Parameter* target = &p;
  nodes_.push_back(Node{p.value, {}, true, [target](Tape& tape, std::size_t self) {
                          target->grad.array() += tape.grad(self).array();
                        }});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape != this) throw InvalidArgument("operator inputs belong to a different tape");
    needs = needs || nodes_.at(v.id).requires_grad;
  }
  if (!value.array().allFinite()) throw std::domain_error("non-finite value in forward pass");
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : nullptr});
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  Node& node = nodes_.at(id);
  if (node.grad.size() == 0 && node.value.size() > 0) node.grad = Tensor::zeros(node.value.shape());
  return node.grad;
}

void Tape::backward(Var out) {
  if (out.value().size() != 1) throw InvalidArgument("backward() without seed needs a scalar output");
  backward(out, Tensor::full(out.value().shape(), 1.0));
}

void Tape::backward(Var out, const Tensor& seed) {
  if (out.tape != this) throw InvalidArgument("output belongs to a different tape");
  if (!seed.same_shape(out.value())) throw InvalidArgument("seed shape does not match output");
  for (Node& node : nodes_) node.grad = Tensor{};
  grad(out.id).array() = seed.array();
  for (std::size_t i = out.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.requires_grad && node.backward && node.grad.size() > 0) node.backward(*this, i);
  }
}

namespace {

void require_rank(const Tensor& t, Index rank, const char* op) {
  if (t.rank() != rank)
    throw InvalidArgument(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                          shape_string(t.shape()));
}

// (Cin * K, L) patch matrix of one zero-padded sample.
RowMatrix<double> im2col(const Tensor::ConstMatrixMap& x, Index kernel, Index left) {
  const Index cin = x.rows();
  const Index length = x.cols();
  RowMatrix<double> cols = RowMatrix<double>::Zero(cin * kernel, length);
  for (Index i = 0; i < cin; ++i) {
    for (Index j = 0; j < kernel; ++j) {
      // Output t reads input t + j - left.
      const Index lo = std::max<Index>(0, left - j);
      const Index hi = std::min<Index>(length, length + left - j);
      if (hi > lo) cols.row(i * kernel + j).segment(lo, hi - lo) = x.row(i).segment(lo + j - left, hi - lo);
    }
  }
  return cols;
}

}  // namespace

Var conv1d(Var input, Var weight) {
  const Tensor& x = input.value();
  const Tensor& w = weight.value();
  require_rank(x, 3, "conv1d");
  require_rank(w, 3, "conv1d");
  const Index batch = x.dim(0), cin = x.dim(1), length = x.dim(2);
  const Index cout = w.dim(0), kernel = w.dim(2);
  if (w.dim(1) != cin)
    throw InvalidArgument("conv1d: weight " + shape_string(w.shape()) + " does not match input " +
                          shape_string(x.shape()));
  if (kernel < 1) throw InvalidArgument("conv1d: kernel size must be positive");
  const Index left = (kernel - 1) / 2;
  if (length + kernel - 1 < kernel) throw InvalidArgument("conv1d: kernel longer than padded input");

  const Tensor::ConstMatrixMap w2(w.data(), cout, cin * kernel);
  Tensor y({batch, cout, length});
  for (Index b = 0; b < batch; ++b) y.sample(b).noalias() = w2 * im2col(x.sample(b), kernel, left);

  const Var inputs[] = {input, weight};
  return input.tape->record(std::move(y), inputs, [input, weight, kernel, left](Tape& tape, std::size_t self) {
    const Tensor& x = tape.value(input.id);
    const Tensor& w = tape.value(weight.id);
    const Tensor& gy = tape.grad(self);
    const Index batch = x.dim(0), cin = x.dim(1), length = x.dim(2), cout = w.dim(0);
    const Tensor::ConstMatrixMap w2(w.data(), cout, cin * kernel);
    const bool need_x = tape.requires_grad(input.id);
    const bool need_w = tape.requires_grad(weight.id);
    for (Index b = 0; b < batch; ++b) {
      if (need_w) {
        Tensor::MatrixMap gw2(tape.grad(weight.id).data(), cout, cin * kernel);
        gw2.noalias() += gy.sample(b) * im2col(x.sample(b), kernel, left).transpose();
      }
      if (need_x) {
        const RowMatrix<double> gcols = w2.transpose() * gy.sample(b);
        auto gx = tape.grad(input.id).sample(b);
        for (Index i = 0; i < cin; ++i) {
          for (Index j = 0; j < kernel; ++j) {
            const Index lo = std::max<Index>(0, left - j);
            const Index hi = std::min<Index>(length, length + left - j);
            if (hi > lo) gx.row(i).segment(lo + j - left, hi - lo) += gcols.row(i * kernel + j).segment(lo, hi - lo);
          }
        }
      }
    }
  });
}

Var batchnorm1d(Var input, Var gamma, Var beta, RunningStats& stats, Mode mode) {
  const Tensor& x = input.value();
  require_rank(x, 3, "batchnorm1d");
  const Index batch = x.dim(0), channels = x.dim(1), length = x.dim(2);
  if (gamma.value().size() != channels || beta.value().size() != channels)
    throw InvalidArgument("batchnorm1d: affine parameters do not match channel count");
  if (stats.mean.size() != channels) throw InvalidArgument("batchnorm1d: running stats channel mismatch");
  const Index population = batch * length;
  const auto& g = gamma.value().array();
  const auto& bt = beta.value().array();

  Eigen::ArrayXd mean(channels), inv_std(channels);
  if (mode == Mode::kTrain) {
    if (population < 2) throw DegenerateBatch("batchnorm1d: training population of " + std::to_string(population));
    for (Index c = 0; c < channels; ++c) {
      double sum = 0.0;
      for (Index b = 0; b < batch; ++b) sum += x.sample(b).row(c).sum();
      const double mu = sum / static_cast<double>(population);
      double sq = 0.0;
      for (Index b = 0; b < batch; ++b) sq += (x.sample(b).row(c).array() - mu).square().sum();
      const double var = sq / static_cast<double>(population);
      mean[c] = mu;
      inv_std[c] = 1.0 / std::sqrt(var + kBatchNormEps);
      const double unbiased = sq / static_cast<double>(population - 1);
      stats.mean[c] = (1.0 - stats.momentum) * stats.mean[c] + stats.momentum * mu;
      stats.var[c] = (1.0 - stats.momentum) * stats.var[c] + stats.momentum * unbiased;
    }
  } else {
    mean = stats.mean;
    inv_std = (stats.var + kBatchNormEps).rsqrt();
  }

  Tensor xhat({batch, channels, length});
  Tensor y({batch, channels, length});
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      xhat.sample(b).row(c) = (x.sample(b).row(c).array() - mean[c]) * inv_std[c];
      y.sample(b).row(c) = xhat.sample(b).row(c).array() * g[c] + bt[c];
    }
  }

  const Var inputs[] = {input, gamma, beta};
  return input.tape->record(
      std::move(y), inputs,
      [input, gamma, beta, mode, inv_std, xhat = std::move(xhat)](Tape& tape, std::size_t self) {
        const Tensor& gy = tape.grad(self);
        const auto& g = tape.value(gamma.id).array();
        const Index batch = gy.dim(0), channels = gy.dim(1);
        const double n = static_cast<double>(batch * gy.dim(2));
        for (Index c = 0; c < channels; ++c) {
          double sum_gy = 0.0, sum_gy_xhat = 0.0;
          for (Index b = 0; b < batch; ++b) {
            sum_gy += gy.sample(b).row(c).sum();
            sum_gy_xhat += gy.sample(b).row(c).dot(xhat.sample(b).row(c));
          }
          if (tape.requires_grad(gamma.id)) tape.grad(gamma.id).array()[c] += sum_gy_xhat;
          if (tape.requires_grad(beta.id)) tape.grad(beta.id).array()[c] += sum_gy;
          if (!tape.requires_grad(input.id)) continue;
          for (Index b = 0; b < batch; ++b) {
            auto gx = tape.grad(input.id).sample(b).row(c).array();
            const auto gyr = gy.sample(b).row(c).array();
            if (mode == Mode::kTrain) {
              const auto xh = xhat.sample(b).row(c).array();
              gx += g[c] * inv_std[c] / n * (n * gyr - sum_gy - xh * sum_gy_xhat);
            } else {
              gx += g[c] * inv_std[c] * gyr;
            }
          }
        }
      });
}

Var relu(Var x) {
  Tensor y = x.value();
  y.array() = y.array().max(0.0);
  const Var inputs[] = {x};
  return x.tape->record(std::move(y), inputs, [x](Tape& tape, std::size_t self) {
    const auto mask = (tape.value(x.id).array() > 0.0).cast<double>();
    tape.grad(x.id).array() += mask * tape.grad(self).array();
  });
}

Var add(Var a, Var b) {
  if (!a.value().same_shape(b.value()))
    throw InvalidArgument("add: shape mismatch " + shape_string(a.value().shape()) + " vs " +
                          shape_string(b.value().shape()));
  Tensor y = a.value();
  y.array() += b.value().array();
  const Var inputs[] = {a, b};
  return a.tape->record(std::move(y), inputs, [a, b](Tape& tape, std::size_t self) {
    if (tape.requires_grad(a.id)) tape.grad(a.id).array() += tape.grad(self).array();
    if (tape.requires_grad(b.id)) tape.grad(b.id).array() += tape.grad(self).array();
  });
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("concat_channels: no inputs");
  const Tensor& first = parts[0].value();
  require_rank(first, 3, "concat_channels");
  const Index batch = first.dim(0), length = first.dim(2);
  Index channels = 0;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    require_rank(t, 3, "concat_channels");
    if (t.dim(0) != batch || t.dim(2) != length)
      throw InvalidArgument("concat_channels: batch/length mismatch " + shape_string(t.shape()));
    channels += t.dim(1);
  }
  Tensor y({batch, channels, length});
  for (Index b = 0; b < batch; ++b) {
    Index offset = 0;
    for (const Var& p : parts) {
      const Tensor& t = p.value();
      y.sample(b).middleRows(offset, t.dim(1)) = t.sample(b);
      offset += t.dim(1);
    }
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(y), inputs, [inputs](Tape& tape, std::size_t self) {
    const Tensor& gy = tape.grad(self);
    Index offset = 0;
    for (const Var& p : inputs) {
      const Index c = tape.value(p.id).dim(1);
      if (tape.requires_grad(p.id)) {
        Tensor& gp = tape.grad(p.id);
        for (Index b = 0; b < gy.dim(0); ++b) gp.sample(b) += gy.sample(b).middleRows(offset, c);
      }
      offset += c;
    }
  });
}

Var slice_channels(Var x, Index begin, Index count) {
  const Tensor& t = x.value();
  require_rank(t, 3, "slice_channels");
  if (begin < 0 || count < 1 || begin + count > t.dim(1))
    throw InvalidArgument("slice_channels: range outside " + shape_string(t.shape()));
  Tensor y({t.dim(0), count, t.dim(2)});
  for (Index b = 0; b < t.dim(0); ++b) y.sample(b) = t.sample(b).middleRows(begin, count);
  const Var inputs[] = {x};
  return x.tape->record(std::move(y), inputs, [x, begin, count](Tape& tape, std::size_t self) {
    const Tensor& gy = tape.grad(self);
    Tensor& gx = tape.grad(x.id);
    for (Index b = 0; b < gy.dim(0); ++b) gx.sample(b).middleRows(begin, count) += gy.sample(b);
  });
}

Var global_average_pool(Var x) {
  const Tensor& t = x.value();
  require_rank(t, 3, "global_average_pool");
  const Index batch = t.dim(0), channels = t.dim(1), length = t.dim(2);
  if (length == 0) throw InvalidArgument("global_average_pool: empty length");
  Tensor y({batch, channels});
  for (Index b = 0; b < batch; ++b) y.matrix().row(b) = t.sample(b).rowwise().mean().transpose();
  const Var inputs[] = {x};
  return x.tape->record(std::move(y), inputs, [x](Tape& tape, std::size_t self) {
    const Tensor& gy = tape.grad(self);
    Tensor& gx = tape.grad(x.id);
    const double scale = 1.0 / static_cast<double>(gx.dim(2));
    for (Index b = 0; b < gx.dim(0); ++b)
      gx.sample(b).colwise() += gy.matrix().row(b).transpose() * scale;
  });
}

Var linear(Var x, Var weight, Var bias) {
  const Tensor& in = x.value();
  const Tensor& w = weight.value();
  require_rank(in, 2, "linear");
  require_rank(w, 2, "linear");
  if (w.dim(1) != in.dim(1) || bias.value().size() != w.dim(0))
    throw InvalidArgument("linear: shape mismatch input " + shape_string(in.shape()) + ", weight " +
                          shape_string(w.shape()));
  Tensor y({in.dim(0), w.dim(0)});
  y.matrix().noalias() = in.matrix() * w.matrix().transpose();
  y.matrix().rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.value().data(), w.dim(0));
  const Var inputs[] = {x, weight, bias};
  return x.tape->record(std::move(y), inputs, [x, weight, bias](Tape& tape, std::size_t self) {
    const auto gy = tape.grad(self).matrix();
    if (tape.requires_grad(x.id)) tape.grad(x.id).matrix().noalias() += gy * tape.value(weight.id).matrix();
    if (tape.requires_grad(weight.id))
      tape.grad(weight.id).matrix().noalias() += gy.transpose() * tape.value(x.id).matrix();
    if (tape.requires_grad(bias.id)) {
      Tensor& gb = tape.grad(bias.id);
      Eigen::Map<Eigen::RowVectorXd>(gb.data(), gb.size()) += gy.colwise().sum();
    }
  });
}

Tensor softmax(const Tensor& logits) {
  require_rank(logits, 2, "softmax");
  Tensor p = logits;
  auto m = p.matrix();
  for (Index r = 0; r < m.rows(); ++r) {
    m.row(r).array() = (m.row(r).array() - m.row(r).maxCoeff()).exp();
    m.row(r) /= m.row(r).sum();
  }
  return p;
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& z = logits.value();
  require_rank(z, 2, "softmax_cross_entropy");
  const Index batch = z.dim(0), classes = z.dim(1);
  if (static_cast<Index>(labels.size()) != batch)
    throw InvalidArgument("softmax_cross_entropy: label count does not match batch");
  if (batch == 0) throw InvalidArgument("softmax_cross_entropy: empty batch");
  double loss = 0.0;
  for (Index r = 0; r < batch; ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    if (label < 0 || label >= classes) throw InvalidArgument("softmax_cross_entropy: label out of range");
    const auto row = z.matrix().row(r).array();
    const double peak = row.maxCoeff();
    loss += peak + std::log((row - peak).exp().sum()) - row[label];
  }
  Tensor y({1, 1});
  y(0, 0) = loss / static_cast<double>(batch);
  const Var inputs[] = {logits};
  std::vector<int> owned(labels.begin(), labels.end());
  return logits.tape->record(std::move(y), inputs, [logits, owned = std::move(owned)](Tape& tape, std::size_t self) {
    Tensor p = softmax(tape.value(logits.id));
    const Index batch = p.dim(0);
    for (Index r = 0; r < batch; ++r) p(r, owned[static_cast<std::size_t>(r)]) -= 1.0;
    const double scale = tape.grad(self)(0, 0) / static_cast<double>(batch);
    tape.grad(logits.id).array() += p.array() * scale;
  });
}

void adam_step(std::span<Parameter* const> params, std::vector<AdamState>& states, const AdamOptions& options) {
  if (!(options.lr > 0.0)) throw InvalidArgument("adam_step: learning rate must be positive");
  if (states.empty()) {
    states.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      states[i].m = Tensor::zeros(params[i]->value.shape());
      states[i].v = Tensor::zeros(params[i]->value.shape());
    }
  }
  if (states.size() != params.size()) throw InvalidArgument("adam_step: state count does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    AdamState& s = states[i];
    const auto& g = p.grad.array();
    ++s.step;
    s.m.array() = options.beta1 * s.m.array() + (1.0 - options.beta1) * g;
    s.v.array() = options.beta2 * s.v.array() + (1.0 - options.beta2) * g.square();
    const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(s.step));
    p.value.array() -= options.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + options.eps);
  }
}

}  // namespace omniscale
