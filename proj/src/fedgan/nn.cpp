/*
 * Copyright 2026 The FedGAN Authors
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

#include "fedgan/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <string>

#include "fedgan/error.hpp"

namespace fedgan::nn {
namespace {

// Largest double strictly below 1; keeps tanh/sigmoid codomains open.
constexpr double kBelowOne = 1.0 - std::numeric_limits<double>::epsilon() / 2;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h * 0xff51afd7ed558ccdULL;
}

std::string shape_str(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

void apply_output(OutputActivation act, Matrix& z) {
  switch (act) {
    case OutputActivation::kIdentity:
      break;
    case OutputActivation::kTanh:
      z = z.unaryExpr([](double a) {
        return std::clamp(std::tanh(a), -kBelowOne, kBelowOne);
      });
      break;
    case OutputActivation::kSigmoid:
      z = z.unaryExpr([](double a) {
        return std::clamp(1.0 / (1.0 + std::exp(-a)),
                          std::numeric_limits<double>::min(), kBelowOne);
      });
      break;
    case OutputActivation::kSoftmax:
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        auto row = z.row(i);
        const double peak = row.maxCoeff();
        row = (row.array() - peak).exp().matrix();
        row /= row.sum();
      }
      break;
  }
}

// d(loss)/d(preactivation) from d(loss)/d(output) for the output layer.
Matrix output_delta(OutputActivation act, const Matrix& y, const Matrix& g) {
  switch (act) {
    case OutputActivation::kIdentity:
      return g;
    case OutputActivation::kTanh:
      return (g.array() * (1.0 - y.array().square())).matrix();
    case OutputActivation::kSigmoid:
      return (g.array() * y.array() * (1.0 - y.array())).matrix();
    case OutputActivation::kSoftmax: {
      Eigen::VectorXd dots = (g.array() * y.array()).rowwise().sum();
      return (y.array() * (g.colwise() - dots).array()).matrix();
    }
  }
  return g;
}

std::uint64_t cache_key(const MlpArch& arch, const ParamVector& params) {
  std::uint64_t h = params.fingerprint();
  for (auto w : arch.widths) h = mix(h, w);
  h = mix(h, static_cast<std::uint64_t>(arch.output));
  h = mix(h, std::bit_cast<std::uint64_t>(arch.leaky_slope));
  return h;
}

}  // namespace

ParamVector::ParamVector(Manifest manifest) : manifest_(std::move(manifest)) {
  std::size_t total = 0;
  offsets_.reserve(manifest_.size());
  for (const auto& layer : manifest_) {
    offsets_.push_back(total);
    total += layer.count();
  }
  values_.assign(total, 0.0);
}

ParamVector::ParamVector(Manifest manifest, std::vector<double> values)
    : ParamVector(std::move(manifest)) {
  if (values.size() != values_.size()) {
    throw DimensionError("parameter vector has " +
                         std::to_string(values.size()) +
                         " values but manifest requires " +
                         std::to_string(values_.size()));
  }
  values_ = std::move(values);
}

ConstMatrixMap ParamVector::weight(std::size_t layer) const {
  const auto& s = manifest_.at(layer);
  return ConstMatrixMap(values_.data() + offsets_[layer],
                        static_cast<Eigen::Index>(s.rows),
                        static_cast<Eigen::Index>(s.cols));
}

MatrixMap ParamVector::weight(std::size_t layer) {
  const auto& s = manifest_.at(layer);
  return MatrixMap(values_.data() + offsets_[layer],
                   static_cast<Eigen::Index>(s.rows),
                   static_cast<Eigen::Index>(s.cols));
}

ConstRowVectorMap ParamVector::bias(std::size_t layer) const {
  const auto& s = manifest_.at(layer);
  return ConstRowVectorMap(values_.data() + offsets_[layer] + s.rows * s.cols,
                           static_cast<Eigen::Index>(s.bias));
}

RowVectorMap ParamVector::bias(std::size_t layer) {
  const auto& s = manifest_.at(layer);
  return RowVectorMap(values_.data() + offsets_[layer] + s.rows * s.cols,
                      static_cast<Eigen::Index>(s.bias));
}

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double x) { return std::isfinite(x); });
}

bool ParamVector::bit_equal(const ParamVector& other) const {
  return manifest_ == other.manifest_ &&
         std::memcmp(values_.data(), other.values_.data(),
                     values_.size() * sizeof(double)) == 0;
}

std::uint64_t ParamVector::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& layer : manifest_) {
    h = mix(h, layer.rows);
    h = mix(h, layer.cols);
  }
  for (double x : values_) h = mix(h, std::bit_cast<std::uint64_t>(x));
  return h;
}

void ParamVector::fill(double value) {
  std::fill(values_.begin(), values_.end(), value);
}

void MlpArch::validate() const {
  if (widths.size() < 3) {
    throw ConfigError("MLP needs at least one hidden layer (got " +
                      std::to_string(widths.size()) + " widths)");
  }
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] == 0) {
      throw ConfigError("MLP width " + std::to_string(i) + " must be >= 1");
    }
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    throw ConfigError("LeakyReLU slope must lie in (0,1)");
  }
}

Manifest MlpArch::manifest() const {
  Manifest out;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    out.push_back({widths[l], widths[l + 1], widths[l + 1]});
  }
  return out;
}

ParamVector init_params(const MlpArch& arch, Rng& rng) {
  arch.validate();
  ParamVector params(arch.manifest());
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const auto& s = params.manifest()[l];
    const double limit =
        std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto w = params.weight(l);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  }
  return params;
}

ForwardResult forward(const MlpArch& arch, const ParamVector& params,
                      const Matrix& input) {
  if (params.manifest() != arch.manifest()) {
    throw DimensionError("parameter manifest does not match architecture");
  }
  if (static_cast<std::size_t>(input.cols()) != arch.input_width()) {
    throw DimensionError("layer 0: input has " + std::to_string(input.cols()) +
                         " columns, expected " +
                         std::to_string(arch.input_width()));
  }
  ForwardResult result;
  auto& cache = result.cache;
  const std::size_t layers = arch.num_layers();
  cache.widths = arch.widths;
  cache.activations.reserve(layers + 1);
  cache.preactivations.reserve(layers);
  cache.activations.push_back(input);

  for (std::size_t l = 0; l < layers; ++l) {
    const auto w = params.weight(l);
    const Matrix& in = cache.activations.back();
    if (in.cols() != w.rows()) {
      throw DimensionError("layer " + std::to_string(l) + ": input " +
                           shape_str(in.rows(), in.cols()) +
                           " incompatible with weight " +
                           shape_str(w.rows(), w.cols()));
    }
    Matrix z = in * w;
    z.rowwise() += params.bias(l);
    cache.preactivations.push_back(z);
    if (l + 1 < layers) {
      const double slope = arch.leaky_slope;
      z = z.unaryExpr([slope](double a) { return a > 0.0 ? a : slope * a; });
    } else {
      apply_output(arch.output, z);
    }
    cache.activations.push_back(std::move(z));
  }
  cache.params_fingerprint = cache_key(arch, params);
  result.output = cache.activations.back();
  return result;
}

Matrix predict(const MlpArch& arch, const ParamVector& params,
               const Matrix& input) {
  return forward(arch, params, input).output;
}

BackwardResult backward(const MlpArch& arch, const ParamVector& params,
                        const ForwardCache& cache, const Matrix& output_grad) {
  const std::size_t layers = arch.num_layers();
  if (cache.widths != arch.widths ||
      cache.activations.size() != layers + 1 ||
      cache.params_fingerprint != cache_key(arch, params)) {
    throw ContractError(
        "backward: cache was not produced by forward on these parameters");
  }
  const Matrix& out = cache.activations.back();
  if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols()) {
    throw DimensionError("backward: output gradient " +
                         shape_str(output_grad.rows(), output_grad.cols()) +
                         " does not match output " +
                         shape_str(out.rows(), out.cols()));
  }

  BackwardResult result{ParamVector(params.manifest()), Matrix()};
  Matrix delta = output_delta(arch.output, out, output_grad);
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& in = cache.activations[l];
    result.grads.weight(l).noalias() = in.transpose() * delta;
    result.grads.bias(l) = delta.colwise().sum();
    Matrix upstream = delta * params.weight(l).transpose();
    if (l > 0) {
      const Matrix& pre = cache.preactivations[l - 1];
      const double slope = arch.leaky_slope;
      delta = upstream.binaryExpr(pre, [slope](double g, double a) {
        return a > 0.0 ? g : slope * g;
      });
    } else {
      result.input_grad = std::move(upstream);
    }
  }
  return result;
}

void AdamState::reset() {
  std::fill(m.begin(), m.end(), 0.0);
  std::fill(v.begin(), v.end(), 0.0);
  t = 0;
}

void adam_step(ParamVector& params, const ParamVector& grads, AdamState& state,
               Direction direction) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
    throw DimensionError("adam_step: params/grads/state sizes disagree");
  }
  if (!grads.all_finite()) {
    throw NumericError("adam_step: non-finite gradient entry");
  }
  const auto& h = state.hyper;
  const double t = static_cast<double>(state.t + 1);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  const double sign = direction == Direction::kAscend ? 1.0 : -1.0;
  auto p = params.values();
  auto g = grads.values();
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g[i];
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    p[i] += sign * h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
  state.t += 1;
}

double grad_check(const LossFn& loss, const ParamVector& params,
                  const ParamVector& analytic, double fd_step) {
  if (!(fd_step > 0.0)) {
    throw ContractError("grad_check: fd_step must be positive");
  }
  if (!analytic.same_manifest(params)) {
    throw DimensionError("grad_check: analytic gradient manifest mismatch");
  }
  ParamVector probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + fd_step;
    const double up = loss(probe);
    probe[i] = saved - fd_step;
    const double down = loss(probe);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      std::ostringstream msg;
      msg << "grad_check: loss is non-finite at coordinate " << i;
      throw NumericError(msg.str());
    }
    const double fd = (up - down) / (2.0 * fd_step);
    const double a = analytic[i];
    const double scale = std::max({std::abs(a), std::abs(fd), 1e-8});
    worst = std::max(worst, std::abs(a - fd) / scale);
  }
  return worst;
}

}  // namespace fedgan::nn
