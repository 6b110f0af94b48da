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

#ifndef FEDGAN_NN_HPP_
#define FEDGAN_NN_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fedgan/rng.hpp"

// Dense multilayer perceptrons with hand-written backpropagation, Adam and a
// central-difference gradient checker. Everything is 64-bit.
namespace fedgan::nn {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using RowVectorMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstRowVectorMap = Eigen::Map<const Eigen::RowVectorXd>;

// One dense layer: weight is rows x cols (fan_in x fan_out), bias has `bias`
// entries. Forward is out = in * W + b.
struct LayerShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t bias = 0;

  std::size_t count() const { return rows * cols + bias; }
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

using Manifest = std::vector<LayerShape>;

// Flattened parameters plus the manifest describing their layout. Layers are
// stored back to back, each as row-major weights followed by the bias.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(Manifest manifest);  // zero-filled
  ParamVector(Manifest manifest, std::vector<double> values);

  const Manifest& manifest() const { return manifest_; }
  std::size_t num_layers() const { return manifest_.size(); }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  ConstMatrixMap weight(std::size_t layer) const;
  MatrixMap weight(std::size_t layer);
  ConstRowVectorMap bias(std::size_t layer) const;
  RowVectorMap bias(std::size_t layer);

  bool same_manifest(const ParamVector& other) const {
    return manifest_ == other.manifest_;
  }
  bool all_finite() const;
  // Bit-level equality, distinguishing -0.0 from 0.0.
  bool bit_equal(const ParamVector& other) const;
  std::uint64_t fingerprint() const;

  void fill(double value);

 private:
  Manifest manifest_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

enum class OutputActivation { kIdentity, kTanh, kSigmoid, kSoftmax };

// Widths list every layer boundary, input first. Hidden layers use LeakyReLU.
struct MlpArch {
  std::vector<std::size_t> widths;
  double leaky_slope = 0.2;
  OutputActivation output = OutputActivation::kIdentity;

  // Throws ConfigError on fewer than one hidden layer, zero widths or a slope
  // outside (0,1).
  void validate() const;
  Manifest manifest() const;
  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  std::size_t num_layers() const { return widths.size() - 1; }
};

// Glorot-uniform weights, zero biases.
ParamVector init_params(const MlpArch& arch, Rng& rng);

struct ForwardCache {
  // activations[0] is the input; activations[l + 1] is layer l's output.
  std::vector<Matrix> activations;
  std::vector<Matrix> preactivations;
  std::vector<std::size_t> widths;
  std::uint64_t params_fingerprint = 0;
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

// Throws DimensionError naming the offending layer on any shape mismatch.
ForwardResult forward(const MlpArch& arch, const ParamVector& params,
                      const Matrix& input);

// Forward pass without retaining the cache.
Matrix predict(const MlpArch& arch, const ParamVector& params,
               const Matrix& input);

struct BackwardResult {
  ParamVector grads;
  Matrix input_grad;
};

// Gradient of sum_ij output_grad(i,j) * output(i,j). Batch reduction is a sum;
// callers fold any 1/m into output_grad. Throws ContractError if the cache
// was produced from a different architecture or parameter set.
BackwardResult backward(const MlpArch& arch, const ParamVector& params,
                        const ForwardCache& cache, const Matrix& output_grad);

enum class Direction { kAscend, kDescend };

struct AdamHyper {
  double lr = 0.0002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  AdamHyper hyper;

  AdamState() = default;
  AdamState(std::size_t n, AdamHyper h) : m(n, 0.0), v(n, 0.0), hyper(h) {}
  // Zero both moments and the step counter.
  void reset();
};

// One bias-corrected Adam step. Non-finite gradients raise NumericError and
// leave both params and state untouched.
void adam_step(ParamVector& params, const ParamVector& grads, AdamState& state,
               Direction direction);

inline constexpr double kDefaultFdStep = 1e-5;

using LossFn = std::function<double(const ParamVector&)>;

// max_i |analytic_i - fd_i| / max(|analytic_i|, |fd_i|, 1e-8) using central
// differences. Throws NumericError if the loss is non-finite.
double grad_check(const LossFn& loss, const ParamVector& params,
                  const ParamVector& analytic, double fd_step = kDefaultFdStep);

}  // namespace fedgan::nn

#endif  // FEDGAN_NN_HPP_
