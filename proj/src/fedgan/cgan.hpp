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

#ifndef FEDGAN_CGAN_HPP_
#define FEDGAN_CGAN_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fedgan/data.hpp"
#include "fedgan/nn.hpp"
#include "fedgan/rng.hpp"

// Conditional GAN over dense networks. Labels are one-hot encoded and
// concatenated to the generator noise and to the discriminator input.
namespace fedgan::cgan {

using nn::Matrix;

// Discriminator outputs are clamped to [kProbClamp, 1 - kProbClamp] before
// any logarithm is taken.
inline constexpr double kProbClamp = 1e-7;

enum class GLoss {
  kSaturating,     // G descends mean log(1 - D(G(z|y')|y'))
  kNonSaturating,  // G descends mean -log D(G(z|y')|y')
};

struct GanShape {
  std::size_t data_dim = 2;
  std::size_t n_classes = 8;
  std::size_t latent_dim = 16;
  std::vector<std::size_t> gen_hidden{64, 64};
  std::vector<std::size_t> disc_hidden{64, 64};
  double leaky_slope = 0.2;
};

struct GanModel {
  nn::MlpArch gen_arch;
  nn::MlpArch disc_arch;
  nn::ParamVector gen_params;
  nn::ParamVector disc_params;
  std::size_t latent_dim = 0;
  std::size_t n_classes = 0;

  std::size_t data_dim() const { return gen_arch.output_width(); }
  // Checks the width/activation invariants tying G and D together.
  void validate() const;
};

nn::MlpArch generator_arch(const GanShape& shape);
nn::MlpArch discriminator_arch(const GanShape& shape);
GanModel make_model(const GanShape& shape, Rng& rng);

struct Batch {
  Matrix x;
  std::vector<int> y;
  std::size_t size() const { return y.size(); }
};

struct Latent {
  Matrix z;
  std::vector<int> labels;
  std::size_t size() const { return labels.size(); }
};

// z ~ N(0,1) i.i.d., labels uniform over [0, n_classes).
Latent sample_latent(Rng& rng, std::size_t m, std::size_t latent_dim,
                     std::size_t n_classes);

// [x | onehot(labels)].
Matrix concat_onehot(const Matrix& x, std::span<const int> labels,
                     std::size_t n_classes);

Matrix generate(const GanModel& model, const Matrix& z,
                std::span<const int> labels);
Eigen::VectorXd discriminate(const GanModel& model, const Matrix& x,
                             std::span<const int> labels);

// (1/m) sum [log D(x|y) + log(1 - D(G(z|y')|y'))].
double d_objective(const GanModel& model, const Batch& real,
                   const Latent& latent);
// (1/m) sum log(1 - D(G(z|y')|y')) for kSaturating, the non-saturating
// surrogate otherwise.
double g_objective(const GanModel& model, const Latent& latent,
                   GLoss loss = GLoss::kSaturating);

struct ObjectiveGradient {
  double value = 0.0;
  nn::ParamVector grads;
};

// Gradient of d_objective with respect to disc_params.
ObjectiveGradient d_gradient(const GanModel& model, const Batch& real,
                             const Latent& latent);
// Gradient of g_objective with respect to gen_params.
ObjectiveGradient g_gradient(const GanModel& model, const Latent& latent,
                             GLoss loss = GLoss::kSaturating);

// One Adam ascent step on disc_params. Returns the objective before the step.
// Throws NumericError and leaves model and optimizer untouched when the
// objective, gradient or updated parameters are non-finite.
double train_step_d(GanModel& model, const Batch& real, const Latent& latent,
                    nn::AdamState& adam_d);
double train_step_d(GanModel& model, const Batch& real, Rng& rng,
                    nn::AdamState& adam_d);

// One Adam descent step on gen_params, mirroring train_step_d.
double train_step_g(GanModel& model, const Latent& latent,
                    nn::AdamState& adam_g, GLoss loss = GLoss::kSaturating);
double train_step_g(GanModel& model, Rng& rng, std::size_t m,
                    nn::AdamState& adam_g, GLoss loss = GLoss::kSaturating);

struct EpochStats {
  std::size_t d_steps = 0;
  std::size_t g_steps = 0;
  std::vector<std::size_t> batch_sizes;
};

// One pass over a shuffled shard in minibatches of `batch_size` (the short
// tail batch is trained too); each batch runs one D step then one G step.
EpochStats local_epoch(GanModel& model, const data::LabeledDataset& shard,
                       Rng& rng, nn::AdamState& adam_d, nn::AdamState& adam_g,
                       std::size_t batch_size,
                       GLoss loss = GLoss::kSaturating);

}  // namespace fedgan::cgan

#endif  // FEDGAN_CGAN_HPP_
