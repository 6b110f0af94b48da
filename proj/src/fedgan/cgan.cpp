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

#include "fedgan/cgan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedgan/error.hpp"

namespace fedgan::cgan {
namespace {

double clamp_prob(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

bool inside_clamp(double p) { return p > kProbClamp && p < 1.0 - kProbClamp; }

void check_labels(std::span<const int> labels, std::size_t n_classes) {
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
      throw DimensionError("label " + std::to_string(y) + " outside [0," +
                           std::to_string(n_classes) + ")");
    }
  }
}

std::vector<std::size_t> with_ends(std::size_t in,
                                   const std::vector<std::size_t>& hidden,
                                   std::size_t out) {
  std::vector<std::size_t> widths{in};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  return widths;
}

// Generator pass and D pass on the fakes, cached for backprop.
struct FakePass {
  nn::ForwardResult gen;
  nn::ForwardResult disc;
};

FakePass run_fake(const GanModel& model, const Latent& latent) {
  FakePass pass;
  pass.gen = nn::forward(model.gen_arch, model.gen_params,
                         concat_onehot(latent.z, latent.labels,
                                       model.n_classes));
  pass.disc = nn::forward(model.disc_arch, model.disc_params,
                          concat_onehot(pass.gen.output, latent.labels,
                                        model.n_classes));
  return pass;
}

// d/dp of the per-sample G loss term, zero where D's output is clamped.
double g_loss_slope(double p, GLoss loss) {
  if (!inside_clamp(p)) return 0.0;
  return loss == GLoss::kSaturating ? -1.0 / (1.0 - p) : -1.0 / p;
}

double g_loss_term(double p, GLoss loss) {
  const double q = clamp_prob(p);
  return loss == GLoss::kSaturating ? std::log(1.0 - q) : -std::log(q);
}

}  // namespace

void GanModel::validate() const {
  gen_arch.validate();
  disc_arch.validate();
  if (latent_dim == 0 || n_classes == 0) {
    throw ConfigError("latent_dim and n_classes must be positive");
  }
  if (gen_arch.input_width() != latent_dim + n_classes) {
    throw DimensionError("generator input width must equal latent_dim + C");
  }
  if (gen_arch.output != nn::OutputActivation::kTanh) {
    throw ConfigError("generator output activation must be tanh");
  }
  if (disc_arch.input_width() != data_dim() + n_classes ||
      disc_arch.output_width() != 1) {
    throw DimensionError(
        "discriminator must map data_dim + C inputs to one output");
  }
  if (disc_arch.output != nn::OutputActivation::kSigmoid) {
    throw ConfigError("discriminator output activation must be sigmoid");
  }
  if (gen_params.manifest() != gen_arch.manifest() ||
      disc_params.manifest() != disc_arch.manifest()) {
    throw DimensionError("GAN parameters do not match architectures");
  }
}

nn::MlpArch generator_arch(const GanShape& s) {
  return {with_ends(s.latent_dim + s.n_classes, s.gen_hidden, s.data_dim),
          s.leaky_slope, nn::OutputActivation::kTanh};
}

nn::MlpArch discriminator_arch(const GanShape& s) {
  return {with_ends(s.data_dim + s.n_classes, s.disc_hidden, 1),
          s.leaky_slope, nn::OutputActivation::kSigmoid};
}

GanModel make_model(const GanShape& shape, Rng& rng) {
  GanModel model;
  model.gen_arch = generator_arch(shape);
  model.disc_arch = discriminator_arch(shape);
  model.latent_dim = shape.latent_dim;
  model.n_classes = shape.n_classes;
  model.gen_params = nn::init_params(model.gen_arch, rng);
  model.disc_params = nn::init_params(model.disc_arch, rng);
  model.validate();
  return model;
}

Latent sample_latent(Rng& rng, std::size_t m, std::size_t latent_dim,
                     std::size_t n_classes) {
  if (m == 0 || latent_dim == 0 || n_classes == 0) {
    throw ConfigError("sample_latent: m, latent_dim and C must be >= 1");
  }
  Latent out;
  out.z.resize(static_cast<Eigen::Index>(m),
               static_cast<Eigen::Index>(latent_dim));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.z.size(); ++i) out.z.data()[i] = normal(rng);
  std::uniform_int_distribution<int> label(0, static_cast<int>(n_classes) - 1);
  out.labels.resize(m);
  for (auto& y : out.labels) y = label(rng);
  return out;
}

Matrix concat_onehot(const Matrix& x, std::span<const int> labels,
                     std::size_t n_classes) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw DimensionError("concat_onehot: " + std::to_string(x.rows()) +
                         " rows but " + std::to_string(labels.size()) +
                         " labels");
  }
  check_labels(labels, n_classes);
  Matrix out = Matrix::Zero(x.rows(),
                            x.cols() + static_cast<Eigen::Index>(n_classes));
  out.leftCols(x.cols()) = x;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out(static_cast<Eigen::Index>(i), x.cols() + labels[i]) = 1.0;
  }
  return out;
}

Matrix generate(const GanModel& model, const Matrix& z,
                std::span<const int> labels) {
  if (static_cast<std::size_t>(z.cols()) != model.latent_dim) {
    throw DimensionError("generate: latent width " + std::to_string(z.cols()) +
                         " != " + std::to_string(model.latent_dim));
  }
  return nn::predict(model.gen_arch, model.gen_params,
                     concat_onehot(z, labels, model.n_classes));
}

Eigen::VectorXd discriminate(const GanModel& model, const Matrix& x,
                             std::span<const int> labels) {
  if (static_cast<std::size_t>(x.cols()) != model.data_dim()) {
    throw DimensionError("discriminate: feature width " +
                         std::to_string(x.cols()) + " != " +
                         std::to_string(model.data_dim()));
  }
  Matrix p = nn::predict(model.disc_arch, model.disc_params,
                         concat_onehot(x, labels, model.n_classes));
  return p.col(0).unaryExpr([](double v) { return clamp_prob(v); });
}

double d_objective(const GanModel& model, const Batch& real,
                   const Latent& latent) {
  if (real.size() != latent.size() || real.size() == 0) {
    throw DimensionError("d_objective: real and latent batch sizes differ");
  }
  const Eigen::VectorXd p_real = discriminate(model, real.x, real.y);
  const Eigen::VectorXd p_fake = discriminate(
      model, generate(model, latent.z, latent.labels), latent.labels);
  double total = 0.0;
  for (Eigen::Index i = 0; i < p_real.size(); ++i) {
    total += std::log(p_real(i)) + std::log(1.0 - p_fake(i));
  }
  return total / static_cast<double>(real.size());
}

double g_objective(const GanModel& model, const Latent& latent, GLoss loss) {
  if (latent.size() == 0) throw DimensionError("g_objective: empty batch");
  const Eigen::VectorXd p = discriminate(
      model, generate(model, latent.z, latent.labels), latent.labels);
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) total += g_loss_term(p(i), loss);
  return total / static_cast<double>(latent.size());
}

ObjectiveGradient d_gradient(const GanModel& model, const Batch& real,
                             const Latent& latent) {
  const std::size_t m = real.size();
  if (m != latent.size() || m == 0) {
    throw DimensionError("d_gradient: real and latent batch sizes differ");
  }
  if (static_cast<std::size_t>(real.x.cols()) != model.data_dim()) {
    throw DimensionError("d_gradient: real feature width mismatch");
  }
  const Matrix fake = generate(model, latent.z, latent.labels);

  // Real rows first, fakes after, through a single D pass.
  const auto rows = static_cast<Eigen::Index>(m);
  Matrix stacked(2 * rows, model.disc_arch.input_width());
  stacked.topRows(rows) = concat_onehot(real.x, real.y, model.n_classes);
  stacked.bottomRows(rows) = concat_onehot(fake, latent.labels,
                                           model.n_classes);
  auto pass = nn::forward(model.disc_arch, model.disc_params, stacked);

  const double inv_m = 1.0 / static_cast<double>(m);
  Matrix out_grad(2 * rows, 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double pr = pass.output(i, 0);
    const double pf = pass.output(rows + i, 0);
    total += std::log(clamp_prob(pr)) + std::log(1.0 - clamp_prob(pf));
    out_grad(i, 0) = inside_clamp(pr) ? inv_m / pr : 0.0;
    out_grad(rows + i, 0) = inside_clamp(pf) ? -inv_m / (1.0 - pf) : 0.0;
  }
  auto back = nn::backward(model.disc_arch, model.disc_params, pass.cache,
                           out_grad);
  return {total * inv_m, std::move(back.grads)};
}

ObjectiveGradient g_gradient(const GanModel& model, const Latent& latent,
                             GLoss loss) {
  const std::size_t m = latent.size();
  if (m == 0) throw DimensionError("g_gradient: empty batch");
  FakePass pass = run_fake(model, latent);

  const double inv_m = 1.0 / static_cast<double>(m);
  Matrix d_grad(static_cast<Eigen::Index>(m), 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < d_grad.rows(); ++i) {
    const double p = pass.disc.output(i, 0);
    total += g_loss_term(p, loss);
    d_grad(i, 0) = inv_m * g_loss_slope(p, loss);
  }
  auto through_d = nn::backward(model.disc_arch, model.disc_params,
                                pass.disc.cache, d_grad);
  const Matrix fake_grad =
      through_d.input_grad.leftCols(
          static_cast<Eigen::Index>(model.data_dim()));
  auto through_g = nn::backward(model.gen_arch, model.gen_params,
                                pass.gen.cache, fake_grad);
  return {total * inv_m, std::move(through_g.grads)};
}

double train_step_d(GanModel& model, const Batch& real, const Latent& latent,
                    nn::AdamState& adam_d) {
  auto grad = d_gradient(model, real, latent);
  if (!std::isfinite(grad.value)) {
    throw NumericError("train_step_d: non-finite discriminator objective");
  }
  nn::ParamVector next = model.disc_params;
  nn::AdamState next_state = adam_d;
  nn::adam_step(next, grad.grads, next_state, nn::Direction::kAscend);
  if (!next.all_finite()) {
    throw NumericError("train_step_d: update produced non-finite parameters");
  }
  model.disc_params = std::move(next);
  adam_d = std::move(next_state);
  return grad.value;
}

double train_step_d(GanModel& model, const Batch& real, Rng& rng,
                    nn::AdamState& adam_d) {
  const Latent latent =
      sample_latent(rng, real.size(), model.latent_dim, model.n_classes);
  return train_step_d(model, real, latent, adam_d);
}

double train_step_g(GanModel& model, const Latent& latent,
                    nn::AdamState& adam_g, GLoss loss) {
  auto grad = g_gradient(model, latent, loss);
  if (!std::isfinite(grad.value)) {
    throw NumericError("train_step_g: non-finite generator objective");
  }
  nn::ParamVector next = model.gen_params;
  nn::AdamState next_state = adam_g;
  nn::adam_step(next, grad.grads, next_state, nn::Direction::kDescend);
  if (!next.all_finite()) {
    throw NumericError("train_step_g: update produced non-finite parameters");
  }
  model.gen_params = std::move(next);
  adam_g = std::move(next_state);
  return grad.value;
}

double train_step_g(GanModel& model, Rng& rng, std::size_t m,
                    nn::AdamState& adam_g, GLoss loss) {
  const Latent latent =
      sample_latent(rng, m, model.latent_dim, model.n_classes);
  return train_step_g(model, latent, adam_g, loss);
}

EpochStats local_epoch(GanModel& model, const data::LabeledDataset& shard,
                       Rng& rng, nn::AdamState& adam_d, nn::AdamState& adam_g,
                       std::size_t batch_size, GLoss loss) {
  if (shard.empty()) throw ConfigError("local_epoch: empty shard");
  if (batch_size == 0) throw ConfigError("local_epoch: batch size must be >= 1");
  if (shard.dim() != model.data_dim()) {
    throw DimensionError("local_epoch: shard dimension " +
                         std::to_string(shard.dim()) + " != model data_dim " +
                         std::to_string(model.data_dim()));
  }
  std::vector<std::size_t> order(shard.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  EpochStats stats;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    const std::span<const std::size_t> idx(order.data() + start, end - start);
    data::LabeledDataset rows = shard.subset(idx);
    Batch batch{std::move(rows.features), std::move(rows.labels)};
    train_step_d(model, batch, rng, adam_d);
    ++stats.d_steps;
    train_step_g(model, rng, batch.size(), adam_g, loss);
    ++stats.g_steps;
    stats.batch_sizes.push_back(batch.size());
  }
  return stats;
}

}  // namespace fedgan::cgan
