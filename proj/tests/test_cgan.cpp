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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "fedgan/cgan.hpp"
#include "fedgan/data.hpp"
#include "fedgan/error.hpp"
#include "fedgan/nn.hpp"
#include "fedgan/rng.hpp"

namespace {

using fedgan::Rng;
using fedgan::cgan::Batch;
using fedgan::cgan::GanModel;
using fedgan::cgan::GanShape;
using fedgan::cgan::GLoss;
using fedgan::cgan::kProbClamp;
using fedgan::cgan::Latent;
using fedgan::nn::AdamHyper;
using fedgan::nn::AdamState;
using fedgan::nn::Matrix;

GanShape tiny_shape() {
  GanShape s;
  s.data_dim = 2;
  s.n_classes = 3;
  s.latent_dim = 3;
  s.gen_hidden = {5};
  s.disc_hidden = {6};
  return s;
}

Batch random_batch(Rng& rng, std::size_t m, std::size_t d, std::size_t c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> lab(0, static_cast<int>(c) - 1);
  Batch b;
  b.x.resize(static_cast<int>(m), static_cast<int>(d));
  for (int i = 0; i < b.x.size(); ++i) b.x.data()[i] = u(rng);
  for (std::size_t i = 0; i < m; ++i) b.y.push_back(lab(rng));
  return b;
}

double clamp_p(double p) {
  return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

fedgan::data::LabeledDataset toy_shard(std::size_t n) {
  fedgan::data::MixtureSpec spec;
  spec.n_classes = 3;
  spec.per_class = (n + 2) / 3;
  const auto full = fedgan::data::gen_gaussian_mixture(spec, 5);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return full.subset(idx);
}

}  // namespace

TEST_CASE("architectures follow the conditioning layout") {
  Rng rng(1);
  const GanShape shape;
  const GanModel model = fedgan::cgan::make_model(shape, rng);
  CHECK(model.gen_arch.widths ==
        std::vector<std::size_t>{16 + 8, 64, 64, 2});
  CHECK(model.disc_arch.widths == std::vector<std::size_t>{2 + 8, 64, 64, 1});
  CHECK(model.gen_arch.output == fedgan::nn::OutputActivation::kTanh);
  CHECK(model.disc_arch.output == fedgan::nn::OutputActivation::kSigmoid);
  CHECK_NOTHROW(model.validate());
}

TEST_CASE("sample_latent statistics and determinism") {
  Rng a(3), b(3);
  const Latent la = fedgan::cgan::sample_latent(a, 100000, 4, 5);
  const Latent lb = fedgan::cgan::sample_latent(b, 100000, 4, 5);
  CHECK(la.z == lb.z);
  CHECK(la.labels == lb.labels);
  for (int c = 0; c < 4; ++c) {
    const double mean = la.z.col(c).mean();
    const double var = (la.z.col(c).array() - mean).square().mean();
    CHECK(std::abs(mean) <= 0.02);
    CHECK(std::abs(var - 1.0) <= 0.03);
  }
  std::vector<std::size_t> hist(5, 0);
  for (int y : la.labels) ++hist.at(static_cast<std::size_t>(y));
  for (auto h : hist) CHECK(std::abs(static_cast<double>(h) - 20000.0) < 600.0);
  Rng c(4);
  for (int y : fedgan::cgan::sample_latent(c, 50, 2, 1).labels) CHECK(y == 0);
}

TEST_CASE("generate and discriminate are the networks on concatenated input") {
  Rng rng(2);
  const GanModel model = fedgan::cgan::make_model(tiny_shape(), rng);
  const Latent lat = fedgan::cgan::sample_latent(rng, 7, 3, 3);
  Matrix in(7, 6);
  in.setZero();
  in.leftCols(3) = lat.z;
  for (int i = 0; i < 7; ++i) in(i, 3 + lat.labels[i]) = 1.0;
  const Matrix g = fedgan::cgan::generate(model, lat.z, lat.labels);
  const Matrix ref = fedgan::nn::predict(model.gen_arch, model.gen_params, in);
  CHECK((g - ref).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(g.cwiseAbs().maxCoeff() < 1.0);

  const Batch real = random_batch(rng, 7, 2, 3);
  Matrix din(7, 5);
  din.setZero();
  din.leftCols(2) = real.x;
  for (int i = 0; i < 7; ++i) din(i, 2 + real.y[i]) = 1.0;
  const auto d = fedgan::cgan::discriminate(model, real.x, real.y);
  const Matrix dref =
      fedgan::nn::predict(model.disc_arch, model.disc_params, din);
  for (int i = 0; i < 7; ++i) CHECK(d(i) == clamp_p(dref(i, 0)));
}

TEST_CASE("zero networks: G emits zeros and D emits one half") {
  Rng rng(5);
  GanModel model = fedgan::cgan::make_model(tiny_shape(), rng);
  model.gen_params.fill(0.0);
  model.disc_params.fill(0.0);
  const Latent lat = fedgan::cgan::sample_latent(rng, 4, 3, 3);
  CHECK(fedgan::cgan::generate(model, lat.z, lat.labels).isZero(0.0));
  const Batch real = random_batch(rng, 4, 2, 3);
  const auto d = fedgan::cgan::discriminate(model, real.x, real.y);
  for (int i = 0; i < 4; ++i) CHECK(d(i) == 0.5);
  CHECK(fedgan::cgan::d_objective(model, real, lat) ==
        doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-14));
  CHECK(fedgan::cgan::g_objective(model, lat) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("saturated discriminator hits the clamp") {
  Rng rng(6);
  GanModel model = fedgan::cgan::make_model(tiny_shape(), rng);
  // Output bias decides D: huge positive means D = 1 - eps everywhere.
  model.disc_params.fill(0.0);
  const std::size_t last = model.disc_params.num_layers() - 1;
  model.disc_params.bias(last)(0) = 1e3;
  const Batch real = random_batch(rng, 4, 2, 3);
  const Latent lat = fedgan::cgan::sample_latent(rng, 4, 3, 3);
  const auto d = fedgan::cgan::discriminate(model, real.x, real.y);
  for (int i = 0; i < 4; ++i) CHECK(d(i) == 1.0 - kProbClamp);
  // G fully accepted; flip the sign for fully rejected.
  model.disc_params.bias(last)(0) = -1e3;
  CHECK(std::abs(fedgan::cgan::g_objective(model, lat)) <= 3e-7);
  CHECK(std::isfinite(fedgan::cgan::d_objective(model, real, lat)));
}

TEST_CASE("d_objective matches term-by-term summation") {
  Rng rng(7);
  const GanModel model = fedgan::cgan::make_model(tiny_shape(), rng);
  const Batch real = random_batch(rng, 4, 2, 3);
  const Latent lat = fedgan::cgan::sample_latent(rng, 4, 3, 3);
  const auto dr = fedgan::cgan::discriminate(model, real.x, real.y);
  const Matrix fake = fedgan::cgan::generate(model, lat.z, lat.labels);
  const auto df = fedgan::cgan::discriminate(model, fake, lat.labels);
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) sum += std::log(dr(i)) + std::log(1.0 - df(i));
  CHECK(std::abs(fedgan::cgan::d_objective(model, real, lat) - sum / 4.0) <=
        1e-12);
  double gsum = 0.0;
  for (int i = 0; i < 4; ++i) gsum += std::log(1.0 - df(i));
  CHECK(std::abs(fedgan::cgan::g_objective(model, lat) - gsum / 4.0) <=
        1e-12);
  double ns = 0.0;
  for (int i = 0; i < 4; ++i) ns += -std::log(df(i));
  CHECK(std::abs(fedgan::cgan::g_objective(model, lat, GLoss::kNonSaturating) -
                 ns / 4.0) <= 1e-12);
}

TEST_CASE("objective gradients match finite differences") {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const GanModel model = fedgan::cgan::make_model(tiny_shape(), rng);
    const Batch real = random_batch(rng, 5, 2, 3);
    const Latent lat = fedgan::cgan::sample_latent(rng, 5, 3, 3);
    const auto gd = fedgan::cgan::d_gradient(model, real, lat);
    CHECK(std::abs(gd.value - fedgan::cgan::d_objective(model, real, lat)) <=
          1e-12);
    CHECK(fedgan::nn::grad_check(
              [&](const fedgan::nn::ParamVector& p) {
                GanModel probe = model;
                probe.disc_params = p;
                return fedgan::cgan::d_objective(probe, real, lat);
              },
              model.disc_params, gd.grads) <= 1e-4);
    for (auto loss : {GLoss::kSaturating, GLoss::kNonSaturating}) {
      const auto gg = fedgan::cgan::g_gradient(model, lat, loss);
      CHECK(fedgan::nn::grad_check(
                [&](const fedgan::nn::ParamVector& p) {
                  GanModel probe = model;
                  probe.gen_params = p;
                  return fedgan::cgan::g_objective(probe, lat, loss);
                },
                model.gen_params, gg.grads) <= 1e-4);
    }
  }
}

TEST_CASE("train steps: ascent, descent and isolation") {
  Rng rng(9);
  int d_up = 0;
  int g_down = 0;
  for (int trial = 0; trial < 20; ++trial) {
    GanModel model = fedgan::cgan::make_model(tiny_shape(), rng);
    const Batch real = random_batch(rng, 8, 2, 3);
    const Latent lat = fedgan::cgan::sample_latent(rng, 8, 3, 3);
    AdamState adam_d(model.disc_params.size(), AdamHyper{1e-4});
    AdamState adam_g(model.gen_params.size(), AdamHyper{1e-4});

    const auto gen_before = model.gen_params;
    const double vd0 = fedgan::cgan::train_step_d(model, real, lat, adam_d);
    CHECK(model.gen_params.bit_equal(gen_before));
    CHECK(adam_g.t == 0);
    CHECK(adam_d.t == 1);
    if (fedgan::cgan::d_objective(model, real, lat) >= vd0) ++d_up;

    const auto disc_before = model.disc_params;
    const double vg0 = fedgan::cgan::train_step_g(model, lat, adam_g);
    CHECK(model.disc_params.bit_equal(disc_before));
    CHECK(adam_d.t == 1);
    if (fedgan::cgan::g_objective(model, lat) <= vg0) ++g_down;
  }
  CHECK(d_up == 20);
  CHECK(g_down == 20);
}

TEST_CASE("train steps: zero gradients leave parameters unchanged") {
  Rng rng(10);
  GanModel model = fedgan::cgan::make_model(tiny_shape(), rng);
  model.disc_params.fill(0.0);
  model.gen_params.fill(0.0);
  const auto d0 = model.disc_params;
  const auto g0 = model.gen_params;
  // Zero D: the G gradient vanishes through D's zero input weights.
  AdamState adam_g(model.gen_params.size(), AdamHyper{});
  (void)fedgan::cgan::train_step_g(model, rng, 4, adam_g);
  CHECK(model.gen_params.bit_equal(g0));
  CHECK(model.disc_params.bit_equal(d0));
}

TEST_CASE("train steps: fixed seed gives identical bits") {
  auto run = [] {
    Rng rng(11);
    GanModel model = fedgan::cgan::make_model(tiny_shape(), rng);
    const Batch real = random_batch(rng, 6, 2, 3);
    AdamState adam_d(model.disc_params.size(), AdamHyper{});
    AdamState adam_g(model.gen_params.size(), AdamHyper{});
    fedgan::cgan::train_step_d(model, real, rng, adam_d);
    fedgan::cgan::train_step_g(model, rng, 6, adam_g);
    return model;
  };
  const GanModel a = run();
  const GanModel b = run();
  CHECK(a.disc_params.bit_equal(b.disc_params));
  CHECK(a.gen_params.bit_equal(b.gen_params));
}

TEST_CASE("train step rejects non-finite state without mutation") {
  Rng rng(12);
  GanModel model = fedgan::cgan::make_model(tiny_shape(), rng);
  const Batch real = random_batch(rng, 4, 2, 3);
  const Latent lat = fedgan::cgan::sample_latent(rng, 4, 3, 3);
  model.disc_params[0] = std::numeric_limits<double>::quiet_NaN();
  const auto before = model.disc_params;
  AdamState adam_d(model.disc_params.size(), AdamHyper{});
  CHECK_THROWS_AS(fedgan::cgan::train_step_d(model, real, lat, adam_d),
                  fedgan::NumericError);
  CHECK(adam_d.t == 0);
  CHECK(model.disc_params.bit_equal(before));
}

TEST_CASE("local_epoch batching") {
  Rng rng(13);
  GanModel model = fedgan::cgan::make_model(tiny_shape(), rng);
  AdamState adam_d(model.disc_params.size(), AdamHyper{});
  AdamState adam_g(model.gen_params.size(), AdamHyper{});
  auto stats =
      fedgan::cgan::local_epoch(model, toy_shard(128), rng, adam_d, adam_g, 64);
  CHECK(stats.d_steps == 2);
  CHECK(stats.g_steps == 2);
  stats =
      fedgan::cgan::local_epoch(model, toy_shard(100), rng, adam_d, adam_g, 64);
  CHECK(stats.batch_sizes == std::vector<std::size_t>{64, 36});
  CHECK(adam_d.t == 4);
  CHECK(adam_g.t == 4);
  CHECK_THROWS_AS(fedgan::cgan::local_epoch(model, toy_shard(0), rng, adam_d,
                                            adam_g, 64),
                  fedgan::ConfigError);
}

TEST_CASE("local_epoch is deterministic") {
  auto run = [] {
    Rng rng(14);
    GanModel model = fedgan::cgan::make_model(tiny_shape(), rng);
    AdamState adam_d(model.disc_params.size(), AdamHyper{});
    AdamState adam_g(model.gen_params.size(), AdamHyper{});
    fedgan::cgan::local_epoch(model, toy_shard(90), rng, adam_d, adam_g, 16);
    return model;
  };
  const GanModel a = run();
  const GanModel b = run();
  CHECK(a.gen_params.bit_equal(b.gen_params));
  CHECK(a.disc_params.bit_equal(b.disc_params));
}
