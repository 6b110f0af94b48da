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

#include "fedgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fedgan/error.hpp"

namespace fedgan::metrics {
namespace {

nn::MlpArch oracle_arch(std::size_t dim, const std::vector<std::size_t>& hidden,
                        std::size_t n_classes) {
  nn::MlpArch arch;
  arch.widths.push_back(dim);
  arch.widths.insert(arch.widths.end(), hidden.begin(), hidden.end());
  arch.widths.push_back(n_classes);
  arch.output = nn::OutputActivation::kSoftmax;
  return arch;
}

void train_one_epoch(OracleClassifier& oracle,
                     const data::LabeledDataset& train, nn::AdamState& adam,
                     std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    const auto batch = train.subset(
        std::span<const std::size_t>(order.data() + start, end - start));
    auto pass = nn::forward(oracle.arch, oracle.params, batch.features);
    const double inv_m = 1.0 / static_cast<double>(batch.size());
    Matrix grad = Matrix::Zero(pass.output.rows(), pass.output.cols());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double p = std::max(pass.output(r, batch.labels[i]),
                                std::numeric_limits<double>::min());
      grad(r, batch.labels[i]) = -inv_m / p;
    }
    auto back = nn::backward(oracle.arch, oracle.params, pass.cache, grad);
    nn::adam_step(oracle.params, back.grads, adam, nn::Direction::kDescend);
  }
}

}  // namespace

Matrix OracleClassifier::predict_proba(const Matrix& features) const {
  return nn::predict(arch, params, features);
}

std::vector<int> OracleClassifier::predict(const Matrix& features) const {
  const Matrix probs = predict_proba(features);
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = argmax(probs.row(i));
  }
  return out;
}

int argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j) {
    if (row(j) > row(best)) best = static_cast<int>(j);
  }
  return best;
}

double accuracy(const OracleClassifier& oracle,
                const data::LabeledDataset& dataset) {
  if (dataset.empty()) return 0.0;
  const auto predicted = oracle.predict(dataset.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    hits += predicted[i] == dataset.labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

OracleClassifier train_oracle(const data::LabeledDataset& train,
                              const data::LabeledDataset& holdout,
                              const OracleConfig& config) {
  if (train.empty() || holdout.empty()) {
    throw ConfigError("train_oracle: train and holdout must be non-empty");
  }
  if (train.dim() != holdout.dim() || train.n_classes != holdout.n_classes) {
    throw DimensionError("train_oracle: train/holdout shapes differ");
  }
  if (config.batch_size == 0) {
    throw ConfigError("train_oracle: batch size must be >= 1");
  }
  Rng rng = make_stream(config.seed, Stream::kOracle);
  OracleClassifier oracle;
  oracle.arch = oracle_arch(train.dim(), config.hidden, train.n_classes);
  oracle.params = nn::init_params(oracle.arch, rng);

  // A single class is always predicted correctly.
  if (train.n_classes == 1) {
    oracle.holdout_accuracy = 1.0;
    return oracle;
  }

  nn::AdamState adam(oracle.params.size(),
                     {config.lr, 0.9, 0.999, 1e-8});
  oracle.holdout_accuracy = accuracy(oracle, holdout);
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    train_one_epoch(oracle, train, adam, config.batch_size, rng);
    oracle.holdout_accuracy = accuracy(oracle, holdout);
    if (epoch >= config.min_epochs &&
        oracle.holdout_accuracy >= config.min_accuracy) {
      return oracle;
    }
  }
  if (oracle.holdout_accuracy < config.min_accuracy) {
    throw OracleQualityError(
        "oracle reached holdout accuracy " +
        std::to_string(oracle.holdout_accuracy) + " < required " +
        std::to_string(config.min_accuracy) + " after " +
        std::to_string(config.max_epochs) + " epochs");
  }
  return oracle;
}

MetricSample make_metric_sample(const OracleClassifier& oracle,
                                Matrix features, std::vector<int> labels) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DimensionError("metric sample: feature/label count mismatch");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= oracle.n_classes()) {
      throw DimensionError("metric sample: label outside oracle classes");
    }
  }
  MetricSample sample;
  sample.probs = oracle.predict_proba(features);
  sample.predicted.resize(labels.size());
  for (Eigen::Index i = 0; i < sample.probs.rows(); ++i) {
    sample.predicted[static_cast<std::size_t>(i)] = argmax(sample.probs.row(i));
  }
  sample.features = std::move(features);
  sample.labels = std::move(labels);
  return sample;
}

MetricSample generated_sample(const OracleClassifier& oracle,
                              const cgan::GanModel& model, std::size_t n,
                              Rng& rng) {
  if (n == 0) throw ConfigError("metric sample size must be >= 1");
  if (model.n_classes != oracle.n_classes()) {
    throw DimensionError("oracle and generator disagree on class count");
  }
  auto latent = cgan::sample_latent(rng, n, model.latent_dim, model.n_classes);
  Matrix fake = cgan::generate(model, latent.z, latent.labels);
  return make_metric_sample(oracle, std::move(fake), std::move(latent.labels));
}

MetricSample real_sample(const OracleClassifier& oracle,
                         const data::LabeledDataset& holdout, std::size_t n,
                         Rng& rng) {
  if (n == 0) throw ConfigError("metric sample size must be >= 1");
  if (holdout.empty()) throw ConfigError("real_sample: empty holdout set");
  std::vector<std::size_t> idx;
  if (holdout.size() >= n) {
    idx.resize(holdout.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, holdout.size() - 1);
    idx.resize(n);
    for (auto& i : idx) i = pick(rng);
  }
  auto rows = holdout.subset(idx);
  return make_metric_sample(oracle, std::move(rows.features),
                            std::move(rows.labels));
}

double classification_score(const MetricSample& sample) {
  if (sample.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    hits += sample.predicted[i] == sample.labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(sample.size());
}

double classification_score(const OracleClassifier& oracle,
                            const cgan::GanModel& model, std::size_t n,
                            Rng& rng) {
  return classification_score(generated_sample(oracle, model, n, rng));
}

double emd(const MetricSample& real, const MetricSample& generated) {
  if (real.size() != generated.size() || real.size() == 0) {
    throw DimensionError("emd: sample sizes differ (" +
                         std::to_string(real.size()) + " vs " +
                         std::to_string(generated.size()) + ")");
  }
  auto mean_label_prob = [](const MetricSample& s) {
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      total += s.probs(static_cast<Eigen::Index>(i), s.labels[i]);
    }
    return total / static_cast<double>(s.size());
  };
  return mean_label_prob(real) - mean_label_prob(generated);
}

RoundMetrics MetricContext::evaluate(const cgan::GanModel& model,
                                     Rng& rng) const {
  const MetricSample gen = generated_sample(oracle, model, n(), rng);
  return {classification_score(gen), emd(real, gen)};
}

}  // namespace fedgan::metrics
