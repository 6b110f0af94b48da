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

#ifndef FEDGAN_METRICS_HPP_
#define FEDGAN_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedgan/cgan.hpp"
#include "fedgan/data.hpp"
#include "fedgan/nn.hpp"
#include "fedgan/rng.hpp"

// Generator quality as judged by a pre-trained oracle classifier: the
// classification Score and the softmax-averaged EMD approximation.
namespace fedgan::metrics {

using nn::Matrix;

struct OracleConfig {
  std::vector<std::size_t> hidden{64};
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t min_epochs = 5;
  std::size_t max_epochs = 50;
  double min_accuracy = 0.97;
  std::uint64_t seed = 0;
};

struct OracleClassifier {
  nn::MlpArch arch;
  nn::ParamVector params;
  double holdout_accuracy = 0.0;

  std::size_t n_classes() const { return arch.output_width(); }
  Matrix predict_proba(const Matrix& features) const;
  std::vector<int> predict(const Matrix& features) const;
};

// Index of the row maximum; ties go to the lowest index.
int argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row);

double accuracy(const OracleClassifier& oracle,
                const data::LabeledDataset& dataset);

// Cross-entropy + Adam until holdout accuracy reaches min_accuracy (and at
// least min_epochs have run) or max_epochs is hit. Throws OracleQualityError
// when the threshold is never reached.
OracleClassifier train_oracle(const data::LabeledDataset& train,
                              const data::LabeledDataset& holdout,
                              const OracleConfig& config);

struct MetricSample {
  Matrix features;
  std::vector<int> labels;
  Matrix probs;
  std::vector<int> predicted;

  std::size_t size() const { return labels.size(); }
};

MetricSample make_metric_sample(const OracleClassifier& oracle,
                                Matrix features, std::vector<int> labels);

// n generator draws with labels uniform over the classes.
MetricSample generated_sample(const OracleClassifier& oracle,
                              const cgan::GanModel& model, std::size_t n,
                              Rng& rng);

// n held-out rows: without replacement when the set is large enough,
// otherwise with replacement.
MetricSample real_sample(const OracleClassifier& oracle,
                         const data::LabeledDataset& holdout, std::size_t n,
                         Rng& rng);

// Fraction of rows whose oracle argmax equals the conditioning label.
double classification_score(const MetricSample& sample);
double classification_score(const OracleClassifier& oracle,
                            const cgan::GanModel& model, std::size_t n,
                            Rng& rng);

// mean_i probs_real[i][y_r] - mean_i probs_gen[i][y_g]; signed, lower is
// better.
double emd(const MetricSample& real, const MetricSample& generated);

struct RoundMetrics {
  double score = 0.0;
  double emd = 0.0;
};

// Oracle plus the cached real side of the EMD.
struct MetricContext {
  OracleClassifier oracle;
  MetricSample real;

  std::size_t n() const { return real.size(); }
  RoundMetrics evaluate(const cgan::GanModel& model, Rng& rng) const;
};

}  // namespace fedgan::metrics

#endif  // FEDGAN_METRICS_HPP_
