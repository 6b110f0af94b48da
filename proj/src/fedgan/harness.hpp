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

#ifndef FEDGAN_HARNESS_HPP_
#define FEDGAN_HARNESS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedgan/cgan.hpp"
#include "fedgan/data.hpp"
#include "fedgan/federation.hpp"
#include "fedgan/metrics.hpp"

namespace fedgan::harness {

enum class DatasetKind { kSynthetic, kIdx };
enum class PartitionMode { kIid, kNonIid };

struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::kSynthetic;
  data::MixtureSpec mixture;
  std::size_t holdout_per_class = 250;
  std::string idx_images;
  std::string idx_labels;
  std::string idx_holdout_images;
  std::string idx_holdout_labels;
  // Share of the IDX set held out when no holdout files are given.
  double holdout_fraction = 0.1;

  fed::FederationConfig federation;

  std::size_t latent_dim = 16;
  std::vector<std::size_t> gen_hidden{64, 64};
  std::vector<std::size_t> disc_hidden{64, 64};
  double leaky_slope = 0.2;

  PartitionMode partition = PartitionMode::kIid;
  double iid_fraction = 0.5;
  double skewness = 0.7;
  data::LeftoverSplit leftover_split = data::LeftoverSplit::kRandom;

  std::size_t metric_n = 2000;

  // Unset means 0.97 for synthetic data and 0.99 for IDX data.
  std::optional<double> oracle_min_accuracy;
  std::vector<std::size_t> oracle_hidden{64};
  std::size_t oracle_min_epochs = 5;
  std::size_t oracle_max_epochs = 50;
  double oracle_lr = 1e-3;

  std::string output = "results.csv";

  std::uint64_t seed() const { return federation.seed; }
  double oracle_threshold() const;
  std::string partition_descriptor() const;
  metrics::OracleConfig oracle_config() const;
  cgan::GanShape gan_shape(std::size_t data_dim, std::size_t n_classes) const;
  // Throws ConfigError naming the offending key and constraint.
  void validate() const;
};

// Every recognised key, in documentation order.
const std::vector<std::string>& config_keys();

// Applies one key=value pair; throws ConfigError on unknown keys or values
// that do not parse.
void apply_setting(ExperimentConfig& config, std::string_view key,
                   std::string_view value);
std::string get_setting(const ExperimentConfig& config, std::string_view key);

// Flat key=value text, one pair per line, '#' starts a comment. Unknown keys
// are rejected; the result is validated.
ExperimentConfig parse_config(std::string_view text);

// File < FEDGAN_SEED environment value < command-line overrides.
ExperimentConfig resolve_config(
    std::string_view file_text, const char* env_seed,
    std::span<const std::pair<std::string, std::string>> overrides);

// Round-trips through parse_config.
std::string render_config(const ExperimentConfig& config);

// Data, shards and metric context shared by runs that differ only in
// strategy.
struct PreparedExperiment {
  data::LabeledDataset train;
  data::LabeledDataset holdout;
  std::vector<data::LabeledDataset> shards;
  metrics::MetricContext metrics;
  cgan::GanShape shape;
};

std::pair<data::LabeledDataset, data::LabeledDataset> load_datasets(
    const ExperimentConfig& config);
std::vector<data::LabeledDataset> make_shards(const ExperimentConfig& config,
                                              const data::LabeledDataset& train);
PreparedExperiment prepare_experiment(const ExperimentConfig& config);

struct ExperimentSummary {
  double best_score = 0.0;
  double min_emd = 0.0;
  double final_score = 0.0;
  double final_emd = 0.0;
  std::optional<std::size_t> optimal_round;
  double total_wall_s = 0.0;
};

struct ExperimentResult {
  std::vector<fed::RoundRecord> history;
  ExperimentSummary summary;
  double oracle_accuracy = 0.0;
  cgan::GanModel central;
};

ExperimentResult run_prepared(const PreparedExperiment& prepared,
                              const ExperimentConfig& config);

// Prepares, trains and writes the CSV to config.output (skipped when empty).
ExperimentResult run_experiment(const ExperimentConfig& config);

inline constexpr std::string_view kCsvHeader =
    "round,score,emd,strategy,n_clients,k_selected,partition,seed,wall_s";

// Header, one row per round, then a summary row whose round field is
// "optimal_round=<r>" (or "optimal_round=none") with best score and min EMD.
std::string render_csv(const ExperimentConfig& config,
                       const ExperimentResult& result);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

struct StrategyRow {
  fed::SyncStrategy strategy = fed::SyncStrategy::kSyncDAndG;
  double median_score = 0.0;
  double median_emd = 0.0;
  // wins[j]: seeds on which this strategy's final score beat strategy j's.
  std::array<std::size_t, 4> wins{};
  std::vector<double> final_scores;
  std::vector<double> final_emds;
};

struct Comparison {
  std::vector<std::uint64_t> seeds;
  std::vector<StrategyRow> rows;  // one per strategy, dg g d none
};

// Runs all four strategies for every seed; independent runs share
// config.federation.threads workers.
Comparison compare_strategies(const ExperimentConfig& base,
                              std::span<const std::uint64_t> seeds);

std::string render_comparison_csv(const Comparison& comparison);

double median(std::vector<double> values);

// Shard inspection for the configured partition.
data::CountMatrix partition_report(const ExperimentConfig& config);

struct GradcheckReport {
  std::size_t instances = 0;
  double max_error_d = 0.0;
  double max_error_g = 0.0;
  double max_error_mlp = 0.0;
};

// Randomised small cGANs and MLPs checked against central differences.
GradcheckReport gradcheck_suite(std::uint64_t seed, std::size_t instances);

}  // namespace fedgan::harness

#endif  // FEDGAN_HARNESS_HPP_
