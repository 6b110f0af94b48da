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

// Command-line front end over the fedgan C interface.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedgan/fedgan.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct ConfigDeleter {
  void operator()(fedgan_config* c) const { fedgan_config_free(c); }
};
struct ResultDeleter {
  void operator()(fedgan_result* r) const { fedgan_result_free(r); }
};
struct ComparisonDeleter {
  void operator()(fedgan_comparison* c) const { fedgan_comparison_free(c); }
};
using ConfigPtr = std::unique_ptr<fedgan_config, ConfigDeleter>;
using ResultPtr = std::unique_ptr<fedgan_result, ResultDeleter>;
using ComparisonPtr = std::unique_ptr<fedgan_comparison, ComparisonDeleter>;

// Config file path plus one optional override per config key.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;
};

int report(fedgan_status status) {
  std::cerr << "fedgan: " << fedgan_status_string(status) << ": "
            << fedgan_last_error() << '\n';
  return status == FEDGAN_ERR_CONFIG || status == FEDGAN_ERR_ARGUMENT
             ? kExitConfig
             : kExitRuntime;
}

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("-c,--config", flags.file, "key=value config file")
      ->check(CLI::ExistingFile);
  for (size_t i = 0; i < fedgan_config_key_count(); ++i) {
    const std::string key = fedgan_config_key(i);
    cmd->add_option_function<std::string>(
        "--" + key,
        [&flags, key](const std::string& v) { flags.values[key] = v; },
        "override config key '" + key + "'");
  }
}

// Two-call text fetch for the (buf, cap, needed) convention.
template <typename Fn>
std::optional<std::string> fetch_text(Fn&& fn, fedgan_status* status) {
  size_t needed = 0;
  *status = fn(nullptr, 0, &needed);
  if (*status != FEDGAN_ERR_BUFFER) return std::nullopt;
  std::string text(needed, '\0');
  *status = fn(text.data(), text.size(), &needed);
  if (*status != FEDGAN_OK) return std::nullopt;
  text.resize(needed - 1);
  return text;
}

fedgan_status resolve(const ConfigFlags& flags, ConfigPtr& out) {
  std::string file_text;
  if (!flags.file.empty()) {
    std::ifstream in(flags.file, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in) {
      std::cerr << "fedgan: cannot read " << flags.file << '\n';
      return FEDGAN_ERR_IO;
    }
    file_text = ss.str();
  }
  std::vector<const char*> keys;
  std::vector<const char*> values;
  for (const auto& [k, v] : flags.values) {
    keys.push_back(k.c_str());
    values.push_back(v.c_str());
  }
  fedgan_config* raw = nullptr;
  const fedgan_status status =
      fedgan_config_resolve(file_text.c_str(), std::getenv("FEDGAN_SEED"),
                            keys.data(), values.data(), keys.size(), &raw);
  out.reset(raw);
  return status;
}

int cmd_train(const ConfigFlags& flags, bool quiet) {
  ConfigPtr config;
  if (auto s = resolve(flags, config); s != FEDGAN_OK) return report(s);
  fedgan_result* raw = nullptr;
  if (auto s = fedgan_run_experiment(config.get(), &raw); s != FEDGAN_OK) {
    return report(s);
  }
  ResultPtr result(raw);
  if (quiet) return 0;
  fedgan_summary summary{};
  fedgan_result_summary(result.get(), &summary);
  std::printf("rounds=%zu oracle_accuracy=%.4f best_score=%.4f "
              "min_emd=%.4f final_score=%.4f final_emd=%.4f ",
              fedgan_result_round_count(result.get()),
              summary.oracle_accuracy, summary.best_score, summary.min_emd,
              summary.final_score, summary.final_emd);
  if (summary.has_optimal_round) {
    std::printf("optimal_round=%zu", summary.optimal_round);
  } else {
    std::printf("optimal_round=none");
  }
  std::printf(" wall_s=%.2f\n", summary.total_wall_s);
  return 0;
}

int cmd_compare(const ConfigFlags& flags, const std::vector<uint64_t>& seeds,
                const std::string& table) {
  ConfigPtr config;
  if (auto s = resolve(flags, config); s != FEDGAN_OK) return report(s);
  fedgan_comparison* raw = nullptr;
  if (auto s = fedgan_compare(config.get(), seeds.data(), seeds.size(), &raw);
      s != FEDGAN_OK) {
    return report(s);
  }
  ComparisonPtr cmp(raw);
  fedgan_status status = FEDGAN_OK;
  auto csv = fetch_text(
      [&](char* b, size_t c, size_t* n) {
        return fedgan_comparison_csv(cmp.get(), b, c, n);
      },
      &status);
  if (!csv) return report(status);
  if (table.empty()) {
    std::cout << *csv;
    return 0;
  }
  std::ofstream out(table, std::ios::binary | std::ios::trunc);
  out << *csv;
  if (!out) {
    std::cerr << "fedgan: cannot write " << table << '\n';
    return kExitRuntime;
  }
  return 0;
}

int cmd_partition(const ConfigFlags& flags) {
  ConfigPtr config;
  if (auto s = resolve(flags, config); s != FEDGAN_OK) return report(s);
  size_t clients = 0;
  size_t classes = 0;
  if (auto s = fedgan_partition_inspect(config.get(), &clients, &classes,
                                        nullptr, 0);
      s != FEDGAN_OK) {
    return report(s);
  }
  std::vector<size_t> counts(clients * classes);
  if (auto s = fedgan_partition_inspect(config.get(), &clients, &classes,
                                        counts.data(), counts.size());
      s != FEDGAN_OK) {
    return report(s);
  }
  std::cout << "client";
  for (size_t c = 0; c < classes; ++c) std::cout << ",class_" << c;
  std::cout << ",total\n";
  for (size_t k = 0; k < clients; ++k) {
    size_t total = 0;
    std::cout << k;
    for (size_t c = 0; c < classes; ++c) {
      total += counts[k * classes + c];
      std::cout << ',' << counts[k * classes + c];
    }
    std::cout << ',' << total << '\n';
  }
  return 0;
}

int cmd_gradcheck(uint64_t seed, size_t instances, double tolerance) {
  fedgan_gradcheck_report r{};
  if (auto s = fedgan_gradcheck(seed, instances, &r); s != FEDGAN_OK) {
    return report(s);
  }
  std::printf("instances=%zu max_rel_error_d=%.3e max_rel_error_g=%.3e "
              "max_rel_error_mlp=%.3e\n",
              r.instances, r.max_error_d, r.max_error_g, r.max_error_mlp);
  const bool ok = r.max_error_d <= tolerance && r.max_error_g <= tolerance &&
                  r.max_error_mlp <= tolerance;
  if (!ok) std::fprintf(stderr, "fedgan: tolerance %.1e exceeded\n", tolerance);
  return ok ? 0 : kExitRuntime;
}

int cmd_oracle(const ConfigFlags& flags) {
  ConfigPtr config;
  if (auto s = resolve(flags, config); s != FEDGAN_OK) return report(s);
  fedgan_oracle_report r{};
  if (auto s = fedgan_oracle(config.get(), &r); s != FEDGAN_OK) {
    return report(s);
  }
  std::printf("classes=%zu train=%zu holdout=%zu holdout_accuracy=%.4f "
              "threshold=%.4f real_score=%.4f\n",
              r.n_classes, r.train_size, r.holdout_size, r.holdout_accuracy,
              r.threshold, r.real_score);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated conditional GAN simulator"};
  app.set_version_flag("--version", std::string(fedgan_version()));
  app.require_subcommand(1);

  ConfigFlags train_flags;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "run one experiment, write CSV");
  add_config_flags(train, train_flags);
  train->add_flag("-q,--quiet", quiet, "no summary on stdout");

  ConfigFlags compare_flags;
  std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
  std::string table;
  auto* compare = app.add_subcommand("compare", "run all four strategies");
  add_config_flags(compare, compare_flags);
  compare->add_option("--seeds", seeds, "seed list")->delimiter(',');
  compare->add_option("--table", table, "write the table here, not stdout");

  ConfigFlags partition_flags;
  auto* partition =
      app.add_subcommand("partition-inspect", "per-client class counts");
  add_config_flags(partition, partition_flags);

  uint64_t gc_seed = 0;
  size_t instances = 20;
  double tolerance = 1e-4;
  auto* gradcheck =
      app.add_subcommand("gradcheck", "analytic vs finite-difference grads");
  gradcheck->add_option("--seed", gc_seed);
  gradcheck->add_option("--instances", instances)->check(CLI::PositiveNumber);
  gradcheck->add_option("--tolerance", tolerance);

  ConfigFlags oracle_flags;
  auto* oracle = app.add_subcommand("oracle", "train and evaluate the oracle");
  add_config_flags(oracle, oracle_flags);

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) return cmd_train(train_flags, quiet);
  if (compare->parsed()) return cmd_compare(compare_flags, seeds, table);
  if (partition->parsed()) return cmd_partition(partition_flags);
  if (gradcheck->parsed()) return cmd_gradcheck(gc_seed, instances, tolerance);
  if (oracle->parsed()) return cmd_oracle(oracle_flags);
  return kExitConfig;
}
