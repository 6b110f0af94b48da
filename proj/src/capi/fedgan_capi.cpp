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

#include "fedgan/fedgan.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <new>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedgan/error.hpp"
#include "fedgan/harness.hpp"
#include "fedgan/rng.hpp"

struct fedgan_config {
  fedgan::harness::ExperimentConfig value;
};

struct fedgan_result {
  fedgan::harness::ExperimentConfig config;
  fedgan::harness::ExperimentResult value;
};

struct fedgan_comparison {
  fedgan::harness::Comparison value;
};

namespace {

using fedgan::ErrorKind;

thread_local std::string last_error;

fedgan_status status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return FEDGAN_ERR_CONFIG;
    case ErrorKind::kDimension: return FEDGAN_ERR_DIMENSION;
    case ErrorKind::kContract: return FEDGAN_ERR_CONTRACT;
    case ErrorKind::kNumeric: return FEDGAN_ERR_NUMERIC;
    case ErrorKind::kFormat: return FEDGAN_ERR_FORMAT;
    case ErrorKind::kFusion: return FEDGAN_ERR_FUSION;
    case ErrorKind::kOracleQuality: return FEDGAN_ERR_ORACLE_QUALITY;
    case ErrorKind::kIo: return FEDGAN_ERR_IO;
  }
  return FEDGAN_ERR_INTERNAL;
}

fedgan_status fail(fedgan_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename Fn>
fedgan_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return FEDGAN_OK;
  } catch (const fedgan::Error& e) {
    return fail(status_for(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(FEDGAN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FEDGAN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FEDGAN_ERR_INTERNAL, "unknown exception");
  }
}

fedgan_status copy_text(std::string_view text, char* buf, size_t cap,
                        size_t* needed) {
  const size_t size = text.size() + 1;
  if (needed != nullptr) *needed = size;
  if (buf == nullptr || cap < size) {
    return fail(FEDGAN_ERR_BUFFER,
                "buffer of " + std::to_string(cap) + " bytes, need " +
                    std::to_string(size));
  }
  std::memcpy(buf, text.data(), text.size());
  buf[text.size()] = '\0';
  return FEDGAN_OK;
}

#define FEDGAN_REQUIRE(cond, what)                                     \
  do {                                                                 \
    if (!(cond)) return fail(FEDGAN_ERR_ARGUMENT, what " is NULL");   \
  } while (0)

}  // namespace

extern "C" {

const char* fedgan_version(void) { return "0.1.0"; }

const char* fedgan_status_string(fedgan_status status) {
  switch (status) {
    case FEDGAN_OK: return "ok";
    case FEDGAN_ERR_CONFIG: return "config error";
    case FEDGAN_ERR_DIMENSION: return "dimension error";
    case FEDGAN_ERR_CONTRACT: return "contract error";
    case FEDGAN_ERR_NUMERIC: return "numeric error";
    case FEDGAN_ERR_FORMAT: return "format error";
    case FEDGAN_ERR_FUSION: return "fusion error";
    case FEDGAN_ERR_ORACLE_QUALITY: return "oracle quality error";
    case FEDGAN_ERR_IO: return "io error";
    case FEDGAN_ERR_ARGUMENT: return "invalid argument";
    case FEDGAN_ERR_BUFFER: return "buffer too small";
    case FEDGAN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* fedgan_last_error(void) { return last_error.c_str(); }

size_t fedgan_config_key_count(void) {
  return fedgan::harness::config_keys().size();
}

const char* fedgan_config_key(size_t index) {
  const auto& keys = fedgan::harness::config_keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

fedgan_status fedgan_config_new(fedgan_config** out) {
  FEDGAN_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] { *out = new fedgan_config{}; });
}

fedgan_status fedgan_config_parse(const char* text, fedgan_config** out) {
  FEDGAN_REQUIRE(out, "out");
  FEDGAN_REQUIRE(text, "text");
  *out = nullptr;
  return guarded([&] {
    *out = new fedgan_config{fedgan::harness::parse_config(text)};
  });
}

fedgan_status fedgan_config_resolve(const char* file_text,
                                    const char* env_seed,
                                    const char* const* keys,
                                    const char* const* values,
                                    size_t n_overrides, fedgan_config** out) {
  FEDGAN_REQUIRE(out, "out");
  *out = nullptr;
  if (n_overrides > 0 && (keys == nullptr || values == nullptr)) {
    return fail(FEDGAN_ERR_ARGUMENT, "keys/values is NULL");
  }
  return guarded([&] {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (size_t i = 0; i < n_overrides; ++i) {
      if (keys[i] == nullptr || values[i] == nullptr) {
        throw fedgan::ConfigError("override " + std::to_string(i) +
                                  " is NULL");
      }
      overrides.emplace_back(keys[i], values[i]);
    }
    *out = new fedgan_config{fedgan::harness::resolve_config(
        file_text != nullptr ? file_text : "", env_seed, overrides)};
  });
}

fedgan_status fedgan_config_set(fedgan_config* config, const char* key,
                                const char* value) {
  FEDGAN_REQUIRE(config, "config");
  FEDGAN_REQUIRE(key, "key");
  FEDGAN_REQUIRE(value, "value");
  return guarded(
      [&] { fedgan::harness::apply_setting(config->value, key, value); });
}

fedgan_status fedgan_config_validate(const fedgan_config* config) {
  FEDGAN_REQUIRE(config, "config");
  return guarded([&] { config->value.validate(); });
}

fedgan_status fedgan_config_get(const fedgan_config* config, const char* key,
                                char* buf, size_t cap, size_t* needed) {
  FEDGAN_REQUIRE(config, "config");
  FEDGAN_REQUIRE(key, "key");
  std::string text;
  const fedgan_status status = guarded(
      [&] { text = fedgan::harness::get_setting(config->value, key); });
  if (status != FEDGAN_OK) return status;
  return copy_text(text, buf, cap, needed);
}

fedgan_status fedgan_config_render(const fedgan_config* config, char* buf,
                                   size_t cap, size_t* needed) {
  FEDGAN_REQUIRE(config, "config");
  std::string text;
  const fedgan_status status = guarded(
      [&] { text = fedgan::harness::render_config(config->value); });
  if (status != FEDGAN_OK) return status;
  return copy_text(text, buf, cap, needed);
}

void fedgan_config_free(fedgan_config* config) { delete config; }

fedgan_status fedgan_run_experiment(const fedgan_config* config,
                                    fedgan_result** out) {
  FEDGAN_REQUIRE(config, "config");
  FEDGAN_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    auto result = fedgan::harness::run_experiment(config->value);
    *out = new fedgan_result{config->value, std::move(result)};
  });
}

size_t fedgan_result_round_count(const fedgan_result* result) {
  return result != nullptr ? result->value.history.size() : 0;
}

fedgan_status fedgan_result_round(const fedgan_result* result, size_t index,
                                  fedgan_round_record* out) {
  FEDGAN_REQUIRE(result, "result");
  FEDGAN_REQUIRE(out, "out");
  const auto& history = result->value.history;
  if (index >= history.size()) {
    return fail(FEDGAN_ERR_ARGUMENT, "round index " + std::to_string(index) +
                                         " out of range (" +
                                         std::to_string(history.size()) +
                                         " rounds)");
  }
  const auto& r = history[index];
  *out = fedgan_round_record{r.round, r.score, r.emd, r.wall_s};
  return FEDGAN_OK;
}

fedgan_status fedgan_result_summary(const fedgan_result* result,
                                    fedgan_summary* out) {
  FEDGAN_REQUIRE(result, "result");
  FEDGAN_REQUIRE(out, "out");
  const auto& s = result->value.summary;
  *out = fedgan_summary{s.best_score,
                        s.min_emd,
                        s.final_score,
                        s.final_emd,
                        s.total_wall_s,
                        result->value.oracle_accuracy,
                        s.optimal_round.has_value() ? 1 : 0,
                        s.optimal_round.value_or(0)};
  return FEDGAN_OK;
}

fedgan_status fedgan_result_csv(const fedgan_result* result, char* buf,
                                size_t cap, size_t* needed) {
  FEDGAN_REQUIRE(result, "result");
  std::string text;
  const fedgan_status status = guarded([&] {
    text = fedgan::harness::render_csv(result->config, result->value);
  });
  if (status != FEDGAN_OK) return status;
  return copy_text(text, buf, cap, needed);
}

void fedgan_result_free(fedgan_result* result) { delete result; }

fedgan_status fedgan_compare(const fedgan_config* config,
                             const uint64_t* seeds, size_t n_seeds,
                             fedgan_comparison** out) {
  FEDGAN_REQUIRE(config, "config");
  FEDGAN_REQUIRE(out, "out");
  *out = nullptr;
  if (n_seeds > 0) FEDGAN_REQUIRE(seeds, "seeds");
  return guarded([&] {
    auto cmp = fedgan::harness::compare_strategies(
        config->value, std::span<const uint64_t>(seeds, n_seeds));
    *out = new fedgan_comparison{std::move(cmp)};
  });
}

size_t fedgan_comparison_row_count(const fedgan_comparison* cmp) {
  return cmp != nullptr ? cmp->value.rows.size() : 0;
}

fedgan_status fedgan_comparison_row(const fedgan_comparison* cmp, size_t index,
                                    fedgan_strategy_row* out) {
  FEDGAN_REQUIRE(cmp, "comparison");
  FEDGAN_REQUIRE(out, "out");
  if (index >= cmp->value.rows.size()) {
    return fail(FEDGAN_ERR_ARGUMENT,
                "row index " + std::to_string(index) + " out of range");
  }
  const auto& row = cmp->value.rows[index];
  out->strategy = fedgan::fed::to_string(row.strategy).data();
  out->median_score = row.median_score;
  out->median_emd = row.median_emd;
  for (size_t j = 0; j < 4; ++j) out->wins[j] = row.wins[j];
  return FEDGAN_OK;
}

fedgan_status fedgan_comparison_csv(const fedgan_comparison* cmp, char* buf,
                                    size_t cap, size_t* needed) {
  FEDGAN_REQUIRE(cmp, "comparison");
  std::string text;
  const fedgan_status status = guarded(
      [&] { text = fedgan::harness::render_comparison_csv(cmp->value); });
  if (status != FEDGAN_OK) return status;
  return copy_text(text, buf, cap, needed);
}

void fedgan_comparison_free(fedgan_comparison* cmp) { delete cmp; }

fedgan_status fedgan_partition_inspect(const fedgan_config* config,
                                       size_t* n_clients, size_t* n_classes,
                                       size_t* counts, size_t cap) {
  FEDGAN_REQUIRE(config, "config");
  FEDGAN_REQUIRE(n_clients, "n_clients");
  FEDGAN_REQUIRE(n_classes, "n_classes");
  fedgan::data::CountMatrix matrix;
  const fedgan_status status = guarded(
      [&] { matrix = fedgan::harness::partition_report(config->value); });
  if (status != FEDGAN_OK) return status;
  *n_clients = matrix.size();
  *n_classes = matrix.empty() ? 0 : matrix.front().size();
  if (counts == nullptr) return FEDGAN_OK;
  const size_t total = *n_clients * *n_classes;
  if (cap < total) {
    return fail(FEDGAN_ERR_BUFFER, "counts holds " + std::to_string(cap) +
                                       " entries, need " +
                                       std::to_string(total));
  }
  for (size_t k = 0; k < matrix.size(); ++k) {
    std::copy(matrix[k].begin(), matrix[k].end(), counts + k * *n_classes);
  }
  return FEDGAN_OK;
}

fedgan_status fedgan_gradcheck(uint64_t seed, size_t instances,
                               fedgan_gradcheck_report* out) {
  FEDGAN_REQUIRE(out, "out");
  return guarded([&] {
    const auto r = fedgan::harness::gradcheck_suite(seed, instances);
    *out = fedgan_gradcheck_report{r.instances, r.max_error_d, r.max_error_g,
                                   r.max_error_mlp};
  });
}

fedgan_status fedgan_oracle(const fedgan_config* config,
                            fedgan_oracle_report* out) {
  FEDGAN_REQUIRE(config, "config");
  FEDGAN_REQUIRE(out, "out");
  return guarded([&] {
    const auto& cfg = config->value;
    cfg.validate();
    auto [train, holdout] = fedgan::harness::load_datasets(cfg);
    const auto oracle =
        fedgan::metrics::train_oracle(train, holdout, cfg.oracle_config());
    fedgan::Rng rng =
        fedgan::make_stream(cfg.seed(), fedgan::Stream::kMetric, {0});
    const auto real =
        fedgan::metrics::real_sample(oracle, holdout, cfg.metric_n, rng);
    *out = fedgan_oracle_report{oracle.n_classes(),
                                train.size(),
                                holdout.size(),
                                oracle.holdout_accuracy,
                                cfg.oracle_threshold(),
                                fedgan::metrics::classification_score(real)};
  });
}

double fedgan_pixel_to_feature(uint8_t byte) {
  return fedgan::data::pixel_to_feature(byte);
}

fedgan_status fedgan_idx_shape(const char* images_path,
                               const char* labels_path, size_t* rows,
                               size_t* cols, size_t* n_classes) {
  FEDGAN_REQUIRE(images_path, "images_path");
  FEDGAN_REQUIRE(labels_path, "labels_path");
  FEDGAN_REQUIRE(rows, "rows");
  FEDGAN_REQUIRE(cols, "cols");
  FEDGAN_REQUIRE(n_classes, "n_classes");
  return guarded([&] {
    const auto ds = fedgan::data::load_idx(images_path, labels_path);
    *rows = ds.size();
    *cols = ds.dim();
    *n_classes = ds.n_classes;
  });
}

}  // extern "C"
