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

#include "fedgan/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "fedgan/error.hpp"
#include "fedgan/rng.hpp"
#include "fedgan/text.hpp"

namespace fedgan::harness {
namespace {

// Tags for derive_seed.
constexpr std::uint64_t kHoldoutTag = 1;
constexpr std::uint64_t kOracleTag = 2;
constexpr std::uint64_t kPartitionTag = 3;
constexpr std::uint64_t kSplitTag = 4;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view expected,
                            std::string_view value) {
  throw ConfigError("key '" + std::string(key) + "': expected " +
                    std::string(expected) + ", got '" + std::string(value) +
                    "'");
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    bad_value(key, "a non-negative integer", v);
  }
  return out;
}

std::size_t to_size(std::string_view key, std::string_view v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() ||
      !std::isfinite(out)) {
    bad_value(key, "a real number", v);
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, "true|false", v);
}

std::vector<std::size_t> to_widths(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(to_size(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) bad_value(key, "a comma-separated width list", v);
  return out;
}

std::string join(const std::vector<std::size_t>& widths) {
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(widths[i]);
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
  std::string key;
  Setter set;
  Getter get;
};

#define SIZE_FIELD(name, member)                                           \
  Field{name,                                                              \
        [](ExperimentConfig& c, std::string_view v) {                      \
          c.member = to_size(name, v);                                     \
        },                                                                 \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }}
#define REAL_FIELD(name, member)                                            \
  Field{name,                                                               \
        [](ExperimentConfig& c, std::string_view v) {                       \
          c.member = to_real(name, v);                                      \
        },                                                                  \
        [](const ExperimentConfig& c) { return format_double(c.member); }}
#define BOOL_FIELD(name, member)                                            \
  Field{name,                                                               \
        [](ExperimentConfig& c, std::string_view v) {                       \
          c.member = to_bool(name, v);                                      \
        },                                                                  \
        [](const ExperimentConfig& c) {                                     \
          return std::string(c.member ? "true" : "false");                  \
        }}
#define STRING_FIELD(name, member)                                          \
  Field{name,                                                               \
        [](ExperimentConfig& c, std::string_view v) { c.member = v; },      \
        [](const ExperimentConfig& c) { return c.member; }}
#define WIDTHS_FIELD(name, member)                                          \
  Field{name,                                                               \
        [](ExperimentConfig& c, std::string_view v) {                       \
          c.member = to_widths(name, v);                                    \
        },                                                                  \
        [](const ExperimentConfig& c) { return join(c.member); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"dataset",
            [](ExperimentConfig& c, std::string_view v) {
              if (v == "synthetic") {
                c.dataset = DatasetKind::kSynthetic;
              } else if (v == "idx") {
                c.dataset = DatasetKind::kIdx;
              } else {
                bad_value("dataset", "synthetic|idx", v);
              }
            },
            [](const ExperimentConfig& c) {
              return std::string(c.dataset == DatasetKind::kIdx ? "idx"
                                                                : "synthetic");
            }},
      SIZE_FIELD("classes", mixture.n_classes),
      SIZE_FIELD("per_class", mixture.per_class),
      SIZE_FIELD("dim", mixture.dim),
      REAL_FIELD("radius", mixture.radius),
      REAL_FIELD("sigma", mixture.sigma),
      SIZE_FIELD("holdout_per_class", holdout_per_class),
      STRING_FIELD("idx_images", idx_images),
      STRING_FIELD("idx_labels", idx_labels),
      STRING_FIELD("idx_holdout_images", idx_holdout_images),
      STRING_FIELD("idx_holdout_labels", idx_holdout_labels),
      REAL_FIELD("holdout_fraction", holdout_fraction),
      SIZE_FIELD("n_clients", federation.n_clients),
      SIZE_FIELD("k_selected", federation.k_selected),
      Field{"strategy",
            [](ExperimentConfig& c, std::string_view v) {
              try {
                c.federation.strategy = fed::parse_sync_strategy(v);
              } catch (const ConfigError&) {
                bad_value("strategy", "dg|g|d|none", v);
              }
            },
            [](const ExperimentConfig& c) {
              return std::string(fed::to_string(c.federation.strategy));
            }},
      SIZE_FIELD("rounds", federation.rounds),
      SIZE_FIELD("batch_size", federation.batch_size),
      REAL_FIELD("lr", federation.adam.lr),
      REAL_FIELD("beta1", federation.adam.beta1),
      REAL_FIELD("beta2", federation.adam.beta2),
      REAL_FIELD("eps", federation.adam.eps),
      Field{"g_loss",
            [](ExperimentConfig& c, std::string_view v) {
              if (v == "saturating") {
                c.federation.g_loss = cgan::GLoss::kSaturating;
              } else if (v == "nonsaturating") {
                c.federation.g_loss = cgan::GLoss::kNonSaturating;
              } else {
                bad_value("g_loss", "saturating|nonsaturating", v);
              }
            },
            [](const ExperimentConfig& c) {
              return std::string(c.federation.g_loss ==
                                         cgan::GLoss::kSaturating
                                     ? "saturating"
                                     : "nonsaturating");
            }},
      BOOL_FIELD("keep_optimizer_state", federation.keep_optimizer_state),
      BOOL_FIELD("weighted_fusion", federation.weighted_fusion),
      Field{"client_init",
            [](ExperimentConfig& c, std::string_view v) {
              c.federation.client_init = fed::parse_client_init(v);
            },
            [](const ExperimentConfig& c) {
              return std::string(fed::to_string(c.federation.client_init));
            }},
      SIZE_FIELD("threads", federation.threads),
      Field{"seed",
            [](ExperimentConfig& c, std::string_view v) {
              c.federation.seed = to_u64("seed", v);
            },
            [](const ExperimentConfig& c) {
              return std::to_string(c.federation.seed);
            }},
      SIZE_FIELD("latent_dim", latent_dim),
      WIDTHS_FIELD("gen_hidden", gen_hidden),
      WIDTHS_FIELD("disc_hidden", disc_hidden),
      REAL_FIELD("leaky_slope", leaky_slope),
      Field{"partition",
            [](ExperimentConfig& c, std::string_view v) {
              if (v == "iid") {
                c.partition = PartitionMode::kIid;
              } else if (v == "noniid") {
                c.partition = PartitionMode::kNonIid;
              } else {
                bad_value("partition", "iid|noniid", v);
              }
            },
            [](const ExperimentConfig& c) {
              return std::string(c.partition == PartitionMode::kIid ? "iid"
                                                                    : "noniid");
            }},
      REAL_FIELD("iid_fraction", iid_fraction),
      REAL_FIELD("skewness", skewness),
      Field{"leftover_split",
            [](ExperimentConfig& c, std::string_view v) {
              if (v == "random") {
                c.leftover_split = data::LeftoverSplit::kRandom;
              } else if (v == "even") {
                c.leftover_split = data::LeftoverSplit::kEven;
              } else {
                bad_value("leftover_split", "random|even", v);
              }
            },
            [](const ExperimentConfig& c) {
              return std::string(c.leftover_split == data::LeftoverSplit::kEven
                                     ? "even"
                                     : "random");
            }},
      SIZE_FIELD("metric_n", metric_n),
      Field{"oracle_min_accuracy",
            [](ExperimentConfig& c, std::string_view v) {
              c.oracle_min_accuracy = to_real("oracle_min_accuracy", v);
            },
            [](const ExperimentConfig& c) {
              return format_double(c.oracle_threshold());
            }},
      WIDTHS_FIELD("oracle_hidden", oracle_hidden),
      SIZE_FIELD("oracle_min_epochs", oracle_min_epochs),
      SIZE_FIELD("oracle_max_epochs", oracle_max_epochs),
      REAL_FIELD("oracle_lr", oracle_lr),
      STRING_FIELD("output", output),
  };
  return table;
}

#undef SIZE_FIELD
#undef REAL_FIELD
#undef BOOL_FIELD
#undef STRING_FIELD
#undef WIDTHS_FIELD

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown key '" + std::string(key) + "'");
}

void parse_into(ExperimentConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key=value, got '" + std::string(line) +
                        "'");
    }
    apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void check_widths(std::string_view key, const std::vector<std::size_t>& w) {
  if (w.empty() ||
      std::any_of(w.begin(), w.end(), [](std::size_t x) { return x == 0; })) {
    throw ConfigError(std::string(key) + ": widths must be >= 1");
  }
}

ExperimentSummary summarize(const std::vector<fed::RoundRecord>& history) {
  ExperimentSummary s;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.best_score = s.min_emd = s.final_score = s.final_emd = nan;
  for (const auto& r : history) {
    if (std::isnan(s.best_score) || r.score > s.best_score) {
      s.best_score = r.score;
    }
    if (std::isnan(s.min_emd) || r.emd < s.min_emd) s.min_emd = r.emd;
    s.total_wall_s += r.wall_s;
  }
  if (!history.empty()) {
    s.final_score = history.back().score;
    s.final_emd = history.back().emd;
  }
  s.optimal_round = fed::optimal_round(history);
  return s;
}

template <typename Job>
void run_pool(std::size_t jobs, std::size_t threads, const Job& job) {
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      try {
        job(j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(threads, jobs));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

double ExperimentConfig::oracle_threshold() const {
  if (oracle_min_accuracy) return *oracle_min_accuracy;
  return dataset == DatasetKind::kIdx ? 0.99 : 0.97;
}

std::string ExperimentConfig::partition_descriptor() const {
  if (partition == PartitionMode::kIid) {
    return "iid:" + format_double(iid_fraction);
  }
  return "noniid:" + format_double(skewness);
}

metrics::OracleConfig ExperimentConfig::oracle_config() const {
  metrics::OracleConfig oc;
  oc.hidden = oracle_hidden;
  oc.lr = oracle_lr;
  oc.batch_size = federation.batch_size;
  oc.min_epochs = oracle_min_epochs;
  oc.max_epochs = oracle_max_epochs;
  oc.min_accuracy = oracle_threshold();
  oc.seed = derive_seed(seed(), kOracleTag);
  return oc;
}

cgan::GanShape ExperimentConfig::gan_shape(std::size_t data_dim,
                                           std::size_t n_classes) const {
  cgan::GanShape shape;
  shape.data_dim = data_dim;
  shape.n_classes = n_classes;
  shape.latent_dim = latent_dim;
  shape.gen_hidden = gen_hidden;
  shape.disc_hidden = disc_hidden;
  shape.leaky_slope = leaky_slope;
  return shape;
}

void ExperimentConfig::validate() const {
  federation.validate();
  if (latent_dim < 1) throw ConfigError("latent_dim: must be >= 1");
  check_widths("gen_hidden", gen_hidden);
  check_widths("disc_hidden", disc_hidden);
  check_widths("oracle_hidden", oracle_hidden);
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    throw ConfigError("leaky_slope: must lie in (0,1)");
  }
  if (metric_n < 1) throw ConfigError("metric_n: must be >= 1");
  if (partition == PartitionMode::kIid) {
    if (!(iid_fraction > 0.0 && iid_fraction <= 1.0)) {
      throw ConfigError("iid_fraction: must lie in (0,1]");
    }
  } else {
    if (!(skewness > 0.5 && skewness <= 1.0)) {
      throw ConfigError("skewness: p must lie in (0.5,1] for noniid");
    }
    if (federation.n_clients < 2) {
      throw ConfigError("n_clients: noniid partition needs at least 2");
    }
  }
  const double threshold = oracle_threshold();
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("oracle_min_accuracy: must lie in [0,1]");
  }
  if (!(oracle_lr > 0.0)) throw ConfigError("oracle_lr: must be > 0");
  if (dataset == DatasetKind::kSynthetic) {
    if (mixture.n_classes < 2) throw ConfigError("classes: must be >= 2");
    if (mixture.per_class < 1) throw ConfigError("per_class: must be >= 1");
    if (mixture.dim < 2) throw ConfigError("dim: must be >= 2");
    if (!(mixture.radius > 0.0 && mixture.radius <= 0.9)) {
      throw ConfigError("radius: must lie in (0,0.9]");
    }
    if (!(mixture.sigma > 0.0)) throw ConfigError("sigma: must be > 0");
    if (holdout_per_class < 1) {
      throw ConfigError("holdout_per_class: must be >= 1");
    }
  } else {
    if (idx_images.empty() || idx_labels.empty()) {
      throw ConfigError("idx_images/idx_labels: required when dataset=idx");
    }
    if (idx_holdout_images.empty() != idx_holdout_labels.empty()) {
      throw ConfigError(
          "idx_holdout_images/idx_holdout_labels: give both or neither");
    }
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
      throw ConfigError("holdout_fraction: must lie in (0,1)");
    }
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

void apply_setting(ExperimentConfig& config, std::string_view key,
                   std::string_view value) {
  find_field(key).set(config, value);
}

std::string get_setting(const ExperimentConfig& config, std::string_view key) {
  return find_field(key).get(config);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  parse_into(config, text);
  config.validate();
  return config;
}

ExperimentConfig resolve_config(
    std::string_view file_text, const char* env_seed,
    std::span<const std::pair<std::string, std::string>> overrides) {
  ExperimentConfig config;
  parse_into(config, file_text);
  if (env_seed != nullptr && *env_seed != '\0') {
    try {
      apply_setting(config, "seed", trim(env_seed));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("FEDGAN_SEED: ") + e.what());
    }
  }
  for (const auto& [key, value] : overrides) {
    apply_setting(config, key, value);
  }
  config.validate();
  return config;
}

std::string render_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    if (f.key == "oracle_min_accuracy" && !config.oracle_min_accuracy) continue;
    out += f.key + "=" + f.get(config) + "\n";
  }
  return out;
}

std::pair<data::LabeledDataset, data::LabeledDataset> load_datasets(
    const ExperimentConfig& config) {
  if (config.dataset == DatasetKind::kSynthetic) {
    data::MixtureSpec holdout_spec = config.mixture;
    holdout_spec.per_class = config.holdout_per_class;
    return {data::gen_gaussian_mixture(config.mixture, config.seed()),
            data::gen_gaussian_mixture(
                holdout_spec, derive_seed(config.seed(), kHoldoutTag))};
  }
  data::LabeledDataset full =
      data::load_idx(config.idx_images, config.idx_labels);
  if (!config.idx_holdout_images.empty()) {
    data::LabeledDataset holdout = data::load_idx(config.idx_holdout_images,
                                                  config.idx_holdout_labels);
    const std::size_t classes = std::max(full.n_classes, holdout.n_classes);
    full.n_classes = holdout.n_classes = classes;
    return {std::move(full), std::move(holdout)};
  }
  std::vector<std::size_t> order(full.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_stream(derive_seed(config.seed(), kSplitTag), Stream::kData);
  std::shuffle(order.begin(), order.end(), rng);
  const auto cut = static_cast<std::size_t>(
      std::llround(config.holdout_fraction * static_cast<double>(full.size())));
  if (cut == 0 || cut >= full.size()) {
    throw ConfigError("holdout_fraction: leaves an empty train or holdout set");
  }
  std::span<const std::size_t> all(order);
  auto holdout_idx = all.subspan(0, cut);
  auto train_idx = all.subspan(cut);
  std::vector<std::size_t> h(holdout_idx.begin(), holdout_idx.end());
  std::vector<std::size_t> t(train_idx.begin(), train_idx.end());
  std::sort(h.begin(), h.end());
  std::sort(t.begin(), t.end());
  return {full.subset(t), full.subset(h)};
}

std::vector<data::LabeledDataset> make_shards(
    const ExperimentConfig& config, const data::LabeledDataset& train) {
  const std::uint64_t seed = derive_seed(config.seed(), kPartitionTag);
  const std::size_t k = config.federation.n_clients;
  if (config.partition == PartitionMode::kIid) {
    return data::partition_iid(train, k, config.iid_fraction, seed);
  }
  return data::partition_noniid(train, k, config.skewness, seed,
                                config.leftover_split);
}

PreparedExperiment prepare_experiment(const ExperimentConfig& config) {
  config.validate();
  PreparedExperiment prep;
  std::tie(prep.train, prep.holdout) = load_datasets(config);
  prep.train.validate();
  prep.holdout.validate();
  prep.shards = make_shards(config, prep.train);
  prep.shape = config.gan_shape(prep.train.dim(), prep.train.n_classes);
  prep.metrics.oracle =
      metrics::train_oracle(prep.train, prep.holdout, config.oracle_config());
  Rng real_rng = make_stream(config.seed(), Stream::kMetric, {0});
  prep.metrics.real = metrics::real_sample(prep.metrics.oracle, prep.holdout,
                                           config.metric_n, real_rng);
  return prep;
}

ExperimentResult run_prepared(const PreparedExperiment& prep,
                              const ExperimentConfig& config) {
  config.validate();
  fed::Federation fed =
      fed::make_federation(config.federation, prep.shape, prep.shards);
  const std::uint64_t seed = config.seed();
  const metrics::MetricContext& ctx = prep.metrics;
  fed::Evaluator evaluate = [&ctx, seed](const cgan::GanModel& model,
                                         std::size_t round) {
    Rng rng = make_stream(seed, Stream::kMetric, {round});
    return ctx.evaluate(model, rng);
  };
  auto training = fed::run_training(fed, config.federation, evaluate);
  ExperimentResult result;
  result.history = std::move(training.history);
  result.summary = summarize(result.history);
  result.oracle_accuracy = ctx.oracle.holdout_accuracy;
  result.central = std::move(training.central.model);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const PreparedExperiment prep = prepare_experiment(config);
  ExperimentResult result = run_prepared(prep, config);
  if (!config.output.empty()) {
    write_file_atomic(config.output, render_csv(config, result));
  }
  return result;
}

std::string render_csv(const ExperimentConfig& config,
                       const ExperimentResult& result) {
  std::ostringstream out;
  const std::string tail =
      "," + std::string(fed::to_string(config.federation.strategy)) + "," +
      std::to_string(config.federation.n_clients) + "," +
      std::to_string(config.federation.k_selected) + "," +
      config.partition_descriptor() + "," + std::to_string(config.seed()) +
      ",";
  out << kCsvHeader << '\n';
  for (const auto& r : result.history) {
    out << r.round << ',' << format_double(r.score) << ','
        << format_double(r.emd) << tail << format_double(r.wall_s) << '\n';
  }
  const auto& s = result.summary;
  out << "optimal_round="
      << (s.optimal_round ? std::to_string(*s.optimal_round) : "none") << ','
      << format_double(s.best_score) << ',' << format_double(s.min_emd) << tail
      << format_double(s.total_wall_s) << '\n';
  return out.str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

Comparison compare_strategies(const ExperimentConfig& base,
                              std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ConfigError("compare: at least one seed required");
  base.validate();
  const std::size_t threads = base.federation.threads;
  const std::size_t n_seeds = seeds.size();
  const std::size_t n_strats = fed::kAllStrategies.size();

  std::vector<ExperimentConfig> seed_configs(n_seeds, base);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    seed_configs[s].federation.seed = seeds[s];
    // Parallelism is spent across runs, not inside them.
    seed_configs[s].federation.threads = 1;
  }
  std::vector<PreparedExperiment> prepared(n_seeds);
  run_pool(n_seeds, threads, [&](std::size_t s) {
    prepared[s] = prepare_experiment(seed_configs[s]);
  });

  std::vector<ExperimentSummary> finals(n_seeds * n_strats);
  run_pool(n_seeds * n_strats, threads, [&](std::size_t job) {
    const std::size_t s = job / n_strats;
    ExperimentConfig cfg = seed_configs[s];
    cfg.federation.strategy = fed::kAllStrategies[job % n_strats];
    finals[job] = run_prepared(prepared[s], cfg).summary;
  });

  Comparison cmp;
  cmp.seeds.assign(seeds.begin(), seeds.end());
  for (std::size_t i = 0; i < n_strats; ++i) {
    StrategyRow row;
    row.strategy = fed::kAllStrategies[i];
    for (std::size_t s = 0; s < n_seeds; ++s) {
      row.final_scores.push_back(finals[s * n_strats + i].final_score);
      row.final_emds.push_back(finals[s * n_strats + i].final_emd);
      for (std::size_t j = 0; j < n_strats; ++j) {
        if (finals[s * n_strats + i].final_score >
            finals[s * n_strats + j].final_score) {
          ++row.wins[j];
        }
      }
    }
    row.median_score = median(row.final_scores);
    row.median_emd = median(row.final_emds);
    cmp.rows.push_back(std::move(row));
  }
  return cmp;
}

std::string render_comparison_csv(const Comparison& cmp) {
  std::ostringstream out;
  out << "strategy,median_score,median_emd";
  for (auto s : fed::kAllStrategies) out << ",wins_vs_" << fed::to_string(s);
  out << ",seeds\n";
  std::string seed_list;
  for (std::size_t i = 0; i < cmp.seeds.size(); ++i) {
    if (i) seed_list += ';';
    seed_list += std::to_string(cmp.seeds[i]);
  }
  for (const auto& row : cmp.rows) {
    out << fed::to_string(row.strategy) << ',' << format_double(row.median_score)
        << ',' << format_double(row.median_emd);
    for (auto w : row.wins) out << ',' << w;
    out << ',' << seed_list << '\n';
  }
  return out.str();
}

data::CountMatrix partition_report(const ExperimentConfig& config) {
  config.validate();
  auto [train, holdout] = load_datasets(config);
  const auto shards = make_shards(config, train);
  return data::skewness_report(shards);
}

GradcheckReport gradcheck_suite(std::uint64_t seed, std::size_t instances) {
  GradcheckReport report;
  report.instances = instances;
  Rng rng = make_stream(seed, Stream::kInit, {0xc4ec});
  std::uniform_int_distribution<std::size_t> small(2, 4);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t i = 0; i < instances; ++i) {
    cgan::GanShape shape;
    shape.data_dim = small(rng);
    shape.n_classes = small(rng);
    shape.latent_dim = small(rng);
    shape.gen_hidden = {small(rng) + 2, small(rng) + 2};
    shape.disc_hidden = {small(rng) + 2, small(rng) + 2};
    const cgan::GanModel model = cgan::make_model(shape, rng);
    const std::size_t m = small(rng) + 2;
    cgan::Batch real;
    real.x = nn::Matrix::NullaryExpr(
        static_cast<Eigen::Index>(m),
        static_cast<Eigen::Index>(shape.data_dim), [&] { return unit(rng); });
    std::uniform_int_distribution<int> label(
        0, static_cast<int>(shape.n_classes) - 1);
    for (std::size_t r = 0; r < m; ++r) real.y.push_back(label(rng));
    const cgan::Latent latent =
        cgan::sample_latent(rng, m, shape.latent_dim, shape.n_classes);

    const auto gd = cgan::d_gradient(model, real, latent);
    report.max_error_d = std::max(
        report.max_error_d,
        nn::grad_check(
            [&](const nn::ParamVector& p) {
              cgan::GanModel probe = model;
              probe.disc_params = p;
              return cgan::d_objective(probe, real, latent);
            },
            model.disc_params, gd.grads));

    const auto gg = cgan::g_gradient(model, latent);
    report.max_error_g = std::max(
        report.max_error_g,
        nn::grad_check(
            [&](const nn::ParamVector& p) {
              cgan::GanModel probe = model;
              probe.gen_params = p;
              return cgan::g_objective(probe, latent);
            },
            model.gen_params, gg.grads));

    // Plain MLP with a softmax head under a random linear functional.
    nn::MlpArch arch{{shape.data_dim, shape.gen_hidden[0], shape.n_classes},
                     0.2, nn::OutputActivation::kSoftmax};
    const nn::ParamVector params = nn::init_params(arch, rng);
    const nn::Matrix weights = nn::Matrix::NullaryExpr(
        static_cast<Eigen::Index>(m),
        static_cast<Eigen::Index>(shape.n_classes), [&] { return unit(rng); });
    auto pass = nn::forward(arch, params, real.x);
    auto back = nn::backward(arch, params, pass.cache, weights);
    report.max_error_mlp = std::max(
        report.max_error_mlp,
        nn::grad_check(
            [&](const nn::ParamVector& p) {
              return nn::predict(arch, p, real.x).cwiseProduct(weights).sum();
            },
            params, back.grads));
  }
  return report;
}

}  // namespace fedgan::harness
