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

#include "fedgan/federation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "fedgan/error.hpp"

namespace fedgan::fed {
namespace {

void check_fusable(std::span<const nn::ParamVector> sets) {
  if (sets.empty()) throw FusionError("fedavg: no parameter sets to fuse");
  const auto& ref = sets.front().manifest();
  for (std::size_t s = 1; s < sets.size(); ++s) {
    const auto& other = sets[s].manifest();
    const std::size_t layers = std::max(ref.size(), other.size());
    for (std::size_t l = 0; l < layers; ++l) {
      if (l >= ref.size() || l >= other.size() || !(ref[l] == other[l])) {
        throw FusionError("fedavg: manifest of set " + std::to_string(s) +
                          " diverges at layer " + std::to_string(l));
      }
    }
  }
}

void check_manifests(const CentralState& central, const ClientState& client) {
  if (!central.model.gen_params.same_manifest(client.model.gen_params) ||
      !central.model.disc_params.same_manifest(client.model.disc_params)) {
    throw FusionError("synchronize: client " + std::to_string(client.id) +
                      " manifest differs from central");
  }
}

struct Workspace {
  cgan::GanModel model;
  nn::AdamState adam_d;
  nn::AdamState adam_g;
  std::exception_ptr error;
};

void train_client(const ClientState& client, Workspace& ws,
                  const FederationConfig& config, std::size_t round_index) {
  try {
    Rng rng = make_stream(config.seed, Stream::kClient, {client.id, round_index});
    cgan::local_epoch(ws.model, client.shard, rng, ws.adam_d, ws.adam_g,
                      config.batch_size, config.g_loss);
  } catch (...) {
    ws.error = std::current_exception();
  }
}

}  // namespace

std::string_view to_string(SyncStrategy strategy) {
  switch (strategy) {
    case SyncStrategy::kSyncDAndG: return "dg";
    case SyncStrategy::kSyncG: return "g";
    case SyncStrategy::kSyncD: return "d";
    case SyncStrategy::kSyncNone: return "none";
  }
  return "none";
}

SyncStrategy parse_sync_strategy(std::string_view text) {
  for (auto s : kAllStrategies) {
    if (text == to_string(s)) return s;
  }
  throw ConfigError("unknown sync strategy '" + std::string(text) +
                    "' (expected dg|g|d|none)");
}

std::string_view to_string(ClientInit init) {
  switch (init) {
    case ClientInit::kSynced: return "synced";
    case ClientInit::kShared: return "shared";
    case ClientInit::kIndependent: return "independent";
  }
  return "synced";
}

ClientInit parse_client_init(std::string_view text) {
  for (auto i : {ClientInit::kSynced, ClientInit::kShared,
                 ClientInit::kIndependent}) {
    if (text == to_string(i)) return i;
  }
  throw ConfigError("unknown client_init '" + std::string(text) +
                    "' (expected synced|shared|independent)");
}

void FederationConfig::validate() const {
  if (n_clients < 1) throw ConfigError("n_clients: must be >= 1");
  if (k_selected < 1 || k_selected > n_clients) {
    throw ConfigError("k_selected: constraint K ≤ n violated (K=" +
                      std::to_string(k_selected) + ", n=" +
                      std::to_string(n_clients) + ")");
  }
  if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
  if (threads < 1) throw ConfigError("threads: must be >= 1");
  if (!(adam.lr > 0.0)) throw ConfigError("lr: must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) {
    throw ConfigError("beta1: must lie in [0,1)");
  }
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("beta2: must lie in [0,1)");
  }
  if (!(adam.eps > 0.0)) throw ConfigError("eps: must be > 0");
}

std::vector<std::size_t> select_clients(std::size_t n, std::size_t k,
                                        Rng& rng) {
  if (k < 1 || k > n) {
    throw ConfigError("select_clients: need 1 <= K <= n (K=" +
                      std::to_string(k) + ", n=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

nn::ParamVector fedavg(std::span<const nn::ParamVector> sets,
                       std::span<const double> weights) {
  check_fusable(sets);
  if (weights.size() != sets.size()) {
    throw FusionError("fedavg: one weight per parameter set required");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw FusionError("fedavg: weights must be positive and finite");
    }
  }
  // Running mean: mean += (w_k / W_k) * (x_k - mean). Equal inputs leave the
  // mean untouched, so fusing copies of one vector is exact.
  nn::ParamVector mean = sets.front();
  double total = weights.front();
  auto acc = mean.values();
  for (std::size_t s = 1; s < sets.size(); ++s) {
    total += weights[s];
    const double share = weights[s] / total;
    const auto x = sets[s].values();
    for (std::size_t i = 0; i < acc.size(); ++i) {
      acc[i] += share * (x[i] - acc[i]);
    }
  }
  return mean;
}

nn::ParamVector fedavg(std::span<const nn::ParamVector> sets) {
  const std::vector<double> ones(sets.size(), 1.0);
  return fedavg(sets, ones);
}

nn::ParamVector fedavg(std::vector<Contribution> contributions) {
  std::stable_sort(contributions.begin(), contributions.end(),
                   [](const Contribution& a, const Contribution& b) {
                     return a.client_id < b.client_id;
                   });
  std::vector<nn::ParamVector> sets;
  sets.reserve(contributions.size());
  for (const auto& c : contributions) {
    if (c.params == nullptr) throw FusionError("fedavg: null contribution");
    sets.push_back(*c.params);
  }
  return fedavg(std::span<const nn::ParamVector>(sets));
}

void synchronize(const CentralState& central, std::span<ClientState> clients,
                 SyncStrategy strategy, bool keep_optimizer_state) {
  for (const auto& client : clients) check_manifests(central, client);
  for (auto& client : clients) {
    if (syncs_discriminator(strategy)) {
      client.model.disc_params = central.model.disc_params;
      if (!keep_optimizer_state) client.adam_d.reset();
    }
    if (syncs_generator(strategy)) {
      client.model.gen_params = central.model.gen_params;
      if (!keep_optimizer_state) client.adam_g.reset();
    }
  }
}

Federation make_federation(const FederationConfig& config,
                           const cgan::GanShape& shape,
                           std::vector<data::LabeledDataset> shards) {
  config.validate();
  if (shards.size() != config.n_clients) {
    throw ConfigError("make_federation: " + std::to_string(shards.size()) +
                      " shards for " + std::to_string(config.n_clients) +
                      " clients");
  }
  Federation fed;
  Rng init = make_stream(config.seed, Stream::kInit, {0});
  fed.central.model = cgan::make_model(shape, init);
  fed.clients.reserve(config.n_clients);
  for (std::size_t id = 0; id < config.n_clients; ++id) {
    ClientState client;
    client.id = id;
    client.shard = std::move(shards[id]);
    client.shard.validate();
    if (client.shard.n_classes != shape.n_classes) {
      throw ConfigError("client " + std::to_string(id) +
                        " shard class count differs from model");
    }
    client.model = fed.central.model;
    if (config.client_init != ClientInit::kShared) {
      Rng own = make_stream(config.seed, Stream::kInit, {id + 1});
      const auto drawn = cgan::make_model(shape, own);
      const bool independent = config.client_init == ClientInit::kIndependent;
      if (independent || !syncs_generator(config.strategy)) {
        client.model.gen_params = drawn.gen_params;
      }
      if (independent || !syncs_discriminator(config.strategy)) {
        client.model.disc_params = drawn.disc_params;
      }
    }
    client.adam_d = nn::AdamState(client.model.disc_params.size(), config.adam);
    client.adam_g = nn::AdamState(client.model.gen_params.size(), config.adam);
    fed.clients.push_back(std::move(client));
  }
  return fed;
}

RoundRecord run_round(Federation& fed, const FederationConfig& config,
                      std::size_t round_index, const Evaluator& evaluate) {
  const auto started = std::chrono::steady_clock::now();
  Rng select_rng = make_stream(config.seed, Stream::kSelect, {round_index});
  RoundRecord record;
  record.round = round_index;
  record.selected =
      select_clients(fed.clients.size(), config.k_selected, select_rng);

  std::vector<Workspace> work(record.selected.size());
  for (std::size_t j = 0; j < work.size(); ++j) {
    const auto& client = fed.clients[record.selected[j]];
    work[j] = {client.model, client.adam_d, client.adam_g, nullptr};
  }

  const std::size_t workers = std::min(config.threads, work.size());
  if (workers <= 1) {
    for (std::size_t j = 0; j < work.size(); ++j) {
      train_client(fed.clients[record.selected[j]], work[j], config,
                   round_index);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < work.size(); j = next++) {
          train_client(fed.clients[record.selected[j]], work[j], config,
                       round_index);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& ws : work) {
    if (ws.error) std::rethrow_exception(ws.error);
  }

  std::vector<nn::ParamVector> gens;
  std::vector<nn::ParamVector> discs;
  std::vector<double> weights;
  for (std::size_t j = 0; j < work.size(); ++j) {
    gens.push_back(work[j].model.gen_params);
    discs.push_back(work[j].model.disc_params);
    weights.push_back(config.weighted_fusion
                          ? static_cast<double>(
                                fed.clients[record.selected[j]].shard.size())
                          : 1.0);
  }
  nn::ParamVector fused_g = fedavg(gens, weights);
  nn::ParamVector fused_d = fedavg(discs, weights);

  for (std::size_t j = 0; j < work.size(); ++j) {
    auto& client = fed.clients[record.selected[j]];
    client.model = std::move(work[j].model);
    client.adam_d = std::move(work[j].adam_d);
    client.adam_g = std::move(work[j].adam_g);
  }
  fed.central.model.gen_params = std::move(fused_g);
  fed.central.model.disc_params = std::move(fused_d);
  fed.central.round = round_index;
  synchronize(fed.central, fed.clients, config.strategy,
              config.keep_optimizer_state);

  if (evaluate) {
    const auto m = evaluate(fed.central.model, round_index);
    record.score = m.score;
    record.emd = m.emd;
  } else {
    record.score = std::numeric_limits<double>::quiet_NaN();
    record.emd = std::numeric_limits<double>::quiet_NaN();
  }
  record.wall_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - started)
                      .count();
  return record;
}

std::optional<std::size_t> optimal_round(std::span<const RoundRecord> history) {
  std::optional<std::size_t> best;
  double best_emd = std::numeric_limits<double>::infinity();
  for (const auto& r : history) {
    if (std::isfinite(r.emd) && r.emd < best_emd) {
      best_emd = r.emd;
      best = r.round;
    }
  }
  return best;
}

TrainingResult run_training(Federation& fed, const FederationConfig& config,
                            const Evaluator& evaluate) {
  config.validate();
  if (fed.clients.size() != config.n_clients) {
    throw ConfigError("run_training: federation has " +
                      std::to_string(fed.clients.size()) + " clients, config " +
                      std::to_string(config.n_clients));
  }
  TrainingResult result;
  for (std::size_t t = 1; t <= config.rounds; ++t) {
    result.history.push_back(run_round(fed, config, t, evaluate));
  }
  result.central = fed.central;
  result.optimal_round = optimal_round(result.history);
  return result;
}

}  // namespace fedgan::fed
