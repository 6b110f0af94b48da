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

#ifndef FEDGAN_FEDERATION_HPP_
#define FEDGAN_FEDERATION_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fedgan/cgan.hpp"
#include "fedgan/data.hpp"
#include "fedgan/metrics.hpp"
#include "fedgan/nn.hpp"
#include "fedgan/rng.hpp"

// Round engine for federated cGAN training: client selection, one local epoch
// per selected client, uniform weight averaging into the central model and
// strategy-dependent sync-back.
namespace fedgan::fed {

// Which central networks are copied back to every client after fusion.
enum class SyncStrategy { kSyncDAndG, kSyncG, kSyncD, kSyncNone };

inline constexpr std::array<SyncStrategy, 4> kAllStrategies{
    SyncStrategy::kSyncDAndG, SyncStrategy::kSyncG, SyncStrategy::kSyncD,
    SyncStrategy::kSyncNone};

// "dg" | "g" | "d" | "none".
std::string_view to_string(SyncStrategy strategy);
SyncStrategy parse_sync_strategy(std::string_view text);

// Starting weights of client networks. kSynced copies the central network
// when the strategy syncs it and draws a per-client init otherwise.
enum class ClientInit { kSynced, kShared, kIndependent };

// "synced" | "shared" | "independent".
std::string_view to_string(ClientInit init);
ClientInit parse_client_init(std::string_view text);

constexpr bool syncs_generator(SyncStrategy s) {
  return s == SyncStrategy::kSyncDAndG || s == SyncStrategy::kSyncG;
}
constexpr bool syncs_discriminator(SyncStrategy s) {
  return s == SyncStrategy::kSyncDAndG || s == SyncStrategy::kSyncD;
}

struct ClientState {
  std::size_t id = 0;
  data::LabeledDataset shard;
  cgan::GanModel model;
  nn::AdamState adam_d;
  nn::AdamState adam_g;
};

struct CentralState {
  cgan::GanModel model;
  std::size_t round = 0;
};

struct FederationConfig {
  std::size_t n_clients = 2;
  std::size_t k_selected = 2;
  SyncStrategy strategy = SyncStrategy::kSyncDAndG;
  std::size_t rounds = 60;
  std::size_t batch_size = 64;
  nn::AdamHyper adam;
  cgan::GLoss g_loss = cgan::GLoss::kSaturating;
  // Keep Adam moments when sync overwrites a network.
  bool keep_optimizer_state = false;
  // Weight client contributions by shard size instead of 1/K.
  bool weighted_fusion = false;
  ClientInit client_init = ClientInit::kSynced;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
};

// K distinct ids drawn uniformly without replacement, ascending.
std::vector<std::size_t> select_clients(std::size_t n, std::size_t k,
                                        Rng& rng);

// Coordinate-wise mean accumulated in input order. Identical inputs return
// the input bit-for-bit. Throws FusionError naming the first divergent layer.
nn::ParamVector fedavg(std::span<const nn::ParamVector> sets);
// Weighted mean; weights must be positive.
nn::ParamVector fedavg(std::span<const nn::ParamVector> sets,
                       std::span<const double> weights);

struct Contribution {
  std::size_t client_id = 0;
  const nn::ParamVector* params = nullptr;
};

// Sorts by client id before averaging so the result is independent of the
// order contributions arrive in.
nn::ParamVector fedavg(std::vector<Contribution> contributions);

// Copies the central networks selected by `strategy` into every client and
// zeroes the matching Adam state unless keep_optimizer_state.
void synchronize(const CentralState& central, std::span<ClientState> clients,
                 SyncStrategy strategy, bool keep_optimizer_state = false);

struct RoundRecord {
  std::size_t round = 0;
  double score = 0.0;
  double emd = 0.0;
  double wall_s = 0.0;
  std::vector<std::size_t> selected;
};

// Metric hook evaluated on the central model after each round.
using Evaluator =
    std::function<metrics::RoundMetrics(const cgan::GanModel&, std::size_t)>;

struct Federation {
  CentralState central;
  std::vector<ClientState> clients;
};

// Central model from the init stream; client networks per client_init.
// One shard per client.
Federation make_federation(const FederationConfig& config,
                           const cgan::GanShape& shape,
                           std::vector<data::LabeledDataset> shards);

// One communication round. Local epochs run on scratch copies; a failing
// client aborts the round before anything is fused or committed.
RoundRecord run_round(Federation& fed, const FederationConfig& config,
                      std::size_t round_index, const Evaluator& evaluate = {});

struct TrainingResult {
  std::vector<RoundRecord> history;
  CentralState central;
  // Round with the lowest EMD; empty without metrics or rounds.
  std::optional<std::size_t> optimal_round;
};

std::optional<std::size_t> optimal_round(std::span<const RoundRecord> history);

TrainingResult run_training(Federation& fed, const FederationConfig& config,
                            const Evaluator& evaluate = {});

}  // namespace fedgan::fed

#endif  // FEDGAN_FEDERATION_HPP_
