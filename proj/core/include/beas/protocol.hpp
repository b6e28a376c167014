#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "beas/attacks.hpp"
#include "beas/ledger/channel.hpp"
#include "beas/nn/dataset.hpp"
#include "beas/nn/model.hpp"
#include "beas/nn/network.hpp"
#include "beas/rng.hpp"

namespace beas::protocol {

// Splits `data` over n clients: for each class the share of every client is
// drawn from Dirichlet(alpha). A client left empty takes one example from the
// largest client. Throws ConfigError if data has fewer than n rows.
std::vector<nn::Dataset> partition_dataset(const nn::Dataset& data,
                                           std::size_t n, double alpha,
                                           Rng& rng);

// Consecutive shards of near-equal size, none larger than c.
std::vector<nn::Dataset> make_shards(const nn::Dataset& data, std::size_t c);

struct Honest {};

struct LabelFlipper {
  int c_src = 0;
  int c_target = 1;
  bool swap = false;  // also relabel c_target as c_src
};

struct Backdoor {
  attacks::BackdoorSpec spec;
};

using Behavior = std::variant<Honest, LabelFlipper, Backdoor>;

std::string behavior_name(const Behavior& b);

class ClientState {
 public:
  ClientState(ledger::Identity identity, nn::Dataset data, std::size_t c,
              Behavior behavior, std::uint64_t seed);

  const ledger::Identity& identity() const { return identity_; }
  const ClientId& id() const { return identity_.id(); }
  const nn::Dataset& data() const { return data_; }
  const Behavior& behavior() const { return behavior_; }
  bool adversarial() const { return !std::holds_alternative<Honest>(behavior_); }

  std::size_t shard_count() const { return shards_.size(); }
  const nn::Dataset& shard(std::size_t i) const { return shards_.at(i); }
  std::size_t cursor() const { return cursor_; }

  // Next unused shard. After a full pass the shard order is reshuffled with
  // the client's own rng, so every example is seen before any repeats.
  const nn::Dataset& next_cluster();

  Rng& rng() { return rng_; }

 private:
  ledger::Identity identity_;
  nn::Dataset data_;
  std::vector<nn::Dataset> shards_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  Behavior behavior_;
  Rng rng_;
};

struct RoundReport {
  std::uint64_t round = 0;
  bool merged = false;
  bool deferred = false;  // threshold met but the byzantine bound was not
  std::optional<std::size_t> global_block;
  double accuracy = 0.0;
  double loss = 0.0;
  std::optional<double> backdoor_accuracy;
  std::vector<ClientId> submitted;
  std::vector<ClientId> failed;
  std::vector<ClientId> rejected;
  std::size_t blocks_merged = 0;
  std::size_t blocks_rejected = 0;
  std::map<ClientId, double> fg_weights;
  double fg_min_weight = 1.0;
  bool aborted = false;  // every update carried zero weight
  double wallclock_ms = 0.0;
  // Instrumentation for the premature-convergence guard (honest clients).
  std::size_t max_cluster_rows = 0;
  int max_epochs = 0;
};

struct SimulationSetup {
  std::string channel_id = "beas";
  nn::ModelSpec spec;
  ledger::Hyperparams hyperparams;
  std::vector<nn::Dataset> client_data;
  std::vector<Behavior> behaviors;  // one per client
  std::uint64_t attack_start_round = 1;
  nn::Dataset test;
  std::uint64_t seed = 0;
  int genesis_epochs = 0;  // pretraining of the genesis model on client 0
  bool record_wallclock = false;
};

class Simulation {
 public:
  explicit Simulation(const SimulationSetup& setup);

  // One tick: every live client pulls the global model, trains or attacks,
  // applies the privacy policy and submits; then order, commit and merge.
  RoundReport run_round();

  // Merges every queued local block once at least t are queued. Returns the
  // global block index, or nothing when below threshold or deferred.
  std::optional<std::size_t> maybe_merge(RoundReport& report);

  // Drops a client from scheduling; its committed blocks stay on chain.
  void remove_client(const ClientId& id);

  std::uint64_t round() const { return round_; }
  ledger::Network& network() { return network_; }
  ledger::Channel& channel() { return *channel_; }
  const ledger::Channel& channel() const { return *channel_; }
  const std::vector<ClientState>& clients() const { return clients_; }
  std::size_t live_clients() const;
  const nn::Dataset& test_set() const { return test_; }
  nn::Evaluation evaluate_global() const;
  std::optional<double> backdoor_accuracy() const;

 private:
  std::optional<nn::GradientVector> client_update(ClientState& client,
                                                  const nn::ModelParams& global,
                                                  RoundReport& report);

  ledger::Network network_;
  ledger::Hyperparams hp_;
  std::vector<ClientState> clients_;
  std::vector<bool> live_;
  std::optional<ledger::Identity> peer_;
  ledger::Channel* channel_ = nullptr;
  agg::FgHistory fg_history_;
  nn::Dataset test_;
  std::optional<attacks::BackdoorSpec> backdoor_eval_;
  std::uint64_t attack_start_round_;
  std::uint64_t round_ = 0;
  bool record_wallclock_;
};

struct ExperimentResult {
  nn::Evaluation genesis;
  std::optional<double> genesis_backdoor;
  std::vector<RoundReport> rounds;  // every tick, merged or not
  nn::ModelParams final_model;
  bool reached_target = false;
};

// Runs up to `rounds` ticks, stopping early once a merged global model
// reaches target_accuracy (if given).
ExperimentResult run_experiment(Simulation& sim, std::uint64_t rounds,
                                std::optional<double> target_accuracy);

}  // namespace beas::protocol
