#include "beas/protocol.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <numeric>

#include "beas/dp.hpp"
#include "beas/error.hpp"
#include "beas/robust_aggregation.hpp"

namespace beas::protocol {

namespace {

// Stream ids for derive_seed; client streams are offset by the client index.
constexpr std::uint64_t kGenesisStream = 1;
constexpr std::uint64_t kClientStreamBase = 0x10000;

}  // namespace

std::vector<nn::Dataset> partition_dataset(const nn::Dataset& data,
                                           std::size_t n, double alpha,
                                           Rng& rng) {
  if (n < 1) throw ConfigError("partition needs at least one client");
  if (!(alpha > 0.0)) throw ConfigError("dirichlet_alpha must be > 0");
  if (data.size() < n) {
    throw ConfigError("dataset has " + std::to_string(data.size()) +
                      " rows, fewer than " + std::to_string(n) + " clients");
  }

  std::vector<std::vector<std::size_t>> by_class(data.num_classes());
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_class[static_cast<std::size_t>(data.label(i))].push_back(i);
  }

  std::vector<std::vector<std::size_t>> owned(n);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> share(n);
  for (auto& rows : by_class) {
    if (rows.empty()) continue;
    std::shuffle(rows.begin(), rows.end(), rng);
    double total = 0.0;
    for (auto& s : share) {
      s = gamma(rng);
      total += s;
    }
    if (!(total > 0.0)) {
      // Every draw underflowed (tiny alpha): the whole class goes to one client.
      std::fill(share.begin(), share.end(), 0.0);
      share[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = 1.0;
      total = 1.0;
    }
    double cum = 0.0;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < n; ++k) {
      cum += share[k] / total;
      const std::size_t end =
          k + 1 == n ? rows.size()
                     : std::min(rows.size(), static_cast<std::size_t>(std::llround(
                                                 cum * static_cast<double>(rows.size()))));
      for (std::size_t r = begin; r < end; ++r) owned[k].push_back(rows[r]);
      begin = std::max(begin, end);
    }
  }

  for (auto& mine : owned) {
    if (!mine.empty()) continue;
    auto largest = std::max_element(
        owned.begin(), owned.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    mine.push_back(largest->back());
    largest->pop_back();
  }

  std::vector<nn::Dataset> out;
  out.reserve(n);
  for (auto& mine : owned) {
    std::shuffle(mine.begin(), mine.end(), rng);
    out.push_back(data.subset(mine));
  }
  return out;
}

std::vector<nn::Dataset> make_shards(const nn::Dataset& data, std::size_t c) {
  if (c < 1) throw ConfigError("cluster size c must be >= 1");
  std::vector<nn::Dataset> out;
  if (data.empty()) return out;
  const std::size_t k = (data.size() + c - 1) / c;
  const std::size_t base = data.size() / k;
  const std::size_t extra = data.size() % k;
  std::vector<std::size_t> idx;
  std::size_t start = 0;
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t len = base + (s < extra ? 1 : 0);
    idx.resize(len);
    std::iota(idx.begin(), idx.end(), start);
    out.push_back(data.subset(idx));
    start += len;
  }
  return out;
}

std::string behavior_name(const Behavior& b) {
  if (std::holds_alternative<LabelFlipper>(b)) return "label_flip";
  if (std::holds_alternative<Backdoor>(b)) return "backdoor";
  return "honest";
}

ClientState::ClientState(ledger::Identity identity, nn::Dataset data,
                         std::size_t c, Behavior behavior, std::uint64_t seed)
    : identity_(std::move(identity)),
      data_(std::move(data)),
      shards_(make_shards(data_, c)),
      order_(shards_.size()),
      behavior_(std::move(behavior)),
      rng_(seed) {
  if (data_.empty()) throw InvalidInput("client has no data");
  std::iota(order_.begin(), order_.end(), 0);
}

const nn::Dataset& ClientState::next_cluster() {
  if (cursor_ == order_.size()) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }
  return shards_[order_[cursor_++]];
}

Simulation::Simulation(const SimulationSetup& setup)
    : network_(setup.seed),
      hp_(setup.hyperparams),
      fg_history_(setup.hyperparams.defense.fg_history_rounds),
      test_(setup.test),
      attack_start_round_(setup.attack_start_round),
      record_wallclock_(setup.record_wallclock) {
  setup.spec.validate();
  hp_.dp.validate();
  if (hp_.t < 1) throw ConfigError("t must be >= 1");
  if (hp_.c < 1) throw ConfigError("c must be >= 1");
  if (hp_.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(hp_.lr > 0.0)) throw ConfigError("lr must be > 0");
  if (hp_.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (setup.client_data.empty()) throw ConfigError("simulation needs clients");
  if (setup.behaviors.size() != setup.client_data.size()) {
    throw ConfigError("one behavior per client required");
  }
  if (test_.empty()) throw ConfigError("simulation needs a test set");

  for (std::size_t i = 0; i < setup.client_data.size(); ++i) {
    if (setup.client_data[i].input_dim() != setup.spec.input_dim() ||
        setup.client_data[i].num_classes() != setup.spec.num_classes()) {
      throw ConfigError("client data does not match the model shape");
    }
    if (const auto* bd = std::get_if<Backdoor>(&setup.behaviors[i])) {
      bd->spec.validate(setup.spec.input_dim(), setup.spec.num_classes());
      if (!backdoor_eval_) backdoor_eval_ = bd->spec;
    }
    clients_.emplace_back(network_.register_identity(), setup.client_data[i],
                          static_cast<std::size_t>(hp_.c), setup.behaviors[i],
                          derive_seed(setup.seed, kClientStreamBase + i));
  }
  live_.assign(clients_.size(), true);
  peer_.emplace(network_.register_identity());

  Rng init = make_rng(setup.seed, kGenesisStream);
  auto genesis = nn::ModelParams::glorot(setup.spec, init);
  if (setup.genesis_epochs > 0) {
    nn::TrainOptions opts;
    opts.epochs = setup.genesis_epochs;
    opts.lr = hp_.lr;
    opts.batch_size = static_cast<std::size_t>(hp_.batch_size);
    genesis = nn::local_train(genesis, clients_[0].data(), opts).params;
  }
  channel_ = &network_.create_channel(
      setup.channel_id, ledger::ChannelDescriptor{setup.spec, hp_},
      clients_[0].identity(), genesis);
}

std::size_t Simulation::live_clients() const {
  return static_cast<std::size_t>(std::count(live_.begin(), live_.end(), true));
}

void Simulation::remove_client(const ClientId& id) {
  for (std::size_t i = 0; i < clients_.size(); ++i) {
    if (clients_[i].id() == id) live_[i] = false;
  }
}

nn::Evaluation Simulation::evaluate_global() const {
  return nn::evaluate(channel_->global_model(), test_);
}

std::optional<double> Simulation::backdoor_accuracy() const {
  if (!backdoor_eval_) return std::nullopt;
  return attacks::backdoor_accuracy(channel_->global_model(), test_,
                                    *backdoor_eval_);
}

std::optional<nn::GradientVector> Simulation::client_update(
    ClientState& client, const nn::ModelParams& global, RoundReport& report) {
  nn::TrainOptions opts;
  opts.epochs = static_cast<int>(hp_.epochs);
  opts.lr = hp_.lr;
  opts.batch_size = static_cast<std::size_t>(hp_.batch_size);
  const bool attacking = client.adversarial() && round_ >= attack_start_round_;

  try {
    const nn::Dataset& cluster = client.next_cluster();
    nn::GradientVector update;
    if (!attacking) {
      update = nn::local_train(global, cluster, opts).update;
      report.max_cluster_rows = std::max(report.max_cluster_rows, cluster.size());
      report.max_epochs = std::max(report.max_epochs, opts.epochs);
    } else if (const auto* flip = std::get_if<LabelFlipper>(&client.behavior())) {
      const auto poisoned =
          flip->swap ? attacks::label_swap(cluster, flip->c_src, flip->c_target)
                     : attacks::label_flip(cluster, flip->c_src, flip->c_target);
      update = nn::local_train(global, poisoned, opts).update;
    } else {
      const auto& spec = std::get<Backdoor>(client.behavior()).spec;
      const auto benign = nn::local_train(global, cluster, opts).update;
      auto cs = attacks::constrain_and_scale(global, cluster, spec, benign,
                                             opts.batch_size);
      if (cs.aborted) {
        spdlog::warn("client {} backdoor training diverged; sending honest update",
                     client.id().short_hex());
      }
      update = std::move(cs.update);
    }
    return dp::apply_policy(update, hp_.dp, client.rng());
  } catch (const Error& e) {
    spdlog::warn("client {} skipped in round {}: {}", client.id().short_hex(),
                 round_, e.what());
    report.failed.push_back(client.id());
    return std::nullopt;
  }
}

RoundReport Simulation::run_round() {
  const auto started = std::chrono::steady_clock::now();
  ++round_;
  RoundReport report;
  report.round = round_;

  const nn::ModelParams global = channel_->global_model();
  for (std::size_t i = 0; i < clients_.size(); ++i) {
    if (!live_[i]) continue;
    auto& client = clients_[i];
    auto update = client_update(client, global, report);
    if (!update) continue;
    auto block = ledger::make_local_block(client.identity(), channel_->id(), round_,
                                          client.data().size(), *update);
    const auto endorsement = channel_->submit_local_block(std::move(block));
    if (!endorsement.accepted) {
      spdlog::warn("block from {} not endorsed: {}", client.id().short_hex(),
                   endorsement.reason);
      report.failed.push_back(client.id());
      continue;
    }
    report.submitted.push_back(client.id());
  }
  channel_->order_and_commit();

  if (maybe_merge(report)) {
    const auto eval = evaluate_global();
    report.accuracy = eval.accuracy;
    report.loss = eval.loss;
    report.backdoor_accuracy = backdoor_accuracy();
  }
  if (record_wallclock_) {
    report.wallclock_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - started)
                              .count();
  }
  return report;
}

std::optional<std::size_t> Simulation::maybe_merge(RoundReport& report) {
  const auto queued_span = channel_->unmerged_locals();
  const std::vector<std::size_t> queued(queued_span.begin(), queued_span.end());
  if (queued.size() < hp_.t) return std::nullopt;

  std::vector<agg::Update> updates;
  updates.reserve(queued.size());
  const auto fingerprint = channel_->spec().fingerprint();
  for (auto idx : queued) {
    const auto& b = channel_->block(idx);
    updates.push_back({b.creator, b.round, nn::GradientVector(b.payload, fingerprint),
                       b.n_k});
  }

  const auto& defense = hp_.defense;
  const std::size_t n = updates.size();
  if (defense.use_multikrum && 2 * defense.f + 2 >= n) {
    spdlog::warn("merge deferred in round {}: multi-krum needs 2f + 2 < n "
                 "(f = {}, n = {})",
                 round_, defense.f, n);
    report.deferred = true;
    return std::nullopt;
  }

  agg::Selection sel;
  if (defense.use_multikrum) {
    sel = agg::multikrum_select(updates, defense.f);
  } else {
    sel.selected.resize(n);
    std::iota(sel.selected.begin(), sel.selected.end(), 0);
    sel.scores.assign(n, 0.0);
  }

  std::map<ClientId, double> fg;
  if (defense.use_foolsgold) {
    for (const auto& u : updates) fg_history_.accumulate(u.client, u.round, u.delta);
    std::vector<ClientId> ids;
    for (const auto& u : updates) ids.push_back(u.client);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    fg = agg::foolsgold_weights(fg_history_, ids, defense.fg_confidence);
  }

  std::vector<agg::Update> survivors;
  for (auto i : sel.selected) survivors.push_back(updates[i]);
  const auto weights = agg::effective_weights(survivors, fg, defense.n_k_cap);

  ledger::MergeRecord record;
  record.aborted = weights.empty();
  std::vector<double> weight_at(n, 0.0);
  if (!record.aborted) {
    for (std::size_t k = 0; k < sel.selected.size(); ++k) {
      weight_at[sel.selected[k]] = weights[k];
    }
  }
  std::vector<bool> selected(n, false);
  for (auto i : sel.selected) selected[i] = true;
  for (std::size_t i = 0; i < n; ++i) {
    ledger::MergeEntry e;
    e.block_index = queued[i];
    e.client = updates[i].client;
    e.round = updates[i].round;
    e.selected = selected[i];
    e.score = sel.scores[i];
    const auto it = fg.find(updates[i].client);
    e.fg_weight = it == fg.end() ? 1.0 : it->second;
    e.weight = weight_at[i];
    record.entries.push_back(e);
  }

  nn::ModelParams next = channel_->global_model();
  if (!record.aborted) {
    next = *agg::federated_average(survivors, fg, next, defense.n_k_cap);
  } else {
    spdlog::warn("merge in round {} carried no weight; previous global kept", round_);
  }

  for (auto i : sel.rejected) report.rejected.push_back(updates[i].client);
  report.blocks_merged = sel.selected.size();
  report.blocks_rejected = sel.rejected.size();
  report.fg_weights = fg;
  report.fg_min_weight = 1.0;
  for (const auto& [id, w] : fg) report.fg_min_weight = std::min(report.fg_min_weight, w);
  report.aborted = record.aborted;

  const auto index = channel_->commit_global(next, std::move(record), *peer_, round_);
  report.merged = true;
  report.global_block = index;
  return index;
}

ExperimentResult run_experiment(Simulation& sim, std::uint64_t rounds,
                                std::optional<double> target_accuracy) {
  ExperimentResult result;
  result.genesis = sim.evaluate_global();
  result.genesis_backdoor = sim.backdoor_accuracy();
  for (std::uint64_t r = 0; r < rounds; ++r) {
    result.rounds.push_back(sim.run_round());
    const auto& rep = result.rounds.back();
    if (target_accuracy && rep.merged && rep.accuracy >= *target_accuracy) {
      result.reached_target = true;
      break;
    }
  }
  result.final_model = sim.channel().global_model();
  return result;
}

}  // namespace beas::protocol
