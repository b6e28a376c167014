#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "beas/client_id.hpp"
#include "beas/nn/model.hpp"

namespace beas::agg {

// One client's shared update as seen by the merge stage.
struct Update {
  ClientId client;
  std::uint64_t round = 0;
  nn::GradientVector delta;
  std::uint64_t n_k = 1;  // self-reported dataset size
};

// Total order used for every deterministic tie-break: client id, then round.
inline bool key_less(const Update& a, const Update& b) {
  return a.client != b.client ? a.client < b.client : a.round < b.round;
}

// Throws InvalidInput unless fingerprints agree, n_k >= 1 and no
// (client, round) pair repeats.
void validate_update_set(std::span<const Update> updates);

struct DefensePolicy {
  bool use_multikrum = false;
  std::size_t f = 0;  // byzantine bound; requires 2f + 2 < n at each merge
  bool use_foolsgold = false;
  std::size_t fg_history_rounds = 0;  // 0 keeps the whole history
  double fg_confidence = 1.0;         // logit scale (kappa)
  std::uint64_t n_k_cap = std::numeric_limits<std::uint64_t>::max();
};

// Throws ConfigError naming the violated bound when 2f + 2 >= n.
void check_byzantine_bound(std::size_t n, std::size_t f);

// Squared Euclidean distance summed over the n - f - 2 nearest other updates.
// Returned in input order. Neighbour ties resolve by ascending (client, round).
std::vector<double> multikrum_scores(std::span<const Update> updates,
                                     std::size_t f);

struct Selection {
  std::vector<std::size_t> selected;  // input positions, ascending
  std::vector<std::size_t> rejected;  // input positions, ascending
  std::vector<double> scores;         // input order
};

// Keeps the n - f updates with the lowest scores.
Selection multikrum_select(std::span<const Update> updates, std::size_t f);

// Per-client sum of every update the client has shared, optionally limited to
// the most recent `window_rounds` rounds.
class FgHistory {
 public:
  explicit FgHistory(std::size_t window_rounds = 0)
      : window_rounds_(window_rounds) {}

  void accumulate(const ClientId& client, std::uint64_t round,
                  const nn::GradientVector& update);

  // Accumulated vector, or nullopt for a client never seen.
  std::optional<nn::GradientVector> accumulated(const ClientId& client) const;
  std::size_t size() const { return clients_.size(); }

 private:
  struct Entry {
    std::vector<double> sum;
    std::uint64_t fingerprint = 0;
    std::deque<std::pair<std::uint64_t, std::vector<double>>> recent;
  };
  std::size_t window_rounds_;
  std::map<ClientId, Entry> clients_;
};

// FoolsGold weights in [0, 1] from pairwise cosine similarity of accumulated
// updates: max-similarity, pardoning, 1 - maxsim, rescale by the max weight,
// logit squash, clamp. Unknown or zero-norm accumulators count as cosine 0.
std::map<ClientId, double> foolsgold_weights(const FgHistory& history,
                                             std::span<const ClientId> ids,
                                             double confidence = 1.0);

// Effective weight of each update: min(n_k, cap) * fg_weight (1 when absent
// from fg_weights), normalized to sum 1. Empty if every weight is zero.
std::vector<double> effective_weights(
    std::span<const Update> updates,
    const std::map<ClientId, double>& fg_weights,
    std::uint64_t n_k_cap = std::numeric_limits<std::uint64_t>::max());

// base + sum_k w_k * update_k, or nullopt when no update carries weight.
std::optional<nn::ModelParams> federated_average(
    std::span<const Update> updates,
    const std::map<ClientId, double>& fg_weights, const nn::ModelParams& base,
    std::uint64_t n_k_cap = std::numeric_limits<std::uint64_t>::max());

}  // namespace beas::agg
