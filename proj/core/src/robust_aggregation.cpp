#include "beas/robust_aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "beas/error.hpp"

namespace beas::agg {

void validate_update_set(std::span<const Update> updates) {
  std::set<std::pair<ClientId, std::uint64_t>> seen;
  for (const auto& u : updates) {
    if (!updates.front().delta.compatible_with(u.delta)) {
      throw InvalidInput("update set mixes model fingerprints");
    }
    if (u.n_k < 1) throw InvalidInput("n_k must be >= 1");
    if (!seen.emplace(u.client, u.round).second) {
      throw InvalidInput("client " + u.client.short_hex() +
                         " submitted twice in round " +
                         std::to_string(u.round));
    }
  }
}

void check_byzantine_bound(std::size_t n, std::size_t f) {
  if (2 * f + 2 >= n) {
    throw ConfigError("multi-krum requires 2f + 2 < n, got f = " +
                      std::to_string(f) + ", n = " + std::to_string(n));
  }
}

namespace {

double squared_distance(const nn::GradientVector& a,
                        const nn::GradientVector& b) {
  auto x = a.values();
  auto y = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<double> multikrum_scores(std::span<const Update> updates,
                                     std::size_t f) {
  const std::size_t n = updates.size();
  check_byzantine_bound(n, f);
  validate_update_set(updates);

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = squared_distance(updates[i].delta, updates[j].delta);
      dist[i * n + j] = d;
      dist[j * n + i] = d;
    }
  }

  const std::size_t neighbours = n - f - 2;
  std::vector<double> scores(n, 0.0);
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < n; ++i) {
    others.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back(j);
    }
    std::sort(others.begin(), others.end(),
              [&](std::size_t a, std::size_t b) {
                const double da = dist[i * n + a];
                const double db = dist[i * n + b];
                if (da != db) return da < db;
                return key_less(updates[a], updates[b]);
              });
    double s = 0.0;
    for (std::size_t k = 0; k < neighbours; ++k) s += dist[i * n + others[k]];
    scores[i] = s;
  }
  return scores;
}

Selection multikrum_select(std::span<const Update> updates, std::size_t f) {
  Selection out;
  out.scores = multikrum_scores(updates, f);
  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (out.scores[a] != out.scores[b]) return out.scores[a] < out.scores[b];
    return key_less(updates[a], updates[b]);
  });
  const std::size_t keep = updates.size() - f;
  out.selected.assign(order.begin(),
                      order.begin() + static_cast<std::ptrdiff_t>(keep));
  out.rejected.assign(order.begin() + static_cast<std::ptrdiff_t>(keep),
                      order.end());
  std::sort(out.selected.begin(), out.selected.end());
  std::sort(out.rejected.begin(), out.rejected.end());
  return out;
}

void FgHistory::accumulate(const ClientId& client, std::uint64_t round,
                           const nn::GradientVector& update) {
  auto& e = clients_[client];
  if (e.sum.empty()) {
    e.sum.assign(update.size(), 0.0);
    e.fingerprint = update.fingerprint();
  } else if (e.fingerprint != update.fingerprint() ||
             e.sum.size() != update.size()) {
    throw InvalidInput("foolsgold history fingerprint mismatch for client " +
                       client.short_hex());
  }
  auto v = update.values();
  if (window_rounds_ == 0) {
    for (std::size_t i = 0; i < v.size(); ++i) e.sum[i] += v[i];
    return;
  }
  e.recent.emplace_back(round, std::vector<double>(v.begin(), v.end()));
  while (!e.recent.empty() && e.recent.front().first + window_rounds_ <= round) {
    e.recent.pop_front();
  }
  std::fill(e.sum.begin(), e.sum.end(), 0.0);
  for (const auto& [r, vec] : e.recent) {
    for (std::size_t i = 0; i < vec.size(); ++i) e.sum[i] += vec[i];
  }
}

std::optional<nn::GradientVector> FgHistory::accumulated(
    const ClientId& client) const {
  auto it = clients_.find(client);
  if (it == clients_.end()) return std::nullopt;
  return nn::GradientVector(it->second.sum, it->second.fingerprint);
}

std::map<ClientId, double> foolsgold_weights(const FgHistory& history,
                                             std::span<const ClientId> ids,
                                             double confidence) {
  const std::size_t n = ids.size();
  std::map<ClientId, double> out;
  if (n == 0) return out;
  if (n == 1) {
    out[ids[0]] = 1.0;
    return out;
  }

  std::vector<std::optional<nn::GradientVector>> acc(n);
  std::vector<double> norms(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] = history.accumulated(ids[i]);
    if (acc[i]) norms[i] = acc[i]->l2_norm();
  }

  // Pairwise cosine similarity with the diagonal removed.
  std::vector<double> cs(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double c = 0.0;
      if (norms[i] > 0.0 && norms[j] > 0.0 &&
          acc[i]->compatible_with(*acc[j])) {
        auto a = acc[i]->values();
        auto b = acc[j]->values();
        double dot = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
        c = dot / (norms[i] * norms[j]);
      }
      cs[i * n + j] = c;
      cs[j * n + i] = c;
    }
  }

  auto row_max = [&](std::size_t i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) m = std::max(m, cs[i * n + j]);
    }
    return m;
  };

  std::vector<double> maxcs(n);
  for (std::size_t i = 0; i < n; ++i) maxcs[i] = row_max(i);

  // Pardoning: honest clients that happen to resemble a sybil get their
  // similarity scaled down by the ratio of max similarities.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (maxcs[i] < maxcs[j] && maxcs[j] > 0.0) {
        cs[i * n + j] *= maxcs[i] / maxcs[j];
      }
    }
  }

  std::vector<double> wv(n);
  for (std::size_t i = 0; i < n; ++i) {
    wv[i] = std::clamp(1.0 - row_max(i), 0.0, 1.0);
  }
  const double top = *std::max_element(wv.begin(), wv.end());
  for (std::size_t i = 0; i < n; ++i) {
    double w = 0.0;
    if (top > 0.0) {
      w = wv[i] / top;
      if (w >= 1.0) w = 0.99;
      if (w <= 0.0) {
        w = 0.0;  // logit(0) = -inf, clamped below
      } else {
        w = confidence * (std::log(w / (1.0 - w)) + 0.5);
        w = std::clamp(w, 0.0, 1.0);
      }
    }
    out[ids[i]] = w;
  }
  return out;
}

std::vector<double> effective_weights(
    std::span<const Update> updates,
    const std::map<ClientId, double>& fg_weights, std::uint64_t n_k_cap) {
  std::vector<double> w(updates.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < updates.size(); ++i) {
    const auto& u = updates[i];
    auto it = fg_weights.find(u.client);
    const double fg = it == fg_weights.end() ? 1.0 : it->second;
    w[i] = static_cast<double>(std::min(u.n_k, n_k_cap)) * fg;
    total += w[i];
  }
  if (!(total > 0.0)) return {};
  for (double& x : w) x /= total;
  return w;
}

std::optional<nn::ModelParams> federated_average(
    std::span<const Update> updates,
    const std::map<ClientId, double>& fg_weights, const nn::ModelParams& base,
    std::uint64_t n_k_cap) {
  if (updates.empty()) return std::nullopt;
  const auto weights = effective_weights(updates, fg_weights, n_k_cap);
  if (weights.empty()) return std::nullopt;

  std::vector<double> values(base.values().begin(), base.values().end());
  for (std::size_t k = 0; k < updates.size(); ++k) {
    const auto& d = updates[k].delta;
    if (d.fingerprint() != base.fingerprint() || d.size() != values.size()) {
      throw InvalidInput("update fingerprint does not match the global model");
    }
    if (weights[k] == 0.0) continue;
    auto v = d.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] += weights[k] * v[i];
    }
  }
  return nn::ModelParams(base.spec(), std::move(values));
}

}  // namespace beas::agg
