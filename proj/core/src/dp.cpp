#include "beas/dp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "beas/error.hpp"

namespace beas::dp {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kNone:
      return "none";
    case Mode::kGaussianNoise:
      return "gaussian_noise";
    case Mode::kValueClip:
      return "value_clip";
    case Mode::kNormClip:
      return "norm_clip";
    case Mode::kPrune:
      return "prune";
  }
  return "none";
}

Mode mode_from_string(std::string_view name) {
  if (name == "none") return Mode::kNone;
  if (name == "gaussian_noise") return Mode::kGaussianNoise;
  if (name == "value_clip") return Mode::kValueClip;
  if (name == "norm_clip") return Mode::kNormClip;
  if (name == "prune") return Mode::kPrune;
  throw ConfigError("unknown dp mode '" + std::string(name) + "'");
}

void Policy::validate() const {
  switch (mode) {
    case Mode::kNone:
      break;
    case Mode::kGaussianNoise:
      if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("dp.sigma must be >= 0");
      }
      break;
    case Mode::kValueClip:
    case Mode::kNormClip:
      if (!(clip_bound > 0.0) || !std::isfinite(clip_bound)) {
        throw ConfigError("dp.clip_bound must be > 0");
      }
      break;
    case Mode::kPrune:
      if (!(sparsity >= 0.0 && sparsity < 1.0)) {
        throw ConfigError("dp.sparsity must lie in [0, 1)");
      }
      break;
  }
}

nn::GradientVector add_gaussian_noise(const nn::GradientVector& g, double sigma,
                                      Rng& rng) {
  if (!(sigma >= 0.0)) throw InvalidInput("sigma must be >= 0");
  if (sigma == 0.0) return g;
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> out(g.values().begin(), g.values().end());
  for (double& v : out) v += noise(rng);
  return {std::move(out), g.fingerprint()};
}

nn::GradientVector clip(const nn::GradientVector& g, double bound,
                        ClipMode mode) {
  if (!(bound > 0.0)) throw InvalidInput("clip bound must be > 0");
  if (mode == ClipMode::kNorm) {
    const double norm = g.l2_norm();
    if (norm <= bound) return g;
    return g.scaled(bound / norm);
  }
  std::vector<double> out(g.values().begin(), g.values().end());
  for (double& v : out) v = std::clamp(v, -bound, bound);
  return {std::move(out), g.fingerprint()};
}

nn::GradientVector prune(const nn::GradientVector& g, double sparsity) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) {
    throw InvalidInput("sparsity must lie in [0, 1)");
  }
  const auto values = g.values();
  const auto k = static_cast<std::size_t>(
      std::floor(sparsity * static_cast<double>(values.size())));
  if (k == 0) return g;

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto smaller = [&values](std::size_t a, std::size_t b) {
    const double ma = std::abs(values[a]);
    const double mb = std::abs(values[b]);
    return ma < mb || (ma == mb && a < b);
  };
  std::nth_element(order.begin(),
                   order.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   order.end(), smaller);

  std::vector<double> out(values.begin(), values.end());
  for (std::size_t i = 0; i < k; ++i) out[order[i]] = 0.0;
  return {std::move(out), g.fingerprint()};
}

nn::GradientVector apply_policy(const nn::GradientVector& g,
                                const Policy& policy, Rng& rng) {
  switch (policy.mode) {
    case Mode::kNone:
      return g;
    case Mode::kGaussianNoise:
      return add_gaussian_noise(g, policy.sigma, rng);
    case Mode::kValueClip:
      return clip(g, policy.clip_bound, ClipMode::kValue);
    case Mode::kNormClip:
      return clip(g, policy.clip_bound, ClipMode::kNorm);
    case Mode::kPrune:
      return prune(g, policy.sparsity);
  }
  return g;
}

}  // namespace beas::dp
