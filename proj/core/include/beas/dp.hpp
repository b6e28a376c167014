#pragma once

#include <string_view>

#include "beas/nn/model.hpp"
#include "beas/rng.hpp"

namespace beas::dp {

enum class Mode { kNone, kGaussianNoise, kValueClip, kNormClip, kPrune };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

// Obfuscation applied to an update before it leaves the client. Exactly one
// mode is active; parameters of the other modes are ignored.
struct Policy {
  Mode mode = Mode::kNone;
  double sigma = 0.0;       // gaussian_noise: per-coordinate std-dev
  double clip_bound = 1.0;  // value_clip / norm_clip
  double sparsity = 0.0;    // prune: fraction of coordinates zeroed, [0, 1)

  // Throws ConfigError for out-of-range parameters of the active mode.
  void validate() const;
};

enum class ClipMode { kValue, kNorm };

// g_i + N(0, sigma^2) per coordinate, drawn in index order from rng.
nn::GradientVector add_gaussian_noise(const nn::GradientVector& g, double sigma,
                                      Rng& rng);

// kValue clamps each coordinate to [-bound, bound]; kNorm rescales by
// min(1, bound / ||g||_2).
nn::GradientVector clip(const nn::GradientVector& g, double bound,
                        ClipMode mode);

// Zeros the floor(sparsity * len) coordinates of smallest magnitude. Equal
// magnitudes are pruned lower index first; survivors keep their exact value.
nn::GradientVector prune(const nn::GradientVector& g, double sparsity);

nn::GradientVector apply_policy(const nn::GradientVector& g,
                                const Policy& policy, Rng& rng);

}  // namespace beas::dp
