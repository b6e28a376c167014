#include "beas/harness/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "beas/error.hpp"
#include "beas/rng.hpp"

namespace beas::harness {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string() + ": cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

std::vector<std::size_t> class_sizes(std::size_t n, std::size_t classes) {
  std::vector<std::size_t> out(classes, n / classes);
  for (std::size_t k = 0; k < n % classes; ++k) ++out[k];
  return out;
}

// Labels laid out class by class, then a seeded shuffle of row order.
std::vector<int> balanced_labels(std::size_t n, std::size_t classes, Rng& rng) {
  std::vector<int> labels;
  labels.reserve(n);
  const auto sizes = class_sizes(n, classes);
  for (std::size_t k = 0; k < classes; ++k) {
    labels.insert(labels.end(), sizes[k], static_cast<int>(k));
  }
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

}  // namespace

nn::Dataset load_mnist_idx(const std::filesystem::path& images,
                           const std::filesystem::path& labels,
                           std::size_t cap) {
  if (cap == 0) throw IngestionError("mnist cap is 0; training requires data");
  const auto img = slurp(images);
  const auto lab = slurp(labels);

  if (img.size() < 16) throw IngestionError(images.string() + ": truncated header");
  if (be32(img, 0) != kImageMagic) {
    throw IngestionError(images.string() + ": bad magic, not an IDX image file");
  }
  if (lab.size() < 8) throw IngestionError(labels.string() + ": truncated header");
  if (be32(lab, 0) != kLabelMagic) {
    throw IngestionError(labels.string() + ": bad magic, not an IDX label file");
  }
  const std::size_t count = be32(img, 4);
  const std::size_t rows = be32(img, 8);
  const std::size_t cols = be32(img, 12);
  const std::size_t label_count = be32(lab, 4);
  if (count != label_count) {
    throw IngestionError(images.string() + ": holds " + std::to_string(count) +
                         " images but " + labels.string() + " holds " +
                         std::to_string(label_count) + " labels");
  }
  const std::size_t dim = rows * cols;
  if (dim == 0) throw IngestionError(images.string() + ": zero-sized images");
  if (img.size() != 16 + count * dim) {
    throw IngestionError(images.string() + ": truncated or oversized payload");
  }
  if (lab.size() != 8 + count) {
    throw IngestionError(labels.string() + ": truncated or oversized payload");
  }

  const std::size_t n = std::min(cap, count);
  std::vector<double> features(n * dim);
  std::vector<int> out_labels(n);
  for (std::size_t i = 0; i < n * dim; ++i) {
    features[i] = static_cast<double>(img[16 + i]) / 255.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto l = lab[8 + i];
    if (l > 9) {
      throw IngestionError(labels.string() + ": label " + std::to_string(l) +
                           " at row " + std::to_string(i) + " outside [0, 9]");
    }
    out_labels[i] = l;
  }
  return {dim, 10, std::move(features), std::move(out_labels)};
}

nn::Dataset generate_blobs(const BlobSpec& spec, std::uint64_t seed) {
  if (spec.n == 0 || spec.dim == 0 || spec.classes < 2) {
    throw ConfigError("blobs need n >= 1, dim >= 1, classes >= 2");
  }
  Rng rng(derive_seed(seed, 0xb10b));
  std::normal_distribution<double> normal(0.0, 1.0);

  // Orthogonal means when classes <= dim, otherwise evenly spaced on a circle
  // in the first two coordinates; neighbouring means are `separation` apart.
  std::vector<std::vector<double>> means(spec.classes, std::vector<double>(spec.dim, 0.0));
  if (spec.classes <= spec.dim) {
    for (std::size_t k = 0; k < spec.classes; ++k) {
      means[k][k] = spec.separation / std::sqrt(2.0);
    }
  } else {
    if (spec.dim < 2) throw ConfigError("blobs with classes > dim need dim >= 2");
    const double step = 2.0 * std::numbers::pi / static_cast<double>(spec.classes);
    const double radius = spec.separation / (2.0 * std::sin(step / 2.0));
    for (std::size_t k = 0; k < spec.classes; ++k) {
      means[k][0] = radius * std::cos(step * static_cast<double>(k));
      means[k][1] = radius * std::sin(step * static_cast<double>(k));
    }
  }

  const auto labels = balanced_labels(spec.n, spec.classes, rng);
  std::vector<double> features(spec.n * spec.dim);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto& m = means[static_cast<std::size_t>(labels[i])];
    for (std::size_t d = 0; d < spec.dim; ++d) {
      features[i * spec.dim + d] = m[d] + spec.noise * normal(rng);
    }
  }
  return {spec.dim, spec.classes, std::move(features), labels};
}

nn::Dataset generate_images(const ImageSpec& spec, std::uint64_t seed) {
  if (spec.n == 0 || spec.height == 0 || spec.width == 0 || spec.classes < 2) {
    throw ConfigError("images need n >= 1, height/width >= 1, classes >= 2");
  }
  if (!(spec.period > 0.0)) throw ConfigError("image stripe period must be > 0");
  Rng rng(derive_seed(seed, 0x1a6e));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  const auto labels = balanced_labels(spec.n, spec.classes, rng);
  const std::size_t dim = spec.height * spec.width;
  std::vector<double> features(spec.n * dim);
  const double k = 2.0 * std::numbers::pi / spec.period;
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double angle = static_cast<double>(labels[i]) * std::numbers::pi /
                         static_cast<double>(spec.classes);
    const double cx = std::cos(angle);
    const double sy = std::sin(angle);
    const double ph = phase(rng);
    for (std::size_t r = 0; r < spec.height; ++r) {
      for (std::size_t c = 0; c < spec.width; ++c) {
        const double u = static_cast<double>(r) * cx + static_cast<double>(c) * sy;
        const double v = 0.5 + spec.contrast * std::sin(k * u + ph) +
                         spec.noise * normal(rng);
        features[i * dim + r * spec.width + c] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return {dim, spec.classes, std::move(features), labels};
}

}  // namespace beas::harness
