#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "beas/nn/dataset.hpp"

namespace beas::harness {

// Reads an IDX image/label pair (magic 0x00000803 / 0x00000801, big-endian
// header). Pixels are scaled to [0, 1]; at most `cap` rows are kept. Throws
// IngestionError naming the offending file, or when cap is 0.
nn::Dataset load_mnist_idx(const std::filesystem::path& images,
                           const std::filesystem::path& labels,
                           std::size_t cap);

// Gaussian clusters whose neighbouring means are `separation` apart.
struct BlobSpec {
  std::size_t n = 1000;
  std::size_t dim = 2;
  std::size_t classes = 2;
  double separation = 6.0;
  double noise = 1.0;  // per-coordinate std-dev
};

// h x w grayscale textures: class k is a sinusoidal stripe pattern at angle
// k * pi / classes with a random phase, plus pixel noise, clamped to [0, 1].
struct ImageSpec {
  std::size_t n = 1000;
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t classes = 2;
  double period = 4.0;  // stripe period in pixels
  double contrast = 0.35;
  double noise = 0.1;
};

// Both generators give every class exactly n / classes rows (the first
// n % classes classes get one more) and return the rows in shuffled order.
nn::Dataset generate_blobs(const BlobSpec& spec, std::uint64_t seed);
nn::Dataset generate_images(const ImageSpec& spec, std::uint64_t seed);

}  // namespace beas::harness
