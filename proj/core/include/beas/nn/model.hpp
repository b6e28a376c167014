#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beas/rng.hpp"

namespace beas::nn {

enum class Activation : std::uint8_t { kRelu = 0, kSigmoid = 1, kTanh = 2 };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

// Dense classifier architecture: layer widths from input to output, one
// nonlinearity shared by the hidden layers, softmax + cross-entropy on top.
struct ModelSpec {
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::kRelu;

  // Throws InvalidInput unless there are >= 2 layers of width >= 1.
  void validate() const;

  std::size_t num_weight_layers() const { return layer_sizes.size() - 1; }
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  std::size_t parameter_count() const;

  // Stable 64-bit hash of (layer sizes, activation). Two vectors may only be
  // combined when their fingerprints agree.
  std::uint64_t fingerprint() const;

  bool operator==(const ModelSpec&) const = default;
};

// Where each weight layer lives inside the flat parameter vector. Layout is
// layer-major; within a layer the (out x in) weight matrix comes first in
// row-major order, followed by the out biases.
struct LayerSlice {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::vector<LayerSlice> layer_layout(const ModelSpec& spec);

// Flat sequence of finite reals tagged with the fingerprint of the model it
// belongs to. This is the unit clients exchange, perturb and average.
class GradientVector {
 public:
  GradientVector() = default;
  GradientVector(std::vector<double> values, std::uint64_t fingerprint);

  static GradientVector zeros(const ModelSpec& spec);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  // Moves the storage out; the vector is left empty.
  std::vector<double> release() && { return std::move(values_); }

  double l2_norm() const;
  double linf_norm() const;
  bool compatible_with(const GradientVector& other) const {
    return fingerprint_ == other.fingerprint_ && size() == other.size();
  }

  GradientVector scaled(double factor) const;

  bool operator==(const GradientVector&) const = default;

 private:
  std::vector<double> values_;
  std::uint64_t fingerprint_ = 0;
};

// Model weights. The value vector always matches the spec's parameter count
// and holds only finite values.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(ModelSpec spec, std::vector<double> values);

  // Glorot-uniform weights, zero biases.
  static ModelParams glorot(const ModelSpec& spec, Rng& rng);
  static ModelParams zeros(const ModelSpec& spec);

  const ModelSpec& spec() const { return spec_; }
  std::span<const double> values() const { return values_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  // The parameters viewed as a shareable vector.
  GradientVector as_vector() const { return {values_, fingerprint_}; }

  // this + delta.
  ModelParams plus(const GradientVector& delta) const;
  // this - base, the update a client shares.
  GradientVector minus(const ModelParams& base) const;

  bool operator==(const ModelParams& o) const {
    return spec_ == o.spec_ && values_ == o.values_;
  }

 private:
  ModelSpec spec_;
  std::vector<double> values_;
  std::uint64_t fingerprint_ = 0;
};

}  // namespace beas::nn
