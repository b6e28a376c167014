#include "beas/nn/model.hpp"

#include <algorithm>
#include <cmath>

#include "beas/error.hpp"

namespace beas::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kTanh:
      return "tanh";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  throw InvalidInput("unknown activation '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw InvalidInput("model spec needs at least 2 layers, got " +
                       std::to_string(layer_sizes.size()));
  }
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    if (layer_sizes[i] == 0) {
      throw InvalidInput("layer " + std::to_string(i) + " has width 0");
    }
  }
}

std::size_t ModelSpec::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    n += layer_sizes[i] * layer_sizes[i + 1] + layer_sizes[i + 1];
  }
  return n;
}

std::uint64_t ModelSpec::fingerprint() const {
  // FNV-1a over little-endian widths, then the activation tag.
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  feed(layer_sizes.size());
  for (auto w : layer_sizes) feed(w);
  feed(static_cast<std::uint64_t>(activation));
  return h;
}

std::vector<LayerSlice> layer_layout(const ModelSpec& spec) {
  std::vector<LayerSlice> out;
  out.reserve(spec.num_weight_layers());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < spec.num_weight_layers(); ++l) {
    LayerSlice s;
    s.in = spec.layer_sizes[l];
    s.out = spec.layer_sizes[l + 1];
    s.weight_offset = offset;
    s.bias_offset = offset + s.in * s.out;
    offset = s.bias_offset + s.out;
    out.push_back(s);
  }
  return out;
}

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw InvalidInput(std::string(what) + " has non-finite value at index " +
                         std::to_string(i));
    }
  }
}

}  // namespace

GradientVector::GradientVector(std::vector<double> values,
                               std::uint64_t fingerprint)
    : values_(std::move(values)), fingerprint_(fingerprint) {
  require_finite(values_, "gradient vector");
}

GradientVector GradientVector::zeros(const ModelSpec& spec) {
  return {std::vector<double>(spec.parameter_count(), 0.0), spec.fingerprint()};
}

double GradientVector::l2_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

double GradientVector::linf_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

GradientVector GradientVector::scaled(double factor) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= factor;
  return {std::move(out), fingerprint_};
}

ModelParams::ModelParams(ModelSpec spec, std::vector<double> values)
    : spec_(std::move(spec)), values_(std::move(values)) {
  spec_.validate();
  if (values_.size() != spec_.parameter_count()) {
    throw InvalidInput("model params length " + std::to_string(values_.size()) +
                       " does not match spec parameter count " +
                       std::to_string(spec_.parameter_count()));
  }
  require_finite(values_, "model params");
  fingerprint_ = spec_.fingerprint();
}

ModelParams ModelParams::glorot(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<double> values(spec.parameter_count(), 0.0);
  for (const auto& layer : layer_layout(spec)) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < layer.in * layer.out; ++i) {
      values[layer.weight_offset + i] = dist(rng);
    }
  }
  return {spec, std::move(values)};
}

ModelParams ModelParams::zeros(const ModelSpec& spec) {
  spec.validate();
  return {spec, std::vector<double>(spec.parameter_count(), 0.0)};
}

ModelParams ModelParams::plus(const GradientVector& delta) const {
  if (delta.fingerprint() != fingerprint_ || delta.size() != values_.size()) {
    throw InvalidInput("update does not belong to this model spec");
  }
  std::vector<double> out(values_);
  auto d = delta.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  return {spec_, std::move(out)};
}

GradientVector ModelParams::minus(const ModelParams& base) const {
  if (base.fingerprint_ != fingerprint_) {
    throw InvalidInput("cannot subtract params of a different model spec");
  }
  std::vector<double> out(values_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= base.values_[i];
  return {std::move(out), fingerprint_};
}

}  // namespace beas::nn
