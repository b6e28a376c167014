#include "beas/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "beas/error.hpp"

namespace beas::nn {
namespace {

using ConstWeights = Eigen::Map<const RowMatrix>;
using ConstBias = Eigen::Map<const Eigen::VectorXd>;

// Either hard class labels or a matrix of target probabilities.
struct Targets {
  std::span<const int> labels;
  const RowMatrix* soft = nullptr;
};

struct Pass {
  double loss = 0.0;
  RowMatrix logits;
};

void check_input(const ModelSpec& spec, Eigen::Index cols) {
  if (static_cast<std::size_t>(cols) != spec.input_dim()) {
    throw InvalidInput("input width " + std::to_string(cols) +
                       " does not match model input " +
                       std::to_string(spec.input_dim()));
  }
}

void apply_activation(Activation a, RowMatrix& z) {
  switch (a) {
    case Activation::kRelu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::kSigmoid:
      z = (1.0 + (-z.array()).exp()).inverse().matrix();
      break;
    case Activation::kTanh:
      z = z.array().tanh().matrix();
      break;
  }
}

// Multiplies d in place by the activation derivative, expressed through the
// post-activation values a.
void activation_backward(Activation act, const RowMatrix& a, RowMatrix& d) {
  switch (act) {
    case Activation::kRelu:
      d = (a.array() > 0.0).select(d, 0.0);
      break;
    case Activation::kSigmoid:
      d = (d.array() * a.array() * (1.0 - a.array())).matrix();
      break;
    case Activation::kTanh:
      d = (d.array() * (1.0 - a.array().square())).matrix();
      break;
  }
}

// Forward pass, optional backward pass. grad (if non-empty) receives the flat
// parameter gradient; dinputs / dtargets (if non-null) the gradients with
// respect to the inputs and soft targets.
Pass run(const ModelSpec& spec, std::span<const double> params,
         const RowMatrix& inputs, const Targets& targets,
         std::span<double> grad, RowMatrix* dinputs, RowMatrix* dtargets) {
  check_input(spec, inputs.cols());
  const auto layout = layer_layout(spec);
  const auto num_layers = layout.size();
  const Eigen::Index rows = inputs.rows();
  if (rows == 0) throw InvalidInput("empty batch");
  const auto classes = static_cast<Eigen::Index>(spec.num_classes());

  if (targets.soft == nullptr) {
    if (targets.labels.size() != static_cast<std::size_t>(rows)) {
      throw InvalidInput("label count does not match batch rows");
    }
    for (int l : targets.labels) {
      if (l < 0 || l >= classes) {
        throw InvalidInput("label " + std::to_string(l) +
                           " outside model output range");
      }
    }
  } else if (targets.soft->rows() != rows || targets.soft->cols() != classes) {
    throw InvalidInput("soft target shape does not match batch");
  }

  // acts[l] is the input to weight layer l; acts[0] aliases the batch.
  std::vector<RowMatrix> acts(num_layers);
  RowMatrix logits;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const auto& s = layout[l];
    ConstWeights w(params.data() + s.weight_offset,
                   static_cast<Eigen::Index>(s.out),
                   static_cast<Eigen::Index>(s.in));
    ConstBias b(params.data() + s.bias_offset, static_cast<Eigen::Index>(s.out));
    const RowMatrix& prev = l == 0 ? inputs : acts[l];
    RowMatrix z = prev * w.transpose();
    z.rowwise() += b.transpose();
    if (!z.allFinite()) {
      throw NumericError("non-finite pre-activation in layer " +
                             std::to_string(l),
                         static_cast<int>(l));
    }
    if (l + 1 < num_layers) {
      apply_activation(spec.activation, z);
      acts[l + 1] = std::move(z);
    } else {
      logits = std::move(z);
    }
  }

  // Numerically stable softmax: subtract the row max before exponentiating.
  RowMatrix probs(rows, classes);
  Eigen::VectorXd lse(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double m = logits.row(i).maxCoeff();
    probs.row(i) = (logits.row(i).array() - m).exp().matrix();
    const double sum = probs.row(i).sum();
    probs.row(i) /= sum;
    lse(i) = m + std::log(sum);
  }

  double loss = 0.0;
  if (targets.soft == nullptr) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      loss += lse(i) - logits(i, targets.labels[static_cast<std::size_t>(i)]);
    }
  } else {
    for (Eigen::Index i = 0; i < rows; ++i) {
      loss += (targets.soft->row(i).array() *
               (lse(i) - logits.row(i).array()))
                  .sum();
    }
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);
  loss *= inv_rows;
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite loss",
                       static_cast<int>(num_layers) - 1);
  }

  if (dtargets != nullptr) {
    *dtargets = RowMatrix(rows, classes);
    for (Eigen::Index i = 0; i < rows; ++i) {
      dtargets->row(i) = (lse(i) - logits.row(i).array()).matrix() * inv_rows;
    }
  }

  if (grad.empty() && dinputs == nullptr) return {loss, std::move(logits)};

  RowMatrix delta = probs;
  if (targets.soft == nullptr) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      delta(i, targets.labels[static_cast<std::size_t>(i)]) -= 1.0;
    }
  } else {
    delta -= *targets.soft;
  }
  delta *= inv_rows;

  for (std::size_t li = num_layers; li-- > 0;) {
    const auto& s = layout[li];
    const RowMatrix& prev = li == 0 ? inputs : acts[li];
    ConstWeights w(params.data() + s.weight_offset,
                   static_cast<Eigen::Index>(s.out),
                   static_cast<Eigen::Index>(s.in));
    if (!grad.empty()) {
      Eigen::Map<RowMatrix> gw(grad.data() + s.weight_offset,
                               static_cast<Eigen::Index>(s.out),
                               static_cast<Eigen::Index>(s.in));
      gw.noalias() = delta.transpose() * prev;
      Eigen::Map<Eigen::VectorXd> gb(grad.data() + s.bias_offset,
                                     static_cast<Eigen::Index>(s.out));
      gb = delta.colwise().sum().transpose();
    }
    if (li == 0) {
      if (dinputs != nullptr) *dinputs = delta * w;
      break;
    }
    RowMatrix upstream = delta * w;
    activation_backward(spec.activation, acts[li], upstream);
    delta = std::move(upstream);
  }

  if (!grad.empty()) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
      if (!std::isfinite(grad[i])) {
        // Locate the layer owning the offending coordinate.
        int layer = 0;
        for (std::size_t l = 0; l < layout.size(); ++l) {
          if (i >= layout[l].weight_offset) layer = static_cast<int>(l);
        }
        throw NumericError("non-finite gradient in layer " +
                               std::to_string(layer),
                           layer);
      }
    }
  }
  return {loss, std::move(logits)};
}

}  // namespace

ForwardResult forward(const ModelParams& model, const Batch& batch) {
  auto pass = run(model.spec(), model.values(), batch.inputs,
                  Targets{batch.labels, nullptr}, {}, nullptr, nullptr);
  return {std::move(pass.logits), pass.loss};
}

GradientVector compute_gradients(const ModelParams& model,
                                 const Batch& batch) {
  std::vector<double> grad(model.values().size(), 0.0);
  run(model.spec(), model.values(), batch.inputs,
      Targets{batch.labels, nullptr}, grad, nullptr, nullptr);
  return {std::move(grad), model.fingerprint()};
}

SoftGradients compute_soft_gradients(const ModelParams& model,
                                     const RowMatrix& inputs,
                                     const RowMatrix& targets) {
  SoftGradients out;
  std::vector<double> grad(model.values().size(), 0.0);
  auto pass = run(model.spec(), model.values(), inputs,
                  Targets{{}, &targets}, grad, &out.inputs, &out.targets);
  out.loss = pass.loss;
  out.params = GradientVector(std::move(grad), model.fingerprint());
  return out;
}

ModelParams sgd_step(const ModelParams& model, const GradientVector& grad,
                     double lr) {
  if (!(lr > 0.0)) throw InvalidInput("learning rate must be positive");
  if (grad.fingerprint() != model.fingerprint() ||
      grad.size() != model.values().size()) {
    throw InvalidInput("gradient fingerprint does not match model");
  }
  std::vector<double> values(model.values().begin(), model.values().end());
  auto g = grad.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * g[i];
  return {model.spec(), std::move(values)};
}

TrainResult local_train(const ModelParams& start, const Dataset& cluster,
                        const TrainOptions& options) {
  if (options.epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (cluster.empty()) throw InvalidInput("training cluster is empty");
  if (options.lr < 0.0) throw InvalidInput("learning rate must be >= 0");

  const auto& spec = start.spec();
  const auto batches = cluster.batches(options.batch_size);
  std::vector<double> weights(start.values().begin(), start.values().end());
  std::vector<double> grad(weights.size());

  TrainResult result;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (const auto& batch : batches) {
      std::fill(grad.begin(), grad.end(), 0.0);
      run(spec, weights, batch.inputs, Targets{batch.labels, nullptr}, grad,
          nullptr, nullptr);
      for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] -= options.lr * grad[i];
      }
      result.examples_seen += batch.size();
    }
    if (options.track_loss) {
      const auto all = cluster.as_batch();
      result.epoch_losses.push_back(
          run(spec, weights, all.inputs, Targets{all.labels, nullptr}, {},
              nullptr, nullptr)
              .loss);
    }
  }
  result.params = ModelParams(spec, std::move(weights));
  result.update = result.params.minus(start);
  return result;
}

namespace {

constexpr std::size_t kEvalChunk = 1024;

}  // namespace

Evaluation evaluate(const ModelParams& model, const Dataset& data) {
  if (data.empty()) throw InvalidInput("cannot evaluate on an empty dataset");
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (const auto& batch : data.batches(kEvalChunk)) {
    auto pass = run(model.spec(), model.values(), batch.inputs,
                    Targets{batch.labels, nullptr}, {}, nullptr, nullptr);
    loss_sum += pass.loss * static_cast<double>(batch.size());
    for (Eigen::Index i = 0; i < pass.logits.rows(); ++i) {
      Eigen::Index arg = 0;
      pass.logits.row(i).maxCoeff(&arg);
      if (arg == batch.labels[static_cast<std::size_t>(i)]) ++correct;
    }
  }
  const auto n = static_cast<double>(data.size());
  return {static_cast<double>(correct) / n, loss_sum / n};
}

std::vector<int> predict(const ModelParams& model, const Dataset& data) {
  std::vector<int> out;
  out.reserve(data.size());
  for (const auto& batch : data.batches(kEvalChunk)) {
    auto pass = run(model.spec(), model.values(), batch.inputs,
                    Targets{batch.labels, nullptr}, {}, nullptr, nullptr);
    for (Eigen::Index i = 0; i < pass.logits.rows(); ++i) {
      Eigen::Index arg = 0;
      pass.logits.row(i).maxCoeff(&arg);
      out.push_back(static_cast<int>(arg));
    }
  }
  return out;
}

}  // namespace beas::nn
