#pragma once

#include <cstddef>
#include <vector>

#include "beas/nn/dataset.hpp"
#include "beas/nn/model.hpp"

namespace beas::nn {

struct ForwardResult {
  RowMatrix logits;  // batch_size x num_classes
  double loss = 0.0;  // mean cross-entropy
};

// Throws InvalidInput on dimension or label mismatch.
ForwardResult forward(const ModelParams& model, const Batch& batch);

// Gradient of the mean batch cross-entropy with respect to every parameter,
// in the flat parameter order. Throws NumericError naming the first layer
// whose pre-activations overflow.
GradientVector compute_gradients(const ModelParams& model, const Batch& batch);

// Gradients for soft (probability-vector) targets, including the gradient
// with respect to the inputs and to the target probabilities themselves.
// Gradient-matching attacks differentiate through this.
struct SoftGradients {
  double loss = 0.0;
  GradientVector params;
  RowMatrix inputs;   // d loss / d inputs
  RowMatrix targets;  // d loss / d target probabilities
};
SoftGradients compute_soft_gradients(const ModelParams& model,
                                     const RowMatrix& inputs,
                                     const RowMatrix& targets);

// values - lr * grad. lr must be positive.
ModelParams sgd_step(const ModelParams& model, const GradientVector& grad,
                     double lr);

struct TrainOptions {
  int epochs = 1;
  double lr = 0.1;
  std::size_t batch_size = 32;
  // Record the full-cluster loss after every epoch (one extra forward pass).
  bool track_loss = false;
};

struct TrainResult {
  ModelParams params;
  GradientVector update;  // params - start
  std::vector<double> epoch_losses;
  std::size_t examples_seen = 0;
};

// Mini-batch SGD over the cluster in row order, `epochs` passes. The update
// is the raw parameter delta; privacy transforms are applied by the caller.
TrainResult local_train(const ModelParams& start, const Dataset& cluster,
                        const TrainOptions& options);

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
};

Evaluation evaluate(const ModelParams& model, const Dataset& data);

// Predicted class per row (ties resolve to the lowest class index).
std::vector<int> predict(const ModelParams& model, const Dataset& data);

}  // namespace beas::nn
