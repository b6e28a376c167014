#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "beas/nn/dataset.hpp"
#include "beas/nn/model.hpp"
#include "beas/rng.hpp"

namespace beas::attacks {

// Relabels every c_src example as c_target; inputs untouched.
nn::Dataset label_flip(const nn::Dataset& data, int c_src, int c_target);
// Exchanges two labels in one pass (a -> b and b -> a simultaneously).
nn::Dataset label_swap(const nn::Dataset& data, int a, int b);

struct BackdoorSpec {
  std::vector<std::pair<std::size_t, double>> pattern;  // (pixel, value)
  int target_label = 0;
  double poison_fraction = 0.5;  // of each local batch
  double alpha = 1.0;            // weight of the classification loss
  double gamma = 1.0;            // submission scale
  double lr = 0.1;
  int epochs = 5;
  std::vector<int> step_schedule;  // epochs after which lr /= step_rate
  double step_rate = 2.0;
  double stop_loss = 0.0;  // early stop once backdoor loss drops below

  void validate(std::size_t input_dim, std::size_t num_classes) const;
};

// Three pixels in the top-left corner of an h x w image, set to intensity.
std::vector<std::pair<std::size_t, double>> corner_pattern(std::size_t width,
                                                          double intensity = 1.0);

// Poisons the first floor(poison_fraction * n) rows: pattern pixels
// overwritten, label set to the target. An empty pattern is a no-op.
nn::Dataset apply_pixel_pattern(const nn::Dataset& batch,
                                const BackdoorSpec& spec);

// Every row not already of the target class, with the pattern applied and
// relabelled to the target. Used to measure backdoor accuracy.
nn::Dataset backdoor_test_set(const nn::Dataset& test, const BackdoorSpec& spec);

// Fraction of backdoor_test_set classified as the target label.
double backdoor_accuracy(const nn::ModelParams& model, const nn::Dataset& test,
                         const BackdoorSpec& spec);

// ||(X - G) - benign||^2: squared distance of the attacker's delta from its
// own honest update estimate.
double anomaly_loss(const nn::ModelParams& attacker,
                    const nn::ModelParams& global,
                    const nn::GradientVector& benign_estimate);

struct ConstrainAndScaleResult {
  nn::GradientVector update;  // gamma * (X - G)
  int epochs_run = 0;
  bool early_stopped = false;
  bool aborted = false;  // diverged; update is the benign estimate
  std::vector<double> backdoor_losses;  // checked at the start of each epoch
};

// Trains X from the global model on pattern-poisoned batches minimising
// alpha * L_class + (1 - alpha) * L_ano, then scales the delta by gamma.
ConstrainAndScaleResult constrain_and_scale(
    const nn::ModelParams& global, const nn::Dataset& local,
    const BackdoorSpec& spec, const nn::GradientVector& benign_estimate,
    std::size_t batch_size);

struct DlgOptions {
  int iterations = 300;
  int history = 10;  // L-BFGS memory
  // Optional starting point; drawn from rng noise when absent.
  std::optional<nn::RowMatrix> init_inputs;
  std::optional<nn::RowMatrix> init_label_logits;
  // Ground truth for the MSE column.
  std::optional<nn::RowMatrix> truth;
};

struct DlgResult {
  std::vector<double> match_loss;  // index 0 is the initial point
  std::vector<double> mse;         // vs truth; empty without truth
  std::vector<nn::RowMatrix> input_trajectory;
  std::vector<nn::RowMatrix> label_trajectory;  // soft labels
  nn::RowMatrix dummy_inputs;
  nn::RowMatrix dummy_labels;
  bool diverged = false;

  double final_mse() const { return mse.empty() ? -1.0 : mse.back(); }
};

// Gradient matching: optimise dummy inputs and soft labels (softmax of free
// logits) so the model's gradient on them matches g_real. Minimised with
// L-BFGS plus Armijo backtracking, so the match loss never increases.
DlgResult dlg_reconstruct(const nn::ModelParams& model,
                          const nn::GradientVector& g_real,
                          std::size_t batch_rows, Rng& rng,
                          const DlgOptions& options);

// The match loss and its gradient with respect to (inputs, label logits).
// The mixed second derivative is a central difference of the input/label
// gradient along the residual direction in parameter space.
struct MatchEvaluation {
  double loss = 0.0;
  nn::RowMatrix d_inputs;
  nn::RowMatrix d_logits;
};
MatchEvaluation gradient_match(const nn::ModelParams& model,
                               const nn::GradientVector& g_real,
                               const nn::RowMatrix& inputs,
                               const nn::RowMatrix& label_logits,
                               bool with_gradient = true);

nn::RowMatrix softmax_rows(const nn::RowMatrix& logits);

}  // namespace beas::attacks
