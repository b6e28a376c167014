#include "beas/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

#include "beas/error.hpp"
#include "beas/nn/network.hpp"

namespace beas::attacks {

nn::Dataset label_flip(const nn::Dataset& data, int c_src, int c_target) {
  const auto classes = static_cast<int>(data.num_classes());
  if (c_src == c_target || c_src < 0 || c_target < 0 || c_src >= classes ||
      c_target >= classes) {
    throw InvalidInput("label flip needs two distinct valid classes");
  }
  std::vector<int> labels(data.labels().begin(), data.labels().end());
  for (int& l : labels) {
    if (l == c_src) l = c_target;
  }
  return data.with_labels(std::move(labels));
}

nn::Dataset label_swap(const nn::Dataset& data, int a, int b) {
  const auto classes = static_cast<int>(data.num_classes());
  if (a == b || a < 0 || b < 0 || a >= classes || b >= classes) {
    throw InvalidInput("label swap needs two distinct valid classes");
  }
  std::vector<int> labels(data.labels().begin(), data.labels().end());
  for (int& l : labels) {
    if (l == a) {
      l = b;
    } else if (l == b) {
      l = a;
    }
  }
  return data.with_labels(std::move(labels));
}

void BackdoorSpec::validate(std::size_t input_dim,
                            std::size_t num_classes) const {
  for (const auto& [pixel, value] : pattern) {
    if (pixel >= input_dim) {
      throw ConfigError("backdoor pattern pixel " + std::to_string(pixel) +
                        " outside input dimension " + std::to_string(input_dim));
    }
    if (!std::isfinite(value)) throw ConfigError("backdoor pattern value not finite");
  }
  if (target_label < 0 || static_cast<std::size_t>(target_label) >= num_classes) {
    throw ConfigError("backdoor target_label outside [0, classes)");
  }
  if (!(poison_fraction >= 0.0 && poison_fraction <= 1.0)) {
    throw ConfigError("backdoor poison_fraction must lie in [0, 1]");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("backdoor alpha must lie in [0, 1]");
  if (!(gamma > 0.0)) throw ConfigError("backdoor gamma must be > 0");
  if (!(lr > 0.0)) throw ConfigError("backdoor lr must be > 0");
  if (epochs < 1) throw ConfigError("backdoor epochs must be >= 1");
  if (!(step_rate > 1.0)) throw ConfigError("backdoor step_rate must be > 1");
}

std::vector<std::pair<std::size_t, double>> corner_pattern(std::size_t width,
                                                          double intensity) {
  if (width < 2) throw InvalidInput("corner pattern needs width >= 2");
  return {{0, intensity}, {1, intensity}, {width, intensity}};
}

nn::Dataset apply_pixel_pattern(const nn::Dataset& batch,
                                const BackdoorSpec& spec) {
  if (spec.pattern.empty()) return batch;
  const auto poisoned = static_cast<std::size_t>(
      std::floor(spec.poison_fraction * static_cast<double>(batch.size())));
  if (poisoned == 0) return batch;
  std::vector<double> features(batch.features().begin(), batch.features().end());
  std::vector<int> labels(batch.labels().begin(), batch.labels().end());
  const auto dim = batch.input_dim();
  for (std::size_t r = 0; r < poisoned; ++r) {
    for (const auto& [pixel, value] : spec.pattern) {
      features[r * dim + pixel] = value;
    }
    labels[r] = spec.target_label;
  }
  return {dim, batch.num_classes(), std::move(features), std::move(labels)};
}

nn::Dataset backdoor_test_set(const nn::Dataset& test,
                              const BackdoorSpec& spec) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test.label(i) != spec.target_label) rows.push_back(i);
  }
  auto sub = test.subset(rows);
  if (sub.empty()) return sub;
  BackdoorSpec all = spec;
  all.poison_fraction = 1.0;
  return apply_pixel_pattern(sub, all);
}

double backdoor_accuracy(const nn::ModelParams& model, const nn::Dataset& test,
                         const BackdoorSpec& spec) {
  const auto bd = backdoor_test_set(test, spec);
  if (bd.empty()) return 0.0;
  return nn::evaluate(model, bd).accuracy;
}

double anomaly_loss(const nn::ModelParams& attacker,
                    const nn::ModelParams& global,
                    const nn::GradientVector& benign_estimate) {
  if (attacker.fingerprint() != global.fingerprint() ||
      benign_estimate.fingerprint() != global.fingerprint()) {
    throw InvalidInput("anomaly loss operands belong to different models");
  }
  auto x = attacker.values();
  auto g = global.values();
  auto b = benign_estimate.values();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = (x[i] - g[i]) - b[i];
    s += d * d;
  }
  return s;
}

namespace {

std::vector<nn::Dataset> split_batches(const nn::Dataset& data,
                                       std::size_t batch_size) {
  std::vector<nn::Dataset> out;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    idx.resize(std::min(batch_size, data.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    out.push_back(data.subset(idx));
  }
  return out;
}

}  // namespace

ConstrainAndScaleResult constrain_and_scale(
    const nn::ModelParams& global, const nn::Dataset& local,
    const BackdoorSpec& spec, const nn::GradientVector& benign_estimate,
    std::size_t batch_size) {
  spec.validate(local.input_dim(), local.num_classes());
  if (local.empty()) throw InvalidInput("constrain-and-scale needs local data");
  if (benign_estimate.fingerprint() != global.fingerprint()) {
    throw InvalidInput("benign estimate belongs to a different model");
  }

  ConstrainAndScaleResult result;
  const auto backdoor_set = backdoor_test_set(local, spec);
  const bool check_stop = !spec.pattern.empty() && !backdoor_set.empty();
  const auto poisoned_batches = [&] {
    std::vector<nn::Batch> out;
    for (const auto& b : split_batches(local, batch_size)) {
      out.push_back(apply_pixel_pattern(b, spec).as_batch());
    }
    return out;
  }();

  const auto g = global.values();
  const auto benign = benign_estimate.values();
  std::vector<double> x(g.begin(), g.end());
  double lr = spec.lr;

  try {
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
      if (check_stop) {
        const double l = nn::evaluate(nn::ModelParams(global.spec(), x),
                                      backdoor_set)
                             .loss;
        result.backdoor_losses.push_back(l);
        if (l < spec.stop_loss) {
          result.early_stopped = true;
          break;
        }
      }
      for (const auto& batch : poisoned_batches) {
        const nn::ModelParams current(global.spec(), x);
        const auto grad = nn::compute_gradients(current, batch);
        auto gv = grad.values();
        if (spec.alpha == 1.0) {
          for (std::size_t i = 0; i < x.size(); ++i) x[i] -= lr * gv[i];
        } else {
          // d/dX of ||(X - G) - benign||^2 is 2 ((X - G) - benign).
          const double w_ano = 1.0 - spec.alpha;
          for (std::size_t i = 0; i < x.size(); ++i) {
            const double ano = 2.0 * ((x[i] - g[i]) - benign[i]);
            x[i] -= lr * (spec.alpha * gv[i] + w_ano * ano);
          }
        }
      }
      ++result.epochs_run;
      if (std::find(spec.step_schedule.begin(), spec.step_schedule.end(),
                    epoch + 1) != spec.step_schedule.end()) {
        lr /= spec.step_rate;
      }
    }
    std::vector<double> delta(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      delta[i] = spec.gamma * (x[i] - g[i]);
    }
    result.update = nn::GradientVector(std::move(delta), global.fingerprint());
  } catch (const Error&) {
    // NumericError or a non-finite parameter rejected by ModelParams.
    result.aborted = true;
    result.update = benign_estimate;
  }
  return result;
}

nn::RowMatrix softmax_rows(const nn::RowMatrix& logits) {
  nn::RowMatrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

namespace {

// Parameter-space step used for the directional difference.
constexpr double kDirectionalStep = 1e-4;

nn::GradientVector residual(const nn::GradientVector& g,
                            const nn::GradientVector& target) {
  std::vector<double> r(g.values().begin(), g.values().end());
  auto t = target.values();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= t[i];
  return {std::move(r), g.fingerprint()};
}

}  // namespace

MatchEvaluation gradient_match(const nn::ModelParams& model,
                               const nn::GradientVector& g_real,
                               const nn::RowMatrix& inputs,
                               const nn::RowMatrix& label_logits,
                               bool with_gradient) {
  if (!g_real.compatible_with(model.as_vector())) {
    throw InvalidInput("target gradient does not belong to this model");
  }
  const auto probs = softmax_rows(label_logits);
  const auto sg = nn::compute_soft_gradients(model, inputs, probs);
  const auto r = residual(sg.params, g_real);
  const double rn = r.l2_norm();

  MatchEvaluation out;
  out.loss = rn * rn;
  if (!with_gradient) return out;
  out.d_inputs = nn::RowMatrix::Zero(inputs.rows(), inputs.cols());
  out.d_logits = nn::RowMatrix::Zero(label_logits.rows(), label_logits.cols());
  if (rn == 0.0) return out;

  // D = ||grad_theta L - g||^2, so dD/dz = 2 d/dz <grad_theta L, r> with r
  // frozen, which is the derivative of grad_z L along r in theta.
  const double h = kDirectionalStep / rn;
  const auto plus = nn::compute_soft_gradients(model.plus(r.scaled(h)), inputs, probs);
  const auto minus =
      nn::compute_soft_gradients(model.plus(r.scaled(-h)), inputs, probs);
  const double scale = 2.0 / (2.0 * h);
  out.d_inputs = (plus.inputs - minus.inputs) * scale;
  const nn::RowMatrix d_probs = (plus.targets - minus.targets) * scale;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double inner = probs.row(i).dot(d_probs.row(i));
    out.d_logits.row(i) =
        (probs.row(i).array() * (d_probs.row(i).array() - inner)).matrix();
  }
  return out;
}

namespace {

struct Point {
  Eigen::VectorXd z;
  double loss = 0.0;
  Eigen::VectorXd grad;
};

}  // namespace

DlgResult dlg_reconstruct(const nn::ModelParams& model,
                          const nn::GradientVector& g_real,
                          std::size_t batch_rows, Rng& rng,
                          const DlgOptions& options) {
  if (options.iterations < 1) throw InvalidInput("dlg needs iterations >= 1");
  if (batch_rows < 1) throw InvalidInput("dlg needs at least one dummy row");
  const auto rows = static_cast<Eigen::Index>(batch_rows);
  const auto dim = static_cast<Eigen::Index>(model.spec().input_dim());
  const auto classes = static_cast<Eigen::Index>(model.spec().num_classes());
  const Eigen::Index n_in = rows * dim;

  nn::RowMatrix x0(rows, dim);
  nn::RowMatrix u0(rows, classes);
  {
    std::uniform_real_distribution<double> pixel(0.0, 1.0);
    std::normal_distribution<double> logit(0.0, 1.0);
    for (Eigen::Index i = 0; i < x0.size(); ++i) x0.data()[i] = pixel(rng);
    for (Eigen::Index i = 0; i < u0.size(); ++i) u0.data()[i] = logit(rng);
  }
  if (options.init_inputs) x0 = *options.init_inputs;
  if (options.init_label_logits) u0 = *options.init_label_logits;
  if (x0.rows() != rows || x0.cols() != dim || u0.rows() != rows ||
      u0.cols() != classes) {
    throw InvalidInput("dlg initial point has the wrong shape");
  }
  if (options.truth && (options.truth->rows() != rows || options.truth->cols() != dim)) {
    throw InvalidInput("dlg ground truth has the wrong shape");
  }

  auto unpack = [&](const Eigen::VectorXd& z, nn::RowMatrix& x,
                    nn::RowMatrix& u) {
    x = Eigen::Map<const nn::RowMatrix>(z.data(), rows, dim);
    u = Eigen::Map<const nn::RowMatrix>(z.data() + n_in, rows, classes);
  };
  auto evaluate = [&](const Eigen::VectorXd& z, bool with_gradient) {
    nn::RowMatrix x, u;
    unpack(z, x, u);
    Point p;
    p.z = z;
    auto m = gradient_match(model, g_real, x, u, with_gradient);
    p.loss = m.loss;
    if (with_gradient) {
      p.grad.resize(z.size());
      p.grad.head(n_in) = Eigen::Map<const Eigen::VectorXd>(m.d_inputs.data(), n_in);
      p.grad.tail(rows * classes) =
          Eigen::Map<const Eigen::VectorXd>(m.d_logits.data(), rows * classes);
    }
    return p;
  };

  DlgResult result;
  auto record = [&](const Eigen::VectorXd& z, double loss) {
    nn::RowMatrix x, u;
    unpack(z, x, u);
    result.match_loss.push_back(loss);
    if (options.truth) {
      result.mse.push_back((x - *options.truth).squaredNorm() /
                           static_cast<double>(x.size()));
    }
    result.input_trajectory.push_back(x);
    result.label_trajectory.push_back(softmax_rows(u));
    result.dummy_inputs = std::move(x);
    result.dummy_labels = softmax_rows(u);
  };

  Eigen::VectorXd z0(n_in + rows * classes);
  z0.head(n_in) = Eigen::Map<const Eigen::VectorXd>(x0.data(), n_in);
  z0.tail(rows * classes) = Eigen::Map<const Eigen::VectorXd>(u0.data(), rows * classes);

  Point cur;
  try {
    cur = evaluate(z0, true);
  } catch (const NumericError&) {
    result.diverged = true;
    return result;
  }
  record(cur.z, cur.loss);
  if (!std::isfinite(cur.loss)) {
    result.diverged = true;
    return result;
  }

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 40;

  for (int it = 0; it < options.iterations; ++it) {
    if (cur.loss == 0.0 || cur.grad.squaredNorm() == 0.0) break;

    // Two-loop recursion for the L-BFGS direction.
    Eigen::VectorXd q = cur.grad;
    std::vector<double> alphas(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      const double rho = 1.0 / y_hist[k].dot(s_hist[k]);
      alphas[k] = rho * s_hist[k].dot(q);
      q -= alphas[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      q /= std::max(1.0, cur.grad.norm());
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double rho = 1.0 / y_hist[k].dot(s_hist[k]);
      const double beta = rho * y_hist[k].dot(q);
      q += (alphas[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd dir = -q;
    double slope = cur.grad.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      dir = -cur.grad / std::max(1.0, cur.grad.norm());
      slope = cur.grad.dot(dir);
    }

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd z_next;
    for (int h = 0; h < kMaxHalvings; ++h) {
      z_next = cur.z + step * dir;
      double f = std::numeric_limits<double>::infinity();
      try {
        f = evaluate(z_next, false).loss;
      } catch (const NumericError&) {
      }
      if (std::isfinite(f) && f <= cur.loss + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further decrease available along dir

    Point next;
    try {
      next = evaluate(z_next, true);
    } catch (const NumericError&) {
      result.diverged = true;
      break;
    }
    if (!std::isfinite(next.loss) || !next.grad.allFinite()) {
      result.diverged = true;
      break;
    }
    Eigen::VectorXd s = next.z - cur.z;
    Eigen::VectorXd y = next.grad - cur.grad;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      if (static_cast<int>(s_hist.size()) > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    cur = std::move(next);
    record(cur.z, cur.loss);
  }
  return result;
}

}  // namespace beas::attacks
