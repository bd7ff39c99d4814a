#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "eegml/error.hpp"
#include "eegml/features.hpp"

namespace eegml {

struct LogisticParams {
  double l2 = 1.0;
  double tol = 1e-8;
  int max_iters = 5000;
};

// Column standardization fitted on the training table; zero-variance columns
// pass through unscaled.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const FeatureTable& table) {
    const std::size_t n = table.rows.size();
    const std::size_t d = table.schema.size();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    for (const auto& row : table.rows)
      for (std::size_t f = 0; f < d; ++f) s.mean[f] += row.values[f];
    for (std::size_t f = 0; f < d; ++f) s.mean[f] /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (const auto& row : table.rows)
      for (std::size_t f = 0; f < d; ++f) {
        const double c = row.values[f] - s.mean[f];
        var[f] += c * c;
      }
    for (std::size_t f = 0; f < d; ++f) {
      const double sd = std::sqrt(var[f] / static_cast<double>(n));
      if (sd > 0.0) s.scale[f] = sd;
    }
    return s;
  }

  void apply(const double* x, double* out, std::size_t d) const {
    for (std::size_t f = 0; f < d; ++f) out[f] = (x[f] - mean[f]) / scale[f];
  }
};

struct LogisticModel {
  LogisticParams params;
  Standardizer standardizer;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> loss_trace;  // per accepted step, non-increasing

  double raw_score(const double* x) const {
    double z = bias;
    for (std::size_t f = 0; f < weights.size(); ++f)
      z += weights[f] * (x[f] - standardizer.mean[f]) / standardizer.scale[f];
    return z;
  }
};

namespace detail {

// Numerically stable binary cross entropy from the logit:
// ce = softplus(z) - y*z.
inline double logit_loss(double z, double y) {
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - y * z;
}

}  // namespace detail

// L2-regularized logistic regression by gradient descent with backtracking
// line search, so the training loss is non-increasing step by step.
inline LogisticModel train_logistic(const FeatureTable& table, const LogisticParams& params) {
  const std::size_t n = table.rows.size();
  const std::size_t d = table.schema.size();
  LogisticModel model;
  model.params = params;
  model.standardizer = Standardizer::fit(table);
  model.weights.assign(d, 0.0);

  // Standardized design matrix, row-major.
  std::vector<double> xs(n * d);
  std::vector<double> ys(n);
  for (std::size_t r = 0; r < n; ++r) {
    model.standardizer.apply(table.rows[r].values.data(), xs.data() + r * d, d);
    ys[r] = static_cast<double>(table.rows[r].label);
  }

  auto evaluate = [&](const std::vector<double>& w, double b, std::vector<double>* grad_w,
                      double* grad_b) {
    double loss = 0.0;
    if (grad_w) {
      std::fill(grad_w->begin(), grad_w->end(), 0.0);
      *grad_b = 0.0;
    }
    for (std::size_t r = 0; r < n; ++r) {
      const double* x = xs.data() + r * d;
      double z = b;
      for (std::size_t f = 0; f < d; ++f) z += w[f] * x[f];
      loss += detail::logit_loss(z, ys[r]);
      if (grad_w) {
        const double delta = detail::sigmoid(z) - ys[r];
        for (std::size_t f = 0; f < d; ++f) (*grad_w)[f] += delta * x[f];
        *grad_b += delta;
      }
    }
    loss /= static_cast<double>(n);
    double reg = 0.0;
    for (double v : w) reg += v * v;
    loss += 0.5 * params.l2 * reg / static_cast<double>(n);
    if (grad_w) {
      for (std::size_t f = 0; f < d; ++f)
        (*grad_w)[f] = ((*grad_w)[f] + params.l2 * w[f]) / static_cast<double>(n);
      *grad_b /= static_cast<double>(n);
    }
    return loss;
  };

  std::vector<double> grad_w(d), trial_w(d);
  double grad_b = 0.0;
  double loss = evaluate(model.weights, model.bias, &grad_w, &grad_b);
  model.loss_trace.push_back(loss);

  for (int iter = 0; iter < params.max_iters; ++iter) {
    double grad_norm2 = grad_b * grad_b;
    for (double g : grad_w) grad_norm2 += g * g;
    if (grad_norm2 == 0.0) break;

    double step = 1.0;
    double new_loss = loss;
    double trial_b = model.bias;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      for (std::size_t f = 0; f < d; ++f) trial_w[f] = model.weights[f] - step * grad_w[f];
      trial_b = model.bias - step * grad_b;
      new_loss = evaluate(trial_w, trial_b, nullptr, nullptr);
      if (new_loss <= loss - 1e-4 * step * grad_norm2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || !(loss - new_loss > 0.0)) break;

    model.weights = trial_w;
    model.bias = trial_b;
    const double improvement = loss - new_loss;
    loss = new_loss;
    model.loss_trace.push_back(loss);
    if (improvement < params.tol) break;
    evaluate(model.weights, model.bias, &grad_w, &grad_b);
  }
  return model;
}

inline double predict_logistic(const LogisticModel& model, const double* x) {
  return detail::sigmoid(model.raw_score(x));
}

struct MlpParams {
  int hidden = 16;
  int epochs = 500;
  double step = 0.05;
};

// One hidden tanh layer, sigmoid output. Parameter vector layout (used by the
// gradient op and its finite-difference check): [W1 row-major h*d][b1 h][w2 h][b2].
struct MlpModel {
  MlpParams params;
  Standardizer standardizer;
  std::size_t n_inputs = 0;
  std::vector<double> w1;  // h * d
  std::vector<double> b1;  // h
  std::vector<double> w2;  // h
  double b2 = 0.0;

  std::size_t n_params() const { return w1.size() + b1.size() + w2.size() + 1; }

  double raw_score_standardized(const double* xs) const {
    const std::size_t h = b1.size();
    const std::size_t d = n_inputs;
    double z = b2;
    for (std::size_t j = 0; j < h; ++j) {
      double a = b1[j];
      const double* wr = w1.data() + j * d;
      for (std::size_t f = 0; f < d; ++f) a += wr[f] * xs[f];
      z += w2[j] * std::tanh(a);
    }
    return z;
  }
};

namespace detail {

// Summed loss and gradient over rows [lo, hi), combined by recursive halves
// so that a duplicated table sums to exactly twice the original.
inline double mlp_range_loss_grad(const MlpModel& m, const std::vector<double>& xs,
                                  const std::vector<double>& ys, std::size_t lo, std::size_t hi,
                                  std::vector<double>& grad) {
  const std::size_t d = m.n_inputs;
  const std::size_t h = m.b1.size();
  if (hi - lo == 1) {
    const double* x = xs.data() + lo * d;
    const double y = ys[lo];
    std::vector<double> act(h);
    double z = m.b2;
    for (std::size_t j = 0; j < h; ++j) {
      double a = m.b1[j];
      const double* wr = m.w1.data() + j * d;
      for (std::size_t f = 0; f < d; ++f) a += wr[f] * x[f];
      act[j] = std::tanh(a);
      z += m.w2[j] * act[j];
    }
    const double delta = sigmoid(z) - y;
    std::fill(grad.begin(), grad.end(), 0.0);
    double* gw1 = grad.data();
    double* gb1 = gw1 + h * d;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + h;
    for (std::size_t j = 0; j < h; ++j) {
      const double dz1 = delta * m.w2[j] * (1.0 - act[j] * act[j]);
      double* gr = gw1 + j * d;
      for (std::size_t f = 0; f < d; ++f) gr[f] = dz1 * x[f];
      gb1[j] = dz1;
      gw2[j] = delta * act[j];
    }
    *gb2 = delta;
    return logit_loss(z, y);
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  std::vector<double> right(grad.size());
  const double loss_left = mlp_range_loss_grad(m, xs, ys, lo, mid, grad);
  const double loss_right = mlp_range_loss_grad(m, xs, ys, mid, hi, right);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += right[i];
  return loss_left + loss_right;
}

}  // namespace detail

// Summed cross-entropy loss and its analytic gradient on standardized inputs.
inline std::pair<double, std::vector<double>> mlp_loss_gradient_raw(
    const MlpModel& model, const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> grad(model.n_params(), 0.0);
  const std::size_t n = ys.size();
  if (n == 0) return {0.0, grad};
  const double loss = detail::mlp_range_loss_grad(model, xs, ys, 0, n, grad);
  return {loss, grad};
}

inline MlpModel train_mlp(const FeatureTable& table, const MlpParams& params, std::uint64_t seed) {
  const std::size_t n = table.rows.size();
  const std::size_t d = table.schema.size();
  const std::size_t h = static_cast<std::size_t>(params.hidden);

  MlpModel model;
  model.params = params;
  model.standardizer = Standardizer::fit(table);
  model.n_inputs = d;
  model.w1.assign(h * d, 0.0);
  model.b1.assign(h, 0.0);
  model.w2.assign(h, 0.0);

  Rng rng(derive_seed(seed, "mlp-init"));
  const double scale1 = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& w : model.w1) w = rng.gaussian() * scale1;
  const double scale2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (auto& w : model.w2) w = rng.gaussian() * scale2;

  std::vector<double> xs(n * d), ys(n);
  for (std::size_t r = 0; r < n; ++r) {
    model.standardizer.apply(table.rows[r].values.data(), xs.data() + r * d, d);
    ys[r] = static_cast<double>(table.rows[r].label);
  }

  const double lr = params.step / static_cast<double>(n);
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    auto [loss, grad] = mlp_loss_gradient_raw(model, xs, ys);
    (void)loss;
    double* gw1 = grad.data();
    double* gb1 = gw1 + h * d;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + h;
    for (std::size_t i = 0; i < h * d; ++i) model.w1[i] -= lr * gw1[i];
    for (std::size_t j = 0; j < h; ++j) model.b1[j] -= lr * gb1[j];
    for (std::size_t j = 0; j < h; ++j) model.w2[j] -= lr * gw2[j];
    model.b2 -= lr * *gb2;
  }
  return model;
}

inline double predict_mlp(const MlpModel& model, const double* x) {
  std::vector<double> xs(model.n_inputs);
  model.standardizer.apply(x, xs.data(), model.n_inputs);
  return detail::sigmoid(model.raw_score_standardized(xs.data()));
}

}  // namespace eegml
