#include "commlfm/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "commlfm/error.hpp"
#include "commlfm/evalkit.hpp"
#include "commlfm/linkmf.hpp"
#include "commlfm/random.hpp"

namespace commlfm {

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

Eigen::VectorXd to_vector(std::span<const int> y) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw InputError("labels must be 0 or 1");
    out[static_cast<Eigen::Index>(i)] = y[i];
  }
  return out;
}

// Accepted steps spanned by the relative-change stopping test.
constexpr std::size_t kWindow = 10;

}  // namespace

RowSplit split_rows(std::span<const NodeId> ids, std::uint64_t seed, SplitRatios ratios) {
  if (ids.size() < 5) {
    throw InputError("split_rows: need at least 5 labeled rows, got " + std::to_string(ids.size()));
  }
  if (ratios.train <= 0.0 || ratios.validation < 0.0 || ratios.train + ratios.validation > 1.0) {
    throw std::invalid_argument("split_rows: invalid ratios");
  }
  std::vector<NodeId> order(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(std::span(order));
  const std::size_t n = order.size();
  const auto train_end = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n)));
  const auto val_end = static_cast<std::size_t>(
      std::floor((ratios.train + ratios.validation) * static_cast<double>(n) + 1e-9));
  RowSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_end));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(train_end),
                          order.begin() + static_cast<std::ptrdiff_t>(val_end));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(val_end), order.end());
  return split;
}

double logreg_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                        const Eigen::VectorXd& w, double b) {
  const Eigen::VectorXd z = (X * w).array() + b;
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z[i]) - y[i] * z[i];
  return total / static_cast<double>(z.size()) + lambda * w.squaredNorm();
}

double logreg_objective_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     double lambda, const Eigen::VectorXd& w, double b,
                                     Eigen::VectorXd& grad_w, double& grad_b) {
  const Eigen::VectorXd z = (X * w).array() + b;
  const double inv_n = 1.0 / static_cast<double>(z.size());
  Eigen::VectorXd residual(z.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    total += softplus(z[i]) - y[i] * z[i];
    residual[i] = sigmoid(z[i]) - y[i];
  }
  grad_w = inv_n * (X.transpose() * residual) + 2.0 * lambda * w;
  grad_b = inv_n * residual.sum();
  return total * inv_n + lambda * w.squaredNorm();
}

ClassifierModel fit_logreg(const Eigen::MatrixXd& X, std::span<const int> labels, double lambda,
                           const LogRegOptions& opts, LogRegTrace* trace) {
  if (X.rows() == 0) throw InputError("fit_logreg: no rows");
  if (static_cast<std::size_t>(X.rows()) != labels.size()) {
    throw std::invalid_argument("fit_logreg: row count does not match label count");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("fit_logreg: lambda must be non-negative");
  const Eigen::VectorXd y = to_vector(labels);
  const double positives = y.sum();
  if (lambda == 0.0 && (positives == 0.0 || positives == static_cast<double>(y.size()))) {
    throw NumericalError("fit_logreg: single-class labels with lambda = 0 have no minimizer");
  }

  const Eigen::Index d = X.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  if (opts.init_seed) {
    Rng rng(*opts.init_seed);
    for (Eigen::Index c = 0; c < d; ++c) w[c] = opts.init_scale * rng.normal();
    b = opts.init_scale * rng.normal();
  }

  Eigen::VectorXd gw, trial_gw, trial_w;
  double gb = 0.0, trial_gb = 0.0;
  double f = logreg_objective_and_gradient(X, y, lambda, w, b, gw, gb);
  LogRegTrace local;
  LogRegTrace& tr = trace ? *trace : local;
  tr = {};
  tr.objective.push_back(f);

  double step = 1.0;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const double grad_sq = gw.squaredNorm() + gb * gb;
    if (std::sqrt(grad_sq) < opts.gradient_tolerance) {
      tr.converged = true;
      break;
    }
    double trial_b = 0.0;
    double trial_f = 0.0;
    int backtracks = 0;
    while (true) {
      trial_w = w - step * gw;
      trial_b = b - step * gb;
      trial_f = logreg_objective_and_gradient(X, y, lambda, trial_w, trial_b, trial_gw, trial_gb);
      if (std::isfinite(trial_f) && trial_f <= f - 1e-4 * step * grad_sq) break;
      step *= 0.5;
      if (++backtracks > 60) {
        // No representable decrease left along the gradient.
        tr.converged = true;
        break;
      }
    }
    if (backtracks > 60) break;

    // Barzilai-Borwein step for the next trial.
    const double sy = -step * (gw.dot(trial_gw - gw) + gb * (trial_gb - gb));
    const double ss = step * step * grad_sq;
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e10) : step * 2.0;

    w.swap(trial_w);
    b = trial_b;
    gw.swap(trial_gw);
    gb = trial_gb;
    f = trial_f;
    tr.objective.push_back(f);
    tr.iterations = iter + 1;
    // BB steps alternate long and short moves, so one short step says little
    // about convergence; compare against the objective a few steps back.
    const std::size_t t = tr.objective.size() - 1;
    const double before = tr.objective[t >= kWindow ? t - kWindow : 0];
    const double change = (before - f) / std::max(std::abs(f), 1e-300);
    if (t >= kWindow && change < opts.relative_tolerance) {
      tr.converged = true;
      break;
    }
  }
  if (!w.allFinite() || !std::isfinite(b)) throw NumericalError("fit_logreg: non-finite weights");
  ClassifierModel model;
  model.weights = std::move(w);
  model.intercept = b;
  model.lambda = lambda;
  return model;
}

Prediction predict(const ClassifierModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.weights.size()) {
    throw std::invalid_argument("predict: design has " + std::to_string(X.cols()) +
                                " columns, model expects " + std::to_string(model.weights.size()));
  }
  Prediction out;
  const Eigen::VectorXd z = (X * model.weights).array() + model.intercept;
  out.confidence.reserve(static_cast<std::size_t>(z.size()));
  out.labels.reserve(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    out.confidence.push_back(sigmoid(z[i]));
    out.labels.push_back(out.confidence.back() >= model.threshold ? 1 : 0);
  }
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid{0.0};
  for (int i = 0; i <= 10; ++i) grid.push_back(0.01 * std::ldexp(1.0, i));
  return grid;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& D, std::span<const NodeId> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), D.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = D.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

std::vector<int> gather(std::span<const int> values, std::span<const NodeId> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (NodeId r : rows) out.push_back(values[r]);
  return out;
}

LambdaSelection select_lambda(const Eigen::MatrixXd& D, std::span<const int> y, const RowSplit& split,
                              std::span<const double> lambda_grid, const LogRegOptions& opts,
                              double threshold) {
  if (lambda_grid.empty()) throw std::invalid_argument("select_lambda: empty lambda grid");
  if (split.validation.empty()) throw InputError("select_lambda: validation split is empty");
  const Eigen::MatrixXd train_x = gather_rows(D, split.train);
  const std::vector<int> train_y = gather(y, split.train);
  const Eigen::MatrixXd val_x = gather_rows(D, split.validation);
  const std::vector<int> val_y = gather(y, split.validation);

  LambdaSelection out;
  const LambdaScore* best = nullptr;
  std::vector<ClassifierModel> models;
  out.scores.reserve(lambda_grid.size());
  models.reserve(lambda_grid.size());
  for (double lambda : lambda_grid) {
    LambdaScore score{lambda, 0.0, false, {}};
    ClassifierModel model;
    try {
      model = fit_logreg(train_x, train_y, lambda, opts);
      model.threshold = threshold;
      const Prediction p = predict(model, val_x);
      score.validation_bcr = global_metrics(val_y, p.labels, p.confidence).bcr;
    } catch (const std::exception& e) {
      score.failed = true;
      score.error = e.what();
    }
    out.scores.push_back(score);
    models.push_back(std::move(model));
  }
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < out.scores.size(); ++i) {
    const auto& s = out.scores[i];
    if (s.failed) continue;
    if (best == nullptr || s.validation_bcr > best->validation_bcr ||
        (s.validation_bcr == best->validation_bcr && s.lambda < best->lambda)) {
      best = &s;
      best_idx = i;
    }
  }
  if (best == nullptr) {
    throw NumericalError("select_lambda: every lambda failed; first error: " + out.scores.front().error);
  }
  out.lambda = best->lambda;
  out.model = std::move(models[best_idx]);
  return out;
}

nlohmann::json to_json(const ClassifierModel& model) {
  return {{"weights", std::vector<double>(model.weights.begin(), model.weights.end())},
          {"intercept", model.intercept},
          {"lambda", model.lambda},
          {"threshold", model.threshold},
          {"columns", model.columns}};
}

}  // namespace commlfm
