#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "commlfm/graph.hpp"

namespace commlfm {

struct RowSplit {
  std::vector<NodeId> train;
  std::vector<NodeId> validation;
  std::vector<NodeId> test;
};

struct SplitRatios {
  double train = 0.6;
  double validation = 0.2;
};

// Shuffles `ids` with the seed and cuts at floor(train * n) and
// floor((train + validation) * n).
RowSplit split_rows(std::span<const NodeId> ids, std::uint64_t seed, SplitRatios ratios = {});

struct ClassifierModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double lambda = 0.0;
  double threshold = 0.5;
  std::vector<std::string> columns;
};

struct LogRegOptions {
  double relative_tolerance = 1e-8;
  double gradient_tolerance = 1e-6;
  int max_iterations = 20000;
  // When set, weights start from N(0, init_scale^2) draws instead of zero.
  std::optional<std::uint64_t> init_seed;
  double init_scale = 1.0;
};

// mean_i [log(1 + e^{z_i}) - y_i z_i] + lambda * |w|^2, z = b + X w.
// The intercept is not penalized.
double logreg_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                        const Eigen::VectorXd& w, double b);

// Returns the objective; fills the gradient with respect to (w, b).
double logreg_objective_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     double lambda, const Eigen::VectorXd& w, double b,
                                     Eigen::VectorXd& grad_w, double& grad_b);

struct LogRegTrace {
  std::vector<double> objective;  // accepted objectives
  int iterations = 0;
  bool converged = false;
};

// L2-regularized logistic regression by gradient descent with Barzilai-Borwein
// trial steps and Armijo backtracking. Labels are 0/1. Throws NumericalError
// for single-class data with lambda == 0.
ClassifierModel fit_logreg(const Eigen::MatrixXd& X, std::span<const int> y, double lambda,
                           const LogRegOptions& opts = {}, LogRegTrace* trace = nullptr);

struct Prediction {
  std::vector<double> confidence;
  std::vector<int> labels;
};

// confidence = sigmoid(intercept + X w); label = confidence >= threshold.
Prediction predict(const ClassifierModel& model, const Eigen::MatrixXd& X);

struct LambdaScore {
  double lambda = 0.0;
  double validation_bcr = 0.0;
  bool failed = false;
  std::string error;
};

struct LambdaSelection {
  double lambda = 0.0;
  ClassifierModel model;
  std::vector<LambdaScore> scores;
};

// {0} followed by 0.01 * 2^i for i = 0..10.
std::vector<double> default_lambda_grid();

// Fits on the train rows of D for every lambda, scores balanced classification
// rate on the validation rows and returns the best. Ties go to the smaller
// lambda. y is indexed by row of D.
LambdaSelection select_lambda(const Eigen::MatrixXd& D, std::span<const int> y, const RowSplit& split,
                              std::span<const double> lambda_grid, const LogRegOptions& opts = {},
                              double threshold = 0.5);

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& D, std::span<const NodeId> rows);
std::vector<int> gather(std::span<const int> values, std::span<const NodeId> rows);

nlohmann::json to_json(const ClassifierModel& model);

}  // namespace commlfm
