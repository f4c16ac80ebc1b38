#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "commlfm/error.hpp"
#include "commlfm/graph.hpp"

namespace commlfm {

using FactorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Sigmoid-link latent factor model of a symmetric adjacency matrix:
//   Pr(A_ij = 1) = sigmoid(alpha + beta_i + beta_j + U_i . V_j)
struct LinkModel {
  FactorMatrix U;
  FactorMatrix V;
  Eigen::VectorXd beta;
  double alpha = 0.0;

  static LinkModel zeros(std::size_t node_count, std::size_t rank);

  std::size_t node_count() const { return static_cast<std::size_t>(beta.size()); }
  std::size_t rank() const { return static_cast<std::size_t>(U.cols()); }

  // Throws std::invalid_argument if U, V and beta disagree in shape.
  void check_shape() const;
  bool all_finite() const;

  // Logit H_ij. No bounds checking.
  double logit(NodeId i, NodeId j) const {
    return alpha + beta[i] + beta[j] + U.row(i).dot(V.row(j));
  }
};

enum class SampleRole { train, validation, test };
const char* to_string(SampleRole role);

struct LabeledPair {
  NodeId i = 0;
  NodeId j = 0;
  int label = 0;
};

struct PairSample {
  std::vector<LabeledPair> pairs;
  SampleRole role = SampleRole::train;

  std::size_t edge_count() const;
  std::size_t non_edge_count() const { return pairs.size() - edge_count(); }
};

// Class-balancing constants of the cost. omega and zeta count ordered
// off-diagonal entries of the FULL adjacency matrix, even when the cost is
// evaluated on a subsample.
struct CostWeights {
  std::size_t omega = 1;
  std::size_t zeta = 1;
  double gamma = 0.0;

  static CostWeights from_graph(const Graph& g, double gamma);
  // Class counts of the sample itself.
  static CostWeights from_sample(const PairSample& sample, double gamma);
  void check() const;
};

double sigmoid(double x);
// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x);

// Strictly inside (0, 1) for finite parameters.
double link_probability(const LinkModel& m, NodeId i, NodeId j);

// Weighted cross-entropy over the sample plus, for every pair (i, j),
// gamma * (|U_i|^2 + |V_j|^2 + beta_i^2 + beta_j^2).
double cost(const LinkModel& m, const PairSample& sample, const CostWeights& w);

struct LinkGradient {
  FactorMatrix dU;
  FactorMatrix dV;
  Eigen::VectorXd dbeta;
  double dalpha = 0.0;

  double max_abs() const;
  double squared_norm() const;
};

LinkGradient gradients(const LinkModel& m, const PairSample& sample, const CostWeights& w);

// One pass computing both. Returns the cost.
double cost_and_gradients(const LinkModel& m, const PairSample& sample,
                          const CostWeights& w, LinkGradient& grad);

struct PairSplits {
  PairSample train;
  PairSample validation;
  PairSample test;
};

// Ordered-pair sampling. With omega = 2m edge entries:
//   train       omega/2 edges,                    omega non-edges
//   validation  floor(omega/4) edges,             omega/2 non-edges
//   test        remaining edges,                  omega/2 non-edges
// All draws are without replacement and the three samples are disjoint.
PairSplits sample_pairs(const Graph& g, std::uint64_t seed);

// Which class counts weight the training cost.
enum class WeightBasis {
  // Counts of the training sample: the sample cost is then an unbiased
  // estimate of the full-matrix cost.
  sample,
  // Counts of the full graph applied to the sample as is.
  graph,
};

// How gamma enters the training cost.
enum class PenaltyScale {
  // gamma / |train| per pair: the penalty is gamma times the mean pair
  // penalty, so gamma lives on the same scale as the weighted data term.
  mean,
  // gamma per pair, summed over the sample.
  per_pair,
};

struct DescentOptions {
  // The first trial moves the largest coordinate of the (preconditioned)
  // direction by this much.
  double initial_step = 0.1;
  double grow = 1.1;
  double shrink = 0.5;
  double relative_tolerance = 1e-6;
  int max_iterations = 2000;
  int max_backtracks = 60;
  double init_scale = 0.01;
  std::uint64_t seed = 0;
  WeightBasis weights = WeightBasis::sample;
  PenaltyScale penalty = PenaltyScale::mean;
  // Scale each coordinate by the total cost weight of the pairs it touches.
  bool precondition = true;
};

struct LinkFit {
  LinkModel model;
  std::vector<double> cost_history;  // accepted costs, starting at the initial point
  int iterations = 0;
  bool converged = false;
};

// Thrown when no step size decreases the cost. Carries the last model that
// was accepted.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, LinkModel last)
      : NumericalError(what), last_stable(std::move(last)) {}
  LinkModel last_stable;
};

// Full-batch gradient descent with backtracking from a small random start.
LinkFit fit_link_model_traced(const Graph& g, std::size_t rank, double gamma,
                              const PairSample& train, const DescentOptions& opts);
LinkModel fit_link_model(const Graph& g, std::size_t rank, double gamma,
                         const PairSample& train, const DescentOptions& opts);

// Fraction of pairs where (probability >= 0.5) matches the label.
double link_prediction_accuracy(const LinkModel& m, const PairSample& sample);

struct GridPoint {
  std::size_t rank = 0;
  double gamma = 0.0;
  double validation_accuracy = 0.0;
  bool failed = false;
  std::string error;
};

struct LinkSelection {
  std::size_t rank = 0;
  double gamma = 0.0;
  LinkModel model;
  std::vector<GridPoint> grid;
};

std::vector<std::size_t> default_rank_grid();  // {5, ..., 10}
std::vector<double> default_gamma_grid();      // {0, 0.01, 0.04, ..., 10.24}

// Trains one model per (rank, gamma) on the train pairs and keeps the best
// validation accuracy. Ties go to the smaller rank, then the smaller gamma.
// Grid points are independent and run on up to `threads` workers.
LinkSelection select_hyperparameters(const Graph& g, const PairSplits& splits,
                                     std::span<const std::size_t> rank_grid,
                                     std::span<const double> gamma_grid,
                                     const DescentOptions& opts, unsigned threads = 1);

nlohmann::json to_json(const LinkModel& m, const Graph& g);
LinkModel link_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LinkSelection& selection);

// CSV "i,j,label" with internal ids.
void write_pairs_csv(const PairSample& sample, const std::filesystem::path& path);

}  // namespace commlfm
