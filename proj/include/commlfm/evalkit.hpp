#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "commlfm/graph.hpp"

namespace commlfm {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const Confusion&) const = default;
};

Confusion confusion(std::span<const int> y, std::span<const int> predicted);

struct MetricsRecord {
  double accuracy = 0.0;
  double rmse = 0.0;
  double precision = 0.0;  // 0 when nothing is predicted positive
  double recall = 0.0;     // 0 when there are no positives
  double f1 = 0.0;         // 0 when precision + recall == 0
  double bcr = 0.0;        // mean of TPR and TNR, each 0 when undefined
  double neg_log_likelihood = 0.0;
  double pct_pred_positive = 0.0;
  double pct_actual_positive = 0.0;
};

// Confidences are clamped to [1e-15, 1 - 1e-15] inside the log-likelihood
// only, so a saturated wrong prediction costs ~34.5 nats rather than inf.
MetricsRecord global_metrics(std::span<const int> y, std::span<const int> predicted,
                             std::span<const double> confidence);

enum class CurveKind { pr, accuracy_at_percentile, per_degree_accuracy, per_degree_perplexity };
const char* to_string(CurveKind kind);

struct CurveSeries {
  CurveKind kind = CurveKind::pr;
  std::vector<double> x;
  std::vector<double> y;
  std::optional<std::vector<double>> err;  // per-degree kinds only
};

struct PrCurve {
  CurveSeries curve;  // x = recall (non-decreasing), y = precision
  double area = 0.0;
};

// Indices ordered by |confidence - 0.5| descending, ties by index.
std::vector<std::size_t> confidence_order(std::span<const double> confidence);

// Point r is the precision and recall of the r most confident predictions
// (prediction = confidence >= threshold). Recall is relative to all
// positives. The area is the trapezoid rule over recall, with the curve
// extended flat from recall 0 to the first point. Throws if y has no
// positives.
PrCurve pr_curve(std::span<const int> y, std::span<const double> confidence,
                 double threshold = 0.5);

// Accuracy of the top ceil(p * n / 100) most confident predictions for
// p = step, 2 step, ..., 100.
CurveSeries accuracy_at_percentile(std::span<const int> y, std::span<const double> confidence,
                                   std::span<const int> predicted, int step = 5);

// Groups nodes by degree in g and reports the mean value with one standard
// error (sample std-dev / sqrt(size); 0 for singleton groups).
CurveSeries per_degree_series(std::span<const double> values, std::span<const NodeId> nodes,
                              const Graph& g, CurveKind kind);

struct EvalReport {
  std::size_t count = 0;
  MetricsRecord metrics;
  std::optional<PrCurve> pr;  // absent when the evaluated rows have no positives
  CurveSeries accuracy_at_percentile;
  CurveSeries per_degree_accuracy;
  CurveSeries per_degree_perplexity;
};

struct EvalOptions {
  double threshold = 0.5;
  int percentile_step = 5;
};

// nodes[i] is the graph node that row i belongs to.
EvalReport evaluate(std::span<const int> y, std::span<const int> predicted,
                    std::span<const double> confidence, std::span<const NodeId> nodes,
                    const Graph& g, const EvalOptions& opts = {});

nlohmann::json to_json(const MetricsRecord& m);
nlohmann::json to_json(const CurveSeries& c);
nlohmann::json to_json(const EvalReport& report);

void write_curve_csv(const CurveSeries& curve, const std::filesystem::path& path);

// Aligned text table, one column per model, '*' marking the best value in
// each row.
std::string metrics_table(const std::vector<std::pair<std::string, MetricsRecord>>& models);

}  // namespace commlfm
