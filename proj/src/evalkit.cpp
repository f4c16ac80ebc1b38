#include "commlfm/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "commlfm/csv.hpp"
#include "commlfm/error.hpp"

namespace commlfm {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
  if (a == 0) throw std::invalid_argument(std::string(what) + ": empty input");
}

}  // namespace

Confusion confusion(std::span<const int> y, std::span<const int> predicted) {
  check_lengths(y.size(), predicted.size(), "confusion");
  Confusion c;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1) {
      predicted[i] == 1 ? ++c.tp : ++c.fn;
    } else {
      predicted[i] == 1 ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

MetricsRecord global_metrics(std::span<const int> y, std::span<const int> predicted,
                             std::span<const double> confidence) {
  check_lengths(y.size(), predicted.size(), "global_metrics");
  check_lengths(y.size(), confidence.size(), "global_metrics");
  const Confusion c = confusion(y, predicted);
  const auto n = static_cast<double>(y.size());
  MetricsRecord m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / n;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.bcr = 0.5 * (ratio(c.tp, c.tp + c.fn) + ratio(c.tn, c.tn + c.fp));
  m.pct_pred_positive = static_cast<double>(c.tp + c.fp) / n;
  m.pct_actual_positive = static_cast<double>(c.tp + c.fn) / n;

  constexpr double eps = 1e-15;
  double sq = 0.0;
  double nll = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double diff = confidence[i] - static_cast<double>(y[i]);
    sq += diff * diff;
    const double p = std::clamp(confidence[i], eps, 1.0 - eps);
    nll -= y[i] == 1 ? std::log(p) : std::log1p(-p);
  }
  m.rmse = std::sqrt(sq / n);
  m.neg_log_likelihood = nll;
  return m;
}

const char* to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::pr: return "pr";
    case CurveKind::accuracy_at_percentile: return "accuracy_at_percentile";
    case CurveKind::per_degree_accuracy: return "per_degree_accuracy";
    case CurveKind::per_degree_perplexity: return "per_degree_perplexity";
  }
  return "?";
}

std::vector<std::size_t> confidence_order(std::span<const double> confidence) {
  std::vector<std::size_t> order(confidence.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(confidence[a] - 0.5) > std::abs(confidence[b] - 0.5);
  });
  return order;
}

PrCurve pr_curve(std::span<const int> y, std::span<const double> confidence, double threshold) {
  check_lengths(y.size(), confidence.size(), "pr_curve");
  const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (positives == 0) throw InputError("pr_curve: no positive instances");

  PrCurve out;
  out.curve.kind = CurveKind::pr;
  std::size_t tp = 0;
  std::size_t predicted_pos = 0;
  for (std::size_t idx : confidence_order(confidence)) {
    if (confidence[idx] >= threshold) {
      ++predicted_pos;
      if (y[idx] == 1) ++tp;
    }
    out.curve.x.push_back(ratio(tp, positives));
    out.curve.y.push_back(ratio(tp, predicted_pos));
  }
  double prev_x = 0.0;
  double prev_y = out.curve.y.front();
  for (std::size_t r = 0; r < out.curve.x.size(); ++r) {
    out.area += (out.curve.x[r] - prev_x) * 0.5 * (out.curve.y[r] + prev_y);
    prev_x = out.curve.x[r];
    prev_y = out.curve.y[r];
  }
  return out;
}

CurveSeries accuracy_at_percentile(std::span<const int> y, std::span<const double> confidence,
                                   std::span<const int> predicted, int step) {
  check_lengths(y.size(), confidence.size(), "accuracy_at_percentile");
  check_lengths(y.size(), predicted.size(), "accuracy_at_percentile");
  if (step < 1 || step > 100) throw std::invalid_argument("accuracy_at_percentile: step must be in [1, 100]");
  const auto order = confidence_order(confidence);
  std::vector<std::size_t> correct_prefix(order.size() + 1, 0);
  for (std::size_t r = 0; r < order.size(); ++r) {
    correct_prefix[r + 1] = correct_prefix[r] + (y[order[r]] == predicted[order[r]] ? 1 : 0);
  }
  CurveSeries out;
  out.kind = CurveKind::accuracy_at_percentile;
  const std::size_t n = order.size();
  for (int p = step;; p += step) {
    p = std::min(p, 100);
    const std::size_t top = std::max<std::size_t>(1, (static_cast<std::size_t>(p) * n + 99) / 100);
    out.x.push_back(p);
    out.y.push_back(ratio(correct_prefix[top], top));
    if (p == 100) break;
  }
  return out;
}

CurveSeries per_degree_series(std::span<const double> values, std::span<const NodeId> nodes,
                              const Graph& g, CurveKind kind) {
  if (kind != CurveKind::per_degree_accuracy && kind != CurveKind::per_degree_perplexity) {
    throw std::invalid_argument("per_degree_series: kind must be a per-degree kind");
  }
  if (values.size() != nodes.size()) throw std::invalid_argument("per_degree_series: length mismatch");
  std::map<std::size_t, std::vector<double>> groups;
  for (std::size_t i = 0; i < nodes.size(); ++i) groups[g.degree(nodes[i])].push_back(values[i]);

  CurveSeries out;
  out.kind = kind;
  out.err.emplace();
  for (const auto& [deg, group] : groups) {
    const auto size = static_cast<double>(group.size());
    const double mean = std::accumulate(group.begin(), group.end(), 0.0) / size;
    double se = 0.0;
    if (group.size() > 1) {
      double ss = 0.0;
      for (double v : group) ss += (v - mean) * (v - mean);
      se = std::sqrt(ss / (size - 1.0)) / std::sqrt(size);
    }
    out.x.push_back(static_cast<double>(deg));
    out.y.push_back(mean);
    out.err->push_back(se);
  }
  return out;
}

EvalReport evaluate(std::span<const int> y, std::span<const int> predicted,
                    std::span<const double> confidence, std::span<const NodeId> nodes,
                    const Graph& g, const EvalOptions& opts) {
  EvalReport r;
  r.count = y.size();
  r.metrics = global_metrics(y, predicted, confidence);
  if (std::find(y.begin(), y.end(), 1) != y.end()) r.pr = pr_curve(y, confidence, opts.threshold);
  r.accuracy_at_percentile = accuracy_at_percentile(y, confidence, predicted, opts.percentile_step);
  std::vector<double> correct;
  std::vector<double> perplexity;
  for (std::size_t i = 0; i < y.size(); ++i) {
    correct.push_back(y[i] == predicted[i] ? 1.0 : 0.0);
    perplexity.push_back(std::abs(confidence[i] - static_cast<double>(y[i])));
  }
  r.per_degree_accuracy = per_degree_series(correct, nodes, g, CurveKind::per_degree_accuracy);
  r.per_degree_perplexity = per_degree_series(perplexity, nodes, g, CurveKind::per_degree_perplexity);
  return r;
}

nlohmann::json to_json(const MetricsRecord& m) {
  return {{"accuracy", m.accuracy},
          {"rmse", m.rmse},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"bcr", m.bcr},
          {"neg_log_likelihood", m.neg_log_likelihood},
          {"pct_pred_positive", m.pct_pred_positive},
          {"pct_actual_positive", m.pct_actual_positive}};
}

nlohmann::json to_json(const CurveSeries& c) {
  nlohmann::json j = {{"kind", to_string(c.kind)}, {"x", c.x}, {"y", c.y}};
  if (c.err) j["err"] = *c.err;
  return j;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json metrics = to_json(report.metrics);
  metrics["neg_log_likelihood_note"] =
      "negative log-likelihood of the test labels, lower is better";
  nlohmann::json curves = {
      {"accuracy_at_percentile", to_json(report.accuracy_at_percentile)},
      {"per_degree_accuracy", to_json(report.per_degree_accuracy)},
      {"per_degree_perplexity", to_json(report.per_degree_perplexity)}};
  if (report.pr) {
    curves["pr"] = to_json(report.pr->curve);
    curves["pr"]["area"] = report.pr->area;
  }
  return {{"count", report.count}, {"metrics", std::move(metrics)}, {"curves", std::move(curves)}};
}

void write_curve_csv(const CurveSeries& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write curve: " + path.string());
  out << "x,y,err\n";
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    out << format_double(curve.x[i]) << ',' << format_double(curve.y[i]) << ',';
    if (curve.err) out << format_double((*curve.err)[i]);
    out << '\n';
  }
}

std::string metrics_table(const std::vector<std::pair<std::string, MetricsRecord>>& models) {
  enum class Better { higher, lower, none };
  struct Row {
    const char* label;
    double MetricsRecord::*field;
    Better better;
  };
  static const Row rows[] = {
      {"Accuracy", &MetricsRecord::accuracy, Better::higher},
      {"Neg. log likelihood", &MetricsRecord::neg_log_likelihood, Better::lower},
      {"Precision", &MetricsRecord::precision, Better::higher},
      {"Recall", &MetricsRecord::recall, Better::higher},
      {"F1 score", &MetricsRecord::f1, Better::higher},
      {"BCR", &MetricsRecord::bcr, Better::higher},
      {"RMSE", &MetricsRecord::rmse, Better::lower},
      {"% predicted positive", &MetricsRecord::pct_pred_positive, Better::none},
      {"% actual positive", &MetricsRecord::pct_actual_positive, Better::none},
  };
  constexpr int label_width = 22;
  constexpr int cell_width = 12;
  std::ostringstream out;
  out << std::left << std::setw(label_width) << "Metric";
  for (const auto& [name, _] : models) out << std::right << std::setw(cell_width) << name;
  out << '\n';
  for (const auto& row : rows) {
    double best = 0.0;
    if (row.better != Better::none && !models.empty()) {
      best = models.front().second.*row.field;
      for (const auto& [_, m] : models) {
        best = row.better == Better::higher ? std::max(best, m.*row.field) : std::min(best, m.*row.field);
      }
    }
    out << std::left << std::setw(label_width) << row.label;
    for (const auto& [_, m] : models) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(4) << m.*row.field;
      if (row.better != Better::none && models.size() > 1 && m.*row.field == best) cell << '*';
      out << std::right << std::setw(cell_width) << cell.str();
    }
    out << '\n';
  }
  out << "* best in row; negative log likelihood is lower-is-better\n";
  return out.str();
}

}  // namespace commlfm
