// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance <path to commlfm binary>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commlfm/classify.hpp"
#include "commlfm/evalkit.hpp"
#include "commlfm/graph.hpp"
#include "commlfm/linkmf.hpp"
#include "commlfm/random.hpp"
#include "commlfm/synthbench.hpp"
#include "support.hpp"

using namespace commlfm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("[%s] %2d %-28s %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  failures += o.pass ? 0 : 1;
}

void run(int id, const std::string& name, const std::function<Outcome()>& body) {
  try {
    report(id, name, body());
  } catch (const std::exception& e) {
    report(id, name, {false, std::string("exception: ") + e.what()});
  }
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

PairSample universe(const Graph& g) {
  PairSample s;
  for (NodeId i = 0; i < g.node_count(); ++i)
    for (NodeId j = 0; j < g.node_count(); ++j)
      if (i != j) s.pairs.push_back({i, j, g.has_edge(i, j) ? 1 : 0});
  return s;
}

Outcome gradient_oracle() {
  const auto start = Clock::now();
  Rng rng(2024);
  double worst = 0.0;
  int instances = 0, bad = 0;
  while (instances < 20) {
    const std::size_t n = 3 + rng.below(13), k = 1 + rng.below(3);
    const Graph g = testing::random_graph(n, rng.uniform(0.15, 0.6), rng.next());
    if (g.edge_count() == 0) continue;
    ++instances;
    const double gamma = instances % 2 ? 0.0 : rng.uniform(0.01, 0.5);
    LinkModel m = LinkModel::zeros(n, k);
    for (Eigen::Index r = 0; r < m.U.rows(); ++r)
      for (Eigen::Index c = 0; c < m.U.cols(); ++c) {
        m.U(r, c) = rng.normal() * 0.7;
        m.V(r, c) = rng.normal() * 0.7;
      }
    for (Eigen::Index r = 0; r < m.beta.size(); ++r) m.beta[r] = rng.normal() * 0.5;
    m.alpha = rng.normal();
    const PairSample s = universe(g);
    const CostWeights w = CostWeights::from_graph(g, gamma);
    const LinkGradient grad = gradients(m, s, w);

    std::vector<std::pair<double*, double>> coords;
    for (Eigen::Index r = 0; r < m.U.rows(); ++r)
      for (Eigen::Index c = 0; c < m.U.cols(); ++c) {
        coords.emplace_back(&m.U(r, c), grad.dU(r, c));
        coords.emplace_back(&m.V(r, c), grad.dV(r, c));
      }
    for (Eigen::Index r = 0; r < m.beta.size(); ++r) coords.emplace_back(&m.beta[r], grad.dbeta[r]);
    coords.emplace_back(&m.alpha, grad.dalpha);
    for (auto [param, analytic] : coords) {
      const double saved = *param, h = 1e-5;
      *param = saved + h;
      const double up = cost(m, s, w);
      *param = saved - h;
      const double down = cost(m, s, w);
      *param = saved;
      const double numeric = (up - down) / (2 * h);
      const double diff = std::abs(analytic - numeric);
      const double scale = std::max(std::abs(analytic), std::abs(numeric));
      if (diff > 1e-8) {
        worst = std::max(worst, diff / scale);
        if (diff > 1e-4 * scale) ++bad;
      }
    }
  }
  const double t = seconds_since(start);
  return {bad == 0 && t < 5.0,
          fmt("20 instances, worst rel err %.2e above the abs floor, %.0f mismatches, %.2fs (< 5s)", worst, bad, t)};
}

Outcome cost_anchor() {
  double worst = 0.0;
  for (std::size_t n : {5, 20, 50}) {
    const Graph g = testing::random_graph(n, 0.2, 100 + n);
    const double c = cost(LinkModel::zeros(n, 2), universe(g), CostWeights::from_graph(g, 0.0));
    worst = std::max(worst, std::abs(c - std::log(2.0)));
  }
  return {worst <= 1e-12, fmt("max |cost - ln 2| = %.2e over n = 5, 20, 50 (tol 1e-12)", worst)};
}

// Drop vertices with fewer than k live neighbors until stable.
std::set<NodeId> peel(const Graph& g, std::size_t k) {
  std::set<NodeId> alive;
  for (NodeId v = 0; v < g.node_count(); ++v) alive.insert(v);
  for (bool changed = true; changed;) {
    changed = false;
    for (auto it = alive.begin(); it != alive.end();) {
      std::size_t d = 0;
      for (NodeId u : alive) d += g.has_edge(*it, u);
      if (d < k) {
        it = alive.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  return alive;
}

Outcome kcore_oracle() {
  const auto start = Clock::now();
  Rng rng(77);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(50), k = rng.below(7);
    const Graph g = testing::random_graph(n, rng.uniform(0.02, 0.35), rng.next());
    const Subgraph core = k_core(g, k);
    if (std::set<NodeId>(core.parent_ids.begin(), core.parent_ids.end()) != peel(g, k)) ++mismatches;
  }
  const double t = seconds_since(start);
  return {mismatches == 0 && t < 5.0, fmt("100 graphs, %.0f mismatches, %.2fs (< 5s)", mismatches, t)};
}

Outcome stats_convention() {
  Rng rng(5);
  bool exact = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    const Graph g = testing::random_graph(n, rng.uniform(0.05, 0.5), rng.next());
    const StatsRecord s = network_stats(g);
    const double m = static_cast<double>(g.edge_count()), nn = static_cast<double>(n);
    exact = exact && s.avg_degree == 2.0 * m / nn && s.density == m / (nn * (nn - 1.0));
  }
  // n = 587, m = 4122 as a circulant graph.
  std::vector<Edge> edges;
  for (NodeId step = 1; edges.size() < 4122; ++step)
    for (NodeId u = 0; u < 587 && edges.size() < 4122; ++u) edges.emplace_back(u, (u + step) % 587);
  const StatsRecord s = network_stats(Graph::from_edges(587, edges));
  const bool published = std::abs(s.avg_degree - 14.04) < 0.005 && std::abs(s.density - 0.012) < 0.0005;
  return {exact && published && s.edges == 4122,
          fmt("random graphs exact: %.0f; n=587 m=4122 -> avg_degree %.4f, density %.5f", exact, s.avg_degree,
              s.density)};
}

Outcome metrics_oracle() {
  Rng rng(99);
  double worst = 0.0;
  bool percentile_ok = true, pr_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    std::vector<int> y, pred;
    std::vector<double> conf;
    for (std::size_t i = 0; i < n; ++i) {
      y.push_back(rng.bernoulli(0.45));
      conf.push_back(std::clamp(std::round(rng.uniform() * 40.0) / 40.0, 0.005, 0.995));
      pred.push_back(conf.back() >= 0.5);
    }
    double tp = 0, fp = 0, tn = 0, fn = 0, sq = 0, ll = 0;
    for (std::size_t i = 0; i < n; ++i) {
      tp += y[i] && pred[i];
      fp += !y[i] && pred[i];
      tn += !y[i] && !pred[i];
      fn += y[i] && !pred[i];
      sq += (conf[i] - y[i]) * (conf[i] - y[i]);
      ll += std::log(y[i] ? conf[i] : 1.0 - conf[i]);
    }
    const double total = static_cast<double>(n);
    const double prec = tp + fp ? tp / (tp + fp) : 0, rec = tp + fn ? tp / (tp + fn) : 0;
    const double tnr = tn + fp ? tn / (tn + fp) : 0;
    const std::vector<double> expect{(tp + tn) / total,
                                     std::sqrt(sq / total),
                                     prec,
                                     rec,
                                     prec + rec ? 2 * prec * rec / (prec + rec) : 0,
                                     0.5 * (rec + tnr),
                                     -ll,
                                     (tp + fp) / total,
                                     (tp + fn) / total};
    const MetricsRecord m = global_metrics(y, pred, conf);
    const std::vector<double> got{m.accuracy, m.rmse, m.precision, m.recall, m.f1,
                                  m.bcr, m.neg_log_likelihood, m.pct_pred_positive, m.pct_actual_positive};
    for (std::size_t f = 0; f < got.size(); ++f) {
      worst = std::max(worst, std::abs(got[f] - expect[f]) / std::max(1.0, std::abs(expect[f])));
    }

    const CurveSeries pct = accuracy_at_percentile(y, conf, pred, 5);
    percentile_ok = percentile_ok && pct.x.back() == 100.0 && std::abs(pct.y.back() - m.accuracy) <= 1e-12;
    if (tp + fn > 0) {
      const PrCurve pr = pr_curve(y, conf);
      pr_ok = pr_ok && std::abs(pr.curve.x.back() - m.recall) <= 1e-12 &&
              std::abs(pr.curve.y.back() - m.precision) <= 1e-12;
    }
  }
  return {worst <= 1e-12 && percentile_ok && pr_ok,
          fmt("200 triples, worst field err %.2e (tol 1e-12); p=100 == accuracy: %.0f; PR end == P/R: %.0f", worst,
              percentile_ok, pr_ok)};
}

struct ModeMeans {
  double F = 0, X = 0;
};

ModeMeans benchmark_means(SbmSpec spec, int seeds) {
  ModeMeans out;
  for (int s = 0; s < seeds; ++s) {
    spec.seed = static_cast<std::uint64_t>(s);
    const BenchmarkReport r = run_benchmark(spec, ExperimentSettings{});
    for (const auto& m : r.result.modes) {
      if (m.mode == DesignMode::F) out.F += m.report.metrics.accuracy / seeds;
      if (m.mode == DesignMode::X) out.X += m.report.metrics.accuracy / seeds;
    }
  }
  return out;
}

Outcome communities_rescue() {
  const auto start = Clock::now();
  SbmSpec spec;
  spec.block_sizes = {100, 100};
  spec.p_in = 0.1;
  spec.p_out = 0.01;
  spec.feature_informative_frac = 0.0;
  spec.label_flip_rate = 0.1;
  const ModeMeans m = benchmark_means(spec, 5);
  const double t = seconds_since(start);
  return {m.X >= 0.75 && m.X - m.F >= 0.15 && t < 60.0,
          fmt("5 seeds: X %.4f (>= 0.75), F %.4f, X - F %.4f (>= 0.15), %.1fs (< 60s)", m.X, m.F, m.X - m.F, t)};
}

Outcome no_harm() {
  SbmSpec spec;
  spec.block_sizes = {100, 100};
  spec.p_in = spec.p_out = 0.05;
  spec.feature_informative_frac = 1.0;
  spec.label_flip_rate = 0.1;
  const ModeMeans m = benchmark_means(spec, 5);
  return {std::abs(m.F - m.X) <= 0.05, fmt("5 seeds: F %.4f, X %.4f, |F - X| %.4f (<= 0.05)", m.F, m.X,
                                           std::abs(m.F - m.X))};
}

Outcome sampling_ratios() {
  Rng rng(8);
  int graphs = 0, bad = 0;
  while (graphs < 30) {
    const std::size_t n = 8 + rng.below(70);
    const Graph g = testing::random_graph(n, rng.uniform(0.03, 0.3), rng.next());
    const std::size_t omega = 2 * g.edge_count();
    if (omega < 4 || n * (n - 1) - omega < 2 * omega) continue;
    ++graphs;
    const PairSplits s = sample_pairs(g, rng.next());
    bool ok = s.train.edge_count() == omega / 2 && s.train.non_edge_count() == omega &&
              s.validation.edge_count() == omega / 4 && s.validation.non_edge_count() == omega / 2 &&
              s.test.edge_count() == omega - omega / 2 - omega / 4 && s.test.non_edge_count() == omega / 2;
    // Every ordered pair appears in at most one sample, with its true label.
    std::vector<std::vector<int>> owner(n, std::vector<int>(n, -1));
    int role = 0;
    for (const PairSample* sample : {&s.train, &s.validation, &s.test}) {
      for (const auto& p : sample->pairs) {
        ok = ok && p.i != p.j && owner[p.i][p.j] == -1 && p.label == (g.has_edge(p.i, p.j) ? 1 : 0);
        owner[p.i][p.j] = role;
      }
      ++role;
    }
    bad += !ok;
  }
  return {bad == 0, fmt("30 graphs, %.0f with wrong counts, overlap or labels", bad)};
}

Outcome end_to_end_determinism(const std::string& cli) {
  testing::TempDir dir("acceptance_e2e");
  SbmSpec spec;
  spec.block_sizes = {40, 40};
  spec.p_in = 0.25;
  spec.p_out = 0.03;
  spec.feature_informative_frac = 0.3;
  spec.seed = 13;
  write_benchmark_inputs(generate_benchmark(spec), dir.path());
  testing::write_file(dir / "run.conf", "edges = \"" + (dir / "edges.txt").string() +
                                            "\"\nfeatures = \"" + (dir / "features.csv").string() +
                                            "\"\nlabels = \"" + (dir / "labels.csv").string() +
                                            "\"\nout = \"" + (dir / "out").string() +
                                            "\"\ntarget = label\nmode = [\"F\", \"N\", \"X\"]\n"
                                            "k_grid = [2, 4]\ngamma_grid = [0.01, 0.16]\nseed = 3\n");
  const std::string cmd = "\"" + cli + "\" run --config \"" + (dir / "run.conf").string() + "\" > /dev/null";
  for (int pass = 0; pass < 2; ++pass) {
    if (std::system(cmd.c_str()) != 0) return {false, "run invocation failed"};
    if (pass == 0) fs::rename(dir / "out", dir / "first");
  }
  int compared = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(dir / "first")) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("report_", 0) != 0 || entry.path().extension() != ".json") continue;
    ++compared;
    differing += testing::read_file(entry.path()) != testing::read_file(dir / "out" / name);
  }
  return {compared == 3 && differing == 0,
          fmt("two CLI runs, %.0f report JSON files compared, %.0f differ", compared, differing)};
}

Outcome classifier_convexity() {
  Rng rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 20 + static_cast<Eigen::Index>(rng.below(40));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(6));
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    std::vector<int> y;
    for (Eigen::Index i = 0; i < n; ++i) y.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(-2.0 * X(i, 0)))));
    y[0] = 1;
    y[1] = 0;
    const double lambda = rng.uniform(0.005, 0.5);
    LogRegOptions a, b;
    a.init_seed = rng.next();
    b.init_seed = rng.next();
    a.init_scale = b.init_scale = 2.0;
    const ClassifierModel ma = fit_logreg(X, y, lambda, a), mb = fit_logreg(X, y, lambda, b);
    worst = std::max(worst, (ma.weights - mb.weights).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-4, fmt("10 instances, max weight gap %.2e (tol 1e-4)", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <commlfm binary>\n";
    return 2;
  }
  const std::string cli = argv[1];
  run(1, "gradient oracle", gradient_oracle);
  run(2, "cost anchor ln 2", cost_anchor);
  run(3, "k-core oracle", kcore_oracle);
  run(4, "stats conventions", stats_convention);
  run(5, "metrics oracle", metrics_oracle);
  run(6, "communities rescue features", communities_rescue);
  run(7, "no harm when features suffice", no_harm);
  run(8, "pair sampling ratios", sampling_ratios);
  run(9, "end-to-end determinism", [&] { return end_to_end_determinism(cli); });
  run(10, "classifier convexity", classifier_convexity);
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
