#include <doctest.h>

#include <cmath>
#include <numeric>

#include "commlfm/error.hpp"
#include "commlfm/pipeline.hpp"
#include "commlfm/synthbench.hpp"
#include "support.hpp"

using namespace commlfm;

namespace {

double binomial_pmf(int n, int k, double p) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                  (n - k) * std::log1p(-p));
}

// Largest |mean(x | y = 1) - mean(x | y = 0)| over columns.
double separation(const Eigen::MatrixXd& X, const std::vector<int>& y) {
  double best = 0.0;
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    double s1 = 0, s0 = 0, n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      (y[i] ? s1 : s0) += X(static_cast<Eigen::Index>(i), c);
      (y[i] ? n1 : n0) += 1;
    }
    best = std::max(best, std::abs(s1 / n1 - s0 / n0));
  }
  return best;
}

// Fraction of label permutations at least as separated as the real labels.
double permutation_p_value(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint64_t seed) {
  const double observed = separation(X, y);
  Rng rng(seed);
  std::vector<int> shuffled = y;
  int extreme = 0;
  const int rounds = 200;
  for (int r = 0; r < rounds; ++r) {
    rng.shuffle(std::span<int>(shuffled));
    extreme += separation(X, shuffled) >= observed;
  }
  return (extreme + 1.0) / (rounds + 1.0);
}

double accuracy_of(const BenchmarkReport& r, DesignMode mode) {
  for (const auto& m : r.result.modes)
    if (m.mode == mode) return m.report.metrics.accuracy;
  FAIL("mode missing");
  return 0.0;
}

}  // namespace

TEST_CASE("p_in = 1 and p_out = 0 give disjoint cliques") {
  SbmSpec spec;
  spec.block_sizes = {5, 7, 3};
  spec.p_in = 1.0;
  spec.p_out = 0.0;
  const SbmGraph s = generate_sbm(spec);
  CHECK(s.graph.edge_count() == 10 + 21 + 3);
  for (auto [u, v] : s.graph.edges()) CHECK(s.blocks[u] == s.blocks[v]);
}

TEST_CASE("block edge frequencies concentrate around p_in and p_out") {
  SbmSpec spec;
  spec.seed = 4;
  const SbmGraph s = generate_sbm(spec);
  double within = 0, within_pairs = 0, between = 0, between_pairs = 0;
  for (NodeId u = 0; u < 200; ++u)
    for (NodeId v = u + 1; v < 200; ++v) {
      const bool same = s.blocks[u] == s.blocks[v];
      (same ? within_pairs : between_pairs) += 1;
      (same ? within : between) += s.graph.has_edge(u, v);
    }
  CHECK(within_pairs == 2 * 4950);
  CHECK(std::abs(within / within_pairs - 0.1) < 3 * std::sqrt(0.1 * 0.9 / within_pairs));
  CHECK(std::abs(between / between_pairs - 0.01) < 3 * std::sqrt(0.01 * 0.99 / between_pairs));
  CHECK(s.warnings.empty());
}

TEST_CASE("generation is deterministic per seed") {
  SbmSpec spec;
  spec.degree_bias_spread = 1.0;
  spec.feature_informative_frac = 0.5;
  const BenchmarkData a = generate_benchmark(spec), b = generate_benchmark(spec);
  CHECK(a.sbm.graph.edges() == b.sbm.graph.edges());
  CHECK(a.labels == b.labels);
  CHECK(a.features.values == b.features.values);
  spec.seed = 1;
  CHECK(generate_benchmark(spec).sbm.graph.edges() != a.sbm.graph.edges());
}

TEST_CASE("sparse specs warn instead of failing") {
  SbmSpec spec;
  spec.block_sizes = {20, 20};
  spec.p_in = 0.01;
  spec.p_out = 0.0;
  CHECK_FALSE(generate_sbm(spec).warnings.empty());
}

TEST_CASE("labels follow block parity with flips") {
  std::vector<int> blocks;
  for (int b = 0; b < 4; ++b)
    for (int i = 0; i < 50; ++i) blocks.push_back(b);
  const std::vector<int> clean = generate_labels(blocks, 0.0, 1);
  for (std::size_t i = 0; i < blocks.size(); ++i) CHECK(clean[i] == blocks[i] % 2);

  // Flip 0.5: the block oracle is a coin.
  double agree = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::vector<int> y = generate_labels(blocks, 0.5, seed);
    for (std::size_t i = 0; i < y.size(); ++i) agree += y[i] == blocks[i] % 2;
    total += static_cast<double>(y.size());
  }
  CHECK(std::abs(agree / total - 0.5) < 3 * std::sqrt(0.25 / total));

  CHECK_THROWS(generate_labels(std::vector<int>(10, 0), 0.1, 1));
}

TEST_CASE("flip counts at rate 0.1 follow the binomial law") {
  const std::vector<int> blocks = [] {
    std::vector<int> b(200);
    for (int i = 0; i < 200; ++i) b[i] = i < 100 ? 0 : 1;
    return b;
  }();
  double inside = 0;
  const int seeds = 1000;
  for (int seed = 0; seed < seeds; ++seed) {
    const std::vector<int> y = generate_labels(blocks, 0.1, static_cast<std::uint64_t>(seed));
    int flips = 0;
    for (int i = 0; i < 200; ++i) flips += y[i] != blocks[i];
    inside += flips >= 14 && flips <= 26;
  }
  double p = 0;
  for (int k = 14; k <= 26; ++k) p += binomial_pmf(200, k, 0.1);
  CHECK(p == doctest::Approx(0.8762).epsilon(1e-3));
  const double freq = inside / seeds;
  CHECK(std::abs(freq - p) < 3 * std::sqrt(p * (1 - p) / seeds));
}

TEST_CASE("feature informativeness") {
  SbmSpec spec;
  spec.seed = 9;
  SUBCASE("no informative columns: labels are exchangeable") {
    spec.feature_informative_frac = 0.0;
    const BenchmarkData d = generate_benchmark(spec);
    CHECK(permutation_p_value(d.features.values, d.labels, 1) > 0.01);
  }
  SUBCASE("all informative columns: strongly separated") {
    spec.feature_informative_frac = 1.0;
    const BenchmarkData d = generate_benchmark(spec);
    CHECK(permutation_p_value(d.features.values, d.labels, 1) < 0.01);
  }
  SUBCASE("noise-free informative columns equal the label") {
    spec.feature_informative_frac = 1.0;
    spec.feature_noise = 0.0;
    const BenchmarkData d = generate_benchmark(spec);
    for (std::size_t i = 0; i < d.labels.size(); ++i)
      CHECK((d.features.values.row(static_cast<Eigen::Index>(i)).array() == d.labels[i]).all());
  }
  SUBCASE("column count follows the fraction") {
    spec.feature_dim = 10;
    spec.feature_informative_frac = 0.3;
    spec.feature_noise = 0.0;
    const BenchmarkData d = generate_benchmark(spec);
    int exact = 0;
    for (Eigen::Index c = 0; c < 10; ++c) {
      bool equal = true;
      for (std::size_t i = 0; i < d.labels.size(); ++i)
        equal = equal && d.features.values(static_cast<Eigen::Index>(i), c) == d.labels[i];
      exact += equal;
    }
    CHECK(exact == 3);
  }
}

TEST_CASE("generated inputs round-trip through the loaders") {
  testing::TempDir dir("bench_rt");
  SbmSpec spec;
  spec.block_sizes = {30, 30};
  spec.p_in = 0.2;
  spec.seed = 2;
  const BenchmarkData d = generate_benchmark(spec);
  write_benchmark_inputs(d, dir.path());

  const Graph g = load_edge_list(dir / "edges.txt").graph;
  CHECK(g.edge_count() == d.sbm.graph.edge_count());
  for (auto [u, v] : g.edges()) {
    CHECK(d.sbm.graph.has_edge(static_cast<NodeId>(std::stoul(g.original_id(u))),
                               static_cast<NodeId>(std::stoul(g.original_id(v)))));
  }
  const NodeFeatures f = load_features(dir / "features.csv", "id", g);
  const LabelTable labels = load_label_table(dir / "labels.csv", "id");
  const TargetSelection target = select_target(labels, "label");
  for (NodeId v = 0; v < g.node_count(); ++v) {
    const auto src = static_cast<Eigen::Index>(std::stoul(g.original_id(v)));
    CHECK(f.values.row(v) == d.features.values.row(src));
    CHECK(target.labels.at(g.original_id(v)) == d.labels[static_cast<std::size_t>(src)]);
  }
}

TEST_CASE("spec JSON and validation") {
  SbmSpec spec;
  spec.block_sizes = {3, 4};
  spec.p_in = 0.7;
  spec.seed = 77;
  const SbmSpec back = sbm_spec_from_json(nlohmann::json::parse(to_json(spec).dump()));
  CHECK(back.block_sizes == spec.block_sizes);
  CHECK(back.p_in == 0.7);
  CHECK(back.seed == 77);
  spec.p_out = 1.5;
  CHECK_THROWS_AS(spec.check(), InputError);
  spec.p_out = 0.1;
  spec.block_sizes = {};
  CHECK_THROWS_AS(spec.check(), InputError);
}

TEST_CASE("run_benchmark: communities rescue uninformative features") {
  SbmSpec spec;  // 2x100, p_in 0.1, p_out 0.01, flip 0.1, no informative features
  const BenchmarkReport r = run_benchmark(spec, ExperimentSettings{});
  REQUIRE(r.result.modes.size() == 3);
  CHECK(accuracy_of(r, DesignMode::X) >= accuracy_of(r, DesignMode::F) + 0.2);
  // One shared row split across modes.
  CHECK(r.result.modes[0].test_nodes == r.result.modes[2].test_nodes);
  CHECK(r.table.find("Accuracy") != std::string::npos);
}

TEST_CASE("run_benchmark: latent columns do little harm when features suffice") {
  SbmSpec spec;
  spec.p_in = spec.p_out = 0.05;
  spec.feature_informative_frac = 1.0;
  const BenchmarkReport r = run_benchmark(spec, ExperimentSettings{});
  CHECK(accuracy_of(r, DesignMode::F) >= accuracy_of(r, DesignMode::X) - 0.05);
}

TEST_CASE("run_benchmark is deterministic") {
  SbmSpec spec;
  spec.seed = 3;
  ExperimentSettings s;
  s.rank_grid = {2, 3};
  s.gamma_grid = {0.01, 0.04};
  const nlohmann::json a = to_json(run_benchmark(spec, s));
  const nlohmann::json b = to_json(run_benchmark(spec, s));
  CHECK(a.dump() == b.dump());
}
