#include "commlfm/synthbench.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "commlfm/error.hpp"
#include "commlfm/random.hpp"

namespace commlfm {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

double pair_probability(double p, double bias_sum) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  if (bias_sum == 0.0) return p;
  return sigmoid(std::log(p / (1.0 - p)) + bias_sum);
}

}  // namespace

void SbmSpec::check() const {
  if (block_sizes.empty()) throw InputError("sbm: block_sizes must be non-empty");
  for (auto size : block_sizes) {
    if (size < 1) throw InputError("sbm: block sizes must be >= 1");
  }
  if (!is_probability(p_in) || !is_probability(p_out)) throw InputError("sbm: p_in and p_out must be in [0, 1]");
  if (!is_probability(label_flip_rate)) throw InputError("sbm: label_flip_rate must be in [0, 1]");
  if (!(feature_informative_frac >= 0.0 && feature_informative_frac <= 1.0)) {
    throw InputError("sbm: feature_informative_frac must be in [0, 1]");
  }
  if (!(degree_bias_spread >= 0.0)) throw InputError("sbm: degree_bias_spread must be >= 0");
  if (!(feature_noise >= 0.0)) throw InputError("sbm: feature_noise must be >= 0");
}

std::size_t SbmSpec::node_count() const {
  std::size_t n = 0;
  for (auto size : block_sizes) n += size;
  return n;
}

nlohmann::json to_json(const SbmSpec& s) {
  return {{"block_sizes", s.block_sizes},
          {"p_in", s.p_in},
          {"p_out", s.p_out},
          {"degree_bias_spread", s.degree_bias_spread},
          {"label_flip_rate", s.label_flip_rate},
          {"feature_informative_frac", s.feature_informative_frac},
          {"feature_dim", s.feature_dim},
          {"feature_noise", s.feature_noise},
          {"seed", s.seed}};
}

SbmSpec sbm_spec_from_json(const nlohmann::json& j) {
  SbmSpec s;
  try {
    if (j.contains("block_sizes")) s.block_sizes = j.at("block_sizes").get<std::vector<std::size_t>>();
    s.p_in = j.value("p_in", s.p_in);
    s.p_out = j.value("p_out", s.p_out);
    s.degree_bias_spread = j.value("degree_bias_spread", s.degree_bias_spread);
    s.label_flip_rate = j.value("label_flip_rate", s.label_flip_rate);
    s.feature_informative_frac = j.value("feature_informative_frac", s.feature_informative_frac);
    s.feature_dim = j.value("feature_dim", s.feature_dim);
    s.feature_noise = j.value("feature_noise", s.feature_noise);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("sbm spec: ") + e.what());
  }
  s.check();
  return s;
}

SbmGraph generate_sbm(const SbmSpec& spec) {
  spec.check();
  const std::size_t n = spec.node_count();
  SbmGraph out;
  out.blocks.reserve(n);
  for (std::size_t b = 0; b < spec.block_sizes.size(); ++b) {
    out.blocks.insert(out.blocks.end(), spec.block_sizes[b], static_cast<int>(b));
  }

  Rng rng(derive_seed(spec.seed, "sbm-graph"));
  std::vector<double> bias(n, 0.0);
  if (spec.degree_bias_spread > 0.0) {
    for (auto& b : bias) b = rng.uniform(-spec.degree_bias_spread, spec.degree_bias_spread);
  }
  std::vector<Edge> edges;
  double expected_edges = 0.0;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const double p = pair_probability(out.blocks[u] == out.blocks[v] ? spec.p_in : spec.p_out,
                                        bias[u] + bias[v]);
      expected_edges += p;
      if (rng.uniform() < p) edges.emplace_back(u, v);
    }
  }
  const double expected_degree = n > 0 ? 2.0 * expected_edges / static_cast<double>(n) : 0.0;
  if (expected_degree < 1.0) {
    out.warnings.push_back("expected average degree " + std::to_string(expected_degree) + " is below 1");
  }
  out.graph = Graph::from_edges(n, edges);
  return out;
}

std::vector<int> generate_labels(std::span<const int> blocks, double flip_rate, std::uint64_t seed) {
  if (std::set<int>(blocks.begin(), blocks.end()).size() < 2) {
    throw InputError("generate_labels: need at least two blocks");
  }
  if (!is_probability(flip_rate)) throw InputError("generate_labels: flip rate must be in [0, 1]");
  Rng rng(seed);
  std::vector<int> labels;
  labels.reserve(blocks.size());
  for (int b : blocks) {
    const int parity = b % 2;
    labels.push_back(rng.bernoulli(flip_rate) ? 1 - parity : parity);
  }
  return labels;
}

NodeFeatures generate_features(const SbmSpec& spec, std::span<const int> blocks,
                               std::span<const int> labels) {
  spec.check();
  if (blocks.size() != labels.size()) throw std::invalid_argument("generate_features: length mismatch");
  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto dim = static_cast<Eigen::Index>(spec.feature_dim);
  const auto informative = static_cast<Eigen::Index>(
      std::lround(spec.feature_informative_frac * static_cast<double>(spec.feature_dim)));
  Rng rng(derive_seed(spec.seed, "sbm-features"));
  NodeFeatures out;
  out.values.resize(n, dim);
  out.observed = BoolMatrix::Constant(n, dim, true);
  for (Eigen::Index c = 0; c < dim; ++c) out.column_names.push_back("f" + std::to_string(c));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      const double signal = c < informative ? static_cast<double>(labels[static_cast<std::size_t>(r)]) : 0.0;
      out.values(r, c) = signal + spec.feature_noise * rng.normal();
    }
  }
  return out;
}

BenchmarkData generate_benchmark(const SbmSpec& spec) {
  BenchmarkData data;
  data.sbm = generate_sbm(spec);
  data.labels = generate_labels(data.sbm.blocks, spec.label_flip_rate, derive_seed(spec.seed, "sbm-labels"));
  data.features = generate_features(spec, data.sbm.blocks, data.labels);
  return data;
}

void write_benchmark_inputs(const BenchmarkData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Graph& g = data.sbm.graph;
  write_edge_list(g, dir / "edges.txt");
  write_features_csv(data.features, g, dir / "features.csv");
  std::ofstream out(dir / "labels.csv");
  if (!out) throw InputError("cannot write labels: " + (dir / "labels.csv").string());
  out << "id,label\n";
  for (NodeId v = 0; v < g.node_count(); ++v) out << g.original_id(v) << ',' << data.labels[v] << '\n';
}

BenchmarkReport run_benchmark(const SbmSpec& spec, ExperimentSettings settings) {
  BenchmarkReport report;
  report.spec = spec;
  const BenchmarkData data = generate_benchmark(spec);
  report.warnings = data.sbm.warnings;
  settings.modes = {DesignMode::F, DesignMode::N, DesignMode::X};
  settings.seed = spec.seed;
  report.result = run_experiment(data.sbm.graph, data.features, data.labels, settings);
  report.table = comparison_table(report.result);
  return report;
}

nlohmann::json to_json(const BenchmarkReport& report) {
  nlohmann::json modes = nlohmann::json::object();
  for (const auto& m : report.result.modes) {
    modes[to_string(m.mode)] = {{"lambda", m.selection.lambda}, {"report", to_json(m.report)}};
  }
  nlohmann::json j = {{"spec", to_json(report.spec)}, {"modes", std::move(modes)}, {"warnings", report.warnings}};
  if (report.result.link) {
    j["link"] = to_json(*report.result.link);
    j["link"]["test_accuracy"] = report.result.link_test_accuracy;
  }
  return j;
}

}  // namespace commlfm
