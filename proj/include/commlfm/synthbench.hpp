#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "commlfm/featurize.hpp"
#include "commlfm/graph.hpp"
#include "commlfm/pipeline.hpp"

namespace commlfm {

// Planted-partition benchmark with logit-shifted degree heterogeneity,
// block-parity labels and partly informative features.
struct SbmSpec {
  std::vector<std::size_t> block_sizes{100, 100};
  double p_in = 0.1;
  double p_out = 0.01;
  double degree_bias_spread = 0.0;
  double label_flip_rate = 0.1;
  double feature_informative_frac = 0.0;
  std::size_t feature_dim = 10;
  double feature_noise = 1.0;  // std-dev of the Gaussian noise
  std::uint64_t seed = 0;

  void check() const;
  std::size_t node_count() const;
};

nlohmann::json to_json(const SbmSpec& spec);
SbmSpec sbm_spec_from_json(const nlohmann::json& j);

struct SbmGraph {
  Graph graph;
  std::vector<int> blocks;
  std::vector<std::string> warnings;
};

// Each unordered pair {u, v} is an edge with probability
// sigmoid(logit(p) + b_u + b_v), p = p_in within a block and p_out across,
// b uniform in [-spread, spread]. p = 0 and p = 1 are exact.
SbmGraph generate_sbm(const SbmSpec& spec);

// Block parity, each label then flipped with probability flip_rate.
std::vector<int> generate_labels(std::span<const int> blocks, double flip_rate, std::uint64_t seed);

// round(frac * dim) columns are label + noise, the rest pure noise.
NodeFeatures generate_features(const SbmSpec& spec, std::span<const int> blocks,
                               std::span<const int> labels);

struct BenchmarkData {
  SbmGraph sbm;
  std::vector<int> labels;
  NodeFeatures features;
};

BenchmarkData generate_benchmark(const SbmSpec& spec);

// edges.txt, features.csv and labels.csv in the formats the loaders read.
void write_benchmark_inputs(const BenchmarkData& data, const std::filesystem::path& dir);

struct BenchmarkReport {
  SbmSpec spec;
  ExperimentResult result;
  std::string table;
  std::vector<std::string> warnings;
};

// Runs modes F, N and X on identical splits. settings.modes is ignored.
BenchmarkReport run_benchmark(const SbmSpec& spec, ExperimentSettings settings);

nlohmann::json to_json(const BenchmarkReport& report);

}  // namespace commlfm
