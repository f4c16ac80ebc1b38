#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "commlfm/classify.hpp"
#include "commlfm/evalkit.hpp"
#include "commlfm/featurize.hpp"
#include "commlfm/graph.hpp"
#include "commlfm/linkmf.hpp"

namespace commlfm {

inline constexpr const char* kVersion = "0.1.0";

// Everything that shapes an experiment once the graph, features and labels
// are in memory.
struct ExperimentSettings {
  std::vector<DesignMode> modes{DesignMode::X};
  std::vector<std::size_t> rank_grid = default_rank_grid();
  std::vector<double> gamma_grid = default_gamma_grid();
  std::vector<double> lambda_grid = default_lambda_grid();
  std::uint64_t seed = 0;
  bool standardize = true;
  unsigned threads = 1;
  double threshold = 0.5;
  int percentile_step = 5;
  DescentOptions descent;
  LogRegOptions logreg;
};

struct ModeResult {
  DesignMode mode = DesignMode::F;
  LambdaSelection selection;
  std::vector<NodeId> test_nodes;
  std::vector<int> test_labels;
  Prediction test_prediction;
  EvalReport report;
};

struct ExperimentResult {
  std::optional<LinkSelection> link;
  std::optional<PairSplits> pairs;
  double link_test_accuracy = 0.0;
  RowSplit split;
  std::vector<ModeResult> modes;
};

// Runs factorization (when any mode needs it), design assembly, lambda
// selection and test evaluation for every mode on one shared row split.
// labels[v] is the 0/1 target of node v.
ExperimentResult run_experiment(const Graph& g, const NodeFeatures& features,
                                std::span<const int> labels, const ExperimentSettings& settings);

// Head-to-head metrics table across the modes of one experiment.
std::string comparison_table(const ExperimentResult& result);

// Labels table: header row with an id column and one or more target columns.
struct LabelTable {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> cells;  // cells[column][row]; "" = missing
};

LabelTable load_label_table(const std::filesystem::path& path, const std::string& id_column);

struct TargetSelection {
  std::string description;
  std::map<std::string, int> labels;  // by original id; missing rows absent
};

// Rules:
//   "auto"            one binary column -> that column; one categorical column
//                     -> its most frequent value is the positive class; several
//                     binary columns -> the one with the most positives.
//   "auto:<column>"   most frequent value of <column> is the positive class.
//   "<column>"        a 0/1 column used as is.
//   "<column>=<v>"    1 where the cell equals v.
// Frequency ties go to the lexicographically smaller value or column name.
TargetSelection select_target(const LabelTable& table, const std::string& rule);

// Drops graph nodes without a label, then re-induces the graph.
Subgraph prune_unlabeled(const Graph& g, const TargetSelection& target);

struct PipelineConfig {
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path labels;
  std::filesystem::path out = "out";
  std::string id_column = "id";
  std::string target = "auto";
  std::size_t kcore = 0;
  bool symmetrize = true;
  ExperimentSettings settings;
};

nlohmann::json to_json(const PipelineConfig& config);
// Accepts a config object, or a run manifest carrying one under "config".
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

// Stable hex digest of the canonical config JSON.
std::string config_hash(const PipelineConfig& config);

// Graph stages shared by the subcommands: load, prune to labeled nodes when a
// labels file is configured, then k-core.
struct PreparedGraph {
  LoadedGraph loaded;
  std::optional<TargetSelection> target;
  std::size_t labeled_nodes = 0;
  Graph graph;  // the core, ids re-indexed; original ids preserved
};

PreparedGraph prepare_graph(const PipelineConfig& config);

// labels[v] for every node of the prepared graph.
std::vector<int> node_labels(const PreparedGraph& prepared);

nlohmann::json graph_summary(const PreparedGraph& prepared);

// Full pipeline: load, prune, k-core, features, experiment, artifacts.
// Writes a manifest in every case; on failure it is marked partial and the
// error is rethrown.
ExperimentResult run_pipeline(const PipelineConfig& config);

// Writes report_<mode>.json, curve CSVs, classifier and predictions for one
// mode into dir. Returns the file names written.
std::vector<std::string> write_mode_artifacts(const ModeResult& mode, const Graph& g,
                                              const std::filesystem::path& dir);

}  // namespace commlfm
