#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "commlfm/graph.hpp"
#include "commlfm/linkmf.hpp"

namespace commlfm {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Dense per-node attributes, rows in graph node order.
struct NodeFeatures {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;
  BoolMatrix observed;  // true where the cell was present in the source

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

// Reads a feature CSV with a header row and aligns its rows to the graph's
// original ids. Empty cells and "NA" are missing and get the observed column
// mean (0 if the column has no observations). Rows for ids not in the graph
// are ignored.
NodeFeatures load_features(const std::filesystem::path& path, const std::string& id_column,
                           const Graph& g);

void write_features_csv(const NodeFeatures& features, const Graph& g,
                        const std::filesystem::path& path, const std::string& id_column = "id");

// Row i is the mean of the feature rows of i's neighbors; isolated nodes get
// a zero row.
Eigen::MatrixXd neighbor_average(const Eigen::MatrixXd& features, const Graph& g);

enum class DesignMode { F, N, X };
const char* to_string(DesignMode mode);
DesignMode parse_design_mode(const std::string& text);

enum class ColumnSource { feature, neighbor_avg, latent_u, latent_v };
const char* to_string(ColumnSource source);

struct DesignMatrix {
  Eigen::MatrixXd values;
  DesignMode mode = DesignMode::F;
  std::vector<ColumnSource> provenance;
  std::vector<std::string> column_names;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

// F: [F]; N: [F | neighbor average]; X: [U | V | F]. Mode X needs a link
// model over the same nodes.
DesignMatrix assemble_design(DesignMode mode, const NodeFeatures& features, const Graph& g,
                             const LinkModel* link = nullptr);

struct ColumnStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // population std-dev, 1 for constant columns
};

// Fits on the given rows (all rows when empty).
ColumnStats fit_column_stats(const Eigen::MatrixXd& values, std::span<const NodeId> rows = {});

// (x - mean) / scale per column. Fits the stats on every row of D when none
// are supplied.
std::pair<DesignMatrix, ColumnStats> standardize(const DesignMatrix& design,
                                                 const std::optional<ColumnStats>& stats = std::nullopt);

}  // namespace commlfm
