#include "commlfm/featurize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "commlfm/csv.hpp"
#include "commlfm/error.hpp"

namespace commlfm {

NodeFeatures load_features(const std::filesystem::path& path, const std::string& id_column,
                           const Graph& g) {
  const CsvTable table = read_csv(path);
  const std::size_t id_col = table.column_index(id_column);

  std::unordered_map<std::string, NodeId> node_of;
  for (NodeId v = 0; v < g.node_count(); ++v) node_of.emplace(g.original_id(v), v);

  NodeFeatures out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c != id_col) out.column_names.push_back(table.header[c]);
  }
  const auto n = static_cast<Eigen::Index>(g.node_count());
  const auto f = static_cast<Eigen::Index>(out.column_names.size());
  out.values = Eigen::MatrixXd::Zero(n, f);
  out.observed = BoolMatrix::Constant(n, f, false);
  std::vector<char> seen(g.node_count(), 0);

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto it = node_of.find(row[id_col]);
    if (it == node_of.end()) continue;
    const NodeId v = it->second;
    if (seen[v]) {
      throw InputError(path.string() + ": duplicate row for id '" + row[id_col] + "'");
    }
    seen[v] = 1;
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == id_col) continue;
      if (const auto value = parse_cell(row[c])) {
        out.values(v, col) = *value;
        out.observed(v, col) = true;
      } else if (!is_missing(row[c])) {
        throw InputError(path.string() + ": line " + std::to_string(r + 2) + ", column '" +
                         table.header[c] + "': not a number: '" + row[c] + "'");
      }
      ++col;
    }
  }

  std::string absent;
  std::size_t absent_count = 0;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (seen[v]) continue;
    if (absent_count++ < 20) absent += (absent.empty() ? "" : ", ") + g.original_id(v);
  }
  if (absent_count > 0) {
    throw InputError(path.string() + ": no feature row for " + std::to_string(absent_count) +
                     " graph node(s): " + absent + (absent_count > 20 ? ", ..." : ""));
  }

  for (Eigen::Index c = 0; c < f; ++c) {
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (out.observed(r, c)) {
        sum += out.values(r, c);
        ++count;
      }
    }
    const double mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (!out.observed(r, c)) out.values(r, c) = mean;
    }
  }
  return out;
}

void write_features_csv(const NodeFeatures& features, const Graph& g,
                        const std::filesystem::path& path, const std::string& id_column) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write features: " + path.string());
  out << id_column;
  for (const auto& name : features.column_names) out << ',' << name;
  out << '\n';
  for (NodeId v = 0; v < g.node_count(); ++v) {
    out << g.original_id(v);
    for (Eigen::Index c = 0; c < features.values.cols(); ++c) {
      out << ',';
      if (features.observed.size() == 0 || features.observed(v, c)) {
        out << format_double(features.values(v, c));
      } else {
        out << "NA";
      }
    }
    out << '\n';
  }
}

Eigen::MatrixXd neighbor_average(const Eigen::MatrixXd& features, const Graph& g) {
  if (static_cast<std::size_t>(features.rows()) != g.node_count()) {
    throw std::invalid_argument("neighbor_average: feature rows do not match node count");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(features.rows(), features.cols());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    const auto nb = g.neighbors(v);
    if (nb.empty()) continue;
    for (NodeId w : nb) out.row(v) += features.row(w);
    out.row(v) /= static_cast<double>(nb.size());
  }
  return out;
}

const char* to_string(DesignMode mode) {
  switch (mode) {
    case DesignMode::F: return "F";
    case DesignMode::N: return "N";
    case DesignMode::X: return "X";
  }
  return "?";
}

DesignMode parse_design_mode(const std::string& text) {
  if (text == "F" || text == "f") return DesignMode::F;
  if (text == "N" || text == "n") return DesignMode::N;
  if (text == "X" || text == "x") return DesignMode::X;
  throw InputError("unknown design mode '" + text + "' (expected F, N or X)");
}

const char* to_string(ColumnSource source) {
  switch (source) {
    case ColumnSource::feature: return "feature";
    case ColumnSource::neighbor_avg: return "neighbor-avg";
    case ColumnSource::latent_u: return "latent-U";
    case ColumnSource::latent_v: return "latent-V";
  }
  return "?";
}

DesignMatrix assemble_design(DesignMode mode, const NodeFeatures& features, const Graph& g,
                             const LinkModel* link) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  if (features.values.rows() != n) {
    throw std::invalid_argument("assemble_design: feature rows do not match node count");
  }
  const Eigen::Index f = features.values.cols();
  DesignMatrix d;
  d.mode = mode;
  auto append_names = [&](ColumnSource source, Eigen::Index count, auto name_of) {
    for (Eigen::Index c = 0; c < count; ++c) {
      d.provenance.push_back(source);
      d.column_names.push_back(name_of(c));
    }
  };
  auto feature_name = [&](Eigen::Index c) {
    return static_cast<std::size_t>(c) < features.column_names.size()
               ? features.column_names[static_cast<std::size_t>(c)]
               : "f" + std::to_string(c);
  };

  switch (mode) {
    case DesignMode::F:
      d.values = features.values;
      append_names(ColumnSource::feature, f, feature_name);
      break;
    case DesignMode::N: {
      d.values.resize(n, 2 * f);
      d.values.leftCols(f) = features.values;
      d.values.rightCols(f) = neighbor_average(features.values, g);
      append_names(ColumnSource::feature, f, feature_name);
      append_names(ColumnSource::neighbor_avg, f,
                   [&](Eigen::Index c) { return "avg_" + feature_name(c); });
      break;
    }
    case DesignMode::X: {
      if (link == nullptr) throw std::invalid_argument("assemble_design: mode X needs a link model");
      link->check_shape();
      if (static_cast<Eigen::Index>(link->node_count()) != n) {
        throw std::invalid_argument("assemble_design: link model node count does not match graph");
      }
      const auto k = static_cast<Eigen::Index>(link->rank());
      d.values.resize(n, 2 * k + f);
      d.values.leftCols(k) = link->U;
      d.values.middleCols(k, k) = link->V;
      d.values.rightCols(f) = features.values;
      append_names(ColumnSource::latent_u, k, [](Eigen::Index c) { return "U" + std::to_string(c); });
      append_names(ColumnSource::latent_v, k, [](Eigen::Index c) { return "V" + std::to_string(c); });
      append_names(ColumnSource::feature, f, feature_name);
      break;
    }
  }
  return d;
}

ColumnStats fit_column_stats(const Eigen::MatrixXd& values, std::span<const NodeId> rows) {
  const Eigen::Index d = values.cols();
  ColumnStats stats{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
  const std::size_t count = rows.empty() ? static_cast<std::size_t>(values.rows()) : rows.size();
  if (count == 0) return stats;
  auto row_at = [&](std::size_t r) {
    return rows.empty() ? static_cast<Eigen::Index>(r) : static_cast<Eigen::Index>(rows[r]);
  };
  for (std::size_t r = 0; r < count; ++r) stats.mean += values.row(row_at(r)).transpose();
  stats.mean /= static_cast<double>(count);
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (std::size_t r = 0; r < count; ++r) {
    var += (values.row(row_at(r)).transpose() - stats.mean).array().square().matrix();
  }
  var /= static_cast<double>(count);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double sd = std::sqrt(var[c]);
    // Constant columns are only centered.
    stats.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(stats.mean[c])) ? sd : 1.0;
  }
  return stats;
}

std::pair<DesignMatrix, ColumnStats> standardize(const DesignMatrix& design,
                                                 const std::optional<ColumnStats>& stats) {
  ColumnStats used = stats ? *stats : fit_column_stats(design.values);
  if (used.mean.size() != design.values.cols() || used.scale.size() != design.values.cols()) {
    throw std::invalid_argument("standardize: column stats do not match design width");
  }
  DesignMatrix out = design;
  out.values = (design.values.rowwise() - used.mean.transpose()).array().rowwise() /
               used.scale.transpose().array();
  return {std::move(out), std::move(used)};
}

}  // namespace commlfm
