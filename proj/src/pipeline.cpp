#include "commlfm/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "commlfm/csv.hpp"
#include "commlfm/error.hpp"
#include "commlfm/random.hpp"

namespace commlfm {

namespace fs = std::filesystem;

ExperimentResult run_experiment(const Graph& g, const NodeFeatures& features,
                                std::span<const int> labels, const ExperimentSettings& settings) {
  const std::size_t n = g.node_count();
  if (features.rows() != n) {
    throw InputError("feature matrix has " + std::to_string(features.rows()) + " rows, graph has " +
                     std::to_string(n) + " nodes");
  }
  if (labels.size() != n) throw InputError("label vector does not match node count");
  if (settings.modes.empty()) throw InputError("no design modes requested");

  ExperimentResult result;
  const bool needs_link = std::find(settings.modes.begin(), settings.modes.end(), DesignMode::X) !=
                          settings.modes.end();
  if (needs_link) {
    result.pairs = sample_pairs(g, derive_seed(settings.seed, "pairs"));
    DescentOptions descent = settings.descent;
    descent.seed = derive_seed(settings.seed, "link");
    result.link = select_hyperparameters(g, *result.pairs, settings.rank_grid, settings.gamma_grid,
                                         descent, settings.threads);
    result.link_test_accuracy = link_prediction_accuracy(result.link->model, result.pairs->test);
  }

  std::vector<NodeId> ids(n);
  std::iota(ids.begin(), ids.end(), NodeId{0});
  result.split = split_rows(ids, derive_seed(settings.seed, "rows"));

  for (DesignMode mode : settings.modes) {
    ModeResult mr;
    mr.mode = mode;
    DesignMatrix design =
        assemble_design(mode, features, g, result.link ? &result.link->model : nullptr);
    if (settings.standardize) {
      design = standardize(design, fit_column_stats(design.values, result.split.train)).first;
    }
    mr.selection = select_lambda(design.values, labels, result.split, settings.lambda_grid,
                                 settings.logreg, settings.threshold);
    for (auto source : design.provenance) mr.selection.model.columns.emplace_back(to_string(source));

    mr.test_nodes = result.split.test;
    mr.test_labels = gather(labels, mr.test_nodes);
    mr.test_prediction = predict(mr.selection.model, gather_rows(design.values, mr.test_nodes));
    mr.report = evaluate(mr.test_labels, mr.test_prediction.labels, mr.test_prediction.confidence,
                         mr.test_nodes, g, {settings.threshold, settings.percentile_step});
    result.modes.push_back(std::move(mr));
  }
  return result;
}

std::string comparison_table(const ExperimentResult& result) {
  std::vector<std::pair<std::string, MetricsRecord>> rows;
  for (const auto& m : result.modes) rows.emplace_back(to_string(m.mode), m.report.metrics);
  return metrics_table(rows);
}

LabelTable load_label_table(const fs::path& path, const std::string& id_column) {
  const CsvTable csv = read_csv(path);
  const std::size_t id_col = csv.column_index(id_column);
  LabelTable table;
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    if (c != id_col) table.columns.push_back(csv.header[c]);
  }
  if (table.columns.empty()) throw InputError(path.string() + ": no target columns besides '" + id_column + "'");
  table.cells.resize(table.columns.size());
  std::unordered_set<std::string> seen;
  for (const auto& row : csv.rows) {
    if (!seen.insert(row[id_col]).second) {
      throw InputError(path.string() + ": duplicate id '" + row[id_col] + "'");
    }
    table.ids.push_back(row[id_col]);
    std::size_t out_col = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == id_col) continue;
      table.cells[out_col++].push_back(is_missing(row[c]) ? std::string{} : row[c]);
    }
  }
  return table;
}

namespace {

std::optional<int> as_binary(const std::string& cell) {
  const auto v = parse_cell(cell);
  if (v && (*v == 0.0 || *v == 1.0)) return static_cast<int>(*v);
  return std::nullopt;
}

bool is_binary_column(const std::vector<std::string>& cells) {
  return std::all_of(cells.begin(), cells.end(),
                     [](const std::string& c) { return c.empty() || as_binary(c).has_value(); });
}

std::size_t find_column(const LabelTable& table, const std::string& name) {
  const auto it = std::find(table.columns.begin(), table.columns.end(), name);
  if (it == table.columns.end()) throw InputError("labels table has no column '" + name + "'");
  return static_cast<std::size_t>(it - table.columns.begin());
}

TargetSelection from_binary(const LabelTable& table, std::size_t col) {
  if (!is_binary_column(table.cells[col])) {
    throw InputError("target column '" + table.columns[col] +
                     "' is not 0/1; use '<column>=<value>' or 'auto:<column>'");
  }
  TargetSelection out;
  out.description = "column '" + table.columns[col] + "'";
  for (std::size_t r = 0; r < table.ids.size(); ++r) {
    if (const auto b = as_binary(table.cells[col][r])) out.labels[table.ids[r]] = *b;
  }
  return out;
}

TargetSelection from_value(const LabelTable& table, std::size_t col, const std::string& value,
                           const std::string& why) {
  TargetSelection out;
  out.description = "'" + table.columns[col] + "' == '" + value + "'" + why;
  for (std::size_t r = 0; r < table.ids.size(); ++r) {
    const auto& cell = table.cells[col][r];
    if (!cell.empty()) out.labels[table.ids[r]] = cell == value ? 1 : 0;
  }
  return out;
}

TargetSelection most_frequent_value(const LabelTable& table, std::size_t col) {
  std::map<std::string, std::size_t> counts;  // ordered: ties resolve lexicographically
  for (const auto& cell : table.cells[col]) {
    if (!cell.empty()) ++counts[cell];
  }
  if (counts.empty()) throw InputError("target column '" + table.columns[col] + "' is entirely missing");
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return from_value(table, col, best->first,
                    " (most frequent value, " + std::to_string(best->second) + " positives)");
}

}  // namespace

TargetSelection select_target(const LabelTable& table, const std::string& rule) {
  TargetSelection out;
  if (rule == "auto") {
    if (table.columns.size() == 1) {
      out = is_binary_column(table.cells[0]) ? from_binary(table, 0) : most_frequent_value(table, 0);
    } else {
      std::optional<std::size_t> best;
      std::size_t best_count = 0;
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (!is_binary_column(table.cells[c])) {
          throw InputError("target 'auto' over several columns needs 0/1 columns; '" +
                           table.columns[c] + "' is not");
        }
        std::size_t positives = 0;
        for (const auto& cell : table.cells[c]) positives += as_binary(cell).value_or(0);
        if (!best || positives > best_count ||
            (positives == best_count && table.columns[c] < table.columns[*best])) {
          best = c;
          best_count = positives;
        }
      }
      out = from_binary(table, *best);
      out.description += " (most positives, " + std::to_string(best_count) + ")";
    }
  } else if (rule.rfind("auto:", 0) == 0) {
    out = most_frequent_value(table, find_column(table, rule.substr(5)));
  } else if (const auto eq = rule.find('='); eq != std::string::npos) {
    out = from_value(table, find_column(table, rule.substr(0, eq)), rule.substr(eq + 1), "");
  } else {
    out = from_binary(table, find_column(table, rule));
  }
  if (out.labels.empty()) throw InputError("target " + out.description + " is missing for every row");
  return out;
}

Subgraph prune_unlabeled(const Graph& g, const TargetSelection& target) {
  std::vector<NodeId> keep;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (target.labels.count(g.original_id(v))) keep.push_back(v);
  }
  return induced_subgraph(g, keep);
}

nlohmann::json to_json(const PipelineConfig& c) {
  std::vector<std::string> modes;
  for (auto m : c.settings.modes) modes.emplace_back(to_string(m));
  return {{"edges", c.edges.string()},
          {"features", c.features.string()},
          {"labels", c.labels.string()},
          {"out", c.out.string()},
          {"id_column", c.id_column},
          {"target", c.target},
          {"kcore", c.kcore},
          {"symmetrize", c.symmetrize},
          {"mode", modes},
          {"k_grid", c.settings.rank_grid},
          {"gamma_grid", c.settings.gamma_grid},
          {"lambda_grid", c.settings.lambda_grid},
          {"seed", c.settings.seed},
          {"standardize", c.settings.standardize},
          {"threads", c.settings.threads},
          {"threshold", c.settings.threshold},
          {"percentile_step", c.settings.percentile_step},
          {"descent_max_iterations", c.settings.descent.max_iterations},
          {"descent_tolerance", c.settings.descent.relative_tolerance},
          {"link_weights", c.settings.descent.weights == WeightBasis::sample ? "sample" : "graph"},
          {"gamma_scale", c.settings.descent.penalty == PenaltyScale::mean ? "mean" : "per_pair"}};
}

namespace {

std::vector<DesignMode> parse_modes(const nlohmann::json& j) {
  std::vector<std::string> names;
  if (j.is_string()) {
    std::stringstream ss(j.get<std::string>());
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) names.push_back(part);
    }
  } else {
    names = j.get<std::vector<std::string>>();
  }
  std::vector<DesignMode> modes;
  for (const auto& name : names) modes.push_back(parse_design_mode(name));
  return modes;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const nlohmann::json& input) {
  const nlohmann::json& j = input.contains("config") ? input.at("config") : input;
  PipelineConfig c;
  try {
    c.edges = j.value("edges", std::string{});
    c.features = j.value("features", std::string{});
    c.labels = j.value("labels", std::string{});
    c.out = j.value("out", c.out.string());
    c.id_column = j.value("id_column", c.id_column);
    c.target = j.value("target", c.target);
    c.kcore = j.value("kcore", c.kcore);
    c.symmetrize = j.value("symmetrize", c.symmetrize);
    auto& s = c.settings;
    if (j.contains("mode")) s.modes = parse_modes(j.at("mode"));
    if (j.contains("k_grid")) s.rank_grid = j.at("k_grid").get<std::vector<std::size_t>>();
    if (j.contains("gamma_grid")) s.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
    if (j.contains("lambda_grid")) s.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    s.seed = j.value("seed", s.seed);
    s.standardize = j.value("standardize", s.standardize);
    s.threads = j.value("threads", s.threads);
    s.threshold = j.value("threshold", s.threshold);
    s.percentile_step = j.value("percentile_step", s.percentile_step);
    s.descent.max_iterations = j.value("descent_max_iterations", s.descent.max_iterations);
    s.descent.relative_tolerance = j.value("descent_tolerance", s.descent.relative_tolerance);
    const std::string weights = j.value("link_weights", std::string("sample"));
    if (weights != "sample" && weights != "graph") {
      throw InputError("config: link_weights must be sample or graph");
    }
    s.descent.weights = weights == "sample" ? WeightBasis::sample : WeightBasis::graph;
    const std::string scale = j.value("gamma_scale", std::string("mean"));
    if (scale != "mean" && scale != "per_pair") {
      throw InputError("config: gamma_scale must be mean or per_pair");
    }
    s.descent.penalty = scale == "mean" ? PenaltyScale::mean : PenaltyScale::per_pair;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  const auto& s = c.settings;
  if (s.modes.empty() || s.rank_grid.empty() || s.gamma_grid.empty() || s.lambda_grid.empty()) {
    throw InputError("config: mode list and grids must be non-empty");
  }
  if (!(s.threshold > 0.0 && s.threshold < 1.0)) throw InputError("config: threshold must be in (0, 1)");
  return c;
}

std::string config_hash(const PipelineConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(config).dump())));
  return buf;
}

namespace {

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

std::vector<std::string> write_mode_artifacts(const ModeResult& mode, const Graph& g, const fs::path& dir) {
  const std::string tag = to_string(mode.mode);
  std::vector<std::string> written;
  auto record = [&](const std::string& name) {
    written.push_back(name);
    return dir / name;
  };

  nlohmann::json report = to_json(mode.report);
  report["mode"] = tag;
  write_json(report, record("report_" + tag + ".json"));

  nlohmann::json classifier = to_json(mode.selection.model);
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& s : mode.selection.scores) {
    nlohmann::json entry = {{"lambda", s.lambda}};
    if (s.failed) {
      entry["error"] = s.error;
    } else {
      entry["validation_bcr"] = s.validation_bcr;
    }
    scores.push_back(std::move(entry));
  }
  write_json(classifier, record("classifier_" + tag + ".json"));
  write_json({{"lambda", mode.selection.lambda}, {"grid", std::move(scores)}},
             record("lambda_selection_" + tag + ".json"));

  {
    std::ofstream out(record("predictions_" + tag + ".csv"));
    out << "id,label,confidence,predicted\n";
    for (std::size_t i = 0; i < mode.test_nodes.size(); ++i) {
      out << g.original_id(mode.test_nodes[i]) << ',' << mode.test_labels[i] << ','
          << format_double(mode.test_prediction.confidence[i]) << ',' << mode.test_prediction.labels[i]
          << '\n';
    }
  }

  if (mode.report.pr) write_curve_csv(mode.report.pr->curve, record("curve_" + tag + "_pr.csv"));
  write_curve_csv(mode.report.accuracy_at_percentile, record("curve_" + tag + "_accuracy_at_percentile.csv"));
  write_curve_csv(mode.report.per_degree_accuracy, record("curve_" + tag + "_per_degree_accuracy.csv"));
  write_curve_csv(mode.report.per_degree_perplexity, record("curve_" + tag + "_per_degree_perplexity.csv"));
  return written;
}

PreparedGraph prepare_graph(const PipelineConfig& config) {
  if (config.edges.empty()) throw InputError("no edges file configured");
  PreparedGraph out{load_edge_list(config.edges, config.symmetrize), std::nullopt, 0, Graph{}};
  Graph labeled = out.loaded.graph;
  if (!config.labels.empty()) {
    out.target = select_target(load_label_table(config.labels, config.id_column), config.target);
    labeled = prune_unlabeled(out.loaded.graph, *out.target).graph;
  }
  out.labeled_nodes = labeled.node_count();
  out.graph = k_core(labeled, config.kcore).graph;
  if (out.graph.node_count() == 0) {
    throw InputError("the " + std::to_string(config.kcore) + "-core of the " +
                     (out.target ? "labeled " : "") + "graph is empty");
  }
  return out;
}

std::vector<int> node_labels(const PreparedGraph& prepared) {
  if (!prepared.target) throw InputError("no labels file configured");
  std::vector<int> labels;
  labels.reserve(prepared.graph.node_count());
  for (NodeId v = 0; v < prepared.graph.node_count(); ++v) {
    labels.push_back(prepared.target->labels.at(prepared.graph.original_id(v)));
  }
  return labels;
}

nlohmann::json graph_summary(const PreparedGraph& prepared) {
  const LoadedGraph& loaded = prepared.loaded;
  return {{"input_nodes", loaded.graph.node_count()},
          {"input_edges", loaded.graph.edge_count()},
          {"self_loops_dropped", loaded.self_loops_dropped},
          {"duplicates_dropped", loaded.duplicates_dropped},
          {"unreciprocated_dropped", loaded.unreciprocated_dropped},
          {"labeled_nodes", prepared.labeled_nodes},
          {"core_nodes", prepared.graph.node_count()},
          {"core_edges", prepared.graph.edge_count()}};
}

ExperimentResult run_pipeline(const PipelineConfig& config) {
  fs::create_directories(config.out);
  nlohmann::json manifest = {{"tool", "commlfm"},
                             {"version", kVersion},
                             {"config", to_json(config)},
                             {"config_hash", config_hash(config)},
                             {"seed", config.settings.seed},
                             {"status", "partial"}};
  std::vector<std::string> artifacts;
  auto finish = [&](const std::string& status, const std::string& error) {
    manifest["status"] = status;
    manifest["artifacts"] = artifacts;
    if (!error.empty()) manifest["error"] = error;
    write_json(manifest, config.out / "manifest.json");
  };
  auto out_file = [&](const std::string& name) {
    artifacts.push_back(name);
    return config.out / name;
  };

  try {
    if (config.labels.empty()) throw InputError("no labels file configured");
    if (config.features.empty()) throw InputError("no features file configured");
    const PreparedGraph prepared = prepare_graph(config);
    const Graph& g = prepared.graph;
    manifest["graph"] = graph_summary(prepared);
    manifest["target"] = prepared.target->description;
    write_json(to_json(network_stats(g)), out_file("stats.json"));

    const NodeFeatures features = load_features(config.features, config.id_column, g);
    const std::vector<int> labels = node_labels(prepared);

    ExperimentResult result = run_experiment(g, features, labels, config.settings);

    {
      std::ofstream split(out_file("row_split.csv"));
      split << "id,role\n";
      for (NodeId v : result.split.train) split << g.original_id(v) << ",train\n";
      for (NodeId v : result.split.validation) split << g.original_id(v) << ",validation\n";
      for (NodeId v : result.split.test) split << g.original_id(v) << ",test\n";
    }
    if (result.link) {
      write_json(to_json(result.link->model, g), out_file("link_model.json"));
      nlohmann::json selection = to_json(*result.link);
      selection["test_accuracy"] = result.link_test_accuracy;
      write_json(selection, out_file("link_selection.json"));
      write_pairs_csv(result.pairs->train, out_file("pairs_train.csv"));
      write_pairs_csv(result.pairs->validation, out_file("pairs_validation.csv"));
      write_pairs_csv(result.pairs->test, out_file("pairs_test.csv"));
      manifest["link"] = {{"k", result.link->rank},
                          {"gamma", result.link->gamma},
                          {"test_accuracy", result.link_test_accuracy}};
    }
    for (const auto& mode : result.modes) {
      for (auto& name : write_mode_artifacts(mode, g, config.out)) artifacts.push_back(std::move(name));
    }
    if (result.modes.size() > 1) {
      std::ofstream table_out(out_file("comparison.txt"));
      table_out << comparison_table(result);
    }
    finish("complete", "");
    return result;
  } catch (const std::exception& e) {
    finish("partial", e.what());
    throw;
  }
}

}  // namespace commlfm
