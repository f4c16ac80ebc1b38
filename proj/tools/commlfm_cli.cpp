// commlfm: command line front end for the community latent-factor pipeline.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "commlfm/config.hpp"
#include "commlfm/csv.hpp"
#include "commlfm/error.hpp"
#include "commlfm/evalkit.hpp"
#include "commlfm/graph.hpp"
#include "commlfm/linkmf.hpp"
#include "commlfm/pipeline.hpp"
#include "commlfm/random.hpp"
#include "commlfm/synthbench.hpp"

namespace fs = std::filesystem;
using namespace commlfm;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

// Flag values; unset options leave the config file (or the default) alone.
struct Flags {
  std::string config;
  std::optional<std::string> edges, features, labels, out, id_column, target, mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> kcore;
  std::optional<unsigned> threads;
  std::optional<std::vector<std::size_t>> k_grid;
  std::optional<std::vector<double>> gamma_grid, lambda_grid;
  std::optional<int> max_iterations;
  bool directed_reciprocal = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Config file (.json or key = value text)");
  cmd->add_option("--edges", f.edges, "Edge list: one 'u v' pair per line");
  cmd->add_option("--kcore", f.kcore, "Keep the k-core (0 keeps everything)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_flag("--reciprocal-only", f.directed_reciprocal, "Keep only pairs listed in both directions");
}

void add_link(CLI::App* cmd, Flags& f) {
  cmd->add_option("--seed", f.seed, "Global seed");
  cmd->add_option("--threads", f.threads, "Worker threads for the grid search");
  cmd->add_option("--k-grid", f.k_grid, "Latent ranks to try")->delimiter(',');
  cmd->add_option("--gamma-grid", f.gamma_grid, "Link penalties to try")->delimiter(',');
  cmd->add_option("--max-iterations", f.max_iterations, "Descent iteration cap");
}

void add_classifier(CLI::App* cmd, Flags& f) {
  cmd->add_option("--features", f.features, "Feature CSV with an id column");
  cmd->add_option("--labels", f.labels, "Label CSV with an id column");
  cmd->add_option("--id-column", f.id_column, "Name of the id column");
  cmd->add_option("--target", f.target, "Target rule: auto, auto:<col>, <col> or <col>=<value>");
  cmd->add_option("--mode", f.mode, "Design mode(s): F, N, X, or a list such as F,X");
  cmd->add_option("--lambda-grid", f.lambda_grid, "Classifier penalties to try")->delimiter(',');
}

nlohmann::json file_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  nlohmann::json j = load_config_file(path);
  if (!j.is_object()) throw InputError("config " + path + ": expected a table of settings");
  return j;
}

PipelineConfig resolve(const Flags& f) {
  nlohmann::json j = file_config(f.config);
  if (j.contains("config")) j = j.at("config");
  auto set = [&](const char* key, const auto& value) {
    if (value) j[key] = *value;
  };
  set("edges", f.edges);
  set("features", f.features);
  set("labels", f.labels);
  set("out", f.out);
  set("id_column", f.id_column);
  set("target", f.target);
  set("mode", f.mode);
  set("seed", f.seed);
  set("kcore", f.kcore);
  set("threads", f.threads);
  set("k_grid", f.k_grid);
  set("gamma_grid", f.gamma_grid);
  set("lambda_grid", f.lambda_grid);
  set("descent_max_iterations", f.max_iterations);
  if (f.directed_reciprocal) j["symmetrize"] = false;
  return pipeline_config_from_json(j);
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int cmd_stats(const Flags& f, bool write) {
  PipelineConfig c = resolve(f);
  const PreparedGraph prepared = prepare_graph(c);
  nlohmann::json j = to_json(network_stats(prepared.graph));
  std::cout << j.dump(2) << '\n';
  if (write) {
    fs::create_directories(c.out);
    write_json(j, c.out / "stats.json");
  }
  return 0;
}

int cmd_kcore(const Flags& f) {
  PipelineConfig c = resolve(f);
  const PreparedGraph prepared = prepare_graph(c);
  fs::create_directories(c.out);
  write_edge_list(prepared.graph, c.out / "core_edges.txt");
  write_json(to_json(network_stats(prepared.graph)), c.out / "stats.json");
  std::cout << c.kcore << "-core: " << prepared.graph.node_count() << " nodes, "
            << prepared.graph.edge_count() << " edges -> " << (c.out / "core_edges.txt").string() << '\n';
  return 0;
}

int cmd_factorize(const Flags& f) {
  PipelineConfig c = resolve(f);
  c.labels.clear();  // factorization needs the graph only
  const PreparedGraph prepared = prepare_graph(c);
  const Graph& g = prepared.graph;
  const auto& s = c.settings;

  const PairSplits splits = sample_pairs(g, derive_seed(s.seed, "pairs"));
  DescentOptions descent = s.descent;
  descent.seed = derive_seed(s.seed, "link");
  const LinkSelection sel = select_hyperparameters(g, splits, s.rank_grid, s.gamma_grid, descent, s.threads);
  const double test_acc = link_prediction_accuracy(sel.model, splits.test);

  fs::create_directories(c.out);
  write_json(to_json(sel.model, g), c.out / "link_model.json");
  nlohmann::json selection = to_json(sel);
  selection["test_accuracy"] = test_acc;
  write_json(selection, c.out / "link_selection.json");
  write_pairs_csv(splits.train, c.out / "pairs_train.csv");
  write_pairs_csv(splits.validation, c.out / "pairs_validation.csv");
  write_pairs_csv(splits.test, c.out / "pairs_test.csv");
  std::cout << "k=" << sel.rank << " gamma=" << sel.gamma << " test link accuracy "
            << format_double(test_acc) << '\n';
  return 0;
}

int cmd_train(const Flags& f) {
  PipelineConfig c = resolve(f);
  if (c.features.empty()) throw InputError("no features file configured");
  const PreparedGraph prepared = prepare_graph(c);
  const Graph& g = prepared.graph;
  const NodeFeatures features = load_features(c.features, c.id_column, g);
  const std::vector<int> labels = node_labels(prepared);
  const ExperimentResult result = run_experiment(g, features, labels, c.settings);

  fs::create_directories(c.out);
  if (result.link) write_json(to_json(result.link->model, g), c.out / "link_model.json");
  for (const auto& mode : result.modes) {
    const std::string tag = to_string(mode.mode);
    write_json(to_json(mode.selection.model), c.out / ("classifier_" + tag + ".json"));
    std::ofstream out(c.out / ("predictions_" + tag + ".csv"));
    out << "id,label,confidence,predicted\n";
    for (std::size_t i = 0; i < mode.test_nodes.size(); ++i) {
      out << g.original_id(mode.test_nodes[i]) << ',' << mode.test_labels[i] << ','
          << format_double(mode.test_prediction.confidence[i]) << ',' << mode.test_prediction.labels[i]
          << '\n';
    }
    std::cout << tag << ": lambda=" << mode.selection.lambda << ", " << mode.test_nodes.size()
              << " test predictions\n";
  }
  return 0;
}

int cmd_evaluate(const Flags& f, const std::string& predictions_path) {
  PipelineConfig c = resolve(f);
  const PreparedGraph prepared = prepare_graph(c);
  const Graph& g = prepared.graph;

  std::unordered_map<std::string, NodeId> index;
  for (NodeId v = 0; v < g.node_count(); ++v) index.emplace(g.original_id(v), v);

  const CsvTable table = read_csv(predictions_path);
  const std::size_t id_col = table.column_index("id");
  const std::size_t label_col = table.column_index("label");
  const std::size_t conf_col = table.column_index("confidence");
  const std::size_t pred_col = table.column_index("predicted");
  std::vector<int> y, predicted;
  std::vector<double> confidence;
  std::vector<NodeId> nodes;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto it = index.find(row[id_col]);
    if (it == index.end()) {
      throw InputError(predictions_path + ": id " + row[id_col] + " is not a node of the prepared graph");
    }
    const auto label = parse_cell(row[label_col]);
    const auto conf = parse_cell(row[conf_col]);
    const auto pred = parse_cell(row[pred_col]);
    if (!label || !conf || !pred) {
      throw InputError(predictions_path + ": row " + std::to_string(r + 2) + " is not numeric");
    }
    nodes.push_back(it->second);
    y.push_back(static_cast<int>(*label));
    confidence.push_back(*conf);
    predicted.push_back(static_cast<int>(*pred));
  }
  const EvalReport report = evaluate(y, predicted, confidence, nodes, g,
                                     {c.settings.threshold, c.settings.percentile_step});
  fs::create_directories(c.out);
  const std::string stem = fs::path(predictions_path).stem().string();
  write_json(to_json(report), c.out / ("report_" + stem + ".json"));
  if (report.pr) write_curve_csv(report.pr->curve, c.out / ("curve_" + stem + "_pr.csv"));
  write_curve_csv(report.accuracy_at_percentile, c.out / ("curve_" + stem + "_accuracy_at_percentile.csv"));
  write_curve_csv(report.per_degree_accuracy, c.out / ("curve_" + stem + "_per_degree_accuracy.csv"));
  write_curve_csv(report.per_degree_perplexity, c.out / ("curve_" + stem + "_per_degree_perplexity.csv"));
  std::cout << metrics_table({{stem, report.metrics}});
  return 0;
}

constexpr double MetricsRecord::*kMetricFields[] = {
    &MetricsRecord::accuracy,           &MetricsRecord::rmse,
    &MetricsRecord::precision,          &MetricsRecord::recall,
    &MetricsRecord::f1,                 &MetricsRecord::bcr,
    &MetricsRecord::neg_log_likelihood, &MetricsRecord::pct_pred_positive,
    &MetricsRecord::pct_actual_positive};

struct BenchFlags {
  std::optional<std::vector<std::size_t>> blocks;
  std::optional<double> p_in, p_out, flip, frac, spread, noise;
  std::optional<std::size_t> dim;
  int seeds = 1;
  std::string inputs_dir;
};

int cmd_benchmark(const Flags& f, const BenchFlags& b) {
  nlohmann::json file = file_config(f.config);
  nlohmann::json sbm = file.contains("sbm") ? file.at("sbm") : nlohmann::json::object();
  auto set = [&](const char* key, const auto& value) {
    if (value) sbm[key] = *value;
  };
  set("block_sizes", b.blocks);
  set("p_in", b.p_in);
  set("p_out", b.p_out);
  set("label_flip_rate", b.flip);
  set("feature_informative_frac", b.frac);
  set("degree_bias_spread", b.spread);
  set("feature_noise", b.noise);
  set("feature_dim", b.dim);
  file.erase("sbm");
  PipelineConfig c = [&] {
    nlohmann::json j = file;
    auto put = [&](const char* key, const auto& value) {
      if (value) j[key] = *value;
    };
    put("seed", f.seed);
    put("threads", f.threads);
    put("k_grid", f.k_grid);
    put("gamma_grid", f.gamma_grid);
    put("lambda_grid", f.lambda_grid);
    put("descent_max_iterations", f.max_iterations);
    put("out", f.out);
    return pipeline_config_from_json(j);
  }();
  SbmSpec spec = sbm_spec_from_json(sbm);
  if (!sbm.contains("seed")) spec.seed = c.settings.seed;
  if (b.seeds < 1) throw InputError("--seeds must be >= 1");

  nlohmann::json runs = nlohmann::json::array();
  std::vector<std::pair<std::string, MetricsRecord>> mean_rows;
  std::vector<MetricsRecord> sums(3);
  const std::uint64_t first = spec.seed;
  for (int i = 0; i < b.seeds; ++i) {
    spec.seed = first + static_cast<std::uint64_t>(i);
    if (!b.inputs_dir.empty() && i == 0) {
      write_benchmark_inputs(generate_benchmark(spec), b.inputs_dir);
    }
    const BenchmarkReport report = run_benchmark(spec, c.settings);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "seed " << spec.seed << '\n' << report.table;
    for (std::size_t m = 0; m < report.result.modes.size() && m < sums.size(); ++m) {
      const MetricsRecord& r = report.result.modes[m].report.metrics;
      for (auto field : kMetricFields) sums[m].*field += r.*field;
    }
    runs.push_back(to_json(report));
  }
  const char* names[] = {"F", "N", "X"};
  nlohmann::json means = nlohmann::json::object();
  for (std::size_t m = 0; m < sums.size(); ++m) {
    MetricsRecord s = sums[m];
    for (auto field : kMetricFields) s.*field /= static_cast<double>(b.seeds);
    mean_rows.emplace_back(names[m], s);
    means[names[m]] = to_json(s);
  }
  if (b.seeds > 1) std::cout << "mean over " << b.seeds << " seeds\n" << metrics_table(mean_rows);
  if (f.out) {
    fs::create_directories(*f.out);
    write_json({{"runs", std::move(runs)}, {"mean", std::move(means)}, {"seeds", b.seeds}},
               fs::path(*f.out) / "benchmark.json");
  }
  return 0;
}

int cmd_run(const Flags& f) {
  PipelineConfig c = resolve(f);
  const ExperimentResult result = run_pipeline(c);
  if (result.modes.size() > 1) {
    std::cout << comparison_table(result);
  } else {
    for (const auto& mode : result.modes) std::cout << metrics_table({{to_string(mode.mode), mode.report.metrics}});
  }
  std::cout << "artifacts in " << c.out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Node classification with latent link factors"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Flags f;
  BenchFlags b;
  std::string predictions;

  auto* stats = app.add_subcommand("stats", "Print network statistics (after pruning and k-core)");
  add_common(stats, f);
  stats->add_option("--labels", f.labels, "Prune to nodes with a label first");
  stats->add_option("--target", f.target, "Target rule used for pruning");
  stats->add_option("--id-column", f.id_column, "Name of the id column");

  auto* kcore = app.add_subcommand("kcore", "Write the k-core edge list and its statistics");
  add_common(kcore, f);

  auto* factorize = app.add_subcommand("factorize", "Fit and select the latent link model");
  add_common(factorize, f);
  add_link(factorize, f);

  auto* train = app.add_subcommand("train", "Fit classifiers and write test predictions");
  add_common(train, f);
  add_link(train, f);
  add_classifier(train, f);

  auto* eval = app.add_subcommand("evaluate", "Score a predictions CSV (id,label,confidence,predicted)");
  add_common(eval, f);
  eval->add_option("--labels", f.labels, "Label CSV used when the graph was pruned");
  eval->add_option("--target", f.target, "Target rule used for pruning");
  eval->add_option("--id-column", f.id_column, "Name of the id column");
  eval->add_option("--predictions", predictions, "Predictions CSV")->required();

  auto* bench = app.add_subcommand("benchmark", "Run F, N and X on a planted-partition benchmark");
  bench->add_option("--config", f.config, "Config file; SBM settings go under [sbm]");
  bench->add_option("--out", f.out, "Write benchmark.json here");
  add_link(bench, f);
  bench->add_option("--lambda-grid", f.lambda_grid, "Classifier penalties to try")->delimiter(',');
  bench->add_option("--blocks", b.blocks, "Block sizes")->delimiter(',');
  bench->add_option("--p-in", b.p_in, "Within-block edge probability");
  bench->add_option("--p-out", b.p_out, "Between-block edge probability");
  bench->add_option("--flip", b.flip, "Label flip rate");
  bench->add_option("--informative", b.frac, "Fraction of informative feature columns");
  bench->add_option("--spread", b.spread, "Degree bias spread");
  bench->add_option("--noise", b.noise, "Feature noise std-dev");
  bench->add_option("--dim", b.dim, "Feature columns");
  bench->add_option("--seeds", b.seeds, "Number of consecutive seeds to average");
  bench->add_option("--write-inputs", b.inputs_dir, "Also write edges/features/labels of the first seed");

  auto* run = app.add_subcommand("run", "Full pipeline with artifacts and manifest");
  add_common(run, f);
  add_link(run, f);
  add_classifier(run, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (stats->parsed()) return cmd_stats(f, f.out.has_value());
    if (kcore->parsed()) return cmd_kcore(f);
    if (factorize->parsed()) return cmd_factorize(f);
    if (train->parsed()) return cmd_train(f);
    if (eval->parsed()) return cmd_evaluate(f, predictions);
    if (bench->parsed()) return cmd_benchmark(f, b);
    if (run->parsed()) return cmd_run(f);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
