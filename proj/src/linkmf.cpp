#include "commlfm/linkmf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "commlfm/random.hpp"

namespace commlfm {

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void check_sample(const LinkModel& m, const PairSample& sample) {
  if (sample.pairs.empty()) throw std::invalid_argument("pair sample is empty");
  const std::size_t n = m.node_count();
  for (const auto& p : sample.pairs) {
    if (p.i >= n || p.j >= n) throw std::out_of_range("pair index out of range");
    if (p.i == p.j) throw std::invalid_argument("pair sample contains a diagonal entry");
  }
}

}  // namespace

LinkModel LinkModel::zeros(std::size_t node_count, std::size_t rank) {
  LinkModel m;
  const auto n = static_cast<Eigen::Index>(node_count);
  const auto k = static_cast<Eigen::Index>(rank);
  m.U = FactorMatrix::Zero(n, k);
  m.V = FactorMatrix::Zero(n, k);
  m.beta = Eigen::VectorXd::Zero(n);
  return m;
}

void LinkModel::check_shape() const {
  if (U.rows() != V.rows() || U.cols() != V.cols() || U.rows() != beta.size()) {
    throw std::invalid_argument("LinkModel: U, V and beta shapes disagree");
  }
}

bool LinkModel::all_finite() const {
  return std::isfinite(alpha) && U.allFinite() && V.allFinite() && beta.allFinite();
}

const char* to_string(SampleRole role) {
  switch (role) {
    case SampleRole::train: return "train";
    case SampleRole::validation: return "validation";
    case SampleRole::test: return "test";
  }
  return "unknown";
}

std::size_t PairSample::edge_count() const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const LabeledPair& p) { return p.label == 1; }));
}

CostWeights CostWeights::from_graph(const Graph& g, double gamma) {
  const std::size_t n = g.node_count();
  CostWeights w;
  w.omega = 2 * g.edge_count();
  w.zeta = n * (n > 0 ? n - 1 : 0) - w.omega;
  w.gamma = gamma;
  return w;
}

CostWeights CostWeights::from_sample(const PairSample& sample, double gamma) {
  CostWeights w;
  w.omega = sample.edge_count();
  w.zeta = sample.pairs.size() - w.omega;
  w.gamma = gamma;
  return w;
}

void CostWeights::check() const {
  if (omega < 1 || zeta < 1) throw std::invalid_argument("cost weights need omega >= 1 and zeta >= 1");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) { return -softplus(-x); }

double link_probability(const LinkModel& m, NodeId i, NodeId j) {
  const std::size_t n = m.node_count();
  if (i >= n || j >= n) throw std::out_of_range("link_probability: node id out of range");
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  constexpr double hi = 1.0 - 0x1.0p-53;
  return std::clamp(sigmoid(m.logit(i, j)), lo, hi);
}

double cost(const LinkModel& m, const PairSample& sample, const CostWeights& w) {
  m.check_shape();
  w.check();
  check_sample(m, sample);
  const double edge_w = 1.0 / (2.0 * static_cast<double>(w.omega));
  const double non_edge_w = 1.0 / (2.0 * static_cast<double>(w.zeta));
  double total = 0.0;
  for (const auto& p : sample.pairs) {
    const double h = m.logit(p.i, p.j);
    total += p.label ? edge_w * softplus(-h) : non_edge_w * softplus(h);
    if (w.gamma != 0.0) {
      total += w.gamma * (m.U.row(p.i).squaredNorm() + m.V.row(p.j).squaredNorm() +
                          m.beta[p.i] * m.beta[p.i] + m.beta[p.j] * m.beta[p.j]);
    }
  }
  return total;
}

double LinkGradient::max_abs() const {
  double out = std::abs(dalpha);
  if (dU.size()) out = std::max(out, dU.cwiseAbs().maxCoeff());
  if (dV.size()) out = std::max(out, dV.cwiseAbs().maxCoeff());
  if (dbeta.size()) out = std::max(out, dbeta.cwiseAbs().maxCoeff());
  return out;
}

double LinkGradient::squared_norm() const {
  return dU.squaredNorm() + dV.squaredNorm() + dbeta.squaredNorm() + dalpha * dalpha;
}

double cost_and_gradients(const LinkModel& m, const PairSample& sample,
                          const CostWeights& w, LinkGradient& grad) {
  m.check_shape();
  w.check();
  check_sample(m, sample);
  const auto n = static_cast<Eigen::Index>(m.node_count());
  const auto k = static_cast<Eigen::Index>(m.rank());
  grad.dU.setZero(n, k);
  grad.dV.setZero(n, k);
  grad.dbeta.setZero(n);
  grad.dalpha = 0.0;

  const double edge_w = 1.0 / (2.0 * static_cast<double>(w.omega));
  const double non_edge_w = 1.0 / (2.0 * static_cast<double>(w.zeta));
  const double two_gamma = 2.0 * w.gamma;
  double total = 0.0;
  for (const auto& p : sample.pairs) {
    const double h = m.logit(p.i, p.j);
    // d/dH of the pair loss: -(1 - sigma(H)) / (2 omega) for an edge,
    // sigma(H) / (2 zeta) for a non-edge.
    double r;
    if (p.label) {
      total += edge_w * softplus(-h);
      r = -edge_w * sigmoid(-h);
    } else {
      total += non_edge_w * softplus(h);
      r = non_edge_w * sigmoid(h);
    }
    grad.dU.row(p.i) += r * m.V.row(p.j);
    grad.dV.row(p.j) += r * m.U.row(p.i);
    grad.dbeta[p.i] += r;
    grad.dbeta[p.j] += r;
    grad.dalpha += r;
    if (w.gamma != 0.0) {
      total += w.gamma * (m.U.row(p.i).squaredNorm() + m.V.row(p.j).squaredNorm() +
                          m.beta[p.i] * m.beta[p.i] + m.beta[p.j] * m.beta[p.j]);
      grad.dU.row(p.i) += two_gamma * m.U.row(p.i);
      grad.dV.row(p.j) += two_gamma * m.V.row(p.j);
      grad.dbeta[p.i] += two_gamma * m.beta[p.i];
      grad.dbeta[p.j] += two_gamma * m.beta[p.j];
    }
  }
  return total;
}

LinkGradient gradients(const LinkModel& m, const PairSample& sample, const CostWeights& w) {
  LinkGradient grad;
  cost_and_gradients(m, sample, w, grad);
  return grad;
}

PairSplits sample_pairs(const Graph& g, std::uint64_t seed) {
  const std::size_t n = g.node_count();
  const std::size_t omega = 2 * g.edge_count();
  if (omega < 4) {
    throw InputError("sample_pairs: need at least 4 ordered edge entries, graph has " +
                     std::to_string(omega));
  }
  const std::size_t zeta = n * (n - 1) - omega;
  const std::size_t train_edges = omega / 2;
  const std::size_t val_edges = omega / 4;
  const std::size_t train_non_edges = omega;
  const std::size_t held_non_edges = omega / 2;
  const std::size_t non_edges_needed = train_non_edges + 2 * held_non_edges;
  if (zeta < non_edges_needed) {
    throw InputError("sample_pairs: graph too dense, need " + std::to_string(non_edges_needed) +
                     " distinct non-edge pairs but only " + std::to_string(zeta) +
                     " exist (shortfall " + std::to_string(non_edges_needed - zeta) + ")");
  }

  Rng rng(seed);

  std::vector<LabeledPair> edge_pairs;
  edge_pairs.reserve(omega);
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j : g.neighbors(i)) edge_pairs.push_back({i, j, 1});
  }
  rng.shuffle(std::span(edge_pairs));

  std::vector<LabeledPair> non_edge_pairs;
  non_edge_pairs.reserve(non_edges_needed);
  if (zeta <= 4 * non_edges_needed || n * (n - 1) <= (std::size_t{1} << 22)) {
    // Enumerate and take a uniform prefix.
    std::vector<LabeledPair> all;
    all.reserve(zeta);
    for (NodeId i = 0; i < n; ++i) {
      const auto nb = g.neighbors(i);
      auto it = nb.begin();
      for (NodeId j = 0; j < n; ++j) {
        while (it != nb.end() && *it < j) ++it;
        if (j == i || (it != nb.end() && *it == j)) continue;
        all.push_back({i, j, 0});
      }
    }
    for (std::size_t t = 0; t < non_edges_needed; ++t) {
      std::swap(all[t], all[t + rng.below(all.size() - t)]);
    }
    non_edge_pairs.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(non_edges_needed));
  } else {
    std::unordered_set<std::uint64_t> taken;
    taken.reserve(non_edges_needed * 2);
    while (non_edge_pairs.size() < non_edges_needed) {
      const auto i = static_cast<NodeId>(rng.below(n));
      const auto j = static_cast<NodeId>(rng.below(n));
      if (i == j || g.has_edge(i, j)) continue;
      if (taken.insert(static_cast<std::uint64_t>(i) * n + j).second) {
        non_edge_pairs.push_back({i, j, 0});
      }
    }
  }

  auto build = [](SampleRole role, auto e_begin, auto e_end, auto ne_begin, auto ne_end) {
    PairSample s;
    s.role = role;
    s.pairs.assign(e_begin, e_end);
    s.pairs.insert(s.pairs.end(), ne_begin, ne_end);
    std::sort(s.pairs.begin(), s.pairs.end(), [](const LabeledPair& a, const LabeledPair& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    return s;
  };
  const auto e = edge_pairs.begin();
  const auto ne = non_edge_pairs.begin();
  const auto te = static_cast<std::ptrdiff_t>(train_edges);
  const auto ve = static_cast<std::ptrdiff_t>(val_edges);
  const auto tne = static_cast<std::ptrdiff_t>(train_non_edges);
  const auto hne = static_cast<std::ptrdiff_t>(held_non_edges);
  PairSplits out;
  out.train = build(SampleRole::train, e, e + te, ne, ne + tne);
  out.validation = build(SampleRole::validation, e + te, e + te + ve, ne + tne, ne + tne + hne);
  out.test = build(SampleRole::test, e + te + ve, edge_pairs.end(), ne + tne + hne, non_edge_pairs.end());
  return out;
}

namespace {

// Diagonal scaling of the descent direction. Each parameter is divided by the
// summed cost weight of the pairs it appears in (plus the matching share of
// the penalty curvature), so alpha, the biases and the factors all move at
// comparable rates.
struct Preconditioner {
  Eigen::VectorXd row;   // U_i
  Eigen::VectorXd col;   // V_j
  Eigen::VectorXd bias;  // beta_i
  double alpha = 1.0;

  static Preconditioner identity(std::size_t n) {
    const auto size = static_cast<Eigen::Index>(n);
    return {Eigen::VectorXd::Ones(size), Eigen::VectorXd::Ones(size), Eigen::VectorXd::Ones(size), 1.0};
  }

  static Preconditioner from_sample(std::size_t n, const PairSample& sample, const CostWeights& w) {
    const auto size = static_cast<Eigen::Index>(n);
    Preconditioner p{Eigen::VectorXd::Zero(size), Eigen::VectorXd::Zero(size), Eigen::VectorXd::Zero(size), 0.0};
    const double edge_w = 1.0 / (2.0 * static_cast<double>(w.omega));
    const double non_edge_w = 1.0 / (2.0 * static_cast<double>(w.zeta));
    const double penalty = 2.0 * w.gamma;
    for (const auto& pair : sample.pairs) {
      const double weight = pair.label ? edge_w : non_edge_w;
      p.row[pair.i] += weight + penalty;
      p.col[pair.j] += weight + penalty;
      p.bias[pair.i] += weight + penalty;
      p.bias[pair.j] += weight + penalty;
      p.alpha += weight;
    }
    // Parameters untouched by the sample have zero gradient; any scale works.
    for (auto* v : {&p.row, &p.col, &p.bias}) {
      for (Eigen::Index i = 0; i < v->size(); ++i) {
        if ((*v)[i] <= 0.0) (*v)[i] = 1.0;
      }
    }
    if (p.alpha <= 0.0) p.alpha = 1.0;
    return p;
  }

  LinkGradient direction(const LinkGradient& g) const {
    LinkGradient d;
    d.dU = g.dU.array().colwise() / row.array();
    d.dV = g.dV.array().colwise() / col.array();
    d.dbeta = g.dbeta.array() / bias.array();
    d.dalpha = g.dalpha / alpha;
    return d;
  }
};

double dot(const LinkGradient& a, const LinkGradient& b) {
  return (a.dU.array() * b.dU.array()).sum() + (a.dV.array() * b.dV.array()).sum() +
         a.dbeta.dot(b.dbeta) + a.dalpha * b.dalpha;
}

void take_step(const LinkModel& from, const LinkGradient& dir, double step, LinkModel& to) {
  to.U = from.U - step * dir.dU;
  to.V = from.V - step * dir.dV;
  to.beta = from.beta - step * dir.dbeta;
  to.alpha = from.alpha - step * dir.dalpha;
}

}  // namespace

LinkFit fit_link_model_traced(const Graph& g, std::size_t rank, double gamma,
                              const PairSample& train, const DescentOptions& opts) {
  if (rank < 1) throw std::invalid_argument("fit_link_model: rank must be >= 1");
  if (train.pairs.empty()) throw std::invalid_argument("fit_link_model: empty training sample");
  const double pair_gamma =
      opts.penalty == PenaltyScale::mean ? gamma / static_cast<double>(train.pairs.size()) : gamma;
  const CostWeights w = opts.weights == WeightBasis::sample ? CostWeights::from_sample(train, pair_gamma)
                                                            : CostWeights::from_graph(g, pair_gamma);
  w.check();

  const std::size_t n = g.node_count();
  const Preconditioner precond = opts.precondition ? Preconditioner::from_sample(n, train, w)
                                                   : Preconditioner::identity(n);
  LinkModel model = LinkModel::zeros(n, rank);
  Rng rng(opts.seed);
  for (Eigen::Index i = 0; i < model.U.size(); ++i) {
    model.U.data()[i] = rng.uniform(-opts.init_scale, opts.init_scale);
  }
  for (Eigen::Index i = 0; i < model.V.size(); ++i) {
    model.V.data()[i] = rng.uniform(-opts.init_scale, opts.init_scale);
  }
  const double edge_fraction =
      static_cast<double>(train.edge_count()) / static_cast<double>(train.pairs.size());
  if (edge_fraction > 0.0 && edge_fraction < 1.0) {
    model.alpha = std::log(edge_fraction / (1.0 - edge_fraction));
  }

  LinkFit fit;
  LinkGradient grad;
  LinkGradient trial_grad;
  double current = cost_and_gradients(model, train, w, grad);
  if (!std::isfinite(current)) throw NumericalError("fit_link_model: initial cost is not finite");
  fit.cost_history.push_back(current);

  LinkGradient dir = precond.direction(grad);
  double step = opts.initial_step / std::max(dir.max_abs(), 1e-300);
  LinkModel trial = model;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const double slope = dot(grad, dir);
    if (slope == 0.0) {
      fit.converged = true;
      break;
    }
    int backtracks = 0;
    double next = 0.0;
    while (true) {
      take_step(model, dir, step, trial);
      next = cost_and_gradients(trial, train, w, trial_grad);
      // Armijo sufficient decrease.
      if (std::isfinite(next) && next <= current - 1e-4 * step * slope) break;
      step *= opts.shrink;
      if (++backtracks > opts.max_backtracks) {
        throw DivergenceError("fit_link_model: no decreasing step after " +
                                  std::to_string(opts.max_backtracks) + " backtracks",
                              model);
      }
    }
    const double improvement = (current - next) / std::max(std::abs(current), 1e-300);
    std::swap(model, trial);
    std::swap(grad, trial_grad);
    dir = precond.direction(grad);
    current = next;
    fit.cost_history.push_back(current);
    fit.iterations = iter + 1;
    step *= opts.grow;
    if (improvement < opts.relative_tolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!model.all_finite()) throw NumericalError("fit_link_model: non-finite parameters");
  fit.model = std::move(model);
  return fit;
}

LinkModel fit_link_model(const Graph& g, std::size_t rank, double gamma,
                         const PairSample& train, const DescentOptions& opts) {
  return fit_link_model_traced(g, rank, gamma, train, opts).model;
}

double link_prediction_accuracy(const LinkModel& m, const PairSample& sample) {
  if (sample.pairs.empty()) throw std::invalid_argument("link_prediction_accuracy: empty sample");
  std::size_t correct = 0;
  for (const auto& p : sample.pairs) {
    const int predicted = link_probability(m, p.i, p.j) >= 0.5 ? 1 : 0;
    if (predicted == p.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(sample.pairs.size());
}

std::vector<std::size_t> default_rank_grid() { return {5, 6, 7, 8, 9, 10}; }

std::vector<double> default_gamma_grid() { return {0.0, 0.01, 0.04, 0.16, 0.64, 2.56, 10.24}; }

LinkSelection select_hyperparameters(const Graph& g, const PairSplits& splits,
                                     std::span<const std::size_t> rank_grid,
                                     std::span<const double> gamma_grid,
                                     const DescentOptions& opts, unsigned threads) {
  if (rank_grid.empty() || gamma_grid.empty()) {
    throw std::invalid_argument("select_hyperparameters: grids must be non-empty");
  }
  struct Slot {
    GridPoint point;
    LinkModel model;
  };
  std::vector<Slot> slots;
  for (std::size_t k : rank_grid) {
    for (double gamma : gamma_grid) slots.push_back({{k, gamma, 0.0, false, {}}, {}});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t idx = next++; idx < slots.size(); idx = next++) {
      auto& slot = slots[idx];
      DescentOptions point_opts = opts;
      // Same initialization for every gamma at a given rank.
      point_opts.seed = derive_seed(opts.seed, "link-init", slot.point.rank);
      try {
        slot.model = fit_link_model(g, slot.point.rank, slot.point.gamma, splits.train, point_opts);
        slot.point.validation_accuracy = link_prediction_accuracy(slot.model, splits.validation);
      } catch (const std::exception& e) {
        slot.point.failed = true;
        slot.point.error = e.what();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(slots.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  }

  const Slot* best = nullptr;
  for (const auto& slot : slots) {
    if (slot.point.failed) continue;
    if (best == nullptr) {
      best = &slot;
      continue;
    }
    const auto& a = slot.point;
    const auto& b = best->point;
    if (a.validation_accuracy > b.validation_accuracy ||
        (a.validation_accuracy == b.validation_accuracy &&
         (a.rank < b.rank || (a.rank == b.rank && a.gamma < b.gamma)))) {
      best = &slot;
    }
  }
  if (best == nullptr) {
    throw NumericalError("select_hyperparameters: every grid point failed; first error: " +
                         slots.front().point.error);
  }
  LinkSelection out;
  out.rank = best->point.rank;
  out.gamma = best->point.gamma;
  out.model = best->model;
  for (const auto& slot : slots) out.grid.push_back(slot.point);
  return out;
}

nlohmann::json to_json(const LinkModel& m, const Graph& g) {
  auto rows = [](const FactorMatrix& M) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      out.push_back(std::vector<double>(M.row(r).begin(), M.row(r).end()));
    }
    return out;
  };
  nlohmann::json id_map = nlohmann::json::object();
  for (NodeId v = 0; v < g.node_count(); ++v) id_map[std::to_string(v)] = g.original_id(v);
  return {{"k", m.rank()},
          {"alpha", m.alpha},
          {"beta", std::vector<double>(m.beta.begin(), m.beta.end())},
          {"U", rows(m.U)},
          {"V", rows(m.V)},
          {"id_map", std::move(id_map)}};
}

LinkModel link_model_from_json(const nlohmann::json& j) {
  const auto beta = j.at("beta").get<std::vector<double>>();
  const auto k = j.at("k").get<std::size_t>();
  LinkModel m = LinkModel::zeros(beta.size(), k);
  m.alpha = j.at("alpha").get<double>();
  for (std::size_t i = 0; i < beta.size(); ++i) m.beta[static_cast<Eigen::Index>(i)] = beta[i];
  auto fill = [&](const nlohmann::json& rows, FactorMatrix& M, const char* name) {
    if (rows.size() != beta.size()) throw InputError(std::string("link model: bad row count in ") + name);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto row = rows[r].get<std::vector<double>>();
      if (row.size() != k) throw InputError(std::string("link model: bad column count in ") + name);
      for (std::size_t c = 0; c < k; ++c) {
        M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
      }
    }
  };
  fill(j.at("U"), m.U, "U");
  fill(j.at("V"), m.V, "V");
  return m;
}

nlohmann::json to_json(const LinkSelection& selection) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& p : selection.grid) {
    nlohmann::json entry = {{"k", p.rank}, {"gamma", p.gamma}};
    if (p.failed) {
      entry["error"] = p.error;
    } else {
      entry["validation_accuracy"] = p.validation_accuracy;
    }
    grid.push_back(std::move(entry));
  }
  return {{"k", selection.rank}, {"gamma", selection.gamma}, {"grid", std::move(grid)}};
}

void write_pairs_csv(const PairSample& sample, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write pair sample: " + path.string());
  out << "i,j,label\n";
  for (const auto& p : sample.pairs) out << p.i << ',' << p.j << ',' << p.label << '\n';
}

}  // namespace commlfm
