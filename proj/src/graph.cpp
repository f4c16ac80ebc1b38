#include "commlfm/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "commlfm/error.hpp"

namespace commlfm {

Graph Graph::from_edges(std::size_t node_count, std::span<const Edge> edges,
                        std::vector<std::string> original_ids) {
  if (!original_ids.empty() && original_ids.size() != node_count) {
    throw std::invalid_argument("original_ids size does not match node count");
  }
  Graph g;
  g.adjacency_.resize(node_count);
  for (const auto& [u, v] : edges) {
    if (u >= node_count || v >= node_count) {
      throw std::invalid_argument("edge endpoint out of range");
    }
    if (u == v) throw std::invalid_argument("self-loop in edge list");
    g.adjacency_[u].push_back(v);
    g.adjacency_[v].push_back(u);
  }
  std::size_t half_edges = 0;
  for (auto& list : g.adjacency_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    list.shrink_to_fit();
    half_edges += list.size();
  }
  g.edge_count_ = half_edges / 2;
  if (original_ids.empty()) {
    original_ids.reserve(node_count);
    for (std::size_t i = 0; i < node_count; ++i) original_ids.push_back(std::to_string(i));
  }
  g.original_ids_ = std::move(original_ids);
  return g;
}

std::span<const NodeId> Graph::neighbors(NodeId v) const {
  if (v >= adjacency_.size()) throw std::out_of_range("node id out of range");
  return adjacency_[v];
}

std::size_t Graph::degree(NodeId v) const { return neighbors(v).size(); }

bool Graph::has_edge(NodeId u, NodeId v) const {
  const auto list = neighbors(u);
  if (v >= adjacency_.size()) throw std::out_of_range("node id out of range");
  return std::binary_search(list.begin(), list.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (NodeId u = 0; u < adjacency_.size(); ++u) {
    for (NodeId v : adjacency_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

const std::string& Graph::original_id(NodeId v) const {
  if (v >= original_ids_.size()) throw std::out_of_range("node id out of range");
  return original_ids_[v];
}

std::size_t degree(const Graph& g, NodeId v) { return g.degree(v); }

LoadedGraph load_edge_list(const std::filesystem::path& path, bool symmetrize) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open edge list: " + path.string());

  std::unordered_map<std::string, NodeId> index;
  std::vector<std::string> names;
  auto intern = [&](const std::string& name) {
    auto [it, inserted] = index.emplace(name, static_cast<NodeId>(names.size()));
    if (inserted) names.push_back(name);
    return it->second;
  };

  LoadedGraph result;
  std::set<Edge> directed;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string a, b, extra;
    if (!(fields >> a >> b) || (fields >> extra)) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected two whitespace-separated node ids");
    }
    const NodeId u = intern(a);
    const NodeId v = intern(b);
    if (u == v) {
      ++result.self_loops_dropped;
      continue;
    }
    if (!directed.emplace(u, v).second) ++result.duplicates_dropped;
  }

  std::vector<Edge> undirected;
  for (const auto& [u, v] : directed) {
    const bool reciprocated = directed.count({v, u}) > 0;
    if (!symmetrize && !reciprocated) {
      ++result.unreciprocated_dropped;
      continue;
    }
    if (reciprocated && v < u) {
      // Counted once through (v, u).
      if (symmetrize) ++result.duplicates_dropped;
      continue;
    }
    undirected.emplace_back(u, v);
  }
  if (undirected.empty()) {
    throw EmptyGraphError(path.string() + ": graph has no edges after removing " +
                          std::to_string(result.self_loops_dropped) + " self-loop(s)");
  }

  // Nodes that only appeared on dropped lines are not kept.
  std::vector<char> used(names.size(), 0);
  for (const auto& [u, v] : undirected) used[u] = used[v] = 1;
  std::vector<NodeId> remap(names.size(), 0);
  std::vector<std::string> kept_names;
  for (NodeId i = 0; i < names.size(); ++i) {
    if (used[i]) {
      remap[i] = static_cast<NodeId>(kept_names.size());
      kept_names.push_back(names[i]);
    }
  }
  for (auto& [u, v] : undirected) {
    u = remap[u];
    v = remap[v];
  }
  const std::size_t n = kept_names.size();
  result.graph = Graph::from_edges(n, undirected, std::move(kept_names));
  return result;
}

void write_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write edge list: " + path.string());
  for (const auto& [u, v] : g.edges()) {
    out << g.original_id(u) << ' ' << g.original_id(v) << '\n';
  }
}

Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> keep) {
  std::vector<NodeId> parent(keep.begin(), keep.end());
  std::sort(parent.begin(), parent.end());
  parent.erase(std::unique(parent.begin(), parent.end()), parent.end());
  constexpr NodeId kAbsent = ~NodeId{0};
  std::vector<NodeId> to_new(g.node_count(), kAbsent);
  std::vector<std::string> names;
  names.reserve(parent.size());
  for (NodeId i = 0; i < parent.size(); ++i) {
    if (parent[i] >= g.node_count()) throw std::out_of_range("node id out of range");
    to_new[parent[i]] = i;
    names.push_back(g.original_id(parent[i]));
  }
  std::vector<Edge> edges;
  for (const auto& [u, v] : g.edges()) {
    if (to_new[u] != kAbsent && to_new[v] != kAbsent) edges.emplace_back(to_new[u], to_new[v]);
  }
  return {Graph::from_edges(parent.size(), edges, std::move(names)), std::move(parent)};
}

Subgraph k_core(const Graph& g, std::size_t k) {
  const std::size_t n = g.node_count();
  std::vector<std::size_t> deg(n);
  std::vector<char> removed(n, 0);
  std::deque<NodeId> queue;
  for (NodeId v = 0; v < n; ++v) {
    deg[v] = g.degree(v);
    if (deg[v] < k) {
      removed[v] = 1;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    for (NodeId w : g.neighbors(v)) {
      if (removed[w]) continue;
      if (--deg[w] < k) {
        removed[w] = 1;
        queue.push_back(w);
      }
    }
  }
  std::vector<NodeId> keep;
  for (NodeId v = 0; v < n; ++v) {
    if (!removed[v]) keep.push_back(v);
  }
  return induced_subgraph(g, keep);
}

std::size_t count_triangles(const Graph& g) {
  std::size_t triangles = 0;
  for (const auto& [u, v] : g.edges()) {
    const auto nu = g.neighbors(u);
    const auto nv = g.neighbors(v);
    // Count each triangle once through its two smallest vertices.
    auto a = std::upper_bound(nu.begin(), nu.end(), v);
    auto b = std::upper_bound(nv.begin(), nv.end(), v);
    while (a != nu.end() && b != nv.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        ++triangles;
        ++a;
        ++b;
      }
    }
  }
  return triangles;
}

std::size_t count_components(const Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<char> seen(n, 0);
  std::vector<NodeId> stack;
  std::size_t components = 0;
  for (NodeId s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ++components;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      for (NodeId w : g.neighbors(v)) {
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
  }
  return components;
}

StatsRecord network_stats(const Graph& g) {
  const std::size_t n = g.node_count();
  if (n == 0) throw InputError("network_stats requires at least one node");
  StatsRecord s;
  s.nodes = n;
  s.edges = g.edge_count();
  s.components = count_components(g);
  double triples = 0.0;
  for (NodeId v = 0; v < n; ++v) {
    const std::size_t d = g.degree(v);
    s.max_degree = std::max(s.max_degree, d);
    triples += 0.5 * static_cast<double>(d) * static_cast<double>(d > 0 ? d - 1 : 0);
  }
  s.avg_degree = 2.0 * static_cast<double>(s.edges) / static_cast<double>(n);
  if (n > 1) {
    s.density = static_cast<double>(s.edges) /
                (static_cast<double>(n) * static_cast<double>(n - 1));
    if (triples > 0.0) {
      s.transitivity = 3.0 * static_cast<double>(count_triangles(g)) / triples;
    }
  }
  return s;
}

nlohmann::json to_json(const StatsRecord& s) {
  return {{"nodes", s.nodes},
          {"edges", s.edges},
          {"density", s.density},
          {"transitivity", s.transitivity},
          {"components", s.components},
          {"max_degree", s.max_degree},
          {"avg_degree", s.avg_degree}};
}

}  // namespace commlfm
