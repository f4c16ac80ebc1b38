#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace commlfm {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

// Undirected simple graph over contiguous ids [0, n). Adjacency lists are
// sorted and immutable after construction.
class Graph {
 public:
  Graph() = default;

  // Builds a graph from unordered pairs. Reversed and repeated pairs are
  // merged. Throws std::invalid_argument on self-loops or out-of-range ids.
  // original_ids defaults to the decimal internal id.
  static Graph from_edges(std::size_t node_count, std::span<const Edge> edges,
                          std::vector<std::string> original_ids = {});

  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edge_count_; }

  std::span<const NodeId> neighbors(NodeId v) const;
  std::size_t degree(NodeId v) const;
  bool has_edge(NodeId u, NodeId v) const;

  // Each undirected edge once, as (u, v) with u < v, lexicographic order.
  std::vector<Edge> edges() const;

  const std::vector<std::string>& original_ids() const { return original_ids_; }
  const std::string& original_id(NodeId v) const;

 private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::string> original_ids_;
  std::size_t edge_count_ = 0;
};

// Bounds-checked undirected degree.
std::size_t degree(const Graph& g, NodeId v);

struct LoadedGraph {
  Graph graph;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;
  // Directed lines whose reverse never appeared; dropped only when the
  // loader was told not to symmetrize.
  std::size_t unreciprocated_dropped = 0;
};

// Reads a whitespace-separated edge list. '#' lines are comments.
// With symmetrize set, a line "a b" means the undirected edge {a, b}.
// Without it, only reciprocated nominations (both "a b" and "b a") are kept.
// Internal ids follow first-seen order.
LoadedGraph load_edge_list(const std::filesystem::path& path, bool symmetrize = true);

void write_edge_list(const Graph& g, const std::filesystem::path& path);

// A subgraph together with the id it had in the parent graph.
struct Subgraph {
  Graph graph;
  std::vector<NodeId> parent_ids;
};

// Induced subgraph on `keep` (any order; duplicates ignored). New ids follow
// ascending parent id. Original ids carry over.
Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> keep);

// Maximal induced subgraph with every degree >= k, over all components.
Subgraph k_core(const Graph& g, std::size_t k);

struct StatsRecord {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  double density = 0.0;
  double transitivity = 0.0;
  std::size_t components = 0;
  std::size_t max_degree = 0;
  double avg_degree = 0.0;
};

// density = m / (n (n-1)), avg_degree = 2m / n, transitivity is the global
// ratio 3 * triangles / connected triples.
StatsRecord network_stats(const Graph& g);

std::size_t count_triangles(const Graph& g);
std::size_t count_components(const Graph& g);

nlohmann::json to_json(const StatsRecord& stats);

}  // namespace commlfm
