#include <doctest.h>

#include <algorithm>
#include <set>
#include <stdexcept>

#include "commlfm/error.hpp"
#include "commlfm/graph.hpp"
#include "support.hpp"

using namespace commlfm;

namespace {

Graph make(std::size_t n, std::vector<Edge> edges) { return Graph::from_edges(n, edges); }

Graph complete(std::size_t n) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) edges.emplace_back(u, v);
  return make(n, edges);
}

// Remove every vertex of degree < k until nothing changes; returns the
// surviving vertex set.
std::set<NodeId> peel(const Graph& g, std::size_t k) {
  std::set<NodeId> alive;
  for (NodeId v = 0; v < g.node_count(); ++v) alive.insert(v);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<NodeId> drop;
    for (NodeId v : alive) {
      std::size_t d = 0;
      for (NodeId u : alive) d += g.has_edge(u, v) ? 1 : 0;
      if (d < k) drop.push_back(v);
    }
    for (NodeId v : drop) alive.erase(v);
    changed = !drop.empty();
  }
  return alive;
}

std::set<NodeId> parents(const Subgraph& s) { return {s.parent_ids.begin(), s.parent_ids.end()}; }

}  // namespace

TEST_CASE("load_edge_list merges reversed lines") {
  testing::TempDir dir("graph_load");
  testing::write_file(dir / "e.txt", "a b\nb a\n");
  const LoadedGraph g = load_edge_list(dir / "e.txt");
  CHECK(g.graph.node_count() == 2);
  CHECK(g.graph.edge_count() == 1);
  CHECK(g.duplicates_dropped == 1);
}

TEST_CASE("load_edge_list on self-loops only is an empty-graph error") {
  testing::TempDir dir("graph_loop");
  testing::write_file(dir / "e.txt", "a a\n");
  CHECK_THROWS_AS(load_edge_list(dir / "e.txt"), EmptyGraphError);
}

TEST_CASE("load_edge_list reads a triangle, skips comments, keeps first-seen ids") {
  testing::TempDir dir("graph_tri");
  testing::write_file(dir / "e.txt", "# header\nx y\n\ny z\n z   x \nx x\n");
  const LoadedGraph g = load_edge_list(dir / "e.txt");
  CHECK(g.graph.node_count() == 3);
  CHECK(g.graph.edge_count() == 3);
  CHECK(g.self_loops_dropped == 1);
  CHECK(g.graph.original_id(0) == "x");
  CHECK(g.graph.original_id(1) == "y");
  CHECK(g.graph.original_id(2) == "z");
}

TEST_CASE("load_edge_list reports the line of a malformed entry") {
  testing::TempDir dir("graph_bad");
  testing::write_file(dir / "e.txt", "a b\nc\n");
  try {
    load_edge_list(dir / "e.txt");
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_edge_list(dir / "missing.txt"), InputError);
}

TEST_CASE("without symmetrization only reciprocated pairs survive") {
  testing::TempDir dir("graph_recip");
  testing::write_file(dir / "e.txt", "a b\nb a\nb c\n");
  const LoadedGraph g = load_edge_list(dir / "e.txt", false);
  CHECK(g.graph.node_count() == 2);
  CHECK(g.graph.edge_count() == 1);
  CHECK(g.unreciprocated_dropped == 1);
}

TEST_CASE("edge list round trip") {
  testing::TempDir dir("graph_rt");
  const Graph g = testing::random_graph(30, 0.2, 5);
  write_edge_list(g, dir / "e.txt");
  const Graph back = load_edge_list(dir / "e.txt").graph;
  REQUIRE(back.edge_count() == g.edge_count());
  for (const auto& [u, v] : back.edges()) {
    CHECK(g.has_edge(static_cast<NodeId>(std::stoul(back.original_id(u))),
                     static_cast<NodeId>(std::stoul(back.original_id(v)))));
  }
}

TEST_CASE("graph construction rejects self-loops and out-of-range ids") {
  CHECK_THROWS_AS(make(3, {{1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(make(3, {{0, 3}}), std::invalid_argument);
}

TEST_CASE("degree") {
  const Graph star = make(3, {{0, 1}, {0, 2}});
  CHECK(degree(star, 0) == 2);
  const Graph with_isolated = make(4, {{0, 1}});
  CHECK(degree(with_isolated, 3) == 0);
  const Graph k5 = complete(5);
  for (NodeId v = 0; v < 5; ++v) CHECK(degree(k5, v) == 4);
  CHECK_THROWS_AS(degree(k5, 5), std::out_of_range);
}

TEST_CASE("k_core examples") {
  SUBCASE("triangle with a pendant") {
    const Subgraph core = k_core(make(4, {{0, 1}, {1, 2}, {0, 2}, {2, 3}}), 2);
    CHECK(core.graph.node_count() == 3);
    CHECK(core.graph.edge_count() == 3);
    CHECK(parents(core) == std::set<NodeId>{0, 1, 2});
  }
  SUBCASE("path of four") {
    CHECK(k_core(make(4, {{0, 1}, {1, 2}, {2, 3}}), 2).graph.node_count() == 0);
  }
  SUBCASE("K5 plus a disjoint path") {
    std::vector<Edge> edges = complete(5).edges();
    edges.emplace_back(5, 6);
    edges.emplace_back(6, 7);
    const Subgraph core = k_core(make(8, edges), 4);
    CHECK(core.graph.node_count() == 5);
    CHECK(core.graph.edge_count() == 10);
  }
  SUBCASE("k = 0 is the identity") {
    const Graph g = testing::random_graph(20, 0.1, 3);
    const Subgraph core = k_core(g, 0);
    CHECK(core.graph.node_count() == g.node_count());
    CHECK(core.graph.edges() == g.edges());
  }
}

TEST_CASE("k_core matches brute-force peeling and is idempotent") {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    const double p = rng.uniform(0.02, 0.4);
    const std::size_t k = rng.below(7);
    const Graph g = testing::random_graph(n, p, 1000 + trial);
    const Subgraph core = k_core(g, k);
    CHECK(parents(core) == peel(g, k));
    for (NodeId v = 0; v < core.graph.node_count(); ++v) CHECK(core.graph.degree(v) >= k);
    const Subgraph again = k_core(core.graph, k);
    CHECK(again.graph.node_count() == core.graph.node_count());
    CHECK(again.graph.edge_count() == core.graph.edge_count());
  }
}

TEST_CASE("induced subgraph keeps original ids and orders by parent id") {
  const Graph g = Graph::from_edges(4, std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}}, {"a", "b", "c", "d"});
  const std::vector<NodeId> keep{3, 1, 2, 2};
  const Subgraph s = induced_subgraph(g, keep);
  CHECK(s.parent_ids == std::vector<NodeId>{1, 2, 3});
  CHECK(s.graph.original_id(0) == "b");
  CHECK(s.graph.edge_count() == 2);
}

TEST_CASE("network_stats conventions") {
  SUBCASE("triangle") {
    const StatsRecord s = network_stats(complete(3));
    CHECK(s.transitivity == doctest::Approx(1.0));
    CHECK(s.components == 1);
    CHECK(s.density == doctest::Approx(3.0 / 6.0));
  }
  SUBCASE("path of three") {
    CHECK(network_stats(make(3, {{0, 1}, {1, 2}})).transitivity == 0.0);
  }
  SUBCASE("single node") {
    const StatsRecord s = network_stats(make(1, {}));
    CHECK(s.density == 0.0);
    CHECK(s.transitivity == 0.0);
    CHECK(s.avg_degree == 0.0);
  }
  SUBCASE("empty graph is an error") { CHECK_THROWS(network_stats(Graph{})); }
  SUBCASE("random graphs") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Graph g = testing::random_graph(25, 0.15, seed);
      const StatsRecord s = network_stats(g);
      const double n = 25.0, m = static_cast<double>(g.edge_count());
      CHECK(s.avg_degree == 2.0 * m / n);
      CHECK(s.density == m / (n * (n - 1.0)));
      CHECK(s.transitivity >= 0.0);
      CHECK(s.transitivity <= 1.0);
      CHECK(s.max_degree <= 24);
      // Brute-force triangles and triples.
      double triangles = 0, triples = 0;
      for (NodeId v = 0; v < 25; ++v) {
        const double d = static_cast<double>(g.degree(v));
        triples += d * (d - 1) / 2;
        for (NodeId a = 0; a < 25; ++a)
          for (NodeId b = a + 1; b < 25; ++b)
            if (a < v && b > v && g.has_edge(a, b) && g.has_edge(a, v) && g.has_edge(b, v)) ++triangles;
      }
      CHECK(s.transitivity == doctest::Approx(triples > 0 ? 3 * triangles / triples : 0.0));
    }
  }
}

TEST_CASE("Add Health sized graph reproduces the published average degree and density") {
  // Any graph with n = 587, m = 4122 will do; build a circulant one.
  std::vector<Edge> edges;
  for (NodeId u = 0; u < 587 && edges.size() < 4122; ++u) {
    for (NodeId step = 1; step <= 8 && edges.size() < 4122; ++step) edges.emplace_back(u, (u + step) % 587);
  }
  const Graph g = make(587, edges);
  REQUIRE(g.edge_count() == 4122);
  const StatsRecord s = network_stats(g);
  CHECK(s.avg_degree == doctest::Approx(14.04).epsilon(0.0005));
  CHECK(s.density == doctest::Approx(0.012).epsilon(0.01));
}

TEST_CASE("components count disjoint pieces, including isolated nodes") {
  CHECK(count_components(make(6, {{0, 1}, {2, 3}})) == 4);
  CHECK(count_triangles(complete(4)) == 4);
}
