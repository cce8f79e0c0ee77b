#include <doctest.h>

#include <random>
#include <set>

#include "../support/oracles.hpp"
#include "fraudnet/graph.hpp"
#include "fraudnet/ingest.hpp"

using namespace fraudnet;
using oracle::SimpleGraph;

namespace {

SimpleGraph path(int n) {
  SimpleGraph g{n, {}};
  for (int v = 0; v + 1 < n; ++v) g.edges.emplace_back(v, v + 1);
  return g;
}

SimpleGraph complete(int n) {
  SimpleGraph g{n, {}};
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) g.edges.emplace_back(a, b);
  return g;
}

SimpleGraph star(int leaves) {
  SimpleGraph g{leaves + 1, {}};
  for (int v = 1; v <= leaves; ++v) g.edges.emplace_back(0, v);
  return g;
}

SimpleGraph barbell() {
  return {6, {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}, {4, 5}, {3, 5}}};
}

Component comp(const SimpleGraph& g) { return oracle::whole(oracle::to_network(g)); }

}  // namespace

TEST_CASE("network rejects self-loops and keeps parallel edges") {
  Network net;
  auto a = net.add_vertex(EntityKind::Participant, "a");
  auto b = net.add_vertex(EntityKind::Participant, "b");
  CHECK_THROWS_AS(net.add_edge({a, a, false, EdgeLabel::Collision, std::nullopt}), GraphError);
  net.add_edge({a, b, false, EdgeLabel::Collision, std::nullopt});
  net.add_edge({a, b, false, EdgeLabel::Collision, std::nullopt});
  CHECK(degree(net, a) == 2);
  CHECK_THROWS(degree(net, 7));
  CHECK(net.find(EntityKind::Participant, "b") == b);
  CHECK_FALSE(net.find(EntityKind::Collision, "b"));
  net.validate();
}

TEST_CASE("degree") {
  auto s = oracle::to_network(star(4));
  CHECK(degree(*s, 0) == 4);
  Network net;
  net.add_vertex(EntityKind::Participant, "lonely");
  CHECK(degree(net, 0) == 0);
}

TEST_CASE("connected components") {
  SUBCASE("two triangles") {
    SimpleGraph g{6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}}};
    auto cs = connected_components(oracle::to_network(g));
    REQUIRE(cs.size() == 2);
    CHECK(cs[0].vertex_count() == 3);
    CHECK(cs[1].vertex_count() == 3);
  }
  SUBCASE("empty network") { CHECK(connected_components(std::make_shared<Network>()).empty()); }
  SUBCASE("random graphs agree with union-find") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      SimpleGraph g;
      g.n = 50;
      std::uniform_int_distribution<int> vd(0, 49);
      while (g.edges.size() < 30) {
        int a = vd(rng), b = vd(rng);
        if (a != b) g.edges.emplace_back(a, b);
      }
      const auto labels = oracle::union_find_labels(g);
      auto cs = connected_components(oracle::to_network(g));
      std::set<int> roots(labels.begin(), labels.end());
      REQUIRE(cs.size() == roots.size());
      std::size_t edges = 0;
      for (const auto& c : cs) {
        edges += c.edge_count();
        for (auto v : c.vertices()) CHECK(labels[v] == static_cast<int>(c.id()));
      }
      CHECK(edges == g.edges.size());
    }
  }
  SUBCASE("two-collision COPTA network is one component") {
    auto net = build_network(oracle::two_collision_fixture(), NetworkKind::Copta);
    CHECK(connected_components(net).size() == 1);
  }
}

TEST_CASE("distances and diameter") {
  auto p = comp(path(3));
  auto d = distances_from(p, 0);
  CHECK(d.at(0) == 0);
  CHECK(d.at(1) == 1);
  CHECK(d.at(2) == 2);
  CHECK_THROWS(distances_from(p, 9));
  CHECK(diameter(comp(path(4))) == 3);
  CHECK(diameter(comp(complete(5))) == 1);
  CHECK(diameter(comp(SimpleGraph{1, {}})) == 0);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    auto g = oracle::random_graph(rng, trial < 30 ? 20 : 12, 30);
    auto c = comp(g);
    const auto fw = oracle::floyd_warshall(g);
    int diam = 0;
    for (int s = 0; s < g.n; ++s) {
      auto ds = distances_from(c, static_cast<VertexId>(s));
      for (int t = 0; t < g.n; ++t) {
        CHECK(ds.at(static_cast<VertexId>(t)) == fw[s][t]);
        diam = std::max(diam, fw[s][t]);
      }
    }
    CHECK(diameter(c) == diam);
  }
}

TEST_CASE("cycles") {
  CHECK(is_cyclic(comp(complete(3))));
  CHECK(is_cyclic(comp(SimpleGraph{2, {{0, 1}, {0, 1}}})));
  CHECK_FALSE(is_cyclic(comp(star(5))));
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto tree = oracle::random_graph(rng, 15, 0);
    CHECK_FALSE(is_cyclic(comp(tree)));
  }
}

TEST_CASE("edge betweenness") {
  SUBCASE("path") {
    auto c = comp(path(3));
    auto eb = edge_betweenness(c);
    CHECK(eb.at(0) == doctest::Approx(2.0));
    CHECK(eb.at(1) == doctest::Approx(2.0));
  }
  SUBCASE("barbell bridge is the maximum") {
    auto eb = edge_betweenness(comp(barbell()));
    const auto bridge = eb.at(3);
    for (const auto& [e, v] : eb)
      if (e != 3) CHECK(v < bridge);
    CHECK(bridge == doctest::Approx(9.0));
  }
  SUBCASE("parallel edges split traversals") {
    auto eb = edge_betweenness(comp(SimpleGraph{2, {{0, 1}, {0, 1}}}));
    CHECK(eb.at(0) == doctest::Approx(0.5));
    CHECK(eb.at(1) == doctest::Approx(0.5));
  }
  SUBCASE("random graphs agree with geodesic enumeration") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 80; ++trial) {
      auto g = oracle::random_graph(rng, 8, 14);
      auto c = comp(g);
      const auto ref = oracle::betweenness(g);
      auto eb = edge_betweenness(c);
      for (std::size_t e = 0; e < g.edges.size(); ++e)
        CHECK(eb.at(static_cast<EdgeId>(e)) == doctest::Approx(ref.edge[e]).epsilon(1e-12));
      auto bc = centrality(c, CentralityKind::BetCen);
      for (int v = 0; v < g.n; ++v)
        CHECK(bc.at(static_cast<VertexId>(v)) == doctest::Approx(ref.vertex[v]).epsilon(1e-12));
    }
  }
}

TEST_CASE("minimum vertex cover") {
  CHECK(min_vertex_cover_size(comp(path(2))).size == 1);
  auto s = min_vertex_cover_size(comp(star(5)));
  CHECK(s.size == 1);
  CHECK(s.exact);
  auto approx = min_vertex_cover_size(comp(complete(6)), 4);
  CHECK_FALSE(approx.exact);
  CHECK(approx.size >= 5);
  CHECK(approx.size <= 10);
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    auto g = oracle::random_graph(rng, 10, 20);
    CHECK(min_vertex_cover_size(comp(g)).size == static_cast<std::size_t>(oracle::cover_by_subsets(g)));
  }
}

TEST_CASE("centralities") {
  auto st = comp(star(4));
  CHECK(centrality(st, CentralityKind::DegCen).at(0) == doctest::Approx(1.0));
  CHECK(centrality(st, CentralityKind::DegCen).at(1) == doctest::Approx(0.25));
  CHECK(centrality(comp(path(3)), CentralityKind::BetCen).at(1) == doctest::Approx(1.0));
  // mean distance to the others
  auto clo = centrality(comp(path(3)), CentralityKind::CloCen);
  CHECK(clo.at(0) == doctest::Approx(1.5));
  CHECK(clo.at(1) == doctest::Approx(1.0));

  auto k4 = eigenvector_centrality(comp(complete(4)));
  for (const auto& [v, s] : k4.scores) CHECK(s == doctest::Approx(0.5));
  CHECK(k4.eigenvalue == doctest::Approx(3.0));

  auto single = comp(SimpleGraph{1, {}});
  CHECK(centrality(single, CentralityKind::DegCen).at(0) == 0.0);
  CHECK(centrality(single, CentralityKind::BetCen).at(0) == 0.0);
  CHECK(centrality(single, CentralityKind::CloCen).at(0) == 0.0);
  CHECK_THROWS(centrality(single, CentralityKind::EigCen));
}

TEST_CASE("l inverse") {
  CHECK(l_inverse(comp(path(2))) == doctest::Approx(1.0 / 3.0));
  CHECK(l_inverse(comp(complete(3))) == doctest::Approx(0.5));
  for (int n = 4; n <= 8; ++n) CHECK(l_inverse(comp(complete(n))) > l_inverse(comp(path(n))));
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = oracle::random_graph(rng, 9, 16);
    CHECK(l_inverse(comp(g)) == doctest::Approx(oracle::l_inverse(g)).epsilon(1e-12));
  }
}

TEST_CASE("underlying undirected view") {
  Network net;
  auto a = net.add_vertex(EntityKind::Participant, "a");
  auto b = net.add_vertex(EntityKind::Participant, "b");
  net.add_edge({a, b, true, EdgeLabel::Collision, std::nullopt});
  net.add_edge({b, a, true, EdgeLabel::Collision, std::nullopt});
  auto u = underlying_undirected(net);
  CHECK(u.edge_count() == 2);
  for (const auto& e : u.edges()) CHECK_FALSE(e.directed);
  CHECK(degree(u, a) == degree(net, a));
}
