#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "../support/oracles.hpp"
#include "fraudnet/null_model.hpp"

using namespace fraudnet;
using oracle::SimpleGraph;

namespace {

Component comp(const SimpleGraph& g) { return oracle::whole(oracle::to_network(g)); }

std::vector<std::size_t> degrees(const LocalGraph& g) {
  std::vector<std::size_t> d(g.vertex_count());
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) d[v] = g.degree(v);
  return d;
}

SimpleGraph cycle(int n) {
  SimpleGraph g{n, {}};
  for (int v = 0; v < n; ++v) g.edges.emplace_back(v, (v + 1) % n);
  return g;
}

// Diameter of the largest piece of an edge list, by Floyd-Warshall.
int piece_diameter(int n, const std::vector<LocalEdge>& edges) {
  SimpleGraph g{n, {}};
  for (auto e : edges) g.edges.emplace_back(e.a, e.b);
  const auto labels = oracle::union_find_labels(g);
  std::map<int, int> sizes;
  std::map<int, int> edge_counts;
  for (int v = 0; v < n; ++v) ++sizes[labels[v]];
  for (auto [a, b] : g.edges) ++edge_counts[labels[a]];
  int best = -1;
  for (auto [root, size] : sizes) {
    if (best < 0 || size > sizes[best] || (size == sizes[best] && edge_counts[root] > edge_counts[best])) best = root;
  }
  const auto d = oracle::floyd_warshall(g);
  int diam = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (labels[a] == best && labels[b] == best) diam = std::max(diam, d[a][b]);
  return diam;
}

// Exact expectation of the statistic after `swaps` accepted swaps, walking
// every accepted proposal with equal probability.
double exact_expectation(int n, std::vector<LocalEdge> edges, int swaps) {
  if (swaps == 0) return piece_diameter(n, edges);
  std::vector<std::vector<LocalEdge>> next;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (std::size_t j = 0; j < edges.size(); ++j) {
      if (i == j) continue;
      for (bool cross : {false, true}) {
        auto e = edges;
        LocalEdge a = e[i], b = e[j];
        LocalEdge x = cross ? LocalEdge{a.a, b.a} : LocalEdge{a.a, b.b};
        LocalEdge y = cross ? LocalEdge{a.b, b.b} : LocalEdge{b.a, a.b};
        if (x.a == x.b || y.a == y.b) continue;
        e[i] = x;
        e[j] = y;
        next.push_back(std::move(e));
      }
    }
  }
  double sum = 0.0;
  for (auto& e : next) sum += exact_expectation(n, std::move(e), swaps - 1);
  return sum / static_cast<double>(next.size());
}

}  // namespace

TEST_CASE("rewire keeps degrees") {
  SUBCASE("two disjoint edges") {
    auto c = comp(SimpleGraph{4, {{0, 1}, {2, 3}}});
    auto r = rewire(c, 1, 42);
    CHECK(r.swaps_performed == 1);
    const auto& es = r.component.graph().edges();
    REQUIRE(es.size() == 2);
    CHECK(degrees(r.component.graph()) == std::vector<std::size_t>{1, 1, 1, 1});
    CHECK_FALSE((es[0] == LocalEdge{0, 1} || es[0] == LocalEdge{1, 0}));
  }
  SUBCASE("zero swaps") {
    auto c = comp(cycle(7));
    CHECK(rewire(c, 0, 1).component == c);
    CHECK(rewire_degree_perturbing(c, 0, 1).component.graph().edges() == c.graph().edges());
  }
  SUBCASE("too few edges") {
    CHECK_THROWS_AS(rewire(comp(SimpleGraph{2, {{0, 1}}}), 1, 1), RewireError);
    CHECK_THROWS_AS(rewire_degree_perturbing(comp(SimpleGraph{2, {}}), 1, 1), RewireError);
  }
  SUBCASE("random graphs") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      auto g = oracle::random_graph(rng, 15, 30);
      if (g.edges.size() < 2) continue;
      auto c = comp(g);
      auto r = rewire(c, 1 + trial % 20, 1000 + trial);
      CHECK(r.component.vertices() == c.vertices());
      CHECK(r.component.edge_count() == c.edge_count());
      CHECK(degrees(r.component.graph()) == degrees(c.graph()));
      for (auto e : r.component.graph().edges()) CHECK(e.a != e.b);
      CHECK(rewire(c, 1 + trial % 20, 1000 + trial).component == r.component);
    }
  }
}

TEST_CASE("degree-perturbing swap moves one unit of degree") {
  // augmented edges: {0,e} and {2,3} with e = 4
  std::vector<LocalEdge> edges = {{0, 4}, {2, 3}, {1, 2}};
  REQUIRE(local::apply_swap(edges, 0, 1, false));
  auto real_degree = [&](std::uint32_t v) {
    int d = 0;
    for (auto e : edges)
      if (e.a != 4 && e.b != 4) d += (e.a == v) + (e.b == v);
    return d;
  };
  CHECK(real_degree(0) == 1);  // was 0
  CHECK(real_degree(2) == 1);  // was 2
  CHECK(real_degree(3) == 1);
}

TEST_CASE("degree-perturbing bookkeeping") {
  SimpleGraph g = cycle(10);
  g.edges.emplace_back(0, 5);
  auto c = comp(g);
  std::vector<LocalEdge> edges = c.graph().edges();
  for (std::uint32_t v = 0; v < 10; ++v) edges.push_back({v, 10});
  std::vector<std::size_t> before(11, 0);
  for (auto e : edges) ++before[e.a], ++before[e.b];
  SplitMix64 rng(99);
  std::size_t steps = 0;
  auto outcome = local::rewire_edges(edges, 1000, rng, [&](std::span<const LocalEdge> es) {
    std::size_t total = 0;
    std::vector<std::size_t> deg(11, 0);
    for (auto e : es) {
      ++deg[e.a];
      ++deg[e.b];
      CHECK(e.a != e.b);
    }
    for (auto d : deg) total += d;
    CHECK(total == 2 * es.size());
    CHECK(deg == before);  // degrees of the augmented graph never move
    ++steps;
  });
  CHECK(outcome.accepted == 1000);
  CHECK(steps == 1000);

  auto r = rewire_degree_perturbing(c, 50, 3);
  CHECK(r.final_edges == r.component.edge_count());
  CHECK(r.component.vertices() == c.vertices());
}

TEST_CASE("null distributions") {
  IndicatorSpec spec{"n", Statistic::VertexCount, IndicatorMode::NullOneTailed, Tail::Upper, 0, 0.05, false};
  auto c = comp(cycle(8));
  NullOptions opts;
  opts.replicates = 200;
  opts.base_seed = 5;
  auto d = sample_null(c, spec, opts);
  CHECK(d.samples.size() == 200);
  for (double x : d.samples) CHECK(x == 8.0);
  CHECK_FALSE(evaluate_indicator(c, spec, &d));

  IndicatorSpec diam{"diam", Statistic::Diameter, IndicatorMode::NullOneTailed, Tail::Lower, 0, 0.05, false};
  auto a = sample_null(c, diam, opts);
  auto b = sample_null(c, diam, opts);
  CHECK(a.samples == b.samples);
  opts.base_seed = 6;
  CHECK(sample_null(c, diam, opts).samples != a.samples);
  CHECK(swap_count(c, 0.5) == 4);
  CHECK(swap_count(comp(cycle(7)), 0.5) == 4);
}

TEST_CASE("diameter null on a 6-cycle matches exhaustive expectation") {
  auto c = comp(cycle(6));
  const double exact = exact_expectation(6, c.graph().edges(), static_cast<int>(swap_count(c, 0.5)));
  IndicatorSpec spec{"diam", Statistic::Diameter, IndicatorMode::NullOneTailed, Tail::Lower, 0, 0.05, false};
  NullOptions opts;
  opts.replicates = 4000;
  auto d = sample_null(c, spec, opts);
  double mean = 0.0, sq = 0.0;
  for (double x : d.samples) mean += x;
  mean /= static_cast<double>(d.samples.size());
  for (double x : d.samples) sq += (x - mean) * (x - mean);
  const double se = std::sqrt(sq / static_cast<double>(d.samples.size() - 1) / static_cast<double>(d.samples.size()));
  CHECK(std::abs(mean - exact) < 4.0 * se + 1e-9);
}

TEST_CASE("empirical p") {
  NullDistribution d;
  d.samples.assign(199, 1.0);
  CHECK(empirical_p(d, 2.0, Tail::Upper) == doctest::Approx(0.005));
  CHECK(empirical_p(d, 1.0, Tail::Upper) == 1.0);
  CHECK(empirical_p(d, 0.0, Tail::Upper) == 1.0);
  CHECK(empirical_p(d, 0.0, Tail::Lower) == doctest::Approx(0.005));
  for (int i = 0; i < 199; ++i) d.samples[i] = i;
  double last = 2.0;
  for (double x = -1; x < 201; x += 0.5) {
    double p = empirical_p(d, x, Tail::Upper);
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
    CHECK(p <= last);
    last = p;
  }
  CHECK_THROWS(empirical_p(NullDistribution{}, 1.0, Tail::Upper));
}

TEST_CASE("indicator evaluation") {
  IndicatorSpec big{"size", Statistic::VertexCount, IndicatorMode::Threshold, Tail::Upper, 10, 0.05, false};
  CHECK(evaluate_indicator(comp(cycle(12)), big, nullptr));
  CHECK_FALSE(evaluate_indicator(comp(cycle(9)), big, nullptr));

  NullDistribution d;
  for (int i = 0; i < 199; ++i) d.samples.push_back(i);
  IndicatorSpec one{"x", Statistic::MaxDegree, IndicatorMode::NullOneTailed, Tail::Upper, 0, 0.05, false};
  CHECK_FALSE(evaluate_indicator_value(one, 99.0, &d));
  CHECK_THROWS(evaluate_indicator_value(one, 99.0, nullptr));

  // upper-tail p = 0.02 passes at t/2 = 0.025
  IndicatorSpec two{"x", Statistic::MaxDegree, IndicatorMode::NullTwoTailed, Tail::Upper, 0, 0.05, false};
  NullDistribution e;
  e.samples.assign(99, 0.0);
  e.samples[0] = 10.0;
  CHECK(empirical_p(e, 10.0, Tail::Upper) == doctest::Approx(0.02));
  CHECK(evaluate_indicator_value(two, 10.0, &e));
  e.samples[1] = e.samples[2] = 10.0;  // p = 0.04
  CHECK_FALSE(evaluate_indicator_value(two, 10.0, &e));
}

TEST_CASE("statistics") {
  auto tri = comp(SimpleGraph{3, {{0, 1}, {1, 2}, {0, 2}}});
  CHECK(observe_statistic(tri, Statistic::EdgeDensity) == doctest::Approx(1.0));
  CHECK(observe_statistic(tri, Statistic::CycleRank) == doctest::Approx(1.0));
  CHECK(observe_statistic(tri, Statistic::CoverRatio) == doctest::Approx(2.0 / 3.0));
  CHECK(observe_statistic(tri, Statistic::MaxDegree) == 2.0);
  ComponentContext ctx{4, 3};
  CHECK(observe_statistic(tri, Statistic::DriverRatio, ctx) == doctest::Approx(0.75));
  CHECK(default_indicators().size() == 9);
  for (const auto& s : default_indicators()) s.validate();
}
