#pragma once

// Brute-force reference implementations for the unit and acceptance tests.
// They share nothing with the library beyond the graph containers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fraudnet/graph.hpp"
#include "fraudnet/ingest.hpp"

namespace oracle {

using fraudnet::EdgeId;
using fraudnet::VertexId;

struct SimpleGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // parallel edges allowed, no loops
};

inline SimpleGraph random_graph(std::mt19937_64& rng, int max_n, int max_e, bool connected = true) {
  std::uniform_int_distribution<int> nd(1, max_n);
  SimpleGraph g;
  g.n = nd(rng);
  if (g.n == 1) return g;
  if (connected) {
    for (int v = 1; v < g.n; ++v) {
      std::uniform_int_distribution<int> pd(0, v - 1);
      g.edges.emplace_back(pd(rng), v);
    }
  }
  int budget = std::max<int>(0, max_e - static_cast<int>(g.edges.size()));
  std::uniform_int_distribution<int> extra(0, budget);
  std::uniform_int_distribution<int> vd(0, g.n - 1);
  for (int k = extra(rng); k > 0; --k) {
    int a = vd(rng), b = vd(rng);
    if (a != b) g.edges.emplace_back(a, b);
  }
  return g;
}

inline std::shared_ptr<fraudnet::Network> to_network(const SimpleGraph& g) {
  auto net = std::make_shared<fraudnet::Network>();
  for (int v = 0; v < g.n; ++v) {
    char key[16];
    std::snprintf(key, sizeof key, "v%03d", v);
    net->add_vertex(fraudnet::EntityKind::Participant, key);
  }
  for (auto [a, b] : g.edges) {
    net->add_edge({static_cast<VertexId>(a), static_cast<VertexId>(b), false,
                   fraudnet::EdgeLabel::Collision, std::nullopt});
  }
  return net;
}

// Whole-network component (vertices 0..n-1, every edge).
inline fraudnet::Component whole(const std::shared_ptr<fraudnet::Network>& net) {
  std::vector<VertexId> vs(net->vertex_count());
  std::iota(vs.begin(), vs.end(), 0u);
  std::vector<EdgeId> es(net->edge_count());
  std::iota(es.begin(), es.end(), 0u);
  return fraudnet::Component(net, vs, es);
}

// Union-find component labels (label = smallest member).
inline std::vector<int> union_find_labels(const SimpleGraph& g) {
  std::vector<int> parent(g.n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (auto [a, b] : g.edges) {
    int ra = find(a), rb = find(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<int> out(g.n);
  for (int v = 0; v < g.n; ++v) out[v] = find(v);
  return out;
}

inline constexpr int kInf = std::numeric_limits<int>::max() / 4;

inline std::vector<std::vector<int>> floyd_warshall(const SimpleGraph& g) {
  std::vector<std::vector<int>> d(g.n, std::vector<int>(g.n, kInf));
  for (int v = 0; v < g.n; ++v) d[v][v] = 0;
  for (auto [a, b] : g.edges) d[a][b] = d[b][a] = 1;
  for (int k = 0; k < g.n; ++k)
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

// Every shortest path between s and t as a list of edge indices.
inline void enumerate_geodesics(const SimpleGraph& g, const std::vector<std::vector<int>>& d, int s,
                                int t, std::vector<int>& path, int at,
                                std::vector<std::vector<int>>& out) {
  if (at == t) {
    out.push_back(path);
    return;
  }
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    auto [a, b] = g.edges[e];
    int next = a == at ? b : (b == at ? a : -1);
    if (next < 0 || d[s][next] != d[s][at] + 1 || d[next][t] != d[at][t] - 1) continue;
    path.push_back(e);
    enumerate_geodesics(g, d, s, t, path, next, out);
    path.pop_back();
  }
}

struct Betweenness {
  std::vector<double> edge;
  std::vector<double> vertex;
};

// Fractional counting over unordered pairs.
inline Betweenness betweenness(const SimpleGraph& g) {
  const auto d = floyd_warshall(g);
  Betweenness out{std::vector<double>(g.edges.size(), 0.0), std::vector<double>(g.n, 0.0)};
  for (int s = 0; s < g.n; ++s) {
    for (int t = s + 1; t < g.n; ++t) {
      if (d[s][t] >= kInf) continue;
      std::vector<std::vector<int>> paths;
      std::vector<int> path;
      enumerate_geodesics(g, d, s, t, path, s, paths);
      const double w = 1.0 / static_cast<double>(paths.size());
      for (const auto& p : paths) {
        int at = s;
        for (std::size_t i = 0; i < p.size(); ++i) {
          out.edge[p[i]] += w;
          auto [a, b] = g.edges[p[i]];
          at = a == at ? b : a;
          if (i + 1 < p.size()) out.vertex[at] += w;
        }
      }
    }
  }
  return out;
}

inline double l_inverse(const SimpleGraph& g) {
  const auto d = floyd_warshall(g);
  double sum = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < i; ++j)
      if (d[i][j] < kInf) sum += 1.0 / d[i][j];
  return sum / (0.5 * g.n * (g.n + 1));
}

inline int cover_by_subsets(const SimpleGraph& g) {
  int best = g.n;
  for (std::uint32_t mask = 0; mask < (1u << g.n); ++mask) {
    bool ok = true;
    for (auto [a, b] : g.edges) {
      if (!((mask >> a) & 1u) && !((mask >> b) & 1u)) {
        ok = false;
        break;
      }
    }
    if (ok) best = std::min(best, __builtin_popcount(mask));
  }
  return best;
}

struct Mixed {
  std::shared_ptr<fraudnet::Network> net;
  fraudnet::Component c;
};

// Participants 0..p-1 and collisions p..p+k-1, every edge joining a
// participant to a collision. Returns the largest component.
inline Mixed random_bucket_component(std::mt19937_64& rng, int max_p, int max_k) {
  for (;;) {
    std::uniform_int_distribution<int> pd(2, max_p), kd(1, max_k);
    const int p = pd(rng), k = kd(rng);
    auto net = std::make_shared<fraudnet::Network>();
    for (int i = 0; i < p; ++i) net->add_vertex(fraudnet::EntityKind::Participant, "P" + std::to_string(100 + i));
    for (int i = 0; i < k; ++i) net->add_vertex(fraudnet::EntityKind::Collision, "C" + std::to_string(100 + i));
    std::uniform_int_distribution<int> pick(0, p - 1), size(1, 4), lab(0, 1), pc(0, 3);
    for (int i = 0; i < k; ++i) {
      std::set<int> members;
      for (int s = size(rng); s > 0; --s) members.insert(pick(rng));
      for (int m : members) {
        const bool driver = lab(rng) == 0;
        net->add_edge({static_cast<VertexId>(m), static_cast<VertexId>(p + i), driver,
                       driver ? fraudnet::EdgeLabel::Driver : fraudnet::EdgeLabel::Passenger,
                       driver ? std::optional<int>(pc(rng)) : std::nullopt});
      }
    }
    auto cs = connected_components(net);
    auto best = std::max_element(cs.begin(), cs.end(), [](const auto& a, const auto& b) {
      return a.vertex_count() < b.vertex_count();
    });
    if (best->vertex_count() >= 3) return {net, *best};
  }
}

// Two collisions sharing one participant: C1 has guilty driver P1 (with
// passenger P3) against driver P2; C2 has guilty driver P4 against P1.
inline std::vector<fraudnet::CollisionRecord> two_collision_fixture() {
  using fraudnet::ParticipantEntry;
  using fraudnet::Role;
  fraudnet::CollisionRecord c1;
  c1.collision_id = "C1";
  c1.timestamp = "2018-01-05T23:10:00";
  c1.night = true;
  c1.location = fraudnet::LocationKind::NonUrban;
  c1.participants = {
      ParticipantEntry{"P1", Role::Driver, true, "V1", 24, "M", 0, 800.0},
      ParticipantEntry{"P3", Role::Passenger, false, "V1", 22, "M", 2, 400.0},
      ParticipantEntry{"P2", Role::Driver, false, "V2", 51, "F", 0, 1500.0},
  };
  c1.vehicle_ids = {"V1", "V2"};
  fraudnet::CollisionRecord c2;
  c2.collision_id = "C2";
  c2.timestamp = "2018-02-11T14:00:00";
  c2.participants = {
      ParticipantEntry{"P4", Role::Driver, true, "V3", 40, "F", 0, 2000.0},
      ParticipantEntry{"P1", Role::Driver, false, "V4", 24, "M", 1, 900.0},
  };
  c2.vehicle_ids = {"V3", "V4"};
  return {c1, c2};
}

}  // namespace oracle
