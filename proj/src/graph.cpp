#include "fraudnet/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <queue>

namespace fraudnet {

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Participant: return "participant";
    case EntityKind::Collision: return "collision";
    case EntityKind::Vehicle: return "vehicle";
  }
  return "?";
}

std::string_view to_string(EdgeLabel label) {
  switch (label) {
    case EdgeLabel::Collision: return "collision";
    case EdgeLabel::Driver: return "driver";
    case EdgeLabel::Passenger: return "passenger";
    case EdgeLabel::VehicleLink: return "vehicle_link";
  }
  return "?";
}

std::optional<EntityKind> parse_entity_kind(std::string_view s) {
  for (auto k : {EntityKind::Participant, EntityKind::Collision, EntityKind::Vehicle}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<EdgeLabel> parse_edge_label(std::string_view s) {
  for (auto l : {EdgeLabel::Collision, EdgeLabel::Driver, EdgeLabel::Passenger,
                 EdgeLabel::VehicleLink}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Network

VertexId Network::add_vertex(EntityKind kind, std::string key, Attributes attributes) {
  auto slot = std::make_pair(kind, key);
  if (index_.contains(slot)) {
    throw GraphError("duplicate vertex " + std::string(to_string(kind)) + " '" + key + "'");
  }
  const auto id = static_cast<VertexId>(vertices_.size());
  vertices_.push_back(Vertex{kind, std::move(key), std::move(attributes)});
  incidence_.emplace_back();
  index_.emplace(std::move(slot), id);
  return id;
}

EdgeId Network::add_edge(Edge edge) {
  if (!contains(edge.source) || !contains(edge.target)) {
    throw GraphError("edge references unknown vertex");
  }
  if (edge.source == edge.target) {
    throw GraphError("self-loop on vertex " + std::to_string(edge.source));
  }
  const auto id = static_cast<EdgeId>(edges_.size());
  incidence_[edge.source].push_back(id);
  incidence_[edge.target].push_back(id);
  edges_.push_back(std::move(edge));
  return id;
}

const Vertex& Network::vertex(VertexId v) const {
  if (!contains(v)) throw GraphError("unknown vertex " + std::to_string(v));
  return vertices_[v];
}

const Edge& Network::edge(EdgeId e) const {
  if (e >= edges_.size()) throw GraphError("unknown edge " + std::to_string(e));
  return edges_[e];
}

std::span<const EdgeId> Network::incident(VertexId v) const {
  if (!contains(v)) throw GraphError("unknown vertex " + std::to_string(v));
  return incidence_[v];
}

std::optional<VertexId> Network::find(EntityKind kind, std::string_view key) const {
  auto it = index_.find(std::make_pair(kind, std::string(key)));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Network::validate() const {
  if (incidence_.size() != vertices_.size() || index_.size() != vertices_.size()) {
    throw GraphError("adjacency index size mismatch");
  }
  std::vector<std::vector<EdgeId>> expected(vertices_.size());
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    const auto& ed = edges_[e];
    if (!contains(ed.source) || !contains(ed.target)) {
      throw GraphError("edge " + std::to_string(e) + " references unknown vertex");
    }
    if (ed.source == ed.target) throw GraphError("self-loop on edge " + std::to_string(e));
    expected[ed.source].push_back(e);
    expected[ed.target].push_back(e);
  }
  if (expected != incidence_) throw GraphError("adjacency index inconsistent with edge list");
  for (VertexId v = 0; v < vertices_.size(); ++v) {
    auto found = find(vertices_[v].kind, vertices_[v].key);
    if (!found || *found != v) throw GraphError("vertex key index inconsistent");
  }
}

bool Network::operator==(const Network& other) const {
  return vertices_ == other.vertices_ && edges_ == other.edges_;
}

std::size_t degree(const Network& net, VertexId v) { return net.incident(v).size(); }

Network underlying_undirected(const Network& net) {
  Network out;
  for (const auto& v : net.vertices()) out.add_vertex(v.kind, v.key, v.attributes);
  for (auto e : net.edges()) {
    e.directed = false;
    out.add_edge(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// LocalGraph

LocalGraph::LocalGraph(std::uint32_t n, std::vector<LocalEdge> edges)
    : n_(n), edges_(std::move(edges)), offsets_(n + 1, 0) {
  for (const auto& e : edges_) {
    if (e.a >= n_ || e.b >= n_) throw GraphError("local edge endpoint out of range");
    ++offsets_[e.a + 1];
    ++offsets_[e.b + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adjacency_.resize(offsets_.back());
  std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::uint32_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    adjacency_[fill[e.a]++] = Incidence{e.b, i};
    adjacency_[fill[e.b]++] = Incidence{e.a, i};
  }
}

namespace local {

std::vector<int> bfs_distances(const LocalGraph& g, std::uint32_t source) {
  std::vector<int> dist(g.vertex_count(), kUnreachable);
  std::vector<std::uint32_t> queue;
  queue.reserve(g.vertex_count());
  dist[source] = 0;
  queue.push_back(source);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto v = queue[head];
    for (const auto& inc : g.incident(v)) {
      if (dist[inc.neighbor] == kUnreachable) {
        dist[inc.neighbor] = dist[v] + 1;
        queue.push_back(inc.neighbor);
      }
    }
  }
  return dist;
}

std::vector<std::uint32_t> piece_labels(const LocalGraph& g, std::uint32_t* piece_count) {
  constexpr auto kNone = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> label(g.vertex_count(), kNone);
  std::vector<std::uint32_t> stack;
  std::uint32_t next = 0;
  for (std::uint32_t s = 0; s < g.vertex_count(); ++s) {
    if (label[s] != kNone) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (const auto& inc : g.incident(v)) {
        if (label[inc.neighbor] == kNone) {
          label[inc.neighbor] = next;
          stack.push_back(inc.neighbor);
        }
      }
    }
    ++next;
  }
  if (piece_count) *piece_count = next;
  return label;
}

bool is_connected(const LocalGraph& g) {
  std::uint32_t count = 0;
  piece_labels(g, &count);
  return count <= 1;
}

LocalGraph largest_piece(const LocalGraph& g) {
  std::uint32_t count = 0;
  const auto label = piece_labels(g, &count);
  if (count <= 1) return g;
  std::vector<std::size_t> nv(count, 0), ne(count, 0);
  for (auto l : label) ++nv[l];
  for (const auto& e : g.edges()) ++ne[label[e.a]];
  std::uint32_t best = 0;
  for (std::uint32_t p = 1; p < count; ++p) {
    if (nv[p] > nv[best] || (nv[p] == nv[best] && ne[p] > ne[best])) best = p;
  }
  std::vector<std::uint32_t> remap(g.vertex_count(), 0);
  std::uint32_t n = 0;
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
    if (label[v] == best) remap[v] = n++;
  }
  std::vector<LocalEdge> edges;
  edges.reserve(ne[best]);
  for (const auto& e : g.edges()) {
    if (label[e.a] == best) edges.push_back({remap[e.a], remap[e.b]});
  }
  return LocalGraph(n, std::move(edges));
}

int diameter(const LocalGraph& g) {
  int best = 0;
  for (std::uint32_t s = 0; s < g.vertex_count(); ++s) {
    for (int d : bfs_distances(g, s)) best = std::max(best, d);
  }
  return best;
}

bool is_cyclic(const LocalGraph& g) {
  // Per piece: a connected multigraph is acyclic iff |E| = |V| - 1.
  std::uint32_t count = 0;
  const auto label = piece_labels(g, &count);
  return g.edge_count() + count > g.vertex_count();
}

namespace {

// Single-source shortest-path DAG used by the Brandes accumulations.
struct ShortestPathDag {
  std::vector<int> dist;
  std::vector<double> sigma;
  std::vector<std::uint32_t> order;  // non-decreasing distance
};

void build_dag(const LocalGraph& g, std::uint32_t s, ShortestPathDag& dag) {
  const auto n = g.vertex_count();
  dag.dist.assign(n, kUnreachable);
  dag.sigma.assign(n, 0.0);
  dag.order.clear();
  dag.dist[s] = 0;
  dag.sigma[s] = 1.0;
  dag.order.push_back(s);
  for (std::size_t head = 0; head < dag.order.size(); ++head) {
    const auto v = dag.order[head];
    for (const auto& inc : g.incident(v)) {
      const auto w = inc.neighbor;
      if (dag.dist[w] == kUnreachable) {
        dag.dist[w] = dag.dist[v] + 1;
        dag.order.push_back(w);
      }
      if (dag.dist[w] == dag.dist[v] + 1) dag.sigma[w] += dag.sigma[v];
    }
  }
}

}  // namespace

std::vector<double> edge_betweenness(const LocalGraph& g, GeodesicCounting counting) {
  std::vector<double> score(g.edge_count(), 0.0);
  std::vector<double> delta(g.vertex_count());
  ShortestPathDag dag;
  for (std::uint32_t s = 0; s < g.vertex_count(); ++s) {
    build_dag(g, s, dag);
    // Fractional: delta[w] = sum over targets t below w of sigma_wt/sigma_st.
    // Raw: delta[w] = number of geodesic tails leaving w (1 for t = w).
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto it = dag.order.rbegin(); it != dag.order.rend(); ++it) {
      const auto w = *it;
      if (w == s) continue;
      const double through = 1.0 + delta[w];
      for (const auto& inc : g.incident(w)) {
        const auto v = inc.neighbor;
        if (dag.dist[v] != dag.dist[w] - 1) continue;
        double c = 0.0;
        if (counting == GeodesicCounting::Fractional) {
          c = dag.sigma[v] / dag.sigma[w] * through;
          delta[v] += c;
        } else {
          c = dag.sigma[v] * through;
          delta[v] += through;
        }
        score[inc.edge] += c;
      }
    }
  }
  // Every unordered pair was visited from both ends.
  for (auto& x : score) x *= 0.5;
  return score;
}

std::vector<double> vertex_betweenness(const LocalGraph& g) {
  std::vector<double> score(g.vertex_count(), 0.0);
  std::vector<double> delta(g.vertex_count());
  ShortestPathDag dag;
  for (std::uint32_t s = 0; s < g.vertex_count(); ++s) {
    build_dag(g, s, dag);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto it = dag.order.rbegin(); it != dag.order.rend(); ++it) {
      const auto w = *it;
      for (const auto& inc : g.incident(w)) {
        const auto v = inc.neighbor;
        if (dag.dist[w] >= 1 && dag.dist[v] == dag.dist[w] - 1) {
          delta[v] += dag.sigma[v] / dag.sigma[w] * (1.0 + delta[w]);
        }
      }
      if (w != s) score[w] += delta[w];
    }
  }
  for (auto& x : score) x *= 0.5;
  return score;
}

std::vector<double> closeness(const LocalGraph& g) {
  const auto n = g.vertex_count();
  std::vector<double> out(n, 0.0);
  if (n <= 1) return out;
  for (std::uint32_t v = 0; v < n; ++v) {
    double sum = 0.0;
    for (int d : bfs_distances(g, v)) {
      if (d == kUnreachable) throw GraphError("closeness requires a connected graph");
      sum += d;
    }
    out[v] = sum / static_cast<double>(n - 1);
  }
  return out;
}

std::vector<double> degree_centrality(const LocalGraph& g) {
  const auto n = g.vertex_count();
  std::vector<double> out(n, 0.0);
  if (n <= 1) return out;
  for (std::uint32_t v = 0; v < n; ++v) {
    out[v] = static_cast<double>(g.degree(v)) / static_cast<double>(n - 1);
  }
  return out;
}

std::vector<double> eigenvector_centrality(const LocalGraph& g, double* eigenvalue) {
  const auto n = g.vertex_count();
  if (n < 2 || g.edge_count() == 0) {
    throw GraphError("eigenvector centrality needs at least one edge");
  }
  // Power iteration on A + I: same eigenvectors as A, and the shift removes
  // the -lambda tie that bipartite graphs (stars, even cycles) would cause.
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> y(n);
  constexpr int kMaxIter = 100000;
  constexpr double kTol = 1e-14;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    for (std::uint32_t v = 0; v < n; ++v) {
      double acc = x[v];
      for (const auto& inc : g.incident(v)) acc += x[inc.neighbor];
      y[v] = acc;
    }
    double norm = 0.0;
    for (double t : y) norm += t * t;
    norm = std::sqrt(norm);
    double diff = 0.0;
    for (std::uint32_t v = 0; v < n; ++v) {
      y[v] /= norm;
      diff = std::max(diff, std::abs(y[v] - x[v]));
    }
    x.swap(y);
    if (diff < kTol) break;
  }
  for (auto& t : x) t = std::max(t, 0.0);
  if (eigenvalue) {
    double num = 0.0;
    for (std::uint32_t v = 0; v < n; ++v) {
      for (const auto& inc : g.incident(v)) num += x[v] * x[inc.neighbor];
    }
    *eigenvalue = num;
  }
  return x;
}

double l_inverse(const LocalGraph& g) {
  const double n = g.vertex_count();
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
    const auto dist = bfs_distances(g, v);
    for (std::uint32_t u = 0; u < v; ++u) {
      if (dist[u] > 0) sum += 1.0 / dist[u];
    }
  }
  return sum / (0.5 * n * (n + 1.0));
}

namespace {

class CoverSearch {
 public:
  explicit CoverSearch(const LocalGraph& g) : n_(g.vertex_count()), adj_(n_, 0) {
    for (const auto& e : g.edges()) {
      adj_[e.a] |= bit(e.b);
      adj_[e.b] |= bit(e.a);
    }
  }

  std::size_t solve() {
    best_ = n_;
    std::uint64_t all = n_ == 64 ? ~0ULL : ((1ULL << n_) - 1);
    search(all, 0);
    return best_;
  }

 private:
  static std::uint64_t bit(std::uint32_t v) { return 1ULL << v; }

  // `alive`: vertices not yet removed. An edge is uncovered iff both ends are
  // alive.
  void search(std::uint64_t alive, std::size_t taken) {
    if (taken >= best_) return;
    std::uint32_t pick = 0;
    int max_deg = 0;
    std::size_t edges = 0;
    for (auto rest = alive; rest; rest &= rest - 1) {
      const auto v = static_cast<std::uint32_t>(std::countr_zero(rest));
      const int d = std::popcount(adj_[v] & alive);
      edges += d;
      if (d == 1) {
        // Taking the neighbour of a leaf is always safe.
        const auto u = static_cast<std::uint32_t>(std::countr_zero(adj_[v] & alive));
        search(alive & ~bit(u) & ~bit(v), taken + 1);
        return;
      }
      if (d > max_deg) {
        max_deg = d;
        pick = v;
      }
    }
    edges /= 2;
    if (edges == 0) {
      best_ = std::min(best_, taken);
      return;
    }
    const auto lower = (edges + max_deg - 1) / static_cast<std::size_t>(max_deg);
    if (taken + lower >= best_) return;
    search(alive & ~bit(pick), taken + 1);
    const auto nbrs = adj_[pick] & alive;
    search(alive & ~nbrs & ~bit(pick), taken + static_cast<std::size_t>(std::popcount(nbrs)));
  }

  std::uint32_t n_;
  std::vector<std::uint64_t> adj_;
  std::size_t best_ = 0;
};

}  // namespace

std::size_t vertex_cover_exact(const LocalGraph& g) {
  if (g.vertex_count() > 64) throw GraphError("exact vertex cover limited to 64 vertices");
  return CoverSearch(g).solve();
}

std::size_t vertex_cover_matching(const LocalGraph& g) {
  std::vector<bool> matched(g.vertex_count(), false);
  std::size_t size = 0;
  for (const auto& e : g.edges()) {
    if (!matched[e.a] && !matched[e.b]) {
      matched[e.a] = matched[e.b] = true;
      size += 2;
    }
  }
  return size;
}

VertexCover min_vertex_cover(const LocalGraph& g, std::size_t exact_limit) {
  if (g.vertex_count() <= std::min<std::size_t>(exact_limit, 64)) {
    return {vertex_cover_exact(g), true};
  }
  return {vertex_cover_matching(g), false};
}

}  // namespace local

// ---------------------------------------------------------------------------
// Component

namespace {

std::vector<LocalEdge> resolve_edges(const Network& net, const std::vector<VertexId>& vertices,
                                     const std::vector<EdgeId>& edges) {
  std::vector<LocalEdge> out;
  out.reserve(edges.size());
  auto local = [&](VertexId v) {
    auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
    if (it == vertices.end() || *it != v) {
      throw GraphError("component edge endpoint " + std::to_string(v) + " outside vertex set");
    }
    return static_cast<std::uint32_t>(it - vertices.begin());
  };
  for (auto e : edges) {
    const auto& ed = net.edge(e);
    out.push_back({local(ed.source), local(ed.target)});
  }
  return out;
}

}  // namespace

Component::Component(std::shared_ptr<const Network> net, std::vector<VertexId> vertices,
                     std::vector<EdgeId> edges)
    : net_(std::move(net)), vertices_(std::move(vertices)), edge_ids_(std::move(edges)) {
  if (!net_) throw GraphError("component without parent network");
  std::sort(vertices_.begin(), vertices_.end());
  auto local_edges = resolve_edges(*net_, vertices_, edge_ids_);
  graph_ = LocalGraph(static_cast<std::uint32_t>(vertices_.size()), std::move(local_edges));
}

Component::Component(std::shared_ptr<const Network> net, std::vector<VertexId> vertices,
                     std::vector<EdgeId> edges, std::vector<LocalEdge> local_edges)
    : net_(std::move(net)), vertices_(std::move(vertices)), edge_ids_(std::move(edges)) {
  if (!std::is_sorted(vertices_.begin(), vertices_.end())) {
    throw GraphError("component vertices must be sorted when local edges are given");
  }
  if (local_edges.size() != edge_ids_.size()) throw GraphError("edge id / endpoint count mismatch");
  graph_ = LocalGraph(static_cast<std::uint32_t>(vertices_.size()), std::move(local_edges));
}

bool Component::contains(VertexId v) const {
  return std::binary_search(vertices_.begin(), vertices_.end(), v);
}

std::optional<std::uint32_t> Component::local_index(VertexId v) const {
  auto it = std::lower_bound(vertices_.begin(), vertices_.end(), v);
  if (it == vertices_.end() || *it != v) return std::nullopt;
  return static_cast<std::uint32_t>(it - vertices_.begin());
}

bool Component::operator==(const Component& other) const {
  return vertices_ == other.vertices_ && edge_ids_ == other.edge_ids_ &&
         graph_.edges() == other.graph_.edges();
}

std::vector<Component> connected_components(const std::shared_ptr<const Network>& net,
                                            std::vector<VertexId> vertices,
                                            const std::vector<EdgeId>& edges) {
  std::sort(vertices.begin(), vertices.end());
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
  const auto local_edges = resolve_edges(*net, vertices, edges);
  LocalGraph g(static_cast<std::uint32_t>(vertices.size()), local_edges);
  std::uint32_t count = 0;
  const auto label = local::piece_labels(g, &count);
  std::vector<std::vector<VertexId>> members(count);
  std::vector<std::vector<EdgeId>> member_edges(count);
  for (std::uint32_t i = 0; i < vertices.size(); ++i) members[label[i]].push_back(vertices[i]);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    member_edges[label[local_edges[i].a]].push_back(edges[i]);
  }
  std::vector<Component> out;
  out.reserve(count);
  for (std::uint32_t p = 0; p < count; ++p) {
    std::sort(member_edges[p].begin(), member_edges[p].end());
    out.emplace_back(net, std::move(members[p]), std::move(member_edges[p]));
  }
  // Labels follow the smallest member, so `out` is already ordered by id().
  return out;
}

std::vector<Component> connected_components(const std::shared_ptr<const Network>& net) {
  std::vector<VertexId> vertices(net->vertex_count());
  std::iota(vertices.begin(), vertices.end(), VertexId{0});
  std::vector<EdgeId> edges(net->edge_count());
  std::iota(edges.begin(), edges.end(), EdgeId{0});
  return connected_components(net, std::move(vertices), edges);
}

std::map<VertexId, int> distances_from(const Component& c, VertexId v) {
  auto idx = c.local_index(v);
  if (!idx) throw GraphError("vertex " + std::to_string(v) + " not in component");
  const auto dist = local::bfs_distances(c.graph(), *idx);
  std::map<VertexId, int> out;
  for (std::uint32_t i = 0; i < dist.size(); ++i) {
    if (dist[i] != local::kUnreachable) out.emplace(c.vertices()[i], dist[i]);
  }
  return out;
}

int diameter(const Component& c) { return local::diameter(c.graph()); }

bool is_cyclic(const Component& c) { return local::is_cyclic(c.graph()); }

std::map<EdgeId, double> edge_betweenness(const Component& c, local::GeodesicCounting counting) {
  const auto scores = local::edge_betweenness(c.graph(), counting);
  std::map<EdgeId, double> out;
  for (std::size_t i = 0; i < scores.size(); ++i) out.emplace(c.edge_ids()[i], scores[i]);
  return out;
}

local::VertexCover min_vertex_cover_size(const Component& c, std::size_t exact_limit) {
  return local::min_vertex_cover(c.graph(), exact_limit);
}

double l_inverse(const Component& c) { return local::l_inverse(c.graph()); }

std::string_view to_string(CentralityKind kind) {
  switch (kind) {
    case CentralityKind::BetCen: return "BetCen";
    case CentralityKind::CloCen: return "CloCen";
    case CentralityKind::DegCen: return "DegCen";
    case CentralityKind::EigCen: return "EigCen";
  }
  return "?";
}

std::optional<CentralityKind> parse_centrality_kind(std::string_view s) {
  for (auto k : {CentralityKind::BetCen, CentralityKind::CloCen, CentralityKind::DegCen,
                 CentralityKind::EigCen}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::map<VertexId, double> centrality(const Component& c, CentralityKind kind) {
  std::vector<double> scores;
  switch (kind) {
    case CentralityKind::BetCen: scores = local::vertex_betweenness(c.graph()); break;
    case CentralityKind::CloCen: scores = local::closeness(c.graph()); break;
    case CentralityKind::DegCen: scores = local::degree_centrality(c.graph()); break;
    case CentralityKind::EigCen: return eigenvector_centrality(c).scores;
  }
  std::map<VertexId, double> out;
  for (std::size_t i = 0; i < scores.size(); ++i) out.emplace(c.vertices()[i], scores[i]);
  return out;
}

EigenCentrality eigenvector_centrality(const Component& c) {
  EigenCentrality out;
  const auto scores = local::eigenvector_centrality(c.graph(), &out.eigenvalue);
  for (std::size_t i = 0; i < scores.size(); ++i) out.scores.emplace(c.vertices()[i], scores[i]);
  return out;
}

}  // namespace fraudnet
