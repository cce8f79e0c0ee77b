#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace fraudnet {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EntityKind : std::uint8_t { Participant, Collision, Vehicle };

// Edge alphabet shared by all four network kinds.
//   Collision   - two drivers (or vehicles) met in a collision
//   Driver      - driver to collision / vehicle
//   Passenger   - passenger to driver / collision / vehicle
//   VehicleLink - two collisions involving the same vehicle
enum class EdgeLabel : std::uint8_t { Collision, Driver, Passenger, VehicleLink };

std::string_view to_string(EntityKind kind);
std::string_view to_string(EdgeLabel label);
std::optional<EntityKind> parse_entity_kind(std::string_view s);
std::optional<EdgeLabel> parse_edge_label(std::string_view s);

using AttributeValue = std::variant<double, std::string>;
using Attributes = std::map<std::string, AttributeValue, std::less<>>;

struct Vertex {
  EntityKind kind = EntityKind::Participant;
  std::string key;
  Attributes attributes;

  bool operator==(const Vertex&) const = default;
};

struct Edge {
  VertexId source = 0;
  VertexId target = 0;
  bool directed = false;
  EdgeLabel label = EdgeLabel::Collision;
  // COPTA driver edges: passengers travelling with this driver.
  std::optional<int> passenger_count;

  bool operator==(const Edge&) const = default;
};

/// Labeled multigraph. Vertices and edges are append-only; ids are dense and
/// assigned in insertion order. Self-loops are rejected, parallel edges are
/// kept.
class Network {
 public:
  VertexId add_vertex(EntityKind kind, std::string key, Attributes attributes = {});
  EdgeId add_edge(Edge edge);

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const Vertex& vertex(VertexId v) const;
  const Edge& edge(EdgeId e) const;
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Incident edges in insertion order (direction ignored).
  std::span<const EdgeId> incident(VertexId v) const;
  std::optional<VertexId> find(EntityKind kind, std::string_view key) const;
  bool contains(VertexId v) const { return v < vertices_.size(); }

  // Re-derives the adjacency index from the edge list and compares.
  void validate() const;

  bool operator==(const Network& other) const;

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> incidence_;
  std::map<std::pair<EntityKind, std::string>, VertexId, std::less<>> index_;
};

std::size_t degree(const Network& net, VertexId v);
Network underlying_undirected(const Network& net);

// ---------------------------------------------------------------------------
// Compact undirected multigraph over local indices 0..n-1 (CSR adjacency).
// All structural algorithms run on this form.

struct LocalEdge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  bool operator==(const LocalEdge&) const = default;
};

struct Incidence {
  std::uint32_t neighbor;
  std::uint32_t edge;
};

class LocalGraph {
 public:
  LocalGraph() = default;
  LocalGraph(std::uint32_t n, std::vector<LocalEdge> edges);

  std::uint32_t vertex_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<LocalEdge>& edges() const { return edges_; }
  std::span<const Incidence> incident(std::uint32_t v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  std::size_t degree(std::uint32_t v) const { return offsets_[v + 1] - offsets_[v]; }

 private:
  std::uint32_t n_ = 0;
  std::vector<LocalEdge> edges_;
  std::vector<std::uint32_t> offsets_{0};
  std::vector<Incidence> adjacency_;
};

namespace local {

inline constexpr int kUnreachable = -1;

enum class GeodesicCounting { Fractional, Raw };

// Hop counts from `source`; unreachable vertices get kUnreachable.
std::vector<int> bfs_distances(const LocalGraph& g, std::uint32_t source);
// Piece label per vertex, labels numbered by smallest member.
std::vector<std::uint32_t> piece_labels(const LocalGraph& g, std::uint32_t* piece_count = nullptr);
bool is_connected(const LocalGraph& g);
// Largest connected piece by vertex count (ties: more edges, then smallest
// member). Vertex order is preserved.
LocalGraph largest_piece(const LocalGraph& g);

int diameter(const LocalGraph& g);
bool is_cyclic(const LocalGraph& g);
std::vector<double> edge_betweenness(const LocalGraph& g,
                                     GeodesicCounting counting = GeodesicCounting::Fractional);
std::vector<double> vertex_betweenness(const LocalGraph& g);
std::vector<double> closeness(const LocalGraph& g);
std::vector<double> degree_centrality(const LocalGraph& g);
std::vector<double> eigenvector_centrality(const LocalGraph& g, double* eigenvalue = nullptr);
double l_inverse(const LocalGraph& g);

struct VertexCover {
  std::size_t size = 0;
  bool exact = false;
};
VertexCover min_vertex_cover(const LocalGraph& g, std::size_t exact_limit = 24);
std::size_t vertex_cover_exact(const LocalGraph& g);
std::size_t vertex_cover_matching(const LocalGraph& g);

}  // namespace local

// ---------------------------------------------------------------------------

/// A vertex subset of a parent network together with an edge multiset over
/// it. Components produced by connected_components are connected; rewired
/// components keep the edge ids of the slots they were derived from but may
/// have different endpoints and may be disconnected.
class Component {
 public:
  Component() = default;
  // Edges are resolved against the parent network.
  Component(std::shared_ptr<const Network> net, std::vector<VertexId> vertices,
            std::vector<EdgeId> edges);
  // Explicit local endpoints (local indices into `vertices`), one per edge id.
  Component(std::shared_ptr<const Network> net, std::vector<VertexId> vertices,
            std::vector<EdgeId> edges, std::vector<LocalEdge> local_edges);

  const std::shared_ptr<const Network>& network() const { return net_; }
  const std::vector<VertexId>& vertices() const { return vertices_; }
  const std::vector<EdgeId>& edge_ids() const { return edge_ids_; }
  const LocalGraph& graph() const { return graph_; }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edge_ids_.size(); }
  bool cyclic() const { return edge_ids_.size() >= vertices_.size() && !vertices_.empty(); }
  bool contains(VertexId v) const;
  std::optional<std::uint32_t> local_index(VertexId v) const;
  bool is_connected() const { return local::is_connected(graph_); }

  // Identity: smallest member vertex id.
  VertexId id() const { return vertices_.empty() ? 0 : vertices_.front(); }

  bool operator==(const Component& other) const;

 private:
  std::shared_ptr<const Network> net_;
  std::vector<VertexId> vertices_;
  std::vector<EdgeId> edge_ids_;
  LocalGraph graph_;
};

std::vector<Component> connected_components(const std::shared_ptr<const Network>& net);
// Components of the subgraph made of `edges` over `vertices`.
std::vector<Component> connected_components(const std::shared_ptr<const Network>& net,
                                            std::vector<VertexId> vertices,
                                            const std::vector<EdgeId>& edges);

std::map<VertexId, int> distances_from(const Component& c, VertexId v);
int diameter(const Component& c);
bool is_cyclic(const Component& c);
std::map<EdgeId, double> edge_betweenness(
    const Component& c, local::GeodesicCounting counting = local::GeodesicCounting::Fractional);
local::VertexCover min_vertex_cover_size(const Component& c, std::size_t exact_limit = 24);
double l_inverse(const Component& c);

enum class CentralityKind { BetCen, CloCen, DegCen, EigCen };
std::string_view to_string(CentralityKind kind);
std::optional<CentralityKind> parse_centrality_kind(std::string_view s);

std::map<VertexId, double> centrality(const Component& c, CentralityKind kind);

struct EigenCentrality {
  std::map<VertexId, double> scores;
  double eigenvalue = 0.0;
};
EigenCentrality eigenvector_centrality(const Component& c);

}  // namespace fraudnet
