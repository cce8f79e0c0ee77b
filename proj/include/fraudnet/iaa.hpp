#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fraudnet/graph.hpp"

namespace fraudnet {

// ---------------------------------------------------------------------------
// Factors

enum class Comparator { Lt, Le, Gt, Ge, Eq, Ne };
std::string_view to_string(Comparator op);
std::optional<Comparator> parse_comparator(std::string_view s);

// (attribute, comparator, value). A missing attribute never matches.
struct Condition {
  std::string attribute;
  Comparator op = Comparator::Eq;
  AttributeValue value;

  bool matches(const Attributes& attrs) const;
};

struct IntrinsicFactor {
  std::string name;
  std::vector<EntityKind> applies_to;
  std::vector<Condition> when;  // conjunction
  double value = 0.0;           // virtual factor in (-1, 1)
};

struct FactorConfig {
  std::vector<IntrinsicFactor> intrinsic;
  std::map<EdgeLabel, double> relational;  // virtual factors; missing label = 0

  void validate() const;  // throws std::invalid_argument
  // Reconstructed defaults: night + non-urban collisions, young male
  // drivers, high injury with low claim, children on board.
  static FactorConfig defaults();
};

// 1/(1-f) for f >= 0, 1+f otherwise. |f| >= 1 throws.
double factor_transform(double f);
double intrinsic_factor(const Vertex& v, const FactorConfig& cfg);
double relational_factor(EdgeLabel label, const FactorConfig& cfg);

// ---------------------------------------------------------------------------
// Assessment models

enum class ModelKind { Raw, Basic, RawMean, BasicMean };
std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view s);

struct AssessmentModel {
  ModelKind kind = ModelKind::BasicMean;
  FactorConfig factors;

  bool uses_factors() const { return kind == ModelKind::Basic || kind == ModelKind::BasicMean; }
  bool is_mean() const { return kind == ModelKind::RawMean || kind == ModelKind::BasicMean; }
};

struct NetworkStats {
  double mean_degree = 1.0;  // average vertex degree over the whole network
};
NetworkStats network_stats(const Network& net);

// One application of the model at `v`, reading neighbour scores from
// `scores` (indexed like c.vertices()). Isolated vertices assess to 0.
double assess(const Component& c, VertexId v, std::span<const double> scores,
              const AssessmentModel& model, const NetworkStats& stats);

// ---------------------------------------------------------------------------
// Iterative assessment

enum class Normalization { Mean, Max, L2, None };
std::string_view to_string(Normalization n);
Normalization parse_normalization(std::string_view s);

struct IterationPolicy {
  bool dynamic = true;
  std::size_t fixed = 0;

  static IterationPolicy fixed_count(std::size_t k) { return {false, k}; }
  static IterationPolicy dynamic_count() { return {true, 0}; }
};

struct IaaParams {
  double alpha = 0.75;
  IterationPolicy iterations;
  std::vector<EntityKind> bucket_kinds{EntityKind::Collision};
  Normalization normalization = Normalization::Mean;
  bool keep_trace = false;
  // Population-average diameter, required by the dynamic policy.
  double average_diameter = 0.0;

  void validate() const;
};

struct SuspicionScore {
  VertexId entity = 0;
  double raw = 0.0;
  double normalized = 0.0;
  std::vector<double> trace;
};

struct IaaResult {
  std::vector<VertexId> vertices;  // same order as the component
  std::vector<double> scores;      // final scores, buckets included
  std::vector<bool> bucket;
  std::vector<bool> isolated;      // kept at the initial score
  std::size_t iterations = 0;
  // trace[k][i]: score of vertices[i] after iteration k (trace[0] = start).
  std::vector<std::vector<double>> trace;

  // Non-bucket scores; `normalized` equals `raw` until
  // normalize_across_components is applied.
  std::map<VertexId, SuspicionScore> entity_scores() const;
  std::map<VertexId, double> bucket_scores() const;
};

std::size_t dynamic_iterations(double average_diameter, int component_diameter);
std::size_t dynamic_iterations(std::span<const Component> all, const Component& c);
double average_diameter(std::span<const Component> all);

IaaResult iaa_run(const Component& c, const AssessmentModel& model, const IaaParams& params,
                  const NetworkStats& stats);

// normalized = raw * collisions. Ranking within a component is unchanged.
void normalize_across_components(std::map<VertexId, SuspicionScore>& scores,
                                 std::size_t collisions);

// Members of a vehicle across the collisions of a component.
struct VehicleMember {
  VertexId participant;
  EdgeLabel role;  // Driver or Passenger
};

struct SecondaryScores {
  std::map<VertexId, double> collisions;
  std::optional<std::map<std::string, double>> vehicles;
};

// Collision (bucket) vertices get one application of `assess` over the final
// neighbour scores. Vehicles are scored only when `vehicles` is supplied.
SecondaryScores score_secondary(
    const Component& c, const IaaResult& result, const AssessmentModel& model,
    const NetworkStats& stats,
    const std::map<std::string, std::vector<VehicleMember>>* vehicles = nullptr);

struct EntityGroup {
  std::vector<VertexId> members;    // non-bucket vertices, descending score
  std::vector<VertexId> connectors; // bucket vertices joining them
  double score = 0.0;               // summed member score
};

// Non-bucket vertices scoring at least threshold_fraction * max, grouped by
// connectivity through each other and through buckets.
std::vector<EntityGroup> extract_groups(const Component& c, const IaaResult& result,
                                        double threshold_fraction);

}  // namespace fraudnet
