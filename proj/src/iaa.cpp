#include "fraudnet/iaa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fraudnet {

std::string_view to_string(Comparator op) {
  switch (op) {
    case Comparator::Lt: return "<";
    case Comparator::Le: return "<=";
    case Comparator::Gt: return ">";
    case Comparator::Ge: return ">=";
    case Comparator::Eq: return "==";
    case Comparator::Ne: return "!=";
  }
  return "?";
}

std::optional<Comparator> parse_comparator(std::string_view s) {
  for (auto op : {Comparator::Lt, Comparator::Le, Comparator::Gt, Comparator::Ge, Comparator::Eq,
                  Comparator::Ne}) {
    if (to_string(op) == s) return op;
  }
  return std::nullopt;
}

namespace {

template <typename T>
bool compare(const T& a, Comparator op, const T& b) {
  switch (op) {
    case Comparator::Lt: return a < b;
    case Comparator::Le: return a <= b;
    case Comparator::Gt: return a > b;
    case Comparator::Ge: return a >= b;
    case Comparator::Eq: return a == b;
    case Comparator::Ne: return a != b;
  }
  return false;
}

}  // namespace

bool Condition::matches(const Attributes& attrs) const {
  auto it = attrs.find(attribute);
  if (it == attrs.end()) return false;
  if (it->second.index() != value.index()) return false;
  if (const auto* d = std::get_if<double>(&it->second)) {
    return compare(*d, op, std::get<double>(value));
  }
  return compare(std::get<std::string>(it->second), op, std::get<std::string>(value));
}

void FactorConfig::validate() const {
  auto check = [](double f, const std::string& what) {
    if (!(f > -1.0 && f < 1.0)) {
      throw std::invalid_argument("virtual factor for " + what + " must lie in (-1, 1)");
    }
  };
  for (const auto& f : intrinsic) check(f.value, "'" + f.name + "'");
  for (const auto& [label, f] : relational) check(f, "edge label " + std::string(to_string(label)));
}

FactorConfig FactorConfig::defaults() {
  using P = EntityKind;
  FactorConfig cfg;
  cfg.relational = {{EdgeLabel::Collision, 0.0},
                    {EdgeLabel::Driver, 0.3},
                    {EdgeLabel::Passenger, 0.0},
                    {EdgeLabel::VehicleLink, 0.2}};
  cfg.intrinsic = {
      {"night_non_urban",
       {P::Collision},
       {{"night", Comparator::Eq, 1.0}, {"non_urban", Comparator::Eq, 1.0}},
       0.4},
      {"young_male_driver",
       {P::Participant},
       {{"driver", Comparator::Eq, 1.0},
        {"age", Comparator::Lt, 30.0},
        {"sex", Comparator::Eq, std::string("M")}},
       0.2},
      {"injury_low_claim",
       {P::Participant},
       {{"injury_severity", Comparator::Ge, 2.0}, {"claimed_amount", Comparator::Lt, 1000.0}},
       0.4},
      {"child_present", {P::Collision}, {{"child_present", Comparator::Eq, 1.0}}, -0.6},
  };
  return cfg;
}

double factor_transform(double f) {
  if (!(f > -1.0 && f < 1.0)) throw std::invalid_argument("virtual factor must lie in (-1, 1)");
  return f >= 0.0 ? 1.0 / (1.0 - f) : 1.0 + f;
}

double intrinsic_factor(const Vertex& v, const FactorConfig& cfg) {
  double product = 1.0;
  for (const auto& f : cfg.intrinsic) {
    if (!f.applies_to.empty() &&
        std::find(f.applies_to.begin(), f.applies_to.end(), v.kind) == f.applies_to.end()) {
      continue;
    }
    const bool all = std::all_of(f.when.begin(), f.when.end(),
                                 [&](const Condition& c) { return c.matches(v.attributes); });
    if (all) product *= factor_transform(f.value);
  }
  return product;
}

double relational_factor(EdgeLabel label, const FactorConfig& cfg) {
  auto it = cfg.relational.find(label);
  return it == cfg.relational.end() ? 1.0 : factor_transform(it->second);
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Raw: return "raw";
    case ModelKind::Basic: return "basic";
    case ModelKind::RawMean: return "raw_mean";
    case ModelKind::BasicMean: return "basic_mean";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::Raw, ModelKind::Basic, ModelKind::RawMean, ModelKind::BasicMean}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown assessment model '" + std::string(s) + "'");
}

NetworkStats network_stats(const Network& net) {
  NetworkStats s;
  if (net.vertex_count() > 0) {
    s.mean_degree = 2.0 * static_cast<double>(net.edge_count()) / net.vertex_count();
  }
  return s;
}

namespace {

// Per-run constants: intrinsic factor per vertex and relational factor per
// edge slot.
struct Plan {
  std::vector<double> intrinsic;
  std::vector<double> relational;
};

Plan make_plan(const Component& c, const AssessmentModel& model) {
  Plan p;
  p.intrinsic.assign(c.vertex_count(), 1.0);
  p.relational.assign(c.edge_count(), 1.0);
  if (!model.uses_factors()) return p;
  const auto& net = *c.network();
  for (std::size_t i = 0; i < c.vertex_count(); ++i) {
    p.intrinsic[i] = intrinsic_factor(net.vertex(c.vertices()[i]), model.factors);
  }
  for (std::size_t e = 0; e < c.edge_count(); ++e) {
    p.relational[e] = relational_factor(net.edge(c.edge_ids()[e]).label, model.factors);
  }
  return p;
}

double assess_local(const Component& c, std::uint32_t v, std::span<const double> scores,
                    const AssessmentModel& model, const NetworkStats& stats, const Plan& plan) {
  const auto& g = c.graph();
  const auto d = g.degree(v);
  if (d == 0) return 0.0;
  double sum = 0.0;
  for (const auto& inc : g.incident(v)) sum += plan.relational[inc.edge] * scores[inc.neighbor];
  double value = plan.intrinsic[v] * sum;
  if (model.is_mean()) value *= 0.5 * (1.0 + stats.mean_degree / static_cast<double>(d));
  return value;
}

}  // namespace

double assess(const Component& c, VertexId v, std::span<const double> scores,
              const AssessmentModel& model, const NetworkStats& stats) {
  const auto idx = c.local_index(v);
  if (!idx) throw GraphError("assess: vertex " + std::to_string(v) + " not in component");
  if (scores.size() != c.vertex_count()) throw std::invalid_argument("assess: score size mismatch");
  return assess_local(c, *idx, scores, model, stats, make_plan(c, model));
}

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::Mean: return "mean";
    case Normalization::Max: return "max";
    case Normalization::L2: return "l2";
    case Normalization::None: return "none";
  }
  return "?";
}

Normalization parse_normalization(std::string_view s) {
  for (auto n : {Normalization::Mean, Normalization::Max, Normalization::L2, Normalization::None}) {
    if (to_string(n) == s) return n;
  }
  throw std::invalid_argument("unknown normalization '" + std::string(s) + "'");
}

void IaaParams::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0, 1)");
}

std::size_t dynamic_iterations(double average_diameter, int component_diameter) {
  const double k = std::max(std::ceil(average_diameter - 1e-12), static_cast<double>(component_diameter));
  return static_cast<std::size_t>(std::max(1.0, k));
}

double average_diameter(std::span<const Component> all) {
  if (all.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : all) sum += diameter(c);
  return sum / static_cast<double>(all.size());
}

std::size_t dynamic_iterations(std::span<const Component> all, const Component& c) {
  return dynamic_iterations(average_diameter(all), diameter(c));
}

IaaResult iaa_run(const Component& c, const AssessmentModel& model, const IaaParams& params,
                  const NetworkStats& stats) {
  params.validate();
  if (model.uses_factors()) model.factors.validate();
  if (c.vertex_count() == 0) throw GraphError("iaa_run on an empty component");
  const auto n = c.vertex_count();
  const auto& net = *c.network();

  IaaResult res;
  res.vertices = c.vertices();
  res.bucket.resize(n);
  res.isolated.resize(n);
  std::size_t non_bucket = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto kind = net.vertex(c.vertices()[i]).kind;
    res.bucket[i] = std::find(params.bucket_kinds.begin(), params.bucket_kinds.end(), kind) !=
                    params.bucket_kinds.end();
    res.isolated[i] = c.graph().degree(static_cast<std::uint32_t>(i)) == 0;
    if (!res.bucket[i]) ++non_bucket;
  }
  if (non_bucket == 0) throw GraphError("iaa_run: component has no non-bucket vertex");

  res.iterations = params.iterations.dynamic
                       ? dynamic_iterations(params.average_diameter, diameter(c))
                       : params.iterations.fixed;

  const auto plan = make_plan(c, model);
  std::vector<double> cur(n, 1.0), next(n);
  if (params.keep_trace) res.trace.push_back(cur);
  const double alpha = params.alpha;

  for (std::size_t k = 0; k < res.iterations; ++k) {
    for (std::uint32_t i = 0; i < n; ++i) {
      next[i] = res.isolated[i]
                    ? cur[i]
                    : alpha * cur[i] + (1.0 - alpha) * assess_local(c, i, cur, model, stats, plan);
    }
    if (params.normalization != Normalization::None) {
      double scale = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (res.bucket[i]) continue;
        switch (params.normalization) {
          case Normalization::Mean: scale += next[i]; break;
          case Normalization::Max: scale = std::max(scale, next[i]); break;
          case Normalization::L2: scale += next[i] * next[i]; break;
          case Normalization::None: break;
        }
      }
      if (params.normalization == Normalization::Mean) scale /= static_cast<double>(non_bucket);
      if (params.normalization == Normalization::L2) scale = std::sqrt(scale);
      if (scale > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
          if (!res.bucket[i]) next[i] /= scale;
        }
      }
    }
    cur.swap(next);
    if (params.keep_trace) res.trace.push_back(cur);
  }
  res.scores = std::move(cur);
  return res;
}

std::map<VertexId, SuspicionScore> IaaResult::entity_scores() const {
  std::map<VertexId, SuspicionScore> out;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (bucket[i]) continue;
    SuspicionScore s;
    s.entity = vertices[i];
    s.raw = s.normalized = scores[i];
    for (const auto& snap : trace) s.trace.push_back(snap[i]);
    out.emplace(vertices[i], std::move(s));
  }
  return out;
}

std::map<VertexId, double> IaaResult::bucket_scores() const {
  std::map<VertexId, double> out;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (bucket[i]) out.emplace(vertices[i], scores[i]);
  }
  return out;
}

void normalize_across_components(std::map<VertexId, SuspicionScore>& scores,
                                 std::size_t collisions) {
  if (collisions < 1) throw std::invalid_argument("collision count must be at least 1");
  for (auto& [id, s] : scores) s.normalized = s.raw * static_cast<double>(collisions);
}

SecondaryScores score_secondary(const Component& c, const IaaResult& result,
                                const AssessmentModel& model, const NetworkStats& stats,
                                const std::map<std::string, std::vector<VehicleMember>>* vehicles) {
  SecondaryScores out;
  const auto plan = make_plan(c, model);
  for (std::uint32_t i = 0; i < c.vertex_count(); ++i) {
    if (!result.bucket[i]) continue;
    out.collisions.emplace(c.vertices()[i],
                           assess_local(c, i, result.scores, model, stats, plan));
  }
  if (vehicles) {
    std::map<std::string, double> vs;
    for (const auto& [vid, members] : *vehicles) {
      double sum = 0.0;
      std::size_t d = 0;
      for (const auto& m : members) {
        const auto idx = c.local_index(m.participant);
        if (!idx) continue;
        const double f = model.uses_factors() ? relational_factor(m.role, model.factors) : 1.0;
        sum += f * result.scores[*idx];
        ++d;
      }
      if (d == 0) continue;
      if (model.is_mean()) sum *= 0.5 * (1.0 + stats.mean_degree / static_cast<double>(d));
      vs.emplace(vid, sum);
    }
    out.vehicles = std::move(vs);
  }
  return out;
}

std::vector<EntityGroup> extract_groups(const Component& c, const IaaResult& result,
                                        double threshold_fraction) {
  const auto n = c.vertex_count();
  double top = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!result.bucket[i]) top = std::max(top, result.scores[i]);
  }
  const double threshold = threshold_fraction * top;
  std::vector<bool> keep(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    keep[i] = result.bucket[i] || result.scores[i] >= threshold;
  }
  std::vector<LocalEdge> edges;
  for (const auto& e : c.graph().edges()) {
    if (keep[e.a] && keep[e.b]) edges.push_back(e);
  }
  const LocalGraph filtered(static_cast<std::uint32_t>(n), std::move(edges));
  std::uint32_t count = 0;
  const auto label = local::piece_labels(filtered, &count);

  std::vector<EntityGroup> groups(count);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    auto& g = groups[label[i]];
    if (result.bucket[i]) {
      g.connectors.push_back(c.vertices()[i]);
    } else {
      g.members.push_back(c.vertices()[i]);
      g.score += result.scores[i];
    }
  }
  std::erase_if(groups, [](const EntityGroup& g) { return g.members.empty(); });
  auto score_of = [&](VertexId v) { return result.scores[*c.local_index(v)]; };
  for (auto& g : groups) {
    std::stable_sort(g.members.begin(), g.members.end(),
                     [&](VertexId a, VertexId b) { return score_of(a) > score_of(b); });
  }
  std::stable_sort(groups.begin(), groups.end(),
                   [](const EntityGroup& a, const EntityGroup& b) { return a.score > b.score; });
  return groups;
}

}  // namespace fraudnet
