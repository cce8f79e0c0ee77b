#include "fraudnet/null_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fraudnet {

namespace {

struct StatisticName {
  Statistic stat;
  std::string_view name;
};

constexpr StatisticName kStatisticNames[] = {
    {Statistic::VertexCount, "vertex_count"},   {Statistic::DriverRatio, "driver_ratio"},
    {Statistic::EdgeDensity, "edge_density"},   {Statistic::MaxDegree, "max_degree"},
    {Statistic::Diameter, "diameter"},          {Statistic::CycleRank, "cycle_rank"},
    {Statistic::CoverRatio, "cover_ratio"},     {Statistic::LInverse, "l_inverse"},
    {Statistic::MaxBetweenness, "max_betweenness"},
};

}  // namespace

std::string_view to_string(Statistic s) {
  for (const auto& e : kStatisticNames) {
    if (e.stat == s) return e.name;
  }
  return "?";
}

std::optional<Statistic> parse_statistic(std::string_view s) {
  for (const auto& e : kStatisticNames) {
    if (e.name == s) return e.stat;
  }
  return std::nullopt;
}

bool is_structural(Statistic s) { return s != Statistic::DriverRatio; }

std::string_view to_string(Tail t) { return t == Tail::Upper ? "upper" : "lower"; }

std::string_view to_string(IndicatorMode m) {
  switch (m) {
    case IndicatorMode::Threshold: return "threshold";
    case IndicatorMode::NullOneTailed: return "null_one_tailed";
    case IndicatorMode::NullTwoTailed: return "null_two_tailed";
  }
  return "?";
}

std::optional<Tail> parse_tail(std::string_view s) {
  if (s == "upper") return Tail::Upper;
  if (s == "lower") return Tail::Lower;
  return std::nullopt;
}

std::optional<IndicatorMode> parse_indicator_mode(std::string_view s) {
  for (auto m : {IndicatorMode::Threshold, IndicatorMode::NullOneTailed,
                 IndicatorMode::NullTwoTailed}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

void IndicatorSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("indicator without a name");
  if (!(significance > 0.0 && significance < 1.0)) {
    throw std::invalid_argument("indicator '" + name + "': significance must lie in (0, 1)");
  }
  if (is_null_mode() && !is_structural(statistic)) {
    throw std::invalid_argument("indicator '" + name + "': statistic '" +
                                std::string(to_string(statistic)) +
                                "' needs record context and cannot use a null model");
  }
}

std::vector<IndicatorSpec> default_indicators() {
  using enum Statistic;
  using enum IndicatorMode;
  return {
      {"size", VertexCount, Threshold, Tail::Upper, 10.0, 0.05, false},
      {"driver_ratio", DriverRatio, Threshold, Tail::Lower, 1.5, 0.05, false},
      {"density", EdgeDensity, NullOneTailed, Tail::Upper, 0.0, 0.05, false},
      {"max_degree", MaxDegree, NullOneTailed, Tail::Upper, 0.0, 0.05, true},
      {"diameter", Diameter, NullOneTailed, Tail::Lower, 0.0, 0.05, false},
      {"cycles", CycleRank, NullOneTailed, Tail::Upper, 0.0, 0.05, false},
      {"min_cover", CoverRatio, NullOneTailed, Tail::Lower, 0.0, 0.05, false},
      {"l_inverse", LInverse, NullOneTailed, Tail::Upper, 0.0, 0.05, false},
      {"betweenness", MaxBetweenness, NullOneTailed, Tail::Upper, 0.0, 0.05, false},
  };
}

double structural_statistic(Statistic s, const LocalGraph& g, const StatisticOptions& opts) {
  switch (s) {
    case Statistic::VertexCount:
      return g.vertex_count();
    case Statistic::MaxDegree: {
      std::size_t best = 0;
      for (std::uint32_t v = 0; v < g.vertex_count(); ++v) best = std::max(best, g.degree(v));
      return static_cast<double>(best);
    }
    case Statistic::CoverRatio: {
      if (g.vertex_count() == 0) return 0.0;
      const auto cover = local::min_vertex_cover(g, opts.cover_exact_limit);
      return static_cast<double>(cover.size) / g.vertex_count();
    }
    case Statistic::MaxBetweenness: {
      const auto bc = local::vertex_betweenness(g);
      return bc.empty() ? 0.0 : *std::max_element(bc.begin(), bc.end());
    }
    case Statistic::EdgeDensity:
    case Statistic::Diameter:
    case Statistic::CycleRank:
    case Statistic::LInverse: {
      const auto piece = local::largest_piece(g);
      const double n = piece.vertex_count();
      const double m = static_cast<double>(piece.edge_count());
      if (s == Statistic::EdgeDensity) return n < 2 ? 0.0 : 2.0 * m / (n * (n - 1.0));
      if (s == Statistic::Diameter) return local::diameter(piece);
      if (s == Statistic::CycleRank) return n == 0 ? 0.0 : m - n + 1.0;
      return local::l_inverse(piece);
    }
    case Statistic::DriverRatio:
      break;
  }
  throw std::invalid_argument("statistic '" + std::string(to_string(s)) + "' is not structural");
}

double observe_statistic(const Component& c, Statistic s, const ComponentContext& ctx,
                         const StatisticOptions& opts) {
  if (s == Statistic::DriverRatio) {
    if (ctx.collisions == 0) return 0.0;
    return static_cast<double>(ctx.drivers) / static_cast<double>(ctx.collisions);
  }
  return structural_statistic(s, c.graph(), opts);
}

// ---------------------------------------------------------------------------
// Rewiring

namespace local {

bool apply_swap(std::span<LocalEdge> edges, std::size_t i, std::size_t j, bool cross) {
  const auto [a, b] = edges[i];
  const auto [c, d] = edges[j];
  LocalEdge e1 = cross ? LocalEdge{a, c} : LocalEdge{a, d};
  LocalEdge e2 = cross ? LocalEdge{b, d} : LocalEdge{c, b};
  if (e1.a == e1.b || e2.a == e2.b) return false;
  edges[i] = e1;
  edges[j] = e2;
  return true;
}

SwapOutcome rewire_edges(std::span<LocalEdge> edges, std::size_t swaps, SplitMix64& rng,
                         const std::function<void(std::span<const LocalEdge>)>& on_swap) {
  SwapOutcome out;
  if (edges.size() < 2) return out;
  for (std::size_t s = 0; s < swaps; ++s) {
    bool done = false;
    for (std::size_t attempt = 0; attempt < kSwapRetries && !done; ++attempt) {
      const auto i = uniform_index(rng, edges.size());
      auto j = uniform_index(rng, edges.size() - 1);
      if (j >= i) ++j;
      const bool cross = (rng() >> 63) != 0;
      done = apply_swap(edges, i, j, cross);
    }
    if (!done) {
      out.exhausted = true;
      break;
    }
    ++out.accepted;
    if (on_swap) on_swap(edges);
  }
  return out;
}

}  // namespace local

RewireResult rewire(const Component& c, std::size_t swaps, std::uint64_t seed) {
  if (c.edge_count() < 2) throw RewireError("rewiring needs at least two edges");
  std::vector<LocalEdge> edges = c.graph().edges();
  SplitMix64 rng(seed);
  const auto outcome = local::rewire_edges(edges, swaps, rng);
  RewireResult out;
  out.swaps_performed = outcome.accepted;
  out.exhausted = outcome.exhausted;
  out.final_edges = edges.size();
  out.component = Component(c.network(), c.vertices(), c.edge_ids(), std::move(edges));
  return out;
}

RewireResult rewire_degree_perturbing(const Component& c, std::size_t swaps, std::uint64_t seed) {
  if (c.edge_count() < 1) throw RewireError("degree-perturbing rewiring needs at least one edge");
  const auto n = static_cast<std::uint32_t>(c.vertex_count());
  const std::uint32_t extra = n;
  std::vector<LocalEdge> edges = c.graph().edges();
  std::vector<EdgeId> ids = c.edge_ids();
  const auto base = static_cast<EdgeId>(c.network() ? c.network()->edge_count() : 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    edges.push_back({v, extra});
    ids.push_back(base + v);
  }
  SplitMix64 rng(seed);
  const auto outcome = local::rewire_edges(edges, swaps, rng);

  std::vector<LocalEdge> kept;
  std::vector<EdgeId> kept_ids;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].a == extra || edges[i].b == extra) continue;
    kept.push_back(edges[i]);
    kept_ids.push_back(ids[i]);
  }
  RewireResult out;
  out.swaps_performed = outcome.accepted;
  out.exhausted = outcome.exhausted;
  out.final_edges = kept.size();
  out.component = Component(c.network(), c.vertices(), std::move(kept_ids), std::move(kept));
  return out;
}

// ---------------------------------------------------------------------------
// Null distributions

std::size_t swap_count(const Component& c, double swap_fraction) {
  return static_cast<std::size_t>(std::ceil(swap_fraction * static_cast<double>(c.edge_count())));
}

std::uint64_t replicate_seed(std::uint64_t base_seed, VertexId component, std::string_view indicator,
                             std::size_t replicate) {
  return derive_seed(base_seed, static_cast<std::uint64_t>(component), indicator,
                     static_cast<std::uint64_t>(replicate));
}

NullDistribution sample_null(const Component& c, const IndicatorSpec& spec, const NullOptions& opts) {
  if (!spec.is_null_mode()) {
    throw std::invalid_argument("indicator '" + spec.name + "' is not a null-model indicator");
  }
  NullDistribution dist;
  dist.statistic = std::string(to_string(spec.statistic));
  dist.indicator = spec.name;
  dist.component = c.id();
  dist.replicates = opts.replicates;
  dist.samples.reserve(opts.replicates);
  const auto swaps = swap_count(c, opts.swap_fraction);
  for (std::size_t r = 0; r < opts.replicates; ++r) {
    const auto seed = replicate_seed(opts.base_seed, c.id(), spec.name, r);
    const auto result = spec.degree_perturbing ? rewire_degree_perturbing(c, swaps, seed)
                                               : rewire(c, swaps, seed);
    const auto& g = result.component.graph();
    if (!local::is_connected(g)) ++dist.disconnected;
    if (result.exhausted) ++dist.exhausted;
    dist.samples.push_back(structural_statistic(spec.statistic, g, opts.statistic));
  }
  return dist;
}

namespace {

bool at_least(double x, double ref) {
  return x >= ref - 1e-12 * std::max(1.0, std::abs(ref));
}

}  // namespace

double empirical_p(const NullDistribution& dist, double observed, Tail tail) {
  if (dist.samples.empty()) throw std::invalid_argument("empirical_p on an empty distribution");
  std::size_t hits = 0;
  for (double x : dist.samples) {
    if (tail == Tail::Upper ? at_least(x, observed) : at_least(observed, x)) ++hits;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(dist.samples.size() + 1);
}

bool evaluate_indicator_value(const IndicatorSpec& spec, double observed,
                              const NullDistribution* dist) {
  if (spec.mode == IndicatorMode::Threshold) {
    return spec.direction == Tail::Upper ? observed >= spec.cutoff : observed <= spec.cutoff;
  }
  if (!dist) throw std::invalid_argument("indicator '" + spec.name + "' needs a null distribution");
  if (spec.mode == IndicatorMode::NullOneTailed) {
    return empirical_p(*dist, observed, spec.direction) < spec.significance;
  }
  const double half = spec.significance / 2.0;
  return empirical_p(*dist, observed, Tail::Upper) < half ||
         empirical_p(*dist, observed, Tail::Lower) < half;
}

bool evaluate_indicator(const Component& c, const IndicatorSpec& spec,
                        const NullDistribution* dist, const ComponentContext& ctx,
                        const StatisticOptions& opts) {
  return evaluate_indicator_value(spec, observe_statistic(c, spec.statistic, ctx, opts), dist);
}

}  // namespace fraudnet
