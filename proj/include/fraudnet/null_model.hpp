#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fraudnet/graph.hpp"
#include "fraudnet/rng.hpp"

namespace fraudnet {

class RewireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Component statistics an indicator can test. Structural statistics are
// computed from the graph alone; DriverRatio needs record-level context and
// is only usable in threshold mode.
enum class Statistic {
  VertexCount,
  DriverRatio,     // distinct drivers / collisions
  EdgeDensity,     // 2|E| / (n(n-1)) on the largest connected piece
  MaxDegree,
  Diameter,        // largest connected piece
  CycleRank,       // |E| - |V| + 1 on the largest connected piece
  CoverRatio,      // minimum vertex cover size / n
  LInverse,        // largest connected piece
  MaxBetweenness,  // max vertex betweenness
};

std::string_view to_string(Statistic s);
std::optional<Statistic> parse_statistic(std::string_view s);
bool is_structural(Statistic s);

enum class Tail { Upper, Lower };
enum class IndicatorMode { Threshold, NullOneTailed, NullTwoTailed };

std::string_view to_string(Tail t);
std::string_view to_string(IndicatorMode m);
std::optional<Tail> parse_tail(std::string_view s);
std::optional<IndicatorMode> parse_indicator_mode(std::string_view s);

struct IndicatorSpec {
  std::string name;
  Statistic statistic = Statistic::VertexCount;
  IndicatorMode mode = IndicatorMode::Threshold;
  // Suspicious direction (threshold and one-tailed modes).
  Tail direction = Tail::Upper;
  double cutoff = 0.0;
  double significance = 0.05;
  bool degree_perturbing = false;

  bool is_null_mode() const { return mode != IndicatorMode::Threshold; }
  void validate() const;  // throws std::invalid_argument
};

// The nine-indicator registry used by default for component screening.
std::vector<IndicatorSpec> default_indicators();

// Record-derived facts about a component.
struct ComponentContext {
  std::size_t collisions = 0;
  std::size_t drivers = 0;
};

struct StatisticOptions {
  std::size_t cover_exact_limit = 24;
};

double structural_statistic(Statistic s, const LocalGraph& g, const StatisticOptions& opts = {});
double observe_statistic(const Component& c, Statistic s, const ComponentContext& ctx = {},
                         const StatisticOptions& opts = {});

// ---------------------------------------------------------------------------
// Rewiring

namespace local {

struct SwapOutcome {
  std::size_t accepted = 0;
  bool exhausted = false;
};

inline constexpr std::size_t kSwapRetries = 100;

// Replaces edges i={a,b}, j={c,d} by {a,d},{c,b} (or {a,c},{b,d} when
// `cross` is set). Returns false, leaving the edges untouched, when the
// result would contain a self-loop.
bool apply_swap(std::span<LocalEdge> edges, std::size_t i, std::size_t j, bool cross);

// Performs up to `swaps` accepted swaps on `edges`. Each swap draws at most
// kSwapRetries proposals; running out stops the process early.
SwapOutcome rewire_edges(std::span<LocalEdge> edges, std::size_t swaps, SplitMix64& rng,
                         const std::function<void(std::span<const LocalEdge>)>& on_swap = {});

}  // namespace local

struct RewireResult {
  Component component;
  std::size_t swaps_performed = 0;
  bool exhausted = false;        // retry budget ran out before `swaps`
  std::size_t final_edges = 0;   // real edges after removing the extra vertex
};

RewireResult rewire(const Component& c, std::size_t swaps, std::uint64_t seed);
// Extra-vertex variant: every vertex is joined to a temporary vertex, the
// augmented edge set is rewired, and the temporary vertex is removed again,
// so true degrees may move. Edge slots that started at the temporary vertex
// get ids past the parent network's edge range.
RewireResult rewire_degree_perturbing(const Component& c, std::size_t swaps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Null distributions and tests

struct NullDistribution {
  std::string statistic;
  std::string indicator;
  VertexId component = 0;
  std::size_t replicates = 0;
  std::vector<double> samples;
  // Replicates whose rewired graph was disconnected (piece-based statistics
  // used the largest piece) or hit the retry budget.
  std::size_t disconnected = 0;
  std::size_t exhausted = 0;
};

struct NullOptions {
  std::size_t replicates = 200;
  std::uint64_t base_seed = 1;
  // swaps = ceil(swap_fraction * |E_c|)
  double swap_fraction = 0.5;
  StatisticOptions statistic;
};

std::size_t swap_count(const Component& c, double swap_fraction);
std::uint64_t replicate_seed(std::uint64_t base_seed, VertexId component, std::string_view indicator,
                             std::size_t replicate);

NullDistribution sample_null(const Component& c, const IndicatorSpec& spec,
                             const NullOptions& opts = {});

// Add-one corrected tail probability, always in (0, 1].
double empirical_p(const NullDistribution& dist, double observed, Tail tail);

bool evaluate_indicator(const Component& c, const IndicatorSpec& spec,
                        const NullDistribution* dist, const ComponentContext& ctx = {},
                        const StatisticOptions& opts = {});
bool evaluate_indicator_value(const IndicatorSpec& spec, double observed,
                              const NullDistribution* dist);

}  // namespace fraudnet
