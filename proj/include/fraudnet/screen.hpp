#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fraudnet/graph.hpp"

namespace fraudnet {

// Binary indicator values, one row per component.
struct IndicatorMatrix {
  std::vector<VertexId> components;
  std::vector<std::string> indicators;
  std::vector<std::uint8_t> values;  // row-major, components x indicators

  std::size_t rows() const { return components.size(); }
  std::size_t cols() const { return indicators.size(); }
  std::uint8_t at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  std::size_t row_sum(std::size_t r) const;
  void validate() const;  // throws std::invalid_argument
};

struct RealMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

// Relative frequency of 1 per indicator column.
std::vector<double> indicator_frequencies(const IndicatorMatrix& m);

// R(c,i) = 1 - p1_i when I_i(c) = 1, otherwise -p1_i.
RealMatrix ridit_scores(const IndicatorMatrix& m);

struct PriditResult {
  std::vector<VertexId> components;
  std::vector<std::string> indicators;
  RealMatrix ridit;
  std::vector<double> frequencies;   // p1 per indicator
  std::vector<bool> uninformative;   // constant columns
  std::vector<double> weights;       // unit L2 norm
  std::vector<double> scores;        // ridit * weights
  std::size_t iterations = 0;
  bool converged = false;
};

// Power iteration W <- R^T R W / |R^T R W| from W = [1, ..., 1]. The sign
// is fixed so that the largest-magnitude weight is positive.
PriditResult pridit(const IndicatorMatrix& m, double tol = 1e-10, std::size_t max_iter = 1000);

// Equal-weight RIDIT ensemble (weights 1/sqrt(n)), same layout as pridit.
PriditResult ridit_ensemble(const IndicatorMatrix& m);

struct SelectionPolicy {
  enum class Kind { NonnegScore, TopFraction, TopCollisionFraction, All };
  Kind kind = Kind::NonnegScore;
  double fraction = 1.0;
};

std::string_view to_string(SelectionPolicy::Kind kind);
SelectionPolicy::Kind parse_selection_kind(std::string_view s);

// Component ids ordered by descending score (ties: smaller id first).
std::vector<VertexId> rank_components(const PriditResult& res);

// Returns the selected component ids in ascending order. For
// TopCollisionFraction, `collision_counts` is parallel to res.components.
std::vector<VertexId> select_suspicious(const PriditResult& res, const SelectionPolicy& policy,
                                        const std::vector<std::size_t>& collision_counts = {});

// Components with at least half of the indicators set.
std::vector<VertexId> majority_select(const IndicatorMatrix& m);

}  // namespace fraudnet
