#include "fraudnet/screen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fraudnet {

std::size_t IndicatorMatrix::row_sum(std::size_t r) const {
  std::size_t sum = 0;
  for (std::size_t c = 0; c < cols(); ++c) sum += at(r, c);
  return sum;
}

void IndicatorMatrix::validate() const {
  if (values.size() != rows() * cols()) {
    throw std::invalid_argument("indicator matrix: value count does not match dimensions");
  }
  for (auto v : values) {
    if (v > 1) throw std::invalid_argument("indicator matrix: entries must be 0 or 1");
  }
}

std::vector<double> indicator_frequencies(const IndicatorMatrix& m) {
  m.validate();
  if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("empty indicator matrix");
  std::vector<double> p1(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) p1[c] += m.at(r, c);
  }
  for (auto& p : p1) p /= static_cast<double>(m.rows());
  return p1;
}

RealMatrix ridit_scores(const IndicatorMatrix& m) {
  const auto p1 = indicator_frequencies(m);
  RealMatrix out{m.rows(), m.cols(), std::vector<double>(m.rows() * m.cols())};
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out(r, c) = m.at(r, c) ? 1.0 - p1[c] : -p1[c];
    }
  }
  return out;
}

namespace {

double norm2(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// y = R^T R w
std::vector<double> gram_apply(const RealMatrix& R, const std::vector<double>& w) {
  std::vector<double> s(R.rows, 0.0);
  for (std::size_t r = 0; r < R.rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < R.cols; ++c) acc += R(r, c) * w[c];
    s[r] = acc;
  }
  std::vector<double> y(R.cols, 0.0);
  for (std::size_t r = 0; r < R.rows; ++r) {
    for (std::size_t c = 0; c < R.cols; ++c) y[c] += R(r, c) * s[r];
  }
  return y;
}

std::vector<double> apply_rows(const RealMatrix& R, const std::vector<double>& w) {
  std::vector<double> s(R.rows, 0.0);
  for (std::size_t r = 0; r < R.rows; ++r) {
    for (std::size_t c = 0; c < R.cols; ++c) s[r] += R(r, c) * w[c];
  }
  return s;
}

PriditResult prepare(const IndicatorMatrix& m) {
  PriditResult res;
  res.components = m.components;
  res.indicators = m.indicators;
  res.frequencies = indicator_frequencies(m);
  res.ridit = ridit_scores(m);
  for (double p : res.frequencies) res.uninformative.push_back(p == 0.0 || p == 1.0);
  return res;
}

}  // namespace

PriditResult pridit(const IndicatorMatrix& m, double tol, std::size_t max_iter) {
  auto res = prepare(m);
  const auto& R = res.ridit;
  const auto n = R.cols;

  std::vector<double> w(n, 1.0);
  {
    auto first = gram_apply(R, w);
    if (norm2(first) == 0.0) {
      // The all-ones start can be orthogonal to every nonzero direction;
      // restart from the column with the largest RIDIT norm.
      std::size_t best = 0;
      double best_norm = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < R.rows; ++r) s += R(r, c) * R(r, c);
        if (s > best_norm) best_norm = s, best = c;
      }
      if (best_norm == 0.0) throw std::invalid_argument("pridit: RIDIT matrix is zero");
      std::fill(w.begin(), w.end(), 0.0);
      w[best] = 1.0;
    }
  }
  const double start_norm = norm2(w);
  for (auto& x : w) x /= start_norm;

  for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
    auto next = gram_apply(R, w);
    const double len = norm2(next);
    for (auto& x : next) x /= len;
    double diff = 0.0;
    for (std::size_t c = 0; c < n; ++c) diff += (next[c] - w[c]) * (next[c] - w[c]);
    w.swap(next);
    if (std::sqrt(diff) < tol) {
      res.converged = true;
      break;
    }
  }
  res.iterations = std::min(res.iterations, max_iter);

  std::size_t lead = 0;
  for (std::size_t c = 1; c < n; ++c) {
    if (std::abs(w[c]) > std::abs(w[lead])) lead = c;
  }
  if (w[lead] < 0) {
    for (auto& x : w) x = -x;
  }
  res.weights = std::move(w);
  res.scores = apply_rows(R, res.weights);
  return res;
}

PriditResult ridit_ensemble(const IndicatorMatrix& m) {
  auto res = prepare(m);
  res.weights.assign(res.ridit.cols, 1.0 / std::sqrt(static_cast<double>(res.ridit.cols)));
  res.scores = apply_rows(res.ridit, res.weights);
  res.converged = true;
  return res;
}

std::string_view to_string(SelectionPolicy::Kind kind) {
  switch (kind) {
    case SelectionPolicy::Kind::NonnegScore: return "nonneg_score";
    case SelectionPolicy::Kind::TopFraction: return "top_fraction";
    case SelectionPolicy::Kind::TopCollisionFraction: return "top_collision_fraction";
    case SelectionPolicy::Kind::All: return "all";
  }
  return "?";
}

SelectionPolicy::Kind parse_selection_kind(std::string_view s) {
  using K = SelectionPolicy::Kind;
  for (auto k : {K::NonnegScore, K::TopFraction, K::TopCollisionFraction, K::All}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown selection policy '" + std::string(s) + "'");
}

namespace {

std::vector<std::size_t> rank_rows(const PriditResult& res) {
  std::vector<std::size_t> order(res.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (res.scores[a] != res.scores[b]) return res.scores[a] > res.scores[b];
    return res.components[a] < res.components[b];
  });
  return order;
}

}  // namespace

std::vector<VertexId> rank_components(const PriditResult& res) {
  std::vector<VertexId> out;
  for (auto r : rank_rows(res)) out.push_back(res.components[r]);
  return out;
}

std::vector<VertexId> select_suspicious(const PriditResult& res, const SelectionPolicy& policy,
                                        const std::vector<std::size_t>& collision_counts) {
  using K = SelectionPolicy::Kind;
  if (policy.kind != K::NonnegScore && policy.kind != K::All &&
      !(policy.fraction > 0.0 && policy.fraction <= 1.0)) {
    throw std::invalid_argument("selection fraction must lie in (0, 1]");
  }
  std::vector<VertexId> out;
  const auto order = rank_rows(res);
  switch (policy.kind) {
    case K::All:
      out = res.components;
      break;
    case K::NonnegScore:
      for (auto r : order) {
        if (res.scores[r] >= 0.0) out.push_back(res.components[r]);
      }
      break;
    case K::TopFraction: {
      const auto want = static_cast<std::size_t>(
          std::ceil(policy.fraction * static_cast<double>(res.components.size()) - 1e-9));
      for (std::size_t i = 0; i < want && i < order.size(); ++i) {
        out.push_back(res.components[order[i]]);
      }
      break;
    }
    case K::TopCollisionFraction: {
      if (collision_counts.size() != res.components.size()) {
        throw std::invalid_argument("collision counts must be parallel to the components");
      }
      const double total = std::accumulate(collision_counts.begin(), collision_counts.end(), 0.0);
      const double want = policy.fraction * total;
      double have = 0.0;
      for (auto r : order) {
        if (have >= want - 1e-9) break;
        out.push_back(res.components[r]);
        have += static_cast<double>(collision_counts[r]);
      }
      break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<VertexId> majority_select(const IndicatorMatrix& m) {
  m.validate();
  std::vector<VertexId> out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (2 * m.row_sum(r) >= m.cols()) out.push_back(m.components[r]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fraudnet
