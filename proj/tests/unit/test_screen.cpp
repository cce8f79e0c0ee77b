#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "fraudnet/screen.hpp"

using namespace fraudnet;

namespace {

IndicatorMatrix matrix(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> values) {
  IndicatorMatrix m;
  for (std::size_t r = 0; r < rows; ++r) m.components.push_back(static_cast<VertexId>(r));
  for (std::size_t c = 0; c < cols; ++c) m.indicators.push_back("i" + std::to_string(c));
  m.values = std::move(values);
  return m;
}

IndicatorMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::vector<std::uint8_t> v(rows * cols);
  std::vector<double> rate(cols);
  std::uniform_real_distribution<double> u(0.05, 0.6);
  for (auto& r : rate) r = u(rng);
  std::uniform_real_distribution<double> coin(0, 1);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) v[r * cols + c] = coin(rng) < rate[c];
  return matrix(rows, cols, v);
}

// Dominant eigenvector of R^T R by Eigen's symmetric solver.
Eigen::VectorXd eigen_dominant(const RealMatrix& r) {
  Eigen::MatrixXd m(r.rows, r.cols);
  for (std::size_t i = 0; i < r.rows; ++i)
    for (std::size_t j = 0; j < r.cols; ++j) m(i, j) = r(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m);
  return es.eigenvectors().col(r.cols - 1);
}

}  // namespace

TEST_CASE("ridit scores") {
  // p1 = 0.95 on column 0
  std::vector<std::uint8_t> v(20, 1);
  v[0] = 0;
  auto m = matrix(20, 1, v);
  auto r = ridit_scores(m);
  CHECK(r(1, 0) == doctest::Approx(0.05));
  CHECK(r(0, 0) == doctest::Approx(-0.95));

  auto half = ridit_scores(matrix(4, 1, {1, 0, 1, 0}));
  CHECK(half(0, 0) == doctest::Approx(0.5));
  CHECK(half(1, 0) == doctest::Approx(-0.5));

  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto rm = ridit_scores(random_matrix(rng, 37, 6));
    for (std::size_t c = 0; c < rm.cols; ++c) {
      double s = 0;
      for (std::size_t i = 0; i < rm.rows; ++i) s += rm(i, c);
      CHECK(std::abs(s) < 1e-12);
    }
  }
}

TEST_CASE("pridit") {
  SUBCASE("single indicator") {
    auto m = matrix(4, 1, {1, 0, 0, 1});
    auto res = pridit(m);
    REQUIRE(res.weights.size() == 1);
    CHECK(res.weights[0] == doctest::Approx(1.0));
    auto r = ridit_scores(m);
    for (std::size_t i = 0; i < 4; ++i) CHECK(res.scores[i] == doctest::Approx(r(i, 0)));
  }
  SUBCASE("identical columns share weight") {
    auto res = pridit(matrix(4, 2, {1, 1, 0, 0, 0, 0, 1, 1}));
    CHECK(res.weights[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(res.weights[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
  }
  SUBCASE("random matrices agree with an eigensolver") {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 30; ++t) {
      auto m = random_matrix(rng, 20, 5);
      auto res = pridit(m, 1e-14, 100000);
      auto ev = eigen_dominant(res.ridit);
      double dot = 0;
      for (std::size_t i = 0; i < 5; ++i) dot += ev(static_cast<Eigen::Index>(i)) * res.weights[i];
      CHECK(std::abs(dot) >= 1 - 1e-8);
    }
  }
  SUBCASE("constant columns are flagged") {
    auto res = pridit(matrix(3, 2, {1, 0, 1, 1, 1, 0}));
    CHECK(res.uninformative[0]);
    CHECK_FALSE(res.uninformative[1]);
  }
}

TEST_CASE("selection") {
  PriditResult res;
  res.components = {0, 1, 2};
  res.scores = {0.3, -0.1, 0.0};
  CHECK(select_suspicious(res, {SelectionPolicy::Kind::NonnegScore, 1.0}) == std::vector<VertexId>{0, 2});
  CHECK(select_suspicious(res, {SelectionPolicy::Kind::TopFraction, 1.0}) == std::vector<VertexId>{0, 1, 2});
  CHECK(select_suspicious(res, {SelectionPolicy::Kind::All, 0.0}) == std::vector<VertexId>{0, 1, 2});
  CHECK(rank_components(res) == std::vector<VertexId>{0, 2, 1});

  // 20% of 10 collisions: the top component alone holds 1, adding the next holds 4
  auto top = select_suspicious(res, {SelectionPolicy::Kind::TopCollisionFraction, 0.2}, {1, 5, 3});
  CHECK(top == std::vector<VertexId>{0, 2});
  auto first = select_suspicious(res, {SelectionPolicy::Kind::TopCollisionFraction, 0.1}, {1, 5, 3});
  CHECK(first == std::vector<VertexId>{0});
}

TEST_CASE("majority vote") {
  std::vector<std::uint8_t> v(18, 0);
  for (int c = 0; c < 5; ++c) v[c] = 1;      // row 0: 5 of 9
  for (int c = 0; c < 4; ++c) v[9 + c] = 1;  // row 1: 4 of 9
  CHECK(majority_select(matrix(2, 9, v)) == std::vector<VertexId>{0});
  CHECK(majority_select(matrix(2, 9, std::vector<std::uint8_t>(18, 0))).empty());
}
