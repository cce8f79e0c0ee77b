#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "../support/oracles.hpp"
#include "fraudnet/evaluate.hpp"

using namespace fraudnet;
using oracle::SimpleGraph;

namespace {

LabeledScores random_scores(std::mt19937_64& rng, int n, int levels) {
  LabeledScores out;
  std::uniform_int_distribution<int> lv(0, levels - 1), lab(0, 2);
  for (int i = 0; i < n; ++i) {
    const int l = lab(rng);
    out.push_back({"e" + std::to_string(i), lv(rng) * 0.25,
                   l == 0 ? Label::Fraudster : (l == 1 ? Label::NonFraudster : Label::Unlabeled)});
  }
  out[0].label = Label::Fraudster;
  out[1].label = Label::NonFraudster;
  return out;
}

double pair_auc(const LabeledScores& s) {
  double hits = 0;
  double pairs = 0;
  for (const auto& p : s) {
    if (p.label != Label::Fraudster) continue;
    for (const auto& q : s) {
      if (q.label != Label::NonFraudster) continue;
      hits += p.score > q.score ? 1.0 : (p.score == q.score ? 0.5 : 0.0);
      pairs += 1;
    }
  }
  return hits / pairs;
}

double cost(const LabeledScores& s, double t, double cfp, double cfn) {
  double c = 0;
  for (const auto& x : s) {
    if (x.label == Label::Fraudster && x.score < t) c += cfn;
    if (x.label == Label::NonFraudster && x.score >= t) c += cfp;
  }
  return c;
}

Component comp(const SimpleGraph& g) { return oracle::whole(oracle::to_network(g)); }

}  // namespace

TEST_CASE("metrics") {
  auto m = metrics({41, 5, 22, 143});
  CHECK(std::abs(*m.ca - 0.8720) < 5e-5);
  CHECK(std::abs(*m.recall - 0.8913) < 5e-5);
  CHECK(std::abs(*m.precision - 0.6508) < 5e-5);
  CHECK(std::abs(*m.specificity - 0.8667) < 5e-5);
  CHECK(std::abs(*m.f1 - 0.7523) < 5e-5);

  auto perfect = metrics({10, 0, 0, 7});
  for (auto v : {perfect.ca, perfect.recall, perfect.precision, perfect.specificity, perfect.f1}) CHECK(*v == 1.0);

  auto none = metrics({0, 10, 0, 7});
  CHECK(*none.recall == 0.0);
  CHECK(*none.specificity == 1.0);
  CHECK_FALSE(none.precision);
  CHECK_FALSE(metrics({}).ca);
}

TEST_CASE("confusion matrix") {
  SUBCASE("extreme thresholds") {
    std::mt19937_64 rng(1);
    auto s = random_scores(rng, 40, 5);
    auto hi = confusion_at(s, 100.0);
    CHECK(hi.tp == 0);
    CHECK(hi.fp == 0);
    auto lo = confusion_at(s, -1.0);
    CHECK(lo.fn == 0);
    CHECK(lo.tn == 0);
  }
  SUBCASE("calibrated fixture") {
    LabeledScores s;
    auto add = [&](std::size_t n, double score, Label l) {
      for (std::size_t i = 0; i < n; ++i) s.push_back({"x", score, l});
    };
    add(41, 0.9, Label::Fraudster);
    add(5, 0.2, Label::Fraudster);
    add(22, 0.8, Label::NonFraudster);
    add(143, 0.1, Label::NonFraudster);
    add(3, 0.9, Label::Unlabeled);
    CHECK(confusion_at(s, 0.5) == ConfusionMatrix{41, 5, 22, 143});
  }
}

TEST_CASE("auc") {
  LabeledScores sep = {{"a", 2, Label::Fraudster}, {"b", 1, Label::NonFraudster}, {"c", 0.5, Label::NonFraudster}};
  CHECK(auc(sep) == 1.0);
  LabeledScores tie = {{"a", 1, Label::Fraudster}, {"b", 1, Label::NonFraudster}, {"c", 1, Label::Fraudster}};
  CHECK(auc(tie) == 0.5);
  CHECK_THROWS_AS(auc({{"a", 1, Label::Fraudster}}), std::invalid_argument);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    auto s = random_scores(rng, 30, 4);
    CHECK(auc(s) == doctest::Approx(pair_auc(s)).epsilon(1e-12));
  }
}

TEST_CASE("min cost threshold") {
  LabeledScores sep = {{"a", 3, Label::Fraudster}, {"b", 2, Label::Fraudster},
                       {"c", 1, Label::NonFraudster}, {"d", 0, Label::NonFraudster}};
  const double t = min_cost_threshold(sep, 1, 1);
  CHECK(confusion_at(sep, t) == ConfusionMatrix{2, 0, 0, 2});
  // free false positives: every fraudster is flagged
  const double recall_only = min_cost_threshold(sep, 0, 1);
  CHECK(confusion_at(sep, recall_only).fn == 0);
  CHECK(recall_only <= 2.0);

  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_scores(rng, 30, 6);
    std::uniform_real_distribution<double> cd(0.1, 5.0);
    const double cfp = cd(rng), cfn = cd(rng);
    std::vector<double> candidates = {std::numeric_limits<double>::infinity()};
    for (const auto& x : s)
      if (x.label != Label::Unlabeled) candidates.push_back(x.score);
    double best = std::numeric_limits<double>::infinity();
    double best_t = 0.0;
    for (double c : candidates) {
      const double v = cost(s, c, cfp, cfn);
      if (v < best - 1e-12 || (std::abs(v - best) <= 1e-12 && c > best_t)) best = v, best_t = c;
    }
    const double got = min_cost_threshold(s, cfp, cfn);
    CHECK(cost(s, got, cfp, cfn) == doctest::Approx(best));
    CHECK(got == best_t);
  }
}

TEST_CASE("repeated runs") {
  auto run = [](std::uint64_t seed) {
    return LabeledScores{{"a", static_cast<double>(seed % 7), Label::Fraudster},
                         {"b", 3.0, Label::NonFraudster}, {"c", 1.0, Label::NonFraudster}};
  };
  auto one = repeated_run_auc(run, 1, 9);
  REQUIRE(one.aucs.size() == 1);
  CHECK(one.mean == one.aucs[0]);
  CHECK(one.seeds[0] == run_seed(9, 0));
  auto a = repeated_run_auc(run, 10, 4);
  auto b = repeated_run_auc(run, 10, 4);
  CHECK(a.mean == b.mean);
  CHECK(a.aucs == b.aucs);
  auto fixed = repeated_run_auc([](std::uint64_t) {
    return LabeledScores{{"a", 2.0, Label::Fraudster}, {"b", 1.0, Label::NonFraudster}};
  }, 8, 1);
  for (double x : fixed.aucs) CHECK(x == fixed.mean);
}

TEST_CASE("baselines") {
  auto star = comp(SimpleGraph{5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}});
  auto deg = baseline_scores(star, CentralityKind::DegCen, 2);
  for (VertexId v = 1; v < 5; ++v) CHECK(deg.at(0) > deg.at(v));
  CHECK(deg.at(0) == doctest::Approx(2.0));

  auto path = comp(SimpleGraph{3, {{0, 1}, {1, 2}}});
  auto bet = baseline_scores(path, CentralityKind::BetCen, 1);
  CHECK(bet.at(1) > bet.at(0));
  CHECK(bet.at(1) > bet.at(2));
  auto clo = baseline_scores(path, CentralityKind::CloCen, 1);
  CHECK(clo.at(1) > clo.at(0));

  auto cyc = comp(SimpleGraph{4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}});
  for (auto kind : {CentralityKind::BetCen, CentralityKind::CloCen, CentralityKind::DegCen, CentralityKind::EigCen}) {
    auto s = baseline_scores(cyc, kind, 1);
    LabeledScores ls;
    for (const auto& [v, x] : s) ls.push_back({std::to_string(v), x, v < 2 ? Label::Fraudster : Label::NonFraudster});
    CHECK(auc(ls) == doctest::Approx(0.5));
  }
}

TEST_CASE("auc against iterations") {
  // hub 0 with fraudster leaves 1-5, joined to a 4-clique 6-9 that carries
  // non-fraudster pendants 10 and 11
  SimpleGraph g{12, {}};
  for (int v = 1; v <= 5; ++v) g.edges.emplace_back(0, v);
  g.edges.emplace_back(0, 6);
  for (int a = 6; a < 10; ++a)
    for (int b = a + 1; b < 10; ++b) g.edges.emplace_back(a, b);
  g.edges.emplace_back(7, 10);
  g.edges.emplace_back(8, 11);
  auto net = oracle::to_network(g);
  std::map<std::string, Label> labels;
  for (int v = 1; v <= 5; ++v) labels[net->vertex(v).key] = Label::Fraudster;
  labels[net->vertex(10).key] = Label::NonFraudster;
  labels[net->vertex(11).key] = Label::NonFraudster;
  std::vector<SweepInput> inputs = {{oracle::whole(net), 1}};
  IaaParams params;
  params.average_diameter = 1.0;
  const AssessmentModel raw{ModelKind::Raw, {}};
  const auto stats = network_stats(*net);

  auto single = auc_vs_iterations(inputs, raw, params, stats, {1}, labels);
  std::size_t fixed_points = 0;
  for (const auto& p : single) fixed_points += !p.dynamic;
  CHECK(fixed_points == 1);
  CHECK(single.back().dynamic);

  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= 12; ++k) ks.push_back(k);
  auto series = auc_vs_iterations(inputs, raw, params, stats, ks, labels);
  std::vector<double> aucs;
  for (const auto& p : series)
    if (!p.dynamic) aucs.push_back(p.auc);
  const auto peak = std::max_element(aucs.begin(), aucs.end()) - aucs.begin();
  CHECK(peak > 0);
  CHECK(peak < static_cast<long>(aucs.size()) - 1);
  CHECK(aucs.front() < aucs[peak]);
  CHECK(aucs.back() < aucs[peak]);

  const auto csv = sweep_csv(series, "raw");
  CHECK(csv.rfind("# schema_version: 1\nmodel,k,dynamic,auc\n", 0) == 0);
}

TEST_CASE("labels") {
  CHECK(parse_label("fraudster") == Label::Fraudster);
  CHECK(parse_label("non-fraudster") == Label::NonFraudster);
  CHECK(to_string(Label::Unlabeled) == "unlabeled");
  CHECK_THROWS(parse_label("maybe"));
  auto ls = attach_labels({{"a", 1.0}, {"b", 2.0}}, {{"a", Label::Fraudster}});
  CHECK(ls[0].label == Label::Fraudster);
  CHECK(ls[1].label == Label::Unlabeled);
}
