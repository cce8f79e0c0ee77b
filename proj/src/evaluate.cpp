#include "fraudnet/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fraudnet/rng.hpp"

namespace fraudnet {

std::string_view to_string(Label l) {
  switch (l) {
    case Label::Fraudster: return "fraudster";
    case Label::NonFraudster: return "non-fraudster";
    case Label::Unlabeled: return "unlabeled";
  }
  return "?";
}

Label parse_label(std::string_view s) {
  for (auto l : {Label::Fraudster, Label::NonFraudster, Label::Unlabeled}) {
    if (to_string(l) == s) return l;
  }
  throw std::invalid_argument("unknown label '" + std::string(s) + "'");
}

LabeledScores attach_labels(const std::map<std::string, double>& scores,
                            const std::map<std::string, Label>& labels) {
  LabeledScores out;
  out.reserve(scores.size());
  for (const auto& [key, s] : scores) {
    auto it = labels.find(key);
    out.push_back({key, s, it == labels.end() ? Label::Unlabeled : it->second});
  }
  return out;
}

ConfusionMatrix confusion_at(const LabeledScores& scores, double threshold) {
  ConfusionMatrix cm;
  for (const auto& s : scores) {
    const bool flagged = s.score >= threshold;
    if (s.label == Label::Fraudster) {
      ++(flagged ? cm.tp : cm.fn);
    } else if (s.label == Label::NonFraudster) {
      ++(flagged ? cm.fp : cm.tn);
    }
  }
  return cm;
}

namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  const double tp = cm.tp, fn = cm.fn, fp = cm.fp, tn = cm.tn;
  m.ca = ratio(tp + tn, tp + fn + fp + tn);
  m.recall = ratio(tp, tp + fn);
  m.precision = ratio(tp, tp + fp);
  m.specificity = ratio(tn, tn + fp);
  if (m.recall && m.precision) m.f1 = ratio(2.0 * *m.recall * *m.precision, *m.recall + *m.precision);
  return m;
}

double auc(const LabeledScores& scores) {
  std::vector<std::pair<double, bool>> xs;
  for (const auto& s : scores) {
    if (s.label == Label::Unlabeled) continue;
    if (!std::isfinite(s.score)) throw std::invalid_argument("auc: non-finite score for " + s.entity);
    xs.emplace_back(s.score, s.label == Label::Fraudster);
  }
  std::sort(xs.begin(), xs.end());
  double pos = 0, neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < xs.size();) {
    std::size_t j = i;
    while (j < xs.size() && xs[j].first == xs[i].first) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (xs[k].second) {
        ++pos;
        rank_sum += mid_rank;
      } else {
        ++neg;
      }
    }
    i = j;
  }
  if (pos == 0 || neg == 0) throw std::invalid_argument("auc needs both fraudsters and non-fraudsters");
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

double min_cost_threshold(const LabeledScores& scores, double cost_fp, double cost_fn) {
  if (cost_fp < 0 || cost_fn < 0) throw std::invalid_argument("costs must be non-negative");
  std::vector<double> cands;
  bool has_pos = false, has_neg = false;
  for (const auto& s : scores) {
    if (s.label == Label::Unlabeled) continue;
    has_pos |= s.label == Label::Fraudster;
    has_neg |= s.label == Label::NonFraudster;
    cands.push_back(s.score);
  }
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("min_cost_threshold needs both fraudsters and non-fraudsters");
  }
  cands.push_back(std::numeric_limits<double>::infinity());
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

  // Sweep from the top: lowering the threshold past a score flags its entries.
  std::vector<std::pair<double, bool>> xs;
  for (const auto& s : scores) {
    if (s.label != Label::Unlabeled) xs.emplace_back(s.score, s.label == Label::Fraudster);
  }
  std::sort(xs.begin(), xs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::size_t positives = 0;
  for (const auto& x : xs) positives += x.second;

  double best_t = cands.back();
  double best_cost = cost_fn * static_cast<double>(positives);
  std::size_t tp = 0, fp = 0, idx = 0;
  for (auto it = cands.rbegin() + 1; it != cands.rend(); ++it) {
    while (idx < xs.size() && xs[idx].first >= *it) {
      ++(xs[idx].second ? tp : fp);
      ++idx;
    }
    const double cost = cost_fn * static_cast<double>(positives - tp) + cost_fp * static_cast<double>(fp);
    if (cost < best_cost) {
      best_cost = cost;
      best_t = *it;
    }
  }
  return best_t;
}

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t run) {
  return derive_seed(base_seed, "run", static_cast<std::uint64_t>(run));
}

RepeatedAuc repeated_run_auc(const std::function<LabeledScores(std::uint64_t)>& run,
                             std::size_t repeats, std::uint64_t base_seed) {
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  RepeatedAuc out;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto seed = run_seed(base_seed, r);
    out.seeds.push_back(seed);
    out.aucs.push_back(auc(run(seed)));
  }
  out.mean = std::accumulate(out.aucs.begin(), out.aucs.end(), 0.0) / static_cast<double>(repeats);
  return out;
}

std::map<VertexId, double> baseline_scores(const Component& c, CentralityKind kind,
                                           std::size_t collisions) {
  std::map<VertexId, double> out;
  const auto& net = *c.network();
  std::map<VertexId, double> raw;
  if (c.edge_count() == 0) {
    for (auto v : c.vertices()) raw[v] = 0.0;
  } else {
    raw = centrality(c, kind);
  }
  const double scale = static_cast<double>(std::max<std::size_t>(collisions, 1));
  for (const auto& [v, x] : raw) {
    if (net.vertex(v).kind != EntityKind::Participant) continue;
    out[v] = (kind == CentralityKind::CloCen ? -x : x) * scale;
  }
  return out;
}

namespace {

LabeledScores sweep_scores(const std::vector<SweepInput>& inputs, const AssessmentModel& model,
                           const IaaParams& params, const NetworkStats& stats,
                           const std::map<std::string, Label>& labels,
                           const std::vector<std::string>& others) {
  std::map<std::string, double> scores;
  for (const auto& key : others) scores.emplace(key, 0.0);
  for (const auto& in : inputs) {
    const auto& net = *in.component.network();
    const auto res = iaa_run(in.component, model, params, stats);
    auto ents = res.entity_scores();
    normalize_across_components(ents, in.collisions);
    for (const auto& [v, s] : ents) {
      if (net.vertex(v).kind == EntityKind::Participant) scores[net.vertex(v).key] = s.normalized;
    }
  }
  return attach_labels(scores, labels);
}

}  // namespace

std::vector<SweepPoint> auc_vs_iterations(const std::vector<SweepInput>& inputs,
                                          const AssessmentModel& model, IaaParams params,
                                          const NetworkStats& stats,
                                          const std::vector<std::size_t>& k_range,
                                          const std::map<std::string, Label>& labels,
                                          const std::vector<std::string>& others) {
  std::vector<SweepPoint> out;
  for (auto k : k_range) {
    params.iterations = IterationPolicy::fixed_count(k);
    out.push_back({k, false, auc(sweep_scores(inputs, model, params, stats, labels, others))});
  }
  params.iterations = IterationPolicy::dynamic_count();
  out.push_back({0, true, auc(sweep_scores(inputs, model, params, stats, labels, others))});
  return out;
}

namespace {

std::string fmt(std::optional<double> v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace

std::string metrics_table(const ConfusionMatrix& cm, const Metrics& m,
                          std::optional<double> auc_value) {
  std::ostringstream os;
  char line[128];
  os << "# schema_version: 1\nConfusion matrix\n";
  std::snprintf(line, sizeof line, "%-16s %10s %14s\n", "", "suspicious", "not suspicious");
  os << line;
  std::snprintf(line, sizeof line, "%-16s %10zu %14zu\n", "fraudster", cm.tp, cm.fn);
  os << line;
  std::snprintf(line, sizeof line, "%-16s %10zu %14zu\n", "non-fraudster", cm.fp, cm.tn);
  os << line << "\nMetrics\n";
  const std::pair<const char*, std::optional<double>> rows[] = {
      {"CA", m.ca}, {"Recall", m.recall}, {"Precision", m.precision},
      {"Specificity", m.specificity}, {"F1", m.f1}, {"AUC", auc_value}};
  for (const auto& [name, v] : rows) {
    if (std::string_view(name) == "AUC" && !auc_value) continue;
    std::snprintf(line, sizeof line, "%-16s %10s\n", name, fmt(v).c_str());
    os << line;
  }
  return os.str();
}

std::string sweep_csv(const std::vector<SweepPoint>& series, std::string_view model_name) {
  std::ostringstream os;
  os << "# schema_version: 1\nmodel,k,dynamic,auc\n";
  char buf[64];
  for (const auto& p : series) {
    std::snprintf(buf, sizeof buf, "%.10f", p.auc);
    os << model_name << ',' << p.k << ',' << (p.dynamic ? 1 : 0) << ',' << buf << '\n';
  }
  return os.str();
}

}  // namespace fraudnet
