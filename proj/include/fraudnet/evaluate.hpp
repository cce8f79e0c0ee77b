#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fraudnet/graph.hpp"
#include "fraudnet/iaa.hpp"

namespace fraudnet {

enum class Label { Fraudster, NonFraudster, Unlabeled };
std::string_view to_string(Label l);
Label parse_label(std::string_view s);

struct LabeledScore {
  std::string entity;
  double score = 0.0;
  Label label = Label::Unlabeled;
};
using LabeledScores = std::vector<LabeledScore>;

// Attach labels (by entity key) to a score map; missing labels are Unlabeled.
LabeledScores attach_labels(const std::map<std::string, double>& scores,
                            const std::map<std::string, Label>& labels);

struct ConfusionMatrix {
  std::size_t tp = 0, fn = 0, fp = 0, tn = 0;

  std::size_t positives() const { return tp + fn; }
  std::size_t negatives() const { return fp + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

// score >= threshold is predicted suspicious. Unlabeled entries are skipped.
ConfusionMatrix confusion_at(const LabeledScores& scores, double threshold);

// Undefined (zero denominator) metrics are nullopt.
struct Metrics {
  std::optional<double> ca, recall, precision, specificity, f1;
};
Metrics metrics(const ConfusionMatrix& cm);

// Mann-Whitney AUC, ties counted 1/2. Throws std::invalid_argument when
// either class is missing.
double auc(const LabeledScores& scores);

// Candidate thresholds are the observed labelled scores plus +inf; ties go
// to the higher threshold.
double min_cost_threshold(const LabeledScores& scores, double cost_fp, double cost_fn);

struct RepeatedAuc {
  std::vector<std::uint64_t> seeds;
  std::vector<double> aucs;
  double mean = 0.0;
};
std::uint64_t run_seed(std::uint64_t base_seed, std::size_t run);
RepeatedAuc repeated_run_auc(const std::function<LabeledScores(std::uint64_t seed)>& run,
                             std::size_t repeats, std::uint64_t base_seed);

// Per-participant centrality scores (larger = more suspicious), multiplied
// by the component's collision count. CloCen is negated.
std::map<VertexId, double> baseline_scores(const Component& c, CentralityKind kind,
                                           std::size_t collisions);

struct SweepInput {
  Component component;
  std::size_t collisions = 1;
};

struct SweepPoint {
  std::size_t k = 0;  // 0 marks the dynamic-policy point
  bool dynamic = false;
  double auc = 0.0;
};

// Participants outside `inputs` are scored 0 (when listed in `others`).
std::vector<SweepPoint> auc_vs_iterations(const std::vector<SweepInput>& inputs,
                                          const AssessmentModel& model, IaaParams params,
                                          const NetworkStats& stats,
                                          const std::vector<std::size_t>& k_range,
                                          const std::map<std::string, Label>& labels,
                                          const std::vector<std::string>& others = {});

std::string metrics_table(const ConfusionMatrix& cm, const Metrics& m,
                          std::optional<double> auc_value = std::nullopt);
std::string sweep_csv(const std::vector<SweepPoint>& series, std::string_view model_name);

}  // namespace fraudnet
