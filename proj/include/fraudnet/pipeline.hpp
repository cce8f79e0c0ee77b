#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fraudnet/evaluate.hpp"
#include "fraudnet/graph.hpp"
#include "fraudnet/iaa.hpp"
#include "fraudnet/ingest.hpp"
#include "fraudnet/null_model.hpp"
#include "fraudnet/screen.hpp"

namespace fraudnet {

inline constexpr int kSchemaVersion = 1;

class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)), cause_(message) {}
  const std::string& stage() const { return stage_; }
  const std::string& cause() const { return cause_; }

 private:
  std::string stage_;
  std::string cause_;
};

enum class ScreeningMethod { Pridit, Ridit, Majority };
std::string_view to_string(ScreeningMethod m);
ScreeningMethod parse_screening_method(std::string_view s);

struct PipelineConfig {
  std::string collisions_path;
  std::string labels_path;  // empty: no evaluation
  std::optional<RecordFormat> format;
  std::string output_dir = "fraudnet-out";
  std::uint64_t seed = 1;

  NetworkKind screening_network = NetworkKind::Participants;
  NetworkKind scoring_network = NetworkKind::Copta;
  bool link_vehicles = false;
  std::size_t community_max_size = 30;

  std::vector<IndicatorSpec> indicators = default_indicators();
  std::size_t replicates = 200;
  double swap_fraction = 0.5;
  std::size_t cover_exact_limit = 24;

  ScreeningMethod method = ScreeningMethod::Pridit;
  SelectionPolicy selection{SelectionPolicy::Kind::TopCollisionFraction, 0.04};

  AssessmentModel model{ModelKind::BasicMean, FactorConfig::defaults()};
  IaaParams iaa;
  double group_threshold = 0.5;

  double cost_fp = 1.0;
  double cost_fn = 1.0;

  bool export_dot = true;
  double dot_threshold = 0.5;  // fraction of the piece's top score

  void validate() const;  // throws std::invalid_argument
};

// JSON text <-> config. Unknown keys are rejected; missing keys keep defaults.
PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config(const std::string& path);
std::string dump_config(const PipelineConfig& cfg);
// Hash of the canonical config with the output directory left out.
std::string config_hash(const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Stages

struct Corpus {
  std::vector<CollisionRecord> records;
  std::shared_ptr<Network> screening;
  std::shared_ptr<Network> scoring;
  std::map<std::string, std::vector<std::string>> participant_collisions;
  std::vector<std::string> participants;  // sorted
};
Corpus build_corpus(const PipelineConfig& cfg, std::vector<CollisionRecord> records);

struct ScreenedComponent {
  std::string id;  // smallest participant key, or the smallest vertex key
  std::vector<std::string> members;     // participant keys
  std::vector<std::string> collisions;  // collision ids
  std::size_t vertices = 0;
  std::size_t edges = 0;
  std::size_t drivers = 0;
  std::vector<double> observed;                // per indicator
  std::vector<std::optional<double>> p_value;  // null-model indicators only
  std::vector<std::uint8_t> flags;
  double score = 0.0;
  bool selected = false;
};

struct ScreenOutcome {
  std::vector<std::string> indicators;
  std::vector<ScreenedComponent> components;
  ScreeningMethod method = ScreeningMethod::Pridit;
  std::vector<double> weights;
  std::vector<double> frequencies;
  std::size_t iterations = 0;
  bool converged = true;

  std::vector<std::string> selected_ids() const;
};

// Indicator values for every (split) component of the screening network.
ScreenOutcome compute_indicators(const PipelineConfig& cfg, const Corpus& corpus);
// Fills score/selected and the weight fields.
void apply_selection(ScreenOutcome& out, ScreeningMethod method, const SelectionPolicy& policy);
ScreenOutcome screen(const PipelineConfig& cfg, const Corpus& corpus);

struct ScoredPiece {
  std::string id;         // smallest member key
  std::string screen_id;  // screened component it came from
  Component component;
  std::size_t collisions = 0;
  int diameter = 0;
};

struct EntityScoreRow {
  std::string entity;
  std::string piece;
  double raw = 0.0;
  double normalized = 0.0;
};

struct GroupRow {
  std::string piece;
  std::vector<std::string> members;
  std::vector<std::string> connectors;
  double score = 0.0;
};

struct ScoreOutcome {
  std::vector<ScoredPiece> pieces;
  double average_diameter = 0.0;
  double mean_degree = 0.0;
  std::map<std::string, std::size_t> iterations;  // piece id -> count
  std::vector<EntityScoreRow> participants;        // scored participants, sorted by key
  std::map<std::string, double> collisions;
  std::optional<std::map<std::string, double>> vehicles;
  std::vector<GroupRow> groups;

  // All corpus participants; unscored ones get 0.
  std::map<std::string, double> participant_scores(const Corpus& corpus) const;
};

// Pieces: connected parts of the scoring network induced by each selected
// component's participants and their collisions.
std::vector<ScoredPiece> scoring_pieces(const PipelineConfig& cfg, const Corpus& corpus,
                                        const ScreenOutcome& screen);
double scoring_average_diameter(const Corpus& corpus);
ScoreOutcome score(const PipelineConfig& cfg, const Corpus& corpus, const ScreenOutcome& screen);

struct Evaluation {
  double auc = 0.0;
  double threshold = 0.0;
  ConfusionMatrix confusion;
  Metrics metrics;
  std::map<std::string, double> baseline_auc;
  std::size_t fraudsters = 0, non_fraudsters = 0, unlabeled = 0;
};
Evaluation evaluate_run(const PipelineConfig& cfg, const Corpus& corpus, const ScoreOutcome& scored,
                        const std::map<std::string, Label>& labels);

struct RunReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::size_t collisions = 0;
  std::size_t participants = 0;
  ScreenOutcome screen;
  ScoreOutcome scored;
  std::optional<Evaluation> evaluation;
};

std::string report_json(const RunReport& report);
std::string components_json(const ScreenOutcome& screen);
std::string scores_csv(const Corpus& corpus, const ScoreOutcome& scored,
                       const std::map<std::string, Label>* labels);

// Lossless NDJSON round trip of the screening stage.
std::string screen_ndjson(const ScreenOutcome& screen);
ScreenOutcome parse_screen_ndjson(std::string_view text);

// DOT text for one component. Participants scoring below `threshold` are
// dropped, along with collisions and vehicles left without participants.
std::string export_dot(const Component& c, const std::map<VertexId, double>& scores,
                       NetworkKind view, double threshold);

// ---------------------------------------------------------------------------
// Runs with artifacts on disk

std::vector<CollisionRecord> load_input(const PipelineConfig& cfg);

// Writes screening.ndjson, components.json and the manifest.
ScreenOutcome run_screen_stage(const PipelineConfig& cfg);
// Reads screening.ndjson from `screen_dir` and writes the remaining artifacts.
RunReport run_score_stage(const PipelineConfig& cfg, const std::string& screen_dir);
// Full run. Stage failures raise PipelineError after writing FAILED and
// error.json into the output directory.
RunReport run_pipeline(const PipelineConfig& cfg);

}  // namespace fraudnet
