#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fraudnet/pipeline.hpp"
#include "fraudnet/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace fraudnet;

namespace {

struct Overrides {
  std::string config;
  std::string input;
  std::string labels;
  std::string out;
  std::string model;
  std::string method;
  std::uint64_t seed = 0;
  bool has_seed = false;
  std::size_t replicates = 0;
};

void add_common(CLI::App* cmd, Overrides& o, bool need_config = true) {
  auto* c = cmd->add_option("-c,--config", o.config, "pipeline config file (JSON)");
  if (need_config) c->required();
  cmd->add_option("--input", o.input, "collision records (CSV or JSON), overrides the config");
  cmd->add_option("--labels", o.labels, "labels file, overrides the config");
  cmd->add_option("-o,--out", o.out, "output directory, overrides the config");
  cmd->add_option("--model", o.model, "assessment model: raw, basic, raw_mean, basic_mean");
  cmd->add_option("--method", o.method, "screening method: pridit, ridit, majority");
  cmd->add_option("--replicates", o.replicates, "null-model replicates per component and indicator");
  cmd->add_option("--seed", o.seed, "base seed")->each([&o](const std::string&) { o.has_seed = true; });
}

PipelineConfig resolve(const Overrides& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (!o.input.empty()) cfg.collisions_path = o.input;
  if (!o.labels.empty()) cfg.labels_path = o.labels;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!o.model.empty()) cfg.model.kind = parse_model_kind(o.model);
  if (!o.method.empty()) cfg.method = parse_screening_method(o.method);
  if (o.replicates > 0) cfg.replicates = o.replicates;
  if (o.has_seed) cfg.seed = o.seed;
  cfg.validate();
  return cfg;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

json run_summary(const RunReport& r, const PipelineConfig& cfg) {
  json j = {{"status", "ok"},
            {"output_dir", cfg.output_dir},
            {"config_hash", r.config_hash},
            {"components", r.screen.components.size()},
            {"selected", r.screen.selected_ids()},
            {"scored_participants", r.scored.participants.size()}};
  if (r.evaluation) j["auc"] = r.evaluation->auc;
  return j;
}

std::map<std::string, double> read_scores_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::map<std::string, double> out;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string entity, raw, normalized;
    std::getline(ss, entity, ',');
    std::getline(ss, raw, ',');
    std::getline(ss, normalized, ',');
    out[entity] = std::stod(normalized);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int fail(std::string_view stage, std::string_view message) {
  json j = {{"schema_version", kSchemaVersion},
            {"error", {{"stage", stage}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fraud-ring detection over collision networks"};
  app.require_subcommand(1);

  // simulate
  std::string preset = "paper-shape", sim_out = "synthetic", sim_format = "csv";
  std::uint64_t sim_seed = 1;
  std::size_t sim_rings = 0, sim_background = 0;
  bool sim_rings_set = false, sim_background_set = false;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic corpus with planted rings");
  simulate->add_option("--preset", preset, "paper-shape or default")->check(CLI::IsMember({"paper-shape", "default"}));
  simulate->add_option("--seed", sim_seed, "generator seed");
  simulate->add_option("-o,--out", sim_out, "output directory");
  simulate->add_option("--format", sim_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  simulate->add_option("--rings", sim_rings, "number of planted rings")->each([&](const std::string&) { sim_rings_set = true; });
  simulate->add_option("--background", sim_background, "background collisions")->each([&](const std::string&) { sim_background_set = true; });

  Overrides ingest_o, screen_o, score_o, run_o, export_o, sweep_o;

  auto* ingest = app.add_subcommand("ingest", "parse and validate collision records");
  add_common(ingest, ingest_o, false);

  auto* screen_cmd = app.add_subcommand("screen", "run the pipeline through component selection");
  add_common(screen_cmd, screen_o);

  std::string score_from;
  auto* score_cmd = app.add_subcommand("score", "score a screened run with the IAA");
  add_common(score_cmd, score_o);
  score_cmd->add_option("--from", score_from, "directory holding screening.ndjson (default: output dir)");

  auto* run = app.add_subcommand("run", "full pipeline");
  add_common(run, run_o);

  std::string eval_run, eval_labels;
  double cost_fp = 1.0, cost_fn = 1.0;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "metrics for a prior run against labels");
  evaluate_cmd->add_option("--run", eval_run, "run directory holding scores.csv")->required();
  evaluate_cmd->add_option("--labels", eval_labels, "labels file");
  evaluate_cmd->add_option("--cost-fp", cost_fp, "cost of a false positive");
  evaluate_cmd->add_option("--cost-fn", cost_fn, "cost of a false negative");

  std::string export_run, export_view;
  double export_threshold = -1.0;
  auto* export_cmd = app.add_subcommand("export", "DOT files for the scored pieces of a prior run");
  add_common(export_cmd, export_o);
  export_cmd->add_option("--run", export_run, "run directory (default: output dir)");
  export_cmd->add_option("--view", export_view, "network kind: drivers, participants, copta, vehicles");
  export_cmd->add_option("--threshold", export_threshold, "fraction of the piece's top score to keep");

  std::size_t kmax = 20;
  std::string sweep_models = "basic_mean,raw_mean";
  auto* sweep = app.add_subcommand("sweep-iterations", "AUC against the number of IAA iterations");
  add_common(sweep, sweep_o);
  sweep->add_option("--kmax", kmax, "largest fixed iteration count");
  sweep->add_option("--models", sweep_models, "comma-separated assessment models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  std::string stage = "cli";
  try {
    if (*simulate) {
      stage = "simulate";
      auto spec = preset == "paper-shape" ? paper_shape_preset() : SynthSpec{};
      spec.seed = sim_seed;
      if (sim_rings_set) spec.rings = sim_rings;
      if (sim_background_set) spec.background_collisions = sim_background;
      const auto corpus = generate(spec);
      fs::create_directories(sim_out);
      const auto name = "collisions." + sim_format;
      std::ostringstream records;
      write_collisions(records, corpus.records, parse_record_format(sim_format));
      write_text(fs::path(sim_out) / name, records.str());
      std::ostringstream labels;
      write_labels(labels, corpus.labels);
      write_text(fs::path(sim_out) / "labels.json", labels.str());
      std::size_t fraud = 0, honest = 0;
      for (const auto& [k, l] : corpus.labels) {
        fraud += l == Label::Fraudster;
        honest += l == Label::NonFraudster;
      }
      print({{"status", "ok"},
             {"collisions", corpus.records.size()},
             {"fraudsters", fraud},
             {"non_fraudsters", honest},
             {"files", {(fs::path(sim_out) / name).string(), (fs::path(sim_out) / "labels.json").string()}}});
      return 0;
    }
    if (*ingest) {
      stage = "ingest";
      const auto cfg = resolve(ingest_o);
      auto corpus = build_corpus(cfg, load_input(cfg));
      json nets = json::object();
      for (auto kind : {NetworkKind::Drivers, NetworkKind::Participants, NetworkKind::Copta,
                        NetworkKind::Vehicles}) {
        const auto net = build_network(corpus.records, kind);
        nets[std::string(to_string(kind))] = {{"vertices", net->vertex_count()},
                                               {"edges", net->edge_count()},
                                               {"components", connected_components(net).size()}};
      }
      print({{"status", "ok"},
             {"collisions", corpus.records.size()},
             {"participants", corpus.participants.size()},
             {"networks", nets}});
      return 0;
    }
    if (*screen_cmd) {
      stage = "screen";
      const auto cfg = resolve(screen_o);
      const auto s = run_screen_stage(cfg);
      print({{"status", "ok"}, {"output_dir", cfg.output_dir}, {"components", s.components.size()},
             {"selected", s.selected_ids()}});
      return 0;
    }
    if (*score_cmd) {
      stage = "score";
      const auto cfg = resolve(score_o);
      const auto r = run_score_stage(cfg, score_from.empty() ? cfg.output_dir : score_from);
      print(run_summary(r, cfg));
      return 0;
    }
    if (*run) {
      stage = "run";
      const auto cfg = resolve(run_o);
      print(run_summary(run_pipeline(cfg), cfg));
      return 0;
    }
    if (*evaluate_cmd) {
      stage = "evaluate";
      if (eval_labels.empty()) return fail(stage, "a labels file is required (--labels)");
      const auto labels = load_labels(eval_labels);
      const auto ls = attach_labels(read_scores_csv(fs::path(eval_run) / "scores.csv"), labels);
      const auto a = auc(ls);
      const auto t = min_cost_threshold(ls, cost_fp, cost_fn);
      const auto cm = confusion_at(ls, t);
      const auto m = metrics(cm);
      auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
      json j = {{"schema_version", kSchemaVersion},
                {"kind", "evaluation"},
                {"auc", a},
                {"threshold", t},
                {"confusion", {{"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}, {"tn", cm.tn}}},
                {"metrics", {{"ca", opt(m.ca)}, {"recall", opt(m.recall)}, {"precision", opt(m.precision)},
                             {"specificity", opt(m.specificity)}, {"f1", opt(m.f1)}}}};
      write_text(fs::path(eval_run) / "evaluation.json", j.dump(1) + "\n");
      write_text(fs::path(eval_run) / "metrics.txt", metrics_table(cm, m, a));
      std::cout << metrics_table(cm, m, a);
      return 0;
    }
    if (*export_cmd) {
      stage = "export";
      auto cfg = resolve(export_o);
      const fs::path run_dir = export_run.empty() ? fs::path(cfg.output_dir) : fs::path(export_run);
      if (!export_view.empty()) {
        cfg.scoring_network = parse_network_kind(export_view);
        cfg.link_vehicles = false;
      }
      const double fraction = export_threshold >= 0.0 ? export_threshold : cfg.dot_threshold;
      const auto screened = parse_screen_ndjson(read_text(run_dir / "screening.ndjson"));
      const auto scores = read_scores_csv(run_dir / "scores.csv");
      const auto corpus = build_corpus(cfg, load_input(cfg));
      json files = json::array();
      for (const auto& piece : scoring_pieces(cfg, corpus, screened)) {
        std::map<VertexId, double> s;
        double top = 0.0;
        for (auto v : piece.component.vertices()) {
          const auto& vx = corpus.scoring->vertex(v);
          if (vx.kind != EntityKind::Participant) continue;
          auto it = scores.find(vx.key);
          s[v] = it == scores.end() ? 0.0 : it->second;
          top = std::max(top, s[v]);
        }
        const auto path = run_dir / "dot" / (std::string(to_string(cfg.scoring_network)) + "-" + piece.id + ".dot");
        write_text(path, export_dot(piece.component, s, cfg.scoring_network, fraction * top));
        files.push_back(path.string());
      }
      print({{"status", "ok"}, {"files", files}});
      return 0;
    }
    if (*sweep) {
      stage = "sweep-iterations";
      const auto cfg = resolve(sweep_o);
      if (cfg.labels_path.empty()) return fail(stage, "a labels file is required (config or --labels)");
      const auto labels = load_labels(cfg.labels_path);
      const auto corpus = build_corpus(cfg, load_input(cfg));
      const auto screened = screen(cfg, corpus);
      const auto pieces = scoring_pieces(cfg, corpus, screened);
      std::vector<SweepInput> inputs;
      std::set<std::string> scored;
      for (const auto& p : pieces) {
        inputs.push_back({p.component, p.collisions});
        for (auto v : p.component.vertices()) scored.insert(corpus.scoring->vertex(v).key);
      }
      std::vector<std::string> others;
      for (const auto& p : corpus.participants) {
        if (!scored.contains(p)) others.push_back(p);
      }
      std::vector<std::size_t> ks;
      for (std::size_t k = 1; k <= kmax; ++k) ks.push_back(k);
      auto params = cfg.iaa;
      params.average_diameter = scoring_average_diameter(corpus);
      const auto stats = network_stats(*corpus.scoring);
      std::string csv;
      std::stringstream models(sweep_models);
      std::string name;
      while (std::getline(models, name, ',')) {
        AssessmentModel model = cfg.model;
        model.kind = parse_model_kind(name);
        const auto series = auc_vs_iterations(inputs, model, params, stats, ks, labels, others);
        auto part = sweep_csv(series, name);
        csv += csv.empty() ? part : part.substr(part.find('\n', part.find('\n') + 1) + 1);
      }
      write_text(fs::path(cfg.output_dir) / "sweep.csv", csv);
      std::cout << csv;
      return 0;
    }
  } catch (const PipelineError& e) {
    return fail(e.stage(), e.cause());
  } catch (const std::exception& e) {
    return fail(stage, e.what());
  }
  return 0;
}
