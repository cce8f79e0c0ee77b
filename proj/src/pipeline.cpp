#include "fraudnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fraudnet/rng.hpp"
#include "fraudnet/synth.hpp"

namespace fraudnet {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view to_string(ScreeningMethod m) {
  switch (m) {
    case ScreeningMethod::Pridit: return "pridit";
    case ScreeningMethod::Ridit: return "ridit";
    case ScreeningMethod::Majority: return "majority";
  }
  return "?";
}

ScreeningMethod parse_screening_method(std::string_view s) {
  for (auto m : {ScreeningMethod::Pridit, ScreeningMethod::Ridit, ScreeningMethod::Majority}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown screening method '" + std::string(s) + "'");
}

void PipelineConfig::validate() const {
  if (community_max_size < 2) throw std::invalid_argument("community max_size must be at least 2");
  if (replicates < 1) throw std::invalid_argument("null_model.replicates must be at least 1");
  if (!(swap_fraction > 0.0)) throw std::invalid_argument("null_model.swap_fraction must be positive");
  if (indicators.empty()) throw std::invalid_argument("at least one indicator is required");
  std::set<std::string> names;
  for (const auto& spec : indicators) {
    spec.validate();
    if (!names.insert(spec.name).second) {
      throw std::invalid_argument("duplicate indicator '" + spec.name + "'");
    }
  }
  if (selection.kind != SelectionPolicy::Kind::NonnegScore &&
      selection.kind != SelectionPolicy::Kind::All &&
      !(selection.fraction > 0.0 && selection.fraction <= 1.0)) {
    throw std::invalid_argument("screening.fraction must lie in (0, 1]");
  }
  if (model.uses_factors()) model.factors.validate();
  iaa.validate();
  if (!iaa.iterations.dynamic && iaa.iterations.fixed < 1) {
    throw std::invalid_argument("iaa.iterations must be 'dynamic' or at least 1");
  }
  if (!(group_threshold >= 0.0 && group_threshold <= 1.0)) {
    throw std::invalid_argument("iaa.group_threshold must lie in [0, 1]");
  }
  if (!(dot_threshold >= 0.0 && dot_threshold <= 1.0)) {
    throw std::invalid_argument("export.dot_threshold must lie in [0, 1]");
  }
  if (cost_fp < 0 || cost_fn < 0) throw std::invalid_argument("evaluation costs must be non-negative");
  if (link_vehicles && scoring_network != NetworkKind::Copta) {
    throw std::invalid_argument("networks.link_vehicles requires the copta scoring network");
  }
}

// ---------------------------------------------------------------------------
// Config JSON

namespace {

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw std::invalid_argument(std::string(where) + ": unknown key '" + k + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end() && !it->is_null()) out = it->template get<T>();
}

json value_json(const AttributeValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

AttributeValue value_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_boolean()) return j.get<bool>() ? 1.0 : 0.0;
  if (j.is_string()) return j.get<std::string>();
  throw std::invalid_argument("factor condition value must be a number or string");
}

EntityKind entity_kind(const std::string& s) {
  if (auto k = parse_entity_kind(s)) return *k;
  throw std::invalid_argument("unknown entity kind '" + s + "'");
}

json factors_json(const FactorConfig& f) {
  json rel = json::object();
  for (const auto& [label, v] : f.relational) rel[std::string(to_string(label))] = v;
  json intr = json::array();
  for (const auto& fac : f.intrinsic) {
    json kinds = json::array();
    for (auto k : fac.applies_to) kinds.push_back(std::string(to_string(k)));
    json when = json::array();
    for (const auto& c : fac.when) {
      when.push_back(json::array({c.attribute, std::string(to_string(c.op)), value_json(c.value)}));
    }
    intr.push_back({{"name", fac.name}, {"applies_to", kinds}, {"when", when}, {"value", fac.value}});
  }
  return {{"relational", rel}, {"intrinsic", intr}};
}

FactorConfig factors_from(const json& j) {
  check_keys(j, "factors", {"relational", "intrinsic"});
  FactorConfig f = FactorConfig::defaults();
  if (j.contains("relational")) {
    f.relational.clear();
    for (const auto& [k, v] : j.at("relational").items()) {
      auto label = parse_edge_label(k);
      if (!label) throw std::invalid_argument("factors.relational: unknown edge label '" + k + "'");
      f.relational[*label] = v.get<double>();
    }
  }
  if (j.contains("intrinsic")) {
    f.intrinsic.clear();
    for (const auto& jf : j.at("intrinsic")) {
      check_keys(jf, "factors.intrinsic", {"name", "applies_to", "when", "value"});
      IntrinsicFactor fac;
      fac.name = jf.at("name").get<std::string>();
      fac.value = jf.at("value").get<double>();
      for (const auto& k : jf.value("applies_to", json::array())) {
        fac.applies_to.push_back(entity_kind(k.get<std::string>()));
      }
      for (const auto& c : jf.value("when", json::array())) {
        if (!c.is_array() || c.size() != 3) {
          throw std::invalid_argument("factors.intrinsic '" + fac.name +
                                      "': conditions are [attribute, comparator, value]");
        }
        auto op = parse_comparator(c[1].get<std::string>());
        if (!op) throw std::invalid_argument("unknown comparator '" + c[1].get<std::string>() + "'");
        fac.when.push_back({c[0].get<std::string>(), *op, value_from(c[2])});
      }
      f.intrinsic.push_back(std::move(fac));
    }
  }
  return f;
}

json indicator_json(const IndicatorSpec& s) {
  return {{"name", s.name},
          {"statistic", std::string(to_string(s.statistic))},
          {"mode", std::string(to_string(s.mode))},
          {"direction", std::string(to_string(s.direction))},
          {"cutoff", s.cutoff},
          {"significance", s.significance},
          {"degree_perturbing", s.degree_perturbing}};
}

IndicatorSpec indicator_from(const json& j) {
  check_keys(j, "indicators", {"name", "statistic", "mode", "direction", "cutoff", "significance",
                               "degree_perturbing"});
  IndicatorSpec s;
  s.name = j.at("name").get<std::string>();
  const auto stat = j.at("statistic").get<std::string>();
  auto st = parse_statistic(stat);
  if (!st) throw std::invalid_argument("indicator '" + s.name + "': unknown statistic '" + stat + "'");
  s.statistic = *st;
  if (j.contains("mode")) {
    auto m = parse_indicator_mode(j.at("mode").get<std::string>());
    if (!m) throw std::invalid_argument("indicator '" + s.name + "': unknown mode");
    s.mode = *m;
  }
  if (j.contains("direction")) {
    auto t = parse_tail(j.at("direction").get<std::string>());
    if (!t) throw std::invalid_argument("indicator '" + s.name + "': direction must be upper or lower");
    s.direction = *t;
  }
  read(j, "cutoff", s.cutoff);
  read(j, "significance", s.significance);
  read(j, "degree_perturbing", s.degree_perturbing);
  return s;
}

json config_json(const PipelineConfig& c, bool with_output) {
  json input = {{"collisions", c.collisions_path},
                {"labels", c.labels_path},
                {"format", c.format ? json(*c.format == RecordFormat::Csv ? "csv" : "json") : json()}};
  json indicators = json::array();
  for (const auto& s : c.indicators) indicators.push_back(indicator_json(s));
  json buckets = json::array();
  for (auto k : c.iaa.bucket_kinds) buckets.push_back(std::string(to_string(k)));
  json j;
  j["schema_version"] = kSchemaVersion;
  j["input"] = input;
  if (with_output) j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["networks"] = {{"screening", std::string(to_string(c.screening_network))},
                   {"scoring", std::string(to_string(c.scoring_network))},
                   {"link_vehicles", c.link_vehicles},
                   {"community_max_size", c.community_max_size}};
  j["indicators"] = indicators;
  j["null_model"] = {{"replicates", c.replicates},
                     {"swap_fraction", c.swap_fraction},
                     {"cover_exact_limit", c.cover_exact_limit}};
  j["screening"] = {{"method", std::string(to_string(c.method))},
                    {"policy", std::string(to_string(c.selection.kind))},
                    {"fraction", c.selection.fraction}};
  j["iaa"] = {{"model", std::string(to_string(c.model.kind))},
              {"alpha", c.iaa.alpha},
              {"iterations", c.iaa.iterations.dynamic ? json("dynamic") : json(c.iaa.iterations.fixed)},
              {"normalization", std::string(to_string(c.iaa.normalization))},
              {"bucket_kinds", buckets},
              {"group_threshold", c.group_threshold}};
  j["factors"] = factors_json(c.model.factors);
  j["evaluation"] = {{"cost_fp", c.cost_fp}, {"cost_fn", c.cost_fn}};
  j["export"] = {{"dot", c.export_dot}, {"dot_threshold", c.dot_threshold}};
  return j;
}

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

PipelineConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  PipelineConfig c;
  try {
    check_keys(j, "config", {"schema_version", "input", "output_dir", "seed", "networks", "indicators",
                             "null_model", "screening", "iaa", "factors", "evaluation", "export"});
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion) {
      throw std::invalid_argument("config: unsupported schema_version");
    }
    if (j.contains("input")) {
      const auto& in = j.at("input");
      check_keys(in, "input", {"collisions", "labels", "format"});
      read(in, "collisions", c.collisions_path);
      read(in, "labels", c.labels_path);
      if (in.contains("format") && !in.at("format").is_null()) {
        c.format = parse_record_format(in.at("format").get<std::string>());
      }
    }
    read(j, "output_dir", c.output_dir);
    read(j, "seed", c.seed);
    if (j.contains("networks")) {
      const auto& n = j.at("networks");
      check_keys(n, "networks", {"screening", "scoring", "link_vehicles", "community_max_size"});
      if (n.contains("screening")) c.screening_network = parse_network_kind(n.at("screening").get<std::string>());
      if (n.contains("scoring")) c.scoring_network = parse_network_kind(n.at("scoring").get<std::string>());
      read(n, "link_vehicles", c.link_vehicles);
      read(n, "community_max_size", c.community_max_size);
    }
    if (j.contains("indicators")) {
      c.indicators.clear();
      for (const auto& s : j.at("indicators")) c.indicators.push_back(indicator_from(s));
    }
    if (j.contains("null_model")) {
      const auto& n = j.at("null_model");
      check_keys(n, "null_model", {"replicates", "swap_fraction", "cover_exact_limit"});
      read(n, "replicates", c.replicates);
      read(n, "swap_fraction", c.swap_fraction);
      read(n, "cover_exact_limit", c.cover_exact_limit);
    }
    if (j.contains("screening")) {
      const auto& s = j.at("screening");
      check_keys(s, "screening", {"method", "policy", "fraction"});
      if (s.contains("method")) c.method = parse_screening_method(s.at("method").get<std::string>());
      if (s.contains("policy")) c.selection.kind = parse_selection_kind(s.at("policy").get<std::string>());
      read(s, "fraction", c.selection.fraction);
    }
    if (j.contains("iaa")) {
      const auto& a = j.at("iaa");
      check_keys(a, "iaa", {"model", "alpha", "iterations", "normalization", "bucket_kinds",
                            "group_threshold"});
      if (a.contains("model")) c.model.kind = parse_model_kind(a.at("model").get<std::string>());
      read(a, "alpha", c.iaa.alpha);
      if (a.contains("iterations")) {
        const auto& it = a.at("iterations");
        if (it.is_string()) {
          if (it.get<std::string>() != "dynamic") {
            throw std::invalid_argument("iaa.iterations must be 'dynamic' or a positive integer");
          }
          c.iaa.iterations = IterationPolicy::dynamic_count();
        } else {
          c.iaa.iterations = IterationPolicy::fixed_count(it.get<std::size_t>());
        }
      }
      if (a.contains("normalization")) {
        c.iaa.normalization = parse_normalization(a.at("normalization").get<std::string>());
      }
      if (a.contains("bucket_kinds")) {
        c.iaa.bucket_kinds.clear();
        for (const auto& k : a.at("bucket_kinds")) c.iaa.bucket_kinds.push_back(entity_kind(k.get<std::string>()));
      }
      read(a, "group_threshold", c.group_threshold);
    }
    if (j.contains("factors")) c.model.factors = factors_from(j.at("factors"));
    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      check_keys(e, "evaluation", {"cost_fp", "cost_fn"});
      read(e, "cost_fp", c.cost_fp);
      read(e, "cost_fn", c.cost_fn);
    }
    if (j.contains("export")) {
      const auto& e = j.at("export");
      check_keys(e, "export", {"dot", "dot_threshold"});
      read(e, "dot", c.export_dot);
      read(e, "dot_threshold", c.dot_threshold);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str());
  const auto base = fs::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(cfg.collisions_path);
  resolve(cfg.labels_path);
  return cfg;
}

std::string dump_config(const PipelineConfig& cfg) { return config_json(cfg, true).dump(2); }

std::string config_hash(const PipelineConfig& cfg) {
  return hex64(fnv1a64(config_json(cfg, false).dump()));
}

// ---------------------------------------------------------------------------
// Corpus

Corpus build_corpus(const PipelineConfig& cfg, std::vector<CollisionRecord> records) {
  Corpus c;
  c.records = std::move(records);
  c.screening = build_network(c.records, cfg.screening_network);
  c.scoring = cfg.scoring_network == cfg.screening_network ? c.screening
                                                           : build_network(c.records, cfg.scoring_network);
  if (cfg.link_vehicles) c.scoring = link_shared_vehicles(*c.scoring, c.records);
  for (const auto& r : c.records) {
    for (const auto& p : r.participants) c.participant_collisions[p.participant_id].push_back(r.collision_id);
  }
  for (auto& [id, cols] : c.participant_collisions) {
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    c.participants.push_back(id);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Screening

std::vector<std::string> ScreenOutcome::selected_ids() const {
  std::vector<std::string> out;
  for (const auto& c : components) {
    if (c.selected) out.push_back(c.id);
  }
  return out;
}

namespace {

std::vector<Component> screening_components(const PipelineConfig& cfg, const Corpus& corpus) {
  std::vector<Component> out;
  for (auto& c : connected_components(corpus.screening)) {
    if (c.vertex_count() > cfg.community_max_size) {
      for (auto& piece : split_communities(c, cfg.community_max_size)) out.push_back(std::move(piece));
    } else {
      out.push_back(std::move(c));
    }
  }
  std::sort(out.begin(), out.end(), [](const Component& a, const Component& b) { return a.id() < b.id(); });
  return out;
}

bool is_driver(const Vertex& v) {
  auto it = v.attributes.find("driver");
  return it != v.attributes.end() && std::holds_alternative<double>(it->second) &&
         std::get<double>(it->second) == 1.0;
}

std::size_t min_null_edges(const IndicatorSpec& spec) { return spec.degree_perturbing ? 1 : 2; }

}  // namespace

ScreenOutcome compute_indicators(const PipelineConfig& cfg, const Corpus& corpus) {
  ScreenOutcome out;
  for (const auto& s : cfg.indicators) out.indicators.push_back(s.name);
  const auto& net = *corpus.screening;
  NullOptions nopts;
  nopts.replicates = cfg.replicates;
  nopts.base_seed = derive_seed(cfg.seed, "null");
  nopts.swap_fraction = cfg.swap_fraction;
  nopts.statistic.cover_exact_limit = cfg.cover_exact_limit;

  for (const auto& c : screening_components(cfg, corpus)) {
    ScreenedComponent sc;
    std::set<std::string> collisions;
    std::string first_key;
    for (auto v : c.vertices()) {
      const auto& vx = net.vertex(v);
      if (first_key.empty()) first_key = vx.key;
      if (vx.kind == EntityKind::Participant) {
        sc.members.push_back(vx.key);
        if (is_driver(vx)) ++sc.drivers;
        if (auto it = corpus.participant_collisions.find(vx.key); it != corpus.participant_collisions.end()) {
          collisions.insert(it->second.begin(), it->second.end());
        }
      } else if (vx.kind == EntityKind::Collision) {
        collisions.insert(vx.key);
      }
    }
    std::sort(sc.members.begin(), sc.members.end());
    sc.id = sc.members.empty() ? first_key : sc.members.front();
    sc.collisions.assign(collisions.begin(), collisions.end());
    sc.vertices = c.vertex_count();
    sc.edges = c.edge_count();
    const ComponentContext ctx{sc.collisions.size(), sc.drivers};

    for (const auto& spec : cfg.indicators) {
      const double observed = observe_statistic(c, spec.statistic, ctx, nopts.statistic);
      sc.observed.push_back(observed);
      if (!spec.is_null_mode()) {
        sc.p_value.emplace_back();
        sc.flags.push_back(evaluate_indicator_value(spec, observed, nullptr));
        continue;
      }
      if (c.edge_count() < min_null_edges(spec)) {
        sc.p_value.emplace_back();
        sc.flags.push_back(0);
        continue;
      }
      const auto dist = sample_null(c, spec, nopts);
      double p = 0.0;
      if (spec.mode == IndicatorMode::NullOneTailed) {
        p = empirical_p(dist, observed, spec.direction);
      } else {
        p = std::min(1.0, 2.0 * std::min(empirical_p(dist, observed, Tail::Upper),
                                         empirical_p(dist, observed, Tail::Lower)));
      }
      sc.p_value.emplace_back(p);
      sc.flags.push_back(evaluate_indicator_value(spec, observed, &dist));
    }
    out.components.push_back(std::move(sc));
  }
  return out;
}

void apply_selection(ScreenOutcome& out, ScreeningMethod method, const SelectionPolicy& policy) {
  out.method = method;
  out.weights.clear();
  out.frequencies.clear();
  out.iterations = 0;
  out.converged = true;
  for (auto& c : out.components) {
    c.score = 0.0;
    c.selected = false;
  }
  if (out.components.empty()) return;

  IndicatorMatrix m;
  m.indicators = out.indicators;
  std::vector<std::size_t> collision_counts;
  for (std::size_t r = 0; r < out.components.size(); ++r) {
    m.components.push_back(static_cast<VertexId>(r));
    for (auto f : out.components[r].flags) m.values.push_back(f);
    collision_counts.push_back(out.components[r].collisions.size());
  }
  out.frequencies = indicator_frequencies(m);

  std::vector<VertexId> chosen;
  if (method == ScreeningMethod::Majority) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      out.components[r].score = static_cast<double>(m.row_sum(r)) / static_cast<double>(m.cols());
    }
    chosen = majority_select(m);
  } else {
    const bool informative = std::any_of(out.frequencies.begin(), out.frequencies.end(),
                                         [](double p) { return p > 0.0 && p < 1.0; });
    PriditResult res;
    if (informative) {
      res = method == ScreeningMethod::Pridit ? pridit(m) : ridit_ensemble(m);
    } else {
      res.components = m.components;
      res.scores.assign(m.rows(), 0.0);
      res.weights.assign(m.cols(), 0.0);
      res.converged = true;
    }
    out.weights = res.weights;
    out.iterations = res.iterations;
    out.converged = res.converged;
    for (std::size_t r = 0; r < m.rows(); ++r) out.components[r].score = res.scores[r];
    chosen = select_suspicious(res, policy, collision_counts);
  }
  for (auto r : chosen) out.components[r].selected = true;
}

ScreenOutcome screen(const PipelineConfig& cfg, const Corpus& corpus) {
  auto out = compute_indicators(cfg, corpus);
  apply_selection(out, cfg.method, cfg.selection);
  return out;
}

// ---------------------------------------------------------------------------
// Scoring

std::map<std::string, double> ScoreOutcome::participant_scores(const Corpus& corpus) const {
  std::map<std::string, double> out;
  for (const auto& p : corpus.participants) out.emplace(p, 0.0);
  for (const auto& row : participants) out[row.entity] = row.normalized;
  return out;
}

std::vector<ScoredPiece> scoring_pieces(const PipelineConfig& cfg, const Corpus& corpus,
                                        const ScreenOutcome& screened) {
  (void)cfg;
  const auto& net = *corpus.scoring;
  std::vector<ScoredPiece> out;
  for (const auto& sc : screened.components) {
    if (!sc.selected) continue;
    std::set<VertexId> keep;
    for (const auto& key : sc.members) {
      if (auto v = net.find(EntityKind::Participant, key)) keep.insert(*v);
    }
    for (const auto& key : sc.collisions) {
      if (auto v = net.find(EntityKind::Collision, key)) keep.insert(*v);
    }
    // Vehicles enter through their participants.
    std::vector<VertexId> vehicles;
    for (auto v : keep) {
      if (net.vertex(v).kind != EntityKind::Participant) continue;
      for (auto e : net.incident(v)) {
        const auto& ed = net.edge(e);
        const auto other = ed.source == v ? ed.target : ed.source;
        if (net.vertex(other).kind == EntityKind::Vehicle) vehicles.push_back(other);
      }
    }
    keep.insert(vehicles.begin(), vehicles.end());
    std::set<EdgeId> edges;
    for (auto v : keep) {
      for (auto e : net.incident(v)) {
        const auto& ed = net.edge(e);
        if (keep.contains(ed.source) && keep.contains(ed.target)) edges.insert(e);
      }
    }
    const std::vector<VertexId> vs(keep.begin(), keep.end());
    const std::vector<EdgeId> es(edges.begin(), edges.end());
    for (auto& piece : connected_components(corpus.scoring, vs, es)) {
      ScoredPiece sp;
      std::set<std::string> cols;
      for (auto v : piece.vertices()) {
        const auto& vx = net.vertex(v);
        if (vx.kind != EntityKind::Participant) continue;
        if (sp.id.empty() || vx.key < sp.id) sp.id = vx.key;
        const auto& pc = corpus.participant_collisions.at(vx.key);
        for (const auto& col : pc) {
          if (std::binary_search(sc.collisions.begin(), sc.collisions.end(), col)) cols.insert(col);
        }
      }
      if (sp.id.empty()) continue;
      sp.screen_id = sc.id;
      sp.collisions = std::max<std::size_t>(1, cols.size());
      sp.diameter = diameter(piece);
      sp.component = std::move(piece);
      out.push_back(std::move(sp));
    }
  }
  std::sort(out.begin(), out.end(), [](const ScoredPiece& a, const ScoredPiece& b) { return a.id < b.id; });
  return out;
}

double scoring_average_diameter(const Corpus& corpus) {
  const auto all = connected_components(corpus.scoring);
  return average_diameter(all);
}

ScoreOutcome score(const PipelineConfig& cfg, const Corpus& corpus, const ScreenOutcome& screened) {
  ScoreOutcome out;
  const auto& net = *corpus.scoring;
  out.pieces = scoring_pieces(cfg, corpus, screened);
  out.average_diameter = scoring_average_diameter(corpus);
  const auto stats = network_stats(net);
  out.mean_degree = stats.mean_degree;
  auto params = cfg.iaa;
  params.average_diameter = out.average_diameter;
  if (cfg.link_vehicles) out.vehicles.emplace();

  for (const auto& piece : out.pieces) {
    const auto& c = piece.component;
    const auto res = iaa_run(c, cfg.model, params, stats);
    out.iterations[piece.id] = res.iterations;
    auto ents = res.entity_scores();
    normalize_across_components(ents, piece.collisions);
    for (const auto& [v, s] : ents) {
      const auto& vx = net.vertex(v);
      if (vx.kind == EntityKind::Participant) {
        out.participants.push_back({vx.key, piece.id, s.raw, s.normalized});
      } else if (vx.kind == EntityKind::Vehicle) {
        if (!out.vehicles) out.vehicles.emplace();
        (*out.vehicles)[vx.key] = s.normalized;
      }
    }

    std::map<std::string, std::vector<VehicleMember>> vehicle_members;
    if (cfg.link_vehicles) {
      std::set<std::string> in_piece;
      for (auto v : c.vertices()) {
        if (net.vertex(v).kind == EntityKind::Collision) in_piece.insert(net.vertex(v).key);
      }
      for (const auto& r : corpus.records) {
        if (!in_piece.contains(r.collision_id)) continue;
        for (const auto& p : r.participants) {
          if (auto v = net.find(EntityKind::Participant, p.participant_id)) {
            vehicle_members[p.vehicle_id].push_back(
                {*v, p.role == Role::Driver ? EdgeLabel::Driver : EdgeLabel::Passenger});
          }
        }
      }
    }
    const auto secondary =
        score_secondary(c, res, cfg.model, stats, cfg.link_vehicles ? &vehicle_members : nullptr);
    for (const auto& [v, s] : secondary.collisions) {
      if (net.vertex(v).kind == EntityKind::Collision) out.collisions[net.vertex(v).key] = s;
    }
    if (secondary.vehicles) {
      for (const auto& [k, s] : *secondary.vehicles) (*out.vehicles)[k] = s;
    }

    for (const auto& g : extract_groups(c, res, cfg.group_threshold)) {
      GroupRow row;
      row.piece = piece.id;
      for (auto v : g.members) row.members.push_back(net.vertex(v).key);
      for (auto v : g.connectors) row.connectors.push_back(net.vertex(v).key);
      row.score = g.score;
      out.groups.push_back(std::move(row));
    }
  }
  std::sort(out.participants.begin(), out.participants.end(),
            [](const EntityScoreRow& a, const EntityScoreRow& b) { return a.entity < b.entity; });
  std::stable_sort(out.groups.begin(), out.groups.end(),
                   [](const GroupRow& a, const GroupRow& b) { return a.score > b.score; });
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

Evaluation evaluate_run(const PipelineConfig& cfg, const Corpus& corpus, const ScoreOutcome& scored,
                        const std::map<std::string, Label>& labels) {
  Evaluation ev;
  const auto ls = attach_labels(scored.participant_scores(corpus), labels);
  for (const auto& s : ls) {
    if (s.label == Label::Fraudster) ++ev.fraudsters;
    else if (s.label == Label::NonFraudster) ++ev.non_fraudsters;
    else ++ev.unlabeled;
  }
  ev.auc = auc(ls);
  ev.threshold = min_cost_threshold(ls, cfg.cost_fp, cfg.cost_fn);
  ev.confusion = confusion_at(ls, ev.threshold);
  ev.metrics = metrics(ev.confusion);

  const auto& net = *corpus.scoring;
  for (auto kind : {CentralityKind::BetCen, CentralityKind::CloCen, CentralityKind::DegCen,
                    CentralityKind::EigCen}) {
    std::map<std::string, double> base;
    for (const auto& p : corpus.participants) base.emplace(p, 0.0);
    for (const auto& piece : scored.pieces) {
      for (const auto& [v, s] : baseline_scores(piece.component, kind, piece.collisions)) {
        base[net.vertex(v).key] = s;
      }
    }
    ev.baseline_auc[std::string(to_string(kind))] = auc(attach_labels(base, labels));
  }
  return ev;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(); }

json component_json(const ScreenedComponent& c) {
  json p = json::array();
  for (const auto& v : c.p_value) p.push_back(opt(v));
  return {{"id", c.id},
          {"members", c.members},
          {"collisions", c.collisions},
          {"vertices", c.vertices},
          {"edges", c.edges},
          {"drivers", c.drivers},
          {"observed", c.observed},
          {"p_value", p},
          {"flags", c.flags},
          {"score", c.score},
          {"selected", c.selected}};
}

json screen_header(const ScreenOutcome& s) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "screening"},
          {"method", std::string(to_string(s.method))},
          {"indicators", s.indicators},
          {"weights", s.weights},
          {"frequencies", s.frequencies},
          {"iterations", s.iterations},
          {"converged", s.converged},
          {"components", s.components.size()}};
}

json metrics_json(const Metrics& m) {
  return {{"ca", opt(m.ca)},
          {"recall", opt(m.recall)},
          {"precision", opt(m.precision)},
          {"specificity", opt(m.specificity)},
          {"f1", opt(m.f1)}};
}

}  // namespace

std::string screen_ndjson(const ScreenOutcome& s) {
  std::string out = screen_header(s).dump() + "\n";
  for (const auto& c : s.components) out += component_json(c).dump() + "\n";
  return out;
}

ScreenOutcome parse_screen_ndjson(std::string_view text) {
  ScreenOutcome s;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::size_t expected = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto j = json::parse(line);
      if (lineno == 1) {
        if (j.value("kind", "") != "screening" || j.value("schema_version", 0) != kSchemaVersion) {
          throw std::invalid_argument("not a screening file of schema version 1");
        }
        s.method = parse_screening_method(j.at("method").get<std::string>());
        s.indicators = j.at("indicators").get<std::vector<std::string>>();
        s.weights = j.at("weights").get<std::vector<double>>();
        s.frequencies = j.at("frequencies").get<std::vector<double>>();
        s.iterations = j.at("iterations").get<std::size_t>();
        s.converged = j.at("converged").get<bool>();
        expected = j.at("components").get<std::size_t>();
        continue;
      }
      ScreenedComponent c;
      c.id = j.at("id").get<std::string>();
      c.members = j.at("members").get<std::vector<std::string>>();
      c.collisions = j.at("collisions").get<std::vector<std::string>>();
      c.vertices = j.at("vertices").get<std::size_t>();
      c.edges = j.at("edges").get<std::size_t>();
      c.drivers = j.at("drivers").get<std::size_t>();
      c.observed = j.at("observed").get<std::vector<double>>();
      for (const auto& p : j.at("p_value")) {
        c.p_value.push_back(p.is_null() ? std::nullopt : std::optional<double>(p.get<double>()));
      }
      c.flags = j.at("flags").get<std::vector<std::uint8_t>>();
      c.score = j.at("score").get<double>();
      c.selected = j.at("selected").get<bool>();
      s.components.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument("screening file line " + std::to_string(lineno) + ": " + e.what());
  }
  if (lineno == 0) throw std::invalid_argument("screening file is empty");
  if (s.components.size() != expected) {
    throw std::invalid_argument("screening file is truncated: expected " + std::to_string(expected) +
                                " components, found " + std::to_string(s.components.size()));
  }
  return s;
}

std::string components_json(const ScreenOutcome& s) {
  json j = screen_header(s);
  j["kind"] = "components";
  json comps = json::array();
  for (const auto& c : s.components) comps.push_back(component_json(c));
  j["components"] = comps;
  return j.dump(1) + "\n";
}

std::string report_json(const RunReport& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "report";
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["corpus"] = {{"collisions", r.collisions}, {"participants", r.participants}};

  std::size_t selected_collisions = 0;
  for (const auto& c : r.screen.components) {
    if (c.selected) selected_collisions += c.collisions.size();
  }
  j["screening"] = {{"method", std::string(to_string(r.screen.method))},
                    {"indicators", r.screen.indicators},
                    {"weights", r.screen.weights},
                    {"frequencies", r.screen.frequencies},
                    {"iterations", r.screen.iterations},
                    {"converged", r.screen.converged},
                    {"components", r.screen.components.size()},
                    {"selected", r.screen.selected_ids()},
                    {"selected_collisions", selected_collisions}};

  json pieces = json::array();
  for (const auto& p : r.scored.pieces) {
    pieces.push_back({{"id", p.id},
                      {"screen_id", p.screen_id},
                      {"vertices", p.component.vertex_count()},
                      {"edges", p.component.edge_count()},
                      {"collisions", p.collisions},
                      {"diameter", p.diameter},
                      {"iterations", r.scored.iterations.at(p.id)}});
  }
  auto ranked = r.scored.participants;
  std::stable_sort(ranked.begin(), ranked.end(), [](const EntityScoreRow& a, const EntityScoreRow& b) {
    return a.normalized > b.normalized;
  });
  json top = json::array();
  for (std::size_t i = 0; i < ranked.size() && i < 25; ++i) {
    top.push_back({{"entity", ranked[i].entity}, {"piece", ranked[i].piece},
                   {"raw", ranked[i].raw}, {"normalized", ranked[i].normalized}});
  }
  json collisions = json::object();
  for (const auto& [k, v] : r.scored.collisions) collisions[k] = v;
  j["scoring"] = {{"pieces", pieces},
                  {"average_diameter", r.scored.average_diameter},
                  {"mean_degree", r.scored.mean_degree},
                  {"scored_participants", r.scored.participants.size()},
                  {"top_participants", top},
                  {"collision_scores", collisions}};
  if (r.scored.vehicles) {
    json vs = json::object();
    for (const auto& [k, v] : *r.scored.vehicles) vs[k] = v;
    j["scoring"]["vehicle_scores"] = vs;
  }
  json groups = json::array();
  for (const auto& g : r.scored.groups) {
    groups.push_back({{"piece", g.piece}, {"members", g.members}, {"connectors", g.connectors},
                      {"score", g.score}});
  }
  j["groups"] = groups;

  if (r.evaluation) {
    const auto& e = *r.evaluation;
    json base = json::object();
    for (const auto& [k, v] : e.baseline_auc) base[k] = v;
    j["evaluation"] = {{"auc", e.auc},
                       {"threshold", e.threshold},
                       {"classes", {{"fraudster", e.fraudsters},
                                    {"non-fraudster", e.non_fraudsters},
                                    {"unlabeled", e.unlabeled}}},
                       {"confusion", {{"tp", e.confusion.tp}, {"fn", e.confusion.fn},
                                      {"fp", e.confusion.fp}, {"tn", e.confusion.tn}}},
                       {"metrics", metrics_json(e.metrics)},
                       {"baseline_auc", base}};
  } else {
    j["evaluation"] = nullptr;
  }
  return j.dump(1) + "\n";
}

std::string scores_csv(const Corpus& corpus, const ScoreOutcome& scored,
                       const std::map<std::string, Label>* labels) {
  struct Row {
    std::string entity;
    double raw = 0.0, normalized = 0.0;
  };
  std::map<std::string, Row> rows;
  for (const auto& p : corpus.participants) rows[p] = {p, 0.0, 0.0};
  for (const auto& s : scored.participants) rows[s.entity] = {s.entity, s.raw, s.normalized};
  std::vector<Row> ordered;
  for (auto& [k, r] : rows) ordered.push_back(r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Row& a, const Row& b) { return a.normalized > b.normalized; });
  std::ostringstream os;
  os << "# schema_version: " << kSchemaVersion << "\n";
  os << "entity,raw,normalized,rank,label\n";
  char buf[96];
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& r = ordered[i];
    std::string label;
    if (labels) {
      auto it = labels->find(r.entity);
      label = std::string(to_string(it == labels->end() ? Label::Unlabeled : it->second));
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%zu,", r.raw, r.normalized, i + 1);
    os << r.entity << buf << label << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// DOT export

namespace {

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

double attr_num(const Vertex& v, const char* key) {
  auto it = v.attributes.find(key);
  if (it == v.attributes.end()) return 0.0;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  return 0.0;
}

std::string_view edge_style(EdgeLabel l) {
  switch (l) {
    case EdgeLabel::Collision: return "solid";
    case EdgeLabel::Driver: return "bold";
    case EdgeLabel::Passenger: return "dashed";
    case EdgeLabel::VehicleLink: return "dotted";
  }
  return "solid";
}

}  // namespace

std::string export_dot(const Component& c, const std::map<VertexId, double>& scores, NetworkKind view,
                       double threshold) {
  const auto& net = *c.network();
  const auto n = c.vertex_count();
  auto score_of = [&](VertexId v) {
    auto it = scores.find(v);
    return it == scores.end() ? 0.0 : it->second;
  };
  double top = 0.0;
  for (auto v : c.vertices()) {
    if (net.vertex(v).kind == EntityKind::Participant) top = std::max(top, score_of(v));
  }
  std::vector<bool> keep(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = c.vertices()[i];
    if (net.vertex(v).kind == EntityKind::Participant) keep[i] = score_of(v) >= threshold;
  }
  // Other entities stay only while attached to a kept participant.
  std::vector<bool> anchored(n, false);
  for (const auto& e : c.graph().edges()) {
    const bool pa = net.vertex(c.vertices()[e.a]).kind == EntityKind::Participant && keep[e.a];
    const bool pb = net.vertex(c.vertices()[e.b]).kind == EntityKind::Participant && keep[e.b];
    if (pa) anchored[e.b] = true;
    if (pb) anchored[e.a] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (net.vertex(c.vertices()[i]).kind != EntityKind::Participant) keep[i] = anchored[i];
  }

  std::ostringstream os;
  char buf[64];
  os << "digraph \"" << to_string(view) << "\" {\n";
  os << "  graph [overlap=false, splines=true, schema_version=1];\n";
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    const auto v = c.vertices()[i];
    const auto& vx = net.vertex(v);
    os << "  v" << v << " [label=\"" << dot_escape(vx.key) << "\"";
    switch (vx.kind) {
      case EntityKind::Participant: {
        const double s = score_of(v);
        const double w = 0.3 + (top > 0.0 ? 0.9 * s / top : 0.0);
        std::snprintf(buf, sizeof buf, "%.4f", w);
        os << ", shape=circle, fixedsize=true, width=" << buf;
        std::snprintf(buf, sizeof buf, "%.6g", s);
        os << ", score=\"" << buf << "\"";
        break;
      }
      case EntityKind::Collision:
        os << ", shape=box";
        if (attr_num(vx, "night") == 1.0) os << ", style=filled, fillcolor=gray40, fontcolor=white";
        break;
      case EntityKind::Vehicle:
        os << ", shape=diamond";
        break;
    }
    os << "];\n";
  }
  for (std::size_t e = 0; e < c.edge_count(); ++e) {
    const auto& le = c.graph().edges()[e];
    if (!keep[le.a] || !keep[le.b]) continue;
    const auto& ed = net.edge(c.edge_ids()[e]);
    os << "  v" << ed.source << " -> v" << ed.target << " [style=" << edge_style(ed.label);
    if (!ed.directed) os << ", dir=none";
    if (ed.passenger_count) os << ", label=\"" << *ed.passenger_count << "\"";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Runs on disk

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Artifacts {
  fs::path dir;
  std::vector<std::pair<std::string, std::string>> files;  // name, content hash

  void put(const std::string& name, const std::string& text) {
    const auto path = dir / name;
    fs::create_directories(path.parent_path());
    write_file(path, text);
    files.emplace_back(name, hex64(fnv1a64(text)));
  }
};

void write_manifest(const PipelineConfig& cfg, Artifacts& art, std::string_view stage_name) {
  json files = json::array();
  for (const auto& [name, hash] : art.files) files.push_back({{"name", name}, {"fnv1a64", hash}});
  json input = {{"collisions", cfg.collisions_path}};
  if (fs::exists(cfg.collisions_path)) input["collisions_fnv1a64"] = hex64(fnv1a64(read_file(cfg.collisions_path)));
  if (!cfg.labels_path.empty()) {
    input["labels"] = cfg.labels_path;
    if (fs::exists(cfg.labels_path)) input["labels_fnv1a64"] = hex64(fnv1a64(read_file(cfg.labels_path)));
  }
  json j = {{"schema_version", kSchemaVersion},
            {"kind", "manifest"},
            {"stage", stage_name},
            {"config_hash", config_hash(cfg)},
            {"seeds", {{"base", cfg.seed}, {"null_model", derive_seed(cfg.seed, "null")}}},
            {"input", input},
            {"files", files},
            {"config", json::parse(dump_config(cfg))}};
  write_file(art.dir / "manifest.json", j.dump(1) + "\n");
}

void mark_failure(const PipelineConfig& cfg, const PipelineError& e) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) return;
  json j = {{"schema_version", kSchemaVersion},
            {"kind", "error"},
            {"stage", e.stage()},
            {"message", e.cause()}};
  std::ofstream(fs::path(cfg.output_dir) / "error.json") << j.dump(1) << "\n";
  std::ofstream(fs::path(cfg.output_dir) / "FAILED") << e.stage() << "\n";
}

template <typename F>
auto guarded(const PipelineConfig& cfg, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError& e) {
    mark_failure(cfg, e);
    throw;
  }
}

Corpus prepare(const PipelineConfig& cfg) {
  stage("config", [&] {
    cfg.validate();
    return 0;
  });
  auto records = stage("ingest", [&] { return load_input(cfg); });
  return stage("networks", [&] { return build_corpus(cfg, std::move(records)); });
}

Artifacts open_output(const PipelineConfig& cfg) {
  return stage("output", [&] {
    Artifacts art;
    art.dir = cfg.output_dir;
    fs::create_directories(art.dir);
    fs::remove(art.dir / "FAILED");
    fs::remove(art.dir / "error.json");
    return art;
  });
}

RunReport finish(const PipelineConfig& cfg, const Corpus& corpus, ScreenOutcome screened, Artifacts& art,
                 std::string_view stage_name) {
  RunReport report;
  report.config_hash = config_hash(cfg);
  report.seed = cfg.seed;
  report.collisions = corpus.records.size();
  report.participants = corpus.participants.size();
  report.scored = stage("iaa", [&] { return score(cfg, corpus, screened); });
  report.screen = std::move(screened);

  std::optional<std::map<std::string, Label>> labels;
  if (!cfg.labels_path.empty()) {
    labels = stage("labels", [&] { return load_labels(cfg.labels_path); });
    report.evaluation = stage("evaluate", [&] { return evaluate_run(cfg, corpus, report.scored, *labels); });
  }
  stage("artifacts", [&] {
    art.put("report.json", report_json(report));
    art.put("scores.csv", scores_csv(corpus, report.scored, labels ? &*labels : nullptr));
    if (report.evaluation) {
      art.put("metrics.txt", metrics_table(report.evaluation->confusion, report.evaluation->metrics,
                                           report.evaluation->auc));
    }
    if (cfg.export_dot) {
      for (const auto& piece : report.scored.pieces) {
        std::map<VertexId, double> raw;
        double top = 0.0;
        for (const auto& row : report.scored.participants) {
          if (row.piece != piece.id) continue;
          if (auto v = corpus.scoring->find(EntityKind::Participant, row.entity)) {
            raw[*v] = row.raw;
            top = std::max(top, row.raw);
          }
        }
        art.put("dot/" + piece.id + ".dot",
                export_dot(piece.component, raw, cfg.scoring_network, cfg.dot_threshold * top));
      }
    }
    write_manifest(cfg, art, stage_name);
    return 0;
  });
  return report;
}

}  // namespace

std::vector<CollisionRecord> load_input(const PipelineConfig& cfg) {
  if (cfg.collisions_path.empty()) throw std::invalid_argument("no collisions input configured");
  if (!fs::exists(cfg.collisions_path)) {
    throw std::invalid_argument("collisions file '" + cfg.collisions_path + "' does not exist");
  }
  return load_collisions(cfg.collisions_path, cfg.format);
}

ScreenOutcome run_screen_stage(const PipelineConfig& cfg) {
  return guarded(cfg, [&] {
    const auto corpus = prepare(cfg);
    auto art = open_output(cfg);
    auto screened = stage("screen", [&] { return screen(cfg, corpus); });
    stage("artifacts", [&] {
      art.put("screening.ndjson", screen_ndjson(screened));
      art.put("components.json", components_json(screened));
      write_manifest(cfg, art, "screen");
      return 0;
    });
    return screened;
  });
}

RunReport run_score_stage(const PipelineConfig& cfg, const std::string& screen_dir) {
  return guarded(cfg, [&] {
    auto screened = stage("load-screening", [&] {
      return parse_screen_ndjson(read_file(fs::path(screen_dir) / "screening.ndjson"));
    });
    const auto corpus = prepare(cfg);
    auto art = open_output(cfg);
    if (fs::path(screen_dir) != fs::path(cfg.output_dir)) {
      stage("artifacts", [&] {
        art.put("screening.ndjson", screen_ndjson(screened));
        art.put("components.json", components_json(screened));
        return 0;
      });
    } else {
      art.files.emplace_back("screening.ndjson", hex64(fnv1a64(screen_ndjson(screened))));
      art.files.emplace_back("components.json", hex64(fnv1a64(components_json(screened))));
    }
    return finish(cfg, corpus, std::move(screened), art, "score");
  });
}

RunReport run_pipeline(const PipelineConfig& cfg) {
  return guarded(cfg, [&] {
    const auto corpus = prepare(cfg);
    auto art = open_output(cfg);
    auto screened = stage("screen", [&] { return screen(cfg, corpus); });
    stage("artifacts", [&] {
      art.put("screening.ndjson", screen_ndjson(screened));
      art.put("components.json", components_json(screened));
      return 0;
    });
    return finish(cfg, corpus, std::move(screened), art, "run");
  });
}

}  // namespace fraudnet
