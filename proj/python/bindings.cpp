#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numeric>
#include <sstream>

#include "fraudnet/pipeline.hpp"
#include "fraudnet/synth.hpp"

namespace py = pybind11;
using namespace fraudnet;

namespace {

std::map<std::string, Label> to_labels(const std::map<std::string, std::string>& in) {
  std::map<std::string, Label> out;
  for (const auto& [k, v] : in) out[k] = parse_label(v);
  return out;
}

Component graph_component(std::size_t n, const std::vector<std::pair<VertexId, VertexId>>& edges) {
  auto net = std::make_shared<Network>();
  for (std::size_t v = 0; v < n; ++v) net->add_vertex(EntityKind::Participant, std::to_string(v));
  for (auto [a, b] : edges) net->add_edge({a, b, false, EdgeLabel::Collision, std::nullopt});
  std::vector<VertexId> vs(n);
  std::iota(vs.begin(), vs.end(), 0u);
  std::vector<EdgeId> es(edges.size());
  std::iota(es.begin(), es.end(), 0u);
  return Component(net, vs, es);
}

py::dict simulate(const std::string& preset, std::uint64_t seed, std::optional<std::size_t> rings,
                  std::optional<std::size_t> background, const std::string& format) {
  SynthSpec spec = preset == "paper-shape" ? paper_shape_preset() : SynthSpec{};
  spec.seed = seed;
  if (rings) spec.rings = *rings;
  if (background) spec.background_collisions = *background;
  const auto corpus = generate(spec);
  std::ostringstream records, labels;
  write_collisions(records, corpus.records, parse_record_format(format));
  write_labels(labels, corpus.labels);
  py::dict out;
  out["collisions"] = records.str();
  out["labels"] = labels.str();
  out["rings"] = corpus.rings;
  return out;
}

std::string run(const std::string& config_json) {
  const auto cfg = parse_config(config_json);
  return report_json(run_pipeline(cfg));
}

py::dict metrics_dict(std::size_t tp, std::size_t fn, std::size_t fp, std::size_t tn) {
  const auto m = metrics({tp, fn, fp, tn});
  py::dict out;
  out["ca"] = m.ca;
  out["recall"] = m.recall;
  out["precision"] = m.precision;
  out["specificity"] = m.specificity;
  out["f1"] = m.f1;
  return out;
}

double auc_of(const std::map<std::string, double>& scores, const std::map<std::string, std::string>& labels) {
  return auc(attach_labels(scores, to_labels(labels)));
}

py::dict graph_measures(std::size_t n, const std::vector<std::pair<VertexId, VertexId>>& edges) {
  const auto c = graph_component(n, edges);
  std::vector<double> eb(edges.size()), bc(n);
  for (auto [e, v] : edge_betweenness(c)) eb[e] = v;
  for (auto [v, s] : centrality(c, CentralityKind::BetCen)) bc[v] = s;
  py::dict out;
  out["edge_betweenness"] = eb;
  out["vertex_betweenness"] = bc;
  out["diameter"] = diameter(c);
  out["l_inverse"] = l_inverse(c);
  out["vertex_cover"] = min_vertex_cover_size(c).size;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fraud-ring detection over collision networks";
  m.attr("schema_version") = kSchemaVersion;
  py::register_exception<PipelineError>(m, "PipelineError");

  m.def("default_config", [] { return dump_config(PipelineConfig{}); });
  m.def("normalize_config", [](const std::string& text) { return dump_config(parse_config(text)); });
  m.def("config_hash", [](const std::string& text) { return config_hash(parse_config(text)); });
  m.def("simulate", &simulate, py::arg("preset") = "paper-shape", py::arg("seed") = 1,
        py::arg("rings") = py::none(), py::arg("background") = py::none(), py::arg("format") = "csv");
  m.def("run", &run, py::arg("config_json"), py::call_guard<py::gil_scoped_release>());
  m.def("metrics", &metrics_dict, py::arg("tp"), py::arg("fn"), py::arg("fp"), py::arg("tn"));
  m.def("auc", &auc_of, py::arg("scores"), py::arg("labels"));
  m.def("graph_measures", &graph_measures, py::arg("n"), py::arg("edges"));
}
