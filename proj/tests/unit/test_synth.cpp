#include <doctest.h>

#include <set>
#include <sstream>

#include "fraudnet/ingest.hpp"
#include "fraudnet/synth.hpp"

using namespace fraudnet;

namespace {

std::size_t count(const std::map<std::string, Label>& labels, Label l) {
  std::size_t n = 0;
  for (const auto& [k, v] : labels) n += v == l;
  return n;
}

std::size_t participants(const std::vector<CollisionRecord>& recs) {
  std::set<std::string> ids;
  for (const auto& r : recs)
    for (const auto& p : r.participants) ids.insert(p.participant_id);
  return ids.size();
}

}  // namespace

TEST_CASE("no rings, no fraudsters") {
  SynthSpec spec;
  spec.rings = 0;
  spec.background_collisions = 200;
  auto c = generate(spec);
  CHECK(c.records.size() == 200);
  CHECK(count(c.labels, Label::Fraudster) == 0);
  CHECK(c.rings.empty());
}

TEST_CASE("ring components reuse drivers") {
  SynthSpec spec;
  spec.background_collisions = 1500;
  spec.rings = 5;
  spec.ring_size = 8;
  spec.ring_collisions = 6;
  spec.ring_reuse = 0.8;
  spec.seed = 3;
  auto corpus = generate(spec);
  auto net = build_network(corpus.records, NetworkKind::Participants);
  std::set<std::string> ring_members;
  for (const auto& ring : corpus.rings) ring_members.insert(ring.begin(), ring.end());

  // distinct drivers per collision, per participants-network component
  std::map<std::string, VertexId> owner;
  for (const auto& c : connected_components(net))
    for (auto v : c.vertices()) owner[net->vertex(v).key] = c.id();
  std::map<VertexId, std::set<std::string>> drivers, collisions;
  std::set<VertexId> ring_components;
  for (const auto& r : corpus.records) {
    const auto comp = owner.at(r.participants.front().participant_id);
    collisions[comp].insert(r.collision_id);
    for (const auto& p : r.participants) {
      if (p.role == Role::Driver) drivers[comp].insert(p.participant_id);
      if (ring_members.contains(p.participant_id)) ring_components.insert(comp);
    }
  }
  double ring = 0, background = 0;
  std::size_t nr = 0, nb = 0;
  for (const auto& [comp, cs] : collisions) {
    const double ratio = static_cast<double>(drivers[comp].size()) / static_cast<double>(cs.size());
    if (ring_components.contains(comp)) ring += ratio, ++nr;
    else background += ratio, ++nb;
  }
  REQUIRE(nr > 0);
  REQUIRE(nb > 0);
  CHECK(ring / nr < background / nb);
}

TEST_CASE("determinism") {
  SynthSpec spec = paper_shape_preset();
  spec.seed = 11;
  auto a = generate(spec);
  auto b = generate(spec);
  CHECK(a.records == b.records);
  CHECK(a.labels == b.labels);
  std::ostringstream x, y;
  write_collisions(x, a.records, RecordFormat::Csv);
  write_collisions(y, b.records, RecordFormat::Csv);
  CHECK(x.str() == y.str());
  spec.seed = 12;
  CHECK_FALSE(generate(spec).records == a.records);
}

TEST_CASE("preset is sized like the study population") {
  for (std::uint64_t seed : {1, 2, 7}) {
    auto spec = paper_shape_preset();
    spec.seed = seed;
    auto c = generate(spec);
    CHECK(c.records.size() >= 1405);
    CHECK(c.records.size() <= 1717);
    const auto n = participants(c.records);
    CHECK(n >= 3106);
    CHECK(n <= 3796);
    const auto f = count(c.labels, Label::Fraudster);
    CHECK(f >= 42);
    CHECK(f <= 50);
    CHECK(c.rings.size() == 5);
  }
}

TEST_CASE("labels round trip") {
  std::map<std::string, Label> labels = {{"P1", Label::Fraudster}, {"P2", Label::NonFraudster}};
  std::stringstream s;
  write_labels(s, labels);
  CHECK(parse_labels(s) == labels);
  std::stringstream bad("{\"labels\": {\"P1\": \"guilty\"}}");
  CHECK_THROWS(parse_labels(bad));
}

TEST_CASE("spec validation") {
  SynthSpec spec;
  spec.red_flag = 1.5;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = SynthSpec{};
  spec.ring_size = 0;
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}
