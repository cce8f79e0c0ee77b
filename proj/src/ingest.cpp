#include "fraudnet/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fraudnet {

using nlohmann::json;

std::string_view to_string(NetworkKind kind) {
  switch (kind) {
    case NetworkKind::Drivers: return "drivers";
    case NetworkKind::Participants: return "participants";
    case NetworkKind::Copta: return "copta";
    case NetworkKind::Vehicles: return "vehicles";
  }
  return "?";
}

NetworkKind parse_network_kind(std::string_view s) {
  for (auto k : {NetworkKind::Drivers, NetworkKind::Participants, NetworkKind::Copta,
                 NetworkKind::Vehicles}) {
    if (to_string(k) == s) return k;
  }
  throw IngestError("unknown network kind '" + std::string(s) + "'");
}

RecordFormat parse_record_format(std::string_view s) {
  if (s == "csv") return RecordFormat::Csv;
  if (s == "json") return RecordFormat::Json;
  throw IngestError("unknown record format '" + std::string(s) + "'");
}

namespace {

[[noreturn]] void violation(const CollisionRecord& r, const std::string& rule) {
  throw IngestError("collision '" + r.collision_id + "': " + rule);
}

bool valid_timestamp(const std::string& ts) {
  static const std::regex iso(
      R"(\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?)");
  return std::regex_match(ts, iso);
}

}  // namespace

void validate_record(const CollisionRecord& r) {
  if (r.collision_id.empty()) throw IngestError("collision with empty id");
  if (!valid_timestamp(r.timestamp)) violation(r, "timestamp is not ISO-8601: '" + r.timestamp + "'");
  if (r.participants.empty()) violation(r, "at least one participant required");
  std::set<std::string> vehicles(r.vehicle_ids.begin(), r.vehicle_ids.end());
  if (vehicles.size() != r.vehicle_ids.size()) violation(r, "duplicate vehicle id");
  std::map<std::string, int> drivers_per_vehicle;
  std::set<std::string> seen;
  int guilty = 0;
  for (const auto& p : r.participants) {
    if (p.participant_id.empty()) violation(r, "participant with empty id");
    if (!seen.insert(p.participant_id).second) {
      violation(r, "participant '" + p.participant_id + "' listed twice");
    }
    if (!vehicles.contains(p.vehicle_id)) {
      violation(r, "participant '" + p.participant_id + "' references unknown vehicle '" +
                       p.vehicle_id + "'");
    }
    if (p.injury_severity < 0 || p.injury_severity > 3) {
      violation(r, "injury_severity outside 0-3 for '" + p.participant_id + "'");
    }
    if (p.role == Role::Driver) {
      ++drivers_per_vehicle[p.vehicle_id];
      if (p.guilty) ++guilty;
    } else if (p.guilty) {
      violation(r, "passenger '" + p.participant_id + "' carries a guilt flag");
    }
  }
  for (const auto& v : r.vehicle_ids) {
    if (drivers_per_vehicle[v] != 1) {
      violation(r, "vehicle '" + v + "' must have exactly one driver");
    }
  }
  if (guilty > 1) violation(r, "more than one guilty driver");
}

// ---------------------------------------------------------------------------
// CSV

namespace {

const std::vector<std::string> kCsvColumns = {
    "collision_id", "timestamp", "location_kind", "night_flag",    "participant_id",
    "role",         "guilt_flag", "vehicle_id",   "age",           "sex",
    "injury_severity", "claimed_amount"};

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw IngestError("line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool parse_bool(std::string_view s, bool& out) {
  if (s == "true" || s == "1" || s == "yes") return out = true, true;
  if (s == "false" || s == "0" || s == "no" || s.empty()) return out = false, true;
  return false;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_amount(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string_view role_name(Role r) { return r == Role::Driver ? "driver" : "passenger"; }
std::string_view location_name(LocationKind k) {
  return k == LocationKind::Urban ? "urban" : "non-urban";
}

Role parse_role(std::string_view s, const std::string& where) {
  if (s == "driver") return Role::Driver;
  if (s == "passenger") return Role::Passenger;
  throw IngestError(where + ": unknown role '" + std::string(s) + "'");
}

LocationKind parse_location(std::string_view s, const std::string& where) {
  if (s == "urban") return LocationKind::Urban;
  if (s == "non-urban" || s == "non_urban") return LocationKind::NonUrban;
  throw IngestError(where + ": unknown location_kind '" + std::string(s) + "'");
}

std::vector<CollisionRecord> finish(std::vector<CollisionRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.collision_id < b.collision_id; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].collision_id == records[i - 1].collision_id) {
      throw IngestError("duplicate collision_id '" + records[i].collision_id + "'");
    }
  }
  for (const auto& r : records) validate_record(r);
  return records;
}

std::vector<CollisionRecord> parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) return {};
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line, line_no);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : kCsvColumns) {
    if (!col.contains(name)) throw IngestError("line 1: missing column '" + name + "'");
  }

  std::vector<CollisionRecord> records;
  std::map<std::string, std::size_t> by_id;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line, line_no);
    const std::string where = "line " + std::to_string(line_no);
    if (f.size() != header.size()) {
      throw IngestError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(f.size()));
    }
    auto get = [&](const char* name) -> const std::string& { return f[col.at(name)]; };

    CollisionRecord head;
    head.collision_id = get("collision_id");
    head.timestamp = get("timestamp");
    head.location = parse_location(get("location_kind"), where);
    if (!parse_bool(get("night_flag"), head.night)) {
      throw IngestError(where + ": bad night_flag '" + get("night_flag") + "'");
    }
    if (head.collision_id.empty()) throw IngestError(where + ": empty collision_id");

    ParticipantEntry p;
    p.participant_id = get("participant_id");
    p.role = parse_role(get("role"), where);
    if (!parse_bool(get("guilt_flag"), p.guilty)) {
      throw IngestError(where + ": bad guilt_flag '" + get("guilt_flag") + "'");
    }
    p.vehicle_id = get("vehicle_id");
    if (!parse_number(get("age"), p.age)) throw IngestError(where + ": bad age '" + get("age") + "'");
    p.sex = get("sex");
    if (!parse_number(get("injury_severity"), p.injury_severity)) {
      throw IngestError(where + ": bad injury_severity '" + get("injury_severity") + "'");
    }
    if (!parse_number(get("claimed_amount"), p.claimed_amount)) {
      throw IngestError(where + ": bad claimed_amount '" + get("claimed_amount") + "'");
    }

    auto [it, fresh] = by_id.emplace(head.collision_id, records.size());
    if (fresh) {
      records.push_back(std::move(head));
    } else {
      const auto& r = records[it->second];
      if (r.timestamp != head.timestamp || r.location != head.location || r.night != head.night) {
        throw IngestError(where + ": collision-level fields disagree with earlier rows of '" +
                          head.collision_id + "'");
      }
    }
    auto& r = records[it->second];
    if (std::find(r.vehicle_ids.begin(), r.vehicle_ids.end(), p.vehicle_id) == r.vehicle_ids.end()) {
      r.vehicle_ids.push_back(p.vehicle_id);
    }
    r.participants.push_back(std::move(p));
  }
  return finish(std::move(records));
}

std::vector<CollisionRecord> parse_json(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IngestError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_array()) throw IngestError("JSON input must be an array of collisions");
  std::vector<CollisionRecord> records;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "record " + std::to_string(i);
    try {
      const auto& j = doc[i];
      CollisionRecord r;
      r.collision_id = j.at("collision_id").get<std::string>();
      r.timestamp = j.at("timestamp").get<std::string>();
      r.location = parse_location(j.at("location_kind").get<std::string>(), where);
      r.night = j.at("night_flag").get<bool>();
      r.vehicle_ids = j.at("vehicle_ids").get<std::vector<std::string>>();
      for (const auto& jp : j.at("participants")) {
        ParticipantEntry p;
        p.participant_id = jp.at("participant_id").get<std::string>();
        p.role = parse_role(jp.at("role").get<std::string>(), where);
        p.guilty = jp.value("guilt_flag", false);
        p.vehicle_id = jp.at("vehicle_id").get<std::string>();
        p.age = jp.at("age").get<int>();
        p.sex = jp.at("sex").get<std::string>();
        p.injury_severity = jp.at("injury_severity").get<int>();
        p.claimed_amount = jp.at("claimed_amount").get<double>();
        r.participants.push_back(std::move(p));
      }
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw IngestError(where + ": " + e.what());
    }
  }
  return finish(std::move(records));
}

}  // namespace

std::vector<CollisionRecord> parse_collisions(std::istream& in, RecordFormat format) {
  return format == RecordFormat::Csv ? parse_csv(in) : parse_json(in);
}

std::vector<CollisionRecord> parse_collisions(std::string_view text, RecordFormat format) {
  std::istringstream in{std::string(text)};
  return parse_collisions(in, format);
}

std::vector<CollisionRecord> load_collisions(const std::string& path,
                                             std::optional<RecordFormat> format) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path + "'");
  if (!format) {
    format = path.size() >= 5 && path.substr(path.size() - 5) == ".json" ? RecordFormat::Json
                                                                         : RecordFormat::Csv;
  }
  return parse_collisions(in, *format);
}

void write_collisions(std::ostream& out, const std::vector<CollisionRecord>& records,
                      RecordFormat format) {
  if (format == RecordFormat::Csv) {
    for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
      out << (i ? "," : "") << kCsvColumns[i];
    }
    out << '\n';
    for (const auto& r : records) {
      for (const auto& p : r.participants) {
        out << csv_field(r.collision_id) << ',' << csv_field(r.timestamp) << ','
            << location_name(r.location) << ',' << (r.night ? "true" : "false") << ','
            << csv_field(p.participant_id) << ',' << role_name(p.role) << ','
            << (p.guilty ? "true" : "false") << ',' << csv_field(p.vehicle_id) << ',' << p.age
            << ',' << csv_field(p.sex) << ',' << p.injury_severity << ','
            << format_amount(p.claimed_amount) << '\n';
      }
    }
    return;
  }
  json doc = json::array();
  for (const auto& r : records) {
    json jr;
    jr["collision_id"] = r.collision_id;
    jr["timestamp"] = r.timestamp;
    jr["location_kind"] = location_name(r.location);
    jr["night_flag"] = r.night;
    jr["vehicle_ids"] = r.vehicle_ids;
    jr["participants"] = json::array();
    for (const auto& p : r.participants) {
      jr["participants"].push_back({{"participant_id", p.participant_id},
                                    {"role", role_name(p.role)},
                                    {"guilt_flag", p.guilty},
                                    {"vehicle_id", p.vehicle_id},
                                    {"age", p.age},
                                    {"sex", p.sex},
                                    {"injury_severity", p.injury_severity},
                                    {"claimed_amount", p.claimed_amount}});
    }
    doc.push_back(std::move(jr));
  }
  out << doc.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// Network construction

namespace {

constexpr int kChildAge = 14;

class Builder {
 public:
  explicit Builder(const std::vector<CollisionRecord>& records) {
    // Participant attributes aggregate over every appearance: age and sex from
    // the first, injury and claim as maxima, driver flag if ever a driver.
    for (const auto& r : records) {
      for (const auto& p : r.participants) {
        auto [it, fresh] = participant_attrs_.try_emplace(p.participant_id);
        auto& a = it->second;
        if (fresh) {
          a["age"] = static_cast<double>(p.age);
          a["sex"] = p.sex;
          a["injury_severity"] = static_cast<double>(p.injury_severity);
          a["claimed_amount"] = p.claimed_amount;
          a["driver"] = p.role == Role::Driver ? 1.0 : 0.0;
        } else {
          auto& inj = std::get<double>(a["injury_severity"]);
          inj = std::max(inj, static_cast<double>(p.injury_severity));
          auto& amt = std::get<double>(a["claimed_amount"]);
          amt = std::max(amt, p.claimed_amount);
          if (p.role == Role::Driver) a["driver"] = 1.0;
        }
      }
    }
  }

  VertexId participant(const std::string& id) {
    if (auto v = net_->find(EntityKind::Participant, id)) return *v;
    return net_->add_vertex(EntityKind::Participant, id, participant_attrs_.at(id));
  }

  VertexId vehicle(const std::string& id) {
    if (auto v = net_->find(EntityKind::Vehicle, id)) return *v;
    return net_->add_vertex(EntityKind::Vehicle, id);
  }

  VertexId collision(const CollisionRecord& r) {
    Attributes a;
    a["night"] = r.night ? 1.0 : 0.0;
    a["non_urban"] = r.location == LocationKind::NonUrban ? 1.0 : 0.0;
    int passengers = 0;
    bool child = false;
    for (const auto& p : r.participants) {
      if (p.role == Role::Passenger) ++passengers;
      if (p.age < kChildAge) child = true;
    }
    a["passengers"] = static_cast<double>(passengers);
    a["participants"] = static_cast<double>(r.participants.size());
    a["child_present"] = child ? 1.0 : 0.0;
    a["timestamp"] = r.timestamp;
    return net_->add_vertex(EntityKind::Collision, r.collision_id, std::move(a));
  }

  void edge(VertexId a, VertexId b, EdgeLabel label, bool directed,
            std::optional<int> passengers = std::nullopt) {
    net_->add_edge(Edge{a, b, directed, label, passengers});
  }

  std::shared_ptr<Network> take() { return std::move(net_); }

 private:
  std::shared_ptr<Network> net_ = std::make_shared<Network>();
  std::map<std::string, Attributes> participant_attrs_;
};

const ParticipantEntry* driver_of(const CollisionRecord& r, const std::string& vehicle) {
  for (const auto& p : r.participants) {
    if (p.role == Role::Driver && p.vehicle_id == vehicle) return &p;
  }
  return nullptr;
}

// Guilty endpoint first; undirected pairs when nobody is at fault.
template <typename Key, typename Emit>
void connect_collision_pair_set(const std::vector<Key>& members, const std::vector<bool>& guilty,
                                Emit emit) {
  const auto culprit = std::find(guilty.begin(), guilty.end(), true);
  if (culprit != guilty.end()) {
    const auto g = static_cast<std::size_t>(culprit - guilty.begin());
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (i != g) emit(members[g], members[i], true);
    }
    return;
  }
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) emit(members[i], members[j], false);
  }
}

}  // namespace

std::shared_ptr<Network> build_network(const std::vector<CollisionRecord>& records,
                                       NetworkKind kind) {
  Builder b(records);
  for (const auto& r : records) {
    std::vector<VertexId> drivers;
    std::vector<bool> guilty;
    switch (kind) {
      case NetworkKind::Drivers:
      case NetworkKind::Participants: {
        for (const auto& p : r.participants) {
          if (kind == NetworkKind::Participants || p.role == Role::Driver) b.participant(p.participant_id);
        }
        for (const auto& vid : r.vehicle_ids) {
          const auto* d = driver_of(r, vid);
          drivers.push_back(b.participant(d->participant_id));
          guilty.push_back(d->guilty);
        }
        connect_collision_pair_set(drivers, guilty, [&](VertexId x, VertexId y, bool directed) {
          b.edge(x, y, EdgeLabel::Collision, directed);
        });
        if (kind == NetworkKind::Participants) {
          for (const auto& p : r.participants) {
            if (p.role != Role::Passenger) continue;
            const auto* d = driver_of(r, p.vehicle_id);
            b.edge(b.participant(p.participant_id), b.participant(d->participant_id),
                   EdgeLabel::Passenger, false);
          }
        }
        break;
      }
      case NetworkKind::Copta: {
        const auto cv = b.collision(r);
        const bool any_guilt = std::any_of(r.participants.begin(), r.participants.end(),
                                           [](const auto& p) { return p.guilty; });
        for (const auto& p : r.participants) {
          const auto pv = b.participant(p.participant_id);
          if (p.role == Role::Driver) {
            int passengers = 0;
            for (const auto& q : r.participants) {
              if (q.role == Role::Passenger && q.vehicle_id == p.vehicle_id) ++passengers;
            }
            if (!any_guilt) b.edge(pv, cv, EdgeLabel::Driver, false, passengers);
            else if (p.guilty) b.edge(pv, cv, EdgeLabel::Driver, true, passengers);
            else b.edge(cv, pv, EdgeLabel::Driver, true, passengers);
          } else {
            b.edge(pv, cv, EdgeLabel::Passenger, false);
          }
        }
        break;
      }
      case NetworkKind::Vehicles: {
        std::vector<VertexId> vehicles;
        for (const auto& vid : r.vehicle_ids) {
          vehicles.push_back(b.vehicle(vid));
          guilty.push_back(driver_of(r, vid)->guilty);
        }
        connect_collision_pair_set(vehicles, guilty, [&](VertexId x, VertexId y, bool directed) {
          b.edge(x, y, EdgeLabel::Collision, directed);
        });
        for (const auto& p : r.participants) {
          const auto pv = b.participant(p.participant_id);
          b.edge(pv, b.vehicle(p.vehicle_id),
                 p.role == Role::Driver ? EdgeLabel::Driver : EdgeLabel::Passenger, false);
        }
        break;
      }
    }
  }
  return b.take();
}

std::shared_ptr<Network> link_shared_vehicles(const Network& net,
                                              const std::vector<CollisionRecord>& records) {
  auto out = std::make_shared<Network>(net);
  std::map<std::string, std::vector<VertexId>> by_vehicle;
  for (const auto& r : records) {
    auto cv = net.find(EntityKind::Collision, r.collision_id);
    if (!cv) {
      throw IngestError("link_shared_vehicles: collision '" + r.collision_id +
                        "' missing; expected a COPTA network");
    }
    for (const auto& vid : r.vehicle_ids) by_vehicle[vid].push_back(*cv);
  }
  std::set<std::pair<VertexId, VertexId>> pairs;
  for (const auto& [vid, cvs] : by_vehicle) {
    for (std::size_t i = 0; i < cvs.size(); ++i) {
      for (std::size_t j = i + 1; j < cvs.size(); ++j) {
        pairs.emplace(std::min(cvs[i], cvs[j]), std::max(cvs[i], cvs[j]));
      }
    }
  }
  for (const auto& [a, b] : pairs) {
    out->add_edge(Edge{a, b, false, EdgeLabel::VehicleLink, std::nullopt});
  }
  return out;
}

std::vector<Component> split_communities(const Component& c, std::size_t max_size) {
  if (max_size < 2) throw GraphError("split_communities: max_size must be at least 2");
  std::vector<Component> done;
  std::vector<Component> pending{c};
  while (!pending.empty()) {
    Component piece = std::move(pending.back());
    pending.pop_back();
    if (piece.vertex_count() <= max_size) {
      done.push_back(std::move(piece));
      continue;
    }
    std::vector<EdgeId> edges = piece.edge_ids();
    std::vector<VertexId> vertices = piece.vertices();
    for (;;) {
      const Component current(piece.network(), vertices, edges);
      const auto scores = local::edge_betweenness(current.graph());
      std::size_t drop = 0;
      for (std::size_t i = 1; i < scores.size(); ++i) {
        // edge ids are sorted, so the first maximum has the smallest id
        if (scores[i] > scores[drop] + 1e-12) drop = i;
      }
      edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(drop));
      auto parts = connected_components(piece.network(), vertices, edges);
      if (parts.size() > 1) {
        for (auto& p : parts) pending.push_back(std::move(p));
        break;
      }
    }
  }
  std::sort(done.begin(), done.end(), [](const auto& a, const auto& b) { return a.id() < b.id(); });
  return done;
}

}  // namespace fraudnet
