#include "fraudnet/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fraudnet/rng.hpp"

namespace fraudnet {

void SynthSpec::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
  };
  prob(ring_reuse, "ring_reuse");
  prob(red_flag, "red_flag");
  prob(background_reuse, "background_reuse");
  prob(organizer_rate, "organizer_rate");
  if (rings > 0 && ring_size == 0) throw std::invalid_argument("rings need at least one member");
  if (rings > 0 && ring_collisions == 0) throw std::invalid_argument("rings need at least one collision");
}

SynthSpec paper_shape_preset() {
  SynthSpec s;
  s.background_collisions = 1501;
  s.rings = 5;
  s.ring_size = 9;
  s.ring_collisions = 12;
  s.ring_reuse = 0.8;
  s.red_flag = 0.7;
  s.background_reuse = 0.01;
  s.organizer_rate = 0.6;
  s.labeled_non_fraudsters = 165;
  s.seed = 1;
  return s;
}

namespace {

struct Person {
  int age = 0;
  std::string sex;
  int ring = -1;  // ring index or -1
  bool outsider = false;
};

struct Seat {
  std::size_t person;
  int injury;
  double claim;
};

struct Car {
  std::size_t vehicle;
  Seat driver;
  std::vector<Seat> passengers;
};

struct Draft {
  bool night = false;
  bool non_urban = false;
  int month = 1, day = 1, hour = 12, minute = 0;
  std::vector<Car> cars;
  int guilty = -1;  // index into cars
};

class Generator {
 public:
  explicit Generator(const SynthSpec& spec) : spec_(spec), rng_(derive_seed(spec.seed, "synth")) {}

  SynthCorpus run() {
    for (std::size_t i = 0; i < spec_.background_collisions; ++i) drafts_.push_back(background());
    for (std::size_t r = 0; r < spec_.rings; ++r) plant_ring(static_cast<int>(r));
    for (std::size_t i = drafts_.size(); i > 1; --i) {
      std::swap(drafts_[i - 1], drafts_[uniform_index(rng_, i)]);
    }
    return emit();
  }

 private:
  double u() { return uniform01(rng_); }
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(uniform_index(rng_, n)); }

  std::size_t new_person(int ring, bool child, bool young_bias) {
    Person p;
    p.ring = ring;
    if (child) {
      p.age = 2 + static_cast<int>(pick(12));
    } else if (young_bias && u() < 0.6) {
      p.age = 18 + static_cast<int>(pick(12));
    } else {
      p.age = 18 + static_cast<int>(pick(63));
    }
    p.sex = u() < (ring >= 0 ? 0.75 : 0.55) ? "M" : "F";
    people_.push_back(p);
    return people_.size() - 1;
  }

  std::size_t new_vehicle() { return vehicle_count_++; }

  Seat seat(std::size_t person, bool ring_member) {
    if (ring_member && u() < 0.4) {
      return {person, 2 + static_cast<int>(pick(2)), 200.0 + 10.0 * static_cast<double>(pick(80))};
    }
    const double x = u();
    const int injury = x < 0.6 ? 0 : x < 0.85 ? 1 : x < 0.95 ? 2 : 3;
    return {person, injury, 300.0 * (1 + injury) + 10.0 * static_cast<double>(pick(800))};
  }

  void stamp(Draft& d) {
    d.month = 1 + static_cast<int>(pick(12));
    d.day = 1 + static_cast<int>(pick(28));
    d.hour = d.night ? static_cast<int>((22 + pick(7)) % 24) : 6 + static_cast<int>(pick(16));
    d.minute = static_cast<int>(pick(60));
  }

  std::size_t passenger_count(const double* cdf, std::size_t n) {
    const double x = u();
    for (std::size_t i = 0; i < n; ++i) {
      if (x < cdf[i]) return i;
    }
    return n;
  }

  Draft background() {
    Draft d;
    d.night = u() < 0.2;
    d.non_urban = u() < 0.3;
    stamp(d);
    const double x = u();
    const std::size_t cars = x < 0.18 ? 1 : x < 0.97 ? 2 : 3;
    std::set<std::size_t> used;
    auto driver = [&] {
      if (!background_pool_.empty() && u() < spec_.background_reuse) {
        const auto p = background_pool_[pick(background_pool_.size())];
        if (!used.contains(p) && people_[p].age >= 18) return p;
      }
      const auto p = new_person(-1, false, false);
      background_pool_.push_back(p);
      return p;
    };
    static constexpr double kPassengers[] = {0.84, 0.95, 0.99};
    for (std::size_t c = 0; c < cars; ++c) {
      Car car;
      car.vehicle = new_vehicle();
      const auto dp = driver();
      used.insert(dp);
      car.driver = seat(dp, false);
      const auto np = passenger_count(kPassengers, 3);
      for (std::size_t k = 0; k < np; ++k) {
        const auto pp = new_person(-1, u() < 0.15, false);
        background_pool_.push_back(pp);
        used.insert(pp);
        car.passengers.push_back(seat(pp, false));
      }
      d.cars.push_back(std::move(car));
    }
    if (u() < 0.9) d.guilty = static_cast<int>(pick(cars));
    return d;
  }

  void plant_ring(int ring) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < spec_.ring_size; ++i) members.push_back(new_person(ring, false, true));
    std::vector<std::size_t> uses(members.size(), 0);
    std::vector<std::size_t> fleet;
    const std::size_t fleet_size = std::max<std::size_t>(2, (spec_.ring_size + 1) / 2);

    const auto first = drafts_.size();
    for (std::size_t k = 0; k < spec_.ring_collisions; ++k) {
      Draft d;
      d.night = u() < spec_.red_flag;
      d.non_urban = u() < spec_.red_flag;
      stamp(d);
      std::set<std::size_t> used;
      std::set<std::size_t> used_vehicles;
      // A ring slot goes to an unused member first, then to any free member.
      auto member = [&]() -> std::optional<std::size_t> {
        std::vector<std::size_t> fresh, free;
        for (std::size_t i = 0; i < members.size(); ++i) {
          if (used.contains(members[i])) continue;
          (uses[i] == 0 ? fresh : free).push_back(i);
        }
        const auto& pool = fresh.empty() ? free : fresh;
        if (pool.empty()) return std::nullopt;
        const auto i = pool[pick(pool.size())];
        ++uses[i];
        return members[i];
      };
      bool organizer = u() < spec_.organizer_rate && uses[0] > 0;
      auto occupant = [&](bool is_driver) -> Seat {
        if (organizer && is_driver) {
          organizer = false;
          ++uses[0];
          used.insert(members[0]);
          return seat(members[0], true);
        }
        if (u() < spec_.ring_reuse) {
          if (auto m = member()) {
            used.insert(*m);
            return seat(*m, true);
          }
        }
        const auto p = new_person(-1, !is_driver && u() < 0.15, false);
        people_[p].outsider = true;
        used.insert(p);
        return seat(p, false);
      };
      static constexpr double kPassengers[] = {0.4, 0.75};
      for (int c = 0; c < 2; ++c) {
        Car car;
        if (u() < spec_.ring_reuse && fleet.size() >= fleet_size) {
          std::vector<std::size_t> free;
          for (auto v : fleet) {
            if (!used_vehicles.contains(v)) free.push_back(v);
          }
          car.vehicle = free.empty() ? new_vehicle() : free[pick(free.size())];
        } else {
          car.vehicle = new_vehicle();
          if (fleet.size() < fleet_size) fleet.push_back(car.vehicle);
        }
        used_vehicles.insert(car.vehicle);
        car.driver = occupant(true);
        const auto np = passenger_count(kPassengers, 2);
        for (std::size_t k2 = 0; k2 < np; ++k2) car.passengers.push_back(occupant(false));
        d.cars.push_back(std::move(car));
      }
      if (u() < 0.9) {
        std::vector<int> ring_drivers;
        for (int c = 0; c < 2; ++c) {
          if (people_[d.cars[c].driver.person].ring == ring) ring_drivers.push_back(c);
        }
        d.guilty = ring_drivers.empty() ? static_cast<int>(pick(2))
                                        : ring_drivers[pick(ring_drivers.size())];
      }
      drafts_.push_back(std::move(d));
    }
    // Members never drawn ride as passengers in a random ring collision.
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (uses[i] > 0) continue;
      auto& d = drafts_[first + pick(spec_.ring_collisions)];
      d.cars[pick(d.cars.size())].passengers.push_back(seat(members[i], true));
      ++uses[i];
    }
  }

  SynthCorpus emit() {
    SynthCorpus out;
    std::vector<std::string> person_id(people_.size());
    std::vector<std::string> vehicle_id(vehicle_count_);
    std::size_t next_person = 0, next_vehicle = 0;
    char buf[64];
    auto pid = [&](std::size_t p) -> const std::string& {
      if (person_id[p].empty()) {
        std::snprintf(buf, sizeof buf, "P%05zu", ++next_person);
        person_id[p] = buf;
      }
      return person_id[p];
    };
    auto vid = [&](std::size_t v) -> const std::string& {
      if (vehicle_id[v].empty()) {
        std::snprintf(buf, sizeof buf, "V%05zu", ++next_vehicle);
        vehicle_id[v] = buf;
      }
      return vehicle_id[v];
    };
    for (std::size_t i = 0; i < drafts_.size(); ++i) {
      const auto& d = drafts_[i];
      CollisionRecord rec;
      std::snprintf(buf, sizeof buf, "C%05zu", i + 1);
      rec.collision_id = buf;
      std::snprintf(buf, sizeof buf, "2018-%02d-%02dT%02d:%02d:00", d.month, d.day, d.hour, d.minute);
      rec.timestamp = buf;
      rec.night = d.night;
      rec.location = d.non_urban ? LocationKind::NonUrban : LocationKind::Urban;
      for (std::size_t c = 0; c < d.cars.size(); ++c) {
        const auto& car = d.cars[c];
        rec.vehicle_ids.push_back(vid(car.vehicle));
        auto entry = [&](const Seat& s, Role role) {
          const auto& p = people_[s.person];
          ParticipantEntry e;
          e.participant_id = pid(s.person);
          e.role = role;
          e.guilty = role == Role::Driver && d.guilty == static_cast<int>(c);
          e.vehicle_id = rec.vehicle_ids.back();
          e.age = p.age;
          e.sex = p.sex;
          e.injury_severity = s.injury;
          e.claimed_amount = s.claim;
          rec.participants.push_back(std::move(e));
        };
        entry(car.driver, Role::Driver);
        for (const auto& s : car.passengers) entry(s, Role::Passenger);
      }
      validate_record(rec);
      out.records.push_back(std::move(rec));
    }

    out.rings.resize(spec_.rings);
    std::vector<std::size_t> outsiders, background;
    for (std::size_t p = 0; p < people_.size(); ++p) {
      if (person_id[p].empty()) continue;
      if (people_[p].ring >= 0) {
        out.labels[person_id[p]] = Label::Fraudster;
        out.rings[static_cast<std::size_t>(people_[p].ring)].push_back(person_id[p]);
      } else if (people_[p].outsider) {
        outsiders.push_back(p);
      } else {
        background.push_back(p);
      }
    }
    for (auto& r : out.rings) std::sort(r.begin(), r.end());
    // Non-fraudster labels: ring outsiders first, the rest sampled from the
    // background population.
    auto sample = [&](std::vector<std::size_t>& pool, std::size_t want) {
      for (std::size_t i = 0; i < want && i < pool.size(); ++i) {
        std::swap(pool[i], pool[i + pick(pool.size() - i)]);
        out.labels[person_id[pool[i]]] = Label::NonFraudster;
      }
    };
    const auto from_outsiders = std::min(outsiders.size(), spec_.labeled_non_fraudsters);
    sample(outsiders, from_outsiders);
    sample(background, spec_.labeled_non_fraudsters - from_outsiders);
    return out;
  }

  SynthSpec spec_;
  SplitMix64 rng_;
  std::vector<Person> people_;
  std::vector<std::size_t> background_pool_;
  std::size_t vehicle_count_ = 0;
  std::vector<Draft> drafts_;
};

}  // namespace

SynthCorpus generate(const SynthSpec& spec) {
  spec.validate();
  return Generator(spec).run();
}

void write_labels(std::ostream& out, const std::map<std::string, Label>& labels) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = 1;
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [id, l] : labels) m[id] = std::string(to_string(l));
  doc["labels"] = std::move(m);
  out << doc.dump(1) << '\n';
}

std::map<std::string, Label> parse_labels(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("labels: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("labels") || !doc["labels"].is_object()) {
    throw std::invalid_argument("labels: expected an object with a 'labels' map");
  }
  std::map<std::string, Label> out;
  for (const auto& [id, v] : doc["labels"].items()) {
    if (!v.is_string()) throw std::invalid_argument("labels: value for '" + id + "' is not a string");
    out[id] = parse_label(v.get<std::string>());
  }
  return out;
}

std::map<std::string, Label> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open labels file '" + path + "'");
  return parse_labels(in);
}

}  // namespace fraudnet
