#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fraudnet/graph.hpp"

namespace fraudnet {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Role { Driver, Passenger };
enum class LocationKind { Urban, NonUrban };

struct ParticipantEntry {
  std::string participant_id;
  Role role = Role::Driver;
  bool guilty = false;
  std::string vehicle_id;
  int age = 0;
  std::string sex;
  int injury_severity = 0;  // ordinal 0-3
  double claimed_amount = 0.0;

  bool operator==(const ParticipantEntry&) const = default;
};

struct CollisionRecord {
  std::string collision_id;
  std::string timestamp;  // ISO-8601
  LocationKind location = LocationKind::Urban;
  bool night = false;
  std::vector<ParticipantEntry> participants;
  std::vector<std::string> vehicle_ids;

  bool operator==(const CollisionRecord&) const = default;
};

enum class RecordFormat { Csv, Json };
enum class NetworkKind { Drivers, Participants, Copta, Vehicles };

std::string_view to_string(NetworkKind kind);
NetworkKind parse_network_kind(std::string_view s);
RecordFormat parse_record_format(std::string_view s);

// Throws IngestError naming the collision and the violated rule.
void validate_record(const CollisionRecord& record);

// Records come back validated and sorted by collision_id. Malformed input
// raises IngestError with the 1-based line (CSV) or array index (JSON).
std::vector<CollisionRecord> parse_collisions(std::istream& in, RecordFormat format);
std::vector<CollisionRecord> parse_collisions(std::string_view text, RecordFormat format);
std::vector<CollisionRecord> load_collisions(const std::string& path,
                                             std::optional<RecordFormat> format = std::nullopt);

void write_collisions(std::ostream& out, const std::vector<CollisionRecord>& records,
                      RecordFormat format);

std::shared_ptr<Network> build_network(const std::vector<CollisionRecord>& records,
                                       NetworkKind kind);

// Adds one VehicleLink edge per pair of collision vertices that share a
// vehicle. `net` must be a COPTA network built from `records`.
std::shared_ptr<Network> link_shared_vehicles(const Network& net,
                                              const std::vector<CollisionRecord>& records);

// Girvan-Newman splitting: drop the edge of highest betweenness (ties to the
// smallest edge id) until every piece has at most `max_size` vertices.
std::vector<Component> split_communities(const Component& c, std::size_t max_size = 30);

}  // namespace fraudnet
