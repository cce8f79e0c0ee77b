#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fraudnet/evaluate.hpp"
#include "fraudnet/ingest.hpp"

namespace fraudnet {

struct SynthSpec {
  std::size_t background_collisions = 1500;
  std::size_t rings = 5;
  std::size_t ring_size = 9;          // participants per ring
  std::size_t ring_collisions = 12;   // collisions per ring
  double ring_reuse = 0.8;            // chance a ring slot (person or vehicle) is reused from the ring
  double red_flag = 0.7;              // chance of each red-flag attribute in ring collisions
  double background_reuse = 0.01;     // chance a background participant reappears
  double organizer_rate = 0.6;        // chance the ring's first member drives a ring collision
  std::size_t labeled_non_fraudsters = 165;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

struct SynthCorpus {
  std::vector<CollisionRecord> records;       // sorted by collision_id
  std::map<std::string, Label> labels;        // participant id -> class
  std::vector<std::vector<std::string>> rings;  // ring member ids
};

SynthCorpus generate(const SynthSpec& spec);

// Preset sized like the published study population.
SynthSpec paper_shape_preset();

void write_labels(std::ostream& out, const std::map<std::string, Label>& labels);
std::map<std::string, Label> parse_labels(std::istream& in);
std::map<std::string, Label> load_labels(const std::string& path);

}  // namespace fraudnet
