#pragma once
// Experiment configuration: plain-text [section] key = value files parsed
// into one validated struct consumed by every runner. The canonical
// serialization (fixed section and key order, full-precision numbers) feeds
// the hash stamped onto every output row, so results stay traceable to the
// exact inputs that produced them.
#include <cstdint>
#include <string>
#include <vector>

#include "mflab/grid.hpp"
#include "mflab/profiles.hpp"

namespace mflab {

struct ExperimentConfig {
  GridSpec grid;                  // [grid] n, dim, box_length

  std::vector<double> hbar_list;  // [sweep] hbar_list: strictly decreasing
  std::vector<int> n_list;        // [sweep] n_list: strictly increasing

  double t_final = 0.0;           // [time] t_final, dt, sample_every
  double dt = 0.0;
  int sample_every = 1;           // record diagnostics every k steps

  ProfileSpec initial_density;    // [initial_density] profile + numeric keys
  ProfileSpec initial_phase;      // [initial_phase]

  std::uint64_t seed = 1;         // [run]
  std::string output_dir = "out";
  double gronwall_c = 10.0;       // growth rate of the monitored envelope
  int draws_per_n = 4;            // independent samplings per particle count
  bool free_space_images = false; // particle dynamics without periodic images
  bool self_consistent_halves = true;  // wave solver refreshes the half kick

  // Full consistency check; throws std::invalid_argument naming the
  // offending key. parse_config runs this before returning.
  void validate() const;
};

// Parse text in the canonical format. Unknown sections or keys, duplicate
// keys, malformed numbers, and invariant violations are input errors
// (std::invalid_argument). Comments start with '#' or ';'.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Fixed-order serialization; parse_config(canonical_config_text(c)) == c.
std::string canonical_config_text(const ExperimentConfig& c);

// 16 hex digits of fnv1a64 over the canonical text.
std::string config_hash(const ExperimentConfig& c);

}  // namespace mflab
