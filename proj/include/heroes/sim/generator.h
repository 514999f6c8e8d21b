#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "heroes/data/session.h"

namespace heroes::sim {

struct GeneratorConfig {
  std::size_t n_queries = 1000;
  std::size_t min_length = 10;
  std::size_t max_length = 30;
  std::size_t features = 8;
  std::uint64_t seed = 0;

  // Item latents z_c, z_v ~ N(0, 1); features = A [z_c, z_v] + shift_q + noise.
  double click_slope = 2.5;  // r~c = sigmoid(click_slope * z_c + click_offset)
  double conv_slope = 2.0;   // r~v = sigmoid(conv_slope * z_v + conv_offset)
  double feature_noise = 0.5;
  double query_shift = 1.0;  // std of the per-list feature shift
  std::size_t distractors = 2;  // feature dimensions without relevance signal

  // Context effects on the behavioral click logit.
  double excitation = 0.8;       // per earlier click
  double excitation_decay = 2.0; // positions
  double discouragement = 4.0;   // per earlier conversion
  double discouragement_decay = 20.0;

  // Calibration targets: mean gaps (in items) between consecutive clicks and
  // consecutive purchases on the end-to-end timeline of all lists.
  double click_gap_target = 12.23;
  double purchase_gap_target = 32.08;
  bool calibrate = true;
  std::size_t calibration_queries = 3000;
  // Used as-is when calibrate is false.
  double click_offset = -3.0;
  double conv_offset = -0.5;

  void validate() const;
};

struct Calibration {
  double click_offset = 0.0;
  double conv_offset = 0.0;
  double click_gap = 0.0;
  double purchase_gap = 0.0;
};

struct GeneratedCorpus {
  Corpus sessions;
  Calibration calibration;
};

// Resolves offsets (calibrating if requested) and generates n_queries lists
// with query ids 0..n-1.
GeneratedCorpus gen_sessions(const GeneratorConfig& config);

// Offsets that hit the configured gap targets on a pilot sample.
Calibration calibrate(const GeneratorConfig& config);

struct GapStats {
  double mean_click_gap = 0.0;
  double mean_purchase_gap = 0.0;
  std::size_t clicks = 0;
  std::size_t purchases = 0;
  std::size_t items = 0;
};

// Lists laid end to end in the given order; a gap is the index distance
// between consecutive events. NaN when fewer than two events exist.
GapStats measure_gaps(const Corpus& corpus);

}  // namespace heroes::sim
