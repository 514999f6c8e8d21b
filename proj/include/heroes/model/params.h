#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "heroes/diff/tape.h"
#include "heroes/model/config.h"

namespace heroes {

using diff::Parameter;
using diff::Tensor;

// Stacked affine map for the four gates of one track of one layer.
// Rows [0,H) forget, [H,2H) input, [2H,3H) output, [3H,4H) proposal;
// columns follow the gate input [top_down | features | position one-hot].
struct GateParams {
  Parameter weight;
  Parameter bias;
};

// Sigmoid readout mapping a hidden vector to a probability.
struct HeadParams {
  Parameter weight;  // 1 x H
  Parameter bias;    // [1]
};

struct DecayParams {
  Parameter weight;  // H x H, or H x (2 + H) with the behavior embedding
  Parameter bias;    // [H]
};

struct ModelParams {
  ModelConfig config;

  // Indexed [layer][track].
  std::array<std::array<GateParams, 2>, 2> gates;
  // Top-down transforms, indexed by track.
  std::array<Parameter, 2> u_c;
  std::array<Parameter, 2> u_r;
  std::array<Parameter, 2> u_v;
  std::array<Parameter, 2> w_r;
  DecayParams decay;
  DecayParams decay_behavior;
  // Readouts, indexed by layer; shared by both tracks.
  std::array<HeadParams, 2> heads;

  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  std::size_t track_slot(Track t) const {
    return config.share_track_params ? 0 : static_cast<std::size_t>(t);
  }
  const GateParams& gate(Layer l, Track t) const {
    return gates[static_cast<std::size_t>(l)][track_slot(t)];
  }

  // Parameters that influence the model output under its config.
  std::vector<Parameter*> trainable();
  std::vector<const Parameter*> trainable() const;
  std::size_t scalar_count() const;
};

}  // namespace heroes
