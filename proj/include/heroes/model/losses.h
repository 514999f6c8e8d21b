#pragma once

#include <optional>
#include <span>
#include <vector>

#include "heroes/data/session.h"
#include "heroes/model/network.h"

namespace heroes {

inline constexpr double kProbEpsilon = 1e-7;

struct LossWeights {
  double alpha = 1.0;  // CVR weight
  double beta = 1.0;   // CDF weight in the survival objective
  void validate() const;
};

// Hazard chain of one layer over one survival episode.
struct LayerOutcome {
  std::vector<Var> hazards;     // one-element Vars
  std::optional<std::size_t> event;  // 0-based index of the event, empty if none occurred
};

// Sum over items of -[b log p + (1 - b) log(1 - p)], p clamped to [eps, 1 - eps].
Var bce(Tape& tape, std::span<const Var> predictions, std::span<const int> labels);

// -[log h_j + sum_{t<j} log(1 - h_t)].
Var pdf_loss(Tape& tape, const LayerOutcome& outcome);
// -log[1 - prod_{t<=I} (1 - h_t)].
Var occur_loss(Tape& tape, const LayerOutcome& outcome);
// -sum_{t<=I} log(1 - h_t).
Var non_occur_loss(Tape& tape, const LayerOutcome& outcome);
// pdf + beta * occur with an event, beta * non_occur without.
Var survival_loss(Tape& tape, const LayerOutcome& outcome, double beta);

// Splits a binary event sequence into survival episodes ending at each event;
// a trailing run without an event forms a censored episode.
std::vector<LayerOutcome> segment_episodes(std::span<const Var> hazards,
                                           std::span<const int> events);

struct LossOptions {
  LossWeights weights;
  Mode mode = Mode::kBiased;
  // Block the CVR loss from reaching the CTR readout (independent layers).
  bool detach_click_in_cvr = false;
};

// L = L_c + alpha * L_v for one session.
Var total_loss(Tape& tape, const SessionForward& fwd, const QuerySession& session,
               const LossOptions& options);

// Double-valued conveniences over plain hazard vectors.
double pdf_loss_value(std::span<const double> hazards, std::size_t event);
double occur_loss_value(std::span<const double> hazards);
double non_occur_loss_value(std::span<const double> hazards);
double bce_value(std::span<const double> predictions, std::span<const int> labels);

}  // namespace heroes
