#pragma once

#include <vector>

#include "heroes/data/session.h"
#include "heroes/model/params.h"
#include "heroes/model/unit.h"

namespace heroes {

// Tape handles of one step's hidden states and probability readouts.
struct StepVars {
  Var h_c, h_c_tilde, h_v, h_v_tilde;
  Var p_c, p_c_tilde, p_v, p_v_tilde;
};

struct SessionForward {
  Mode mode = Mode::kBiased;
  Ablation ablation = Ablation::kNone;
  std::vector<StepOutput> steps;
  std::vector<int> gates;
  std::vector<StepVars> vars;

  std::size_t size() const { return steps.size(); }
};

struct ForwardOptions {
  Mode mode = Mode::kBiased;
  GateSource gate_source = GateSource::kLabels;
  double dt = 1.0;
  // Copy hidden vectors into StepOutput; probabilities are always recorded.
  bool record_hidden = true;
};

// Boundary detector: 1 iff p_c > 0.5.
int boundary(double p_c);

// Hierarchical rollout with gradients flowing into params.
SessionForward forward_session(Tape& tape, const QuerySession& session, ModelParams& params,
                               const ForwardOptions& options);

// Same rollout against a read-only parameter snapshot.
SessionForward infer_session(Tape& tape, const QuerySession& session, const ModelParams& params,
                             const ForwardOptions& options);

struct Predictions {
  Track track = Track::kInherent;
  std::vector<double> click;
  std::vector<double> conversion;
  // Scores used for ranking: P(c)/P(v) in biased mode, relevances
  // (hazard h_c and h_c * h_v) in unbiased modes.
  std::vector<double> click_score;
  std::vector<double> conversion_score;
  // Probability mass of no event within the list (unbiased modes).
  double click_leftover = 0.0;
  double conversion_leftover = 0.0;
};

// P(z = i) = h_i * prod_{t<i} (1 - h_t); leftover receives prod_{t<=I} (1 - h_t).
std::vector<double> unroll_hazards(std::span<const double> hazards, double* leftover = nullptr);

Predictions predict_biased(const SessionForward& fwd, Track track);
Predictions predict_unbiased(const SessionForward& fwd, Track track);
Predictions predict(const SessionForward& fwd, Track track);

enum class Objective { kCtr, kCvr };

// Item indices in descending score order; ties keep the original order.
std::vector<std::size_t> rank(const Predictions& predictions, Objective objective);
std::vector<std::size_t> rank_scores(std::span<const double> scores);

}  // namespace heroes
