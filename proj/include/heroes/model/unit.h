#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "heroes/diff/tape.h"
#include "heroes/model/config.h"

namespace heroes {

using diff::Tape;
using diff::Var;

// Cell states of one layer at one step: behavioral s and inherent s~.
struct LayerState {
  Var s;
  Var s_tilde;
};

// Item-level input to a step.
struct StepInput {
  std::span<const double> item_features;
  std::size_t position = 0;  // 0-based display position
  std::optional<std::array<double, kBehaviorSize>> behavior;
};

struct GateSet {
  Var forget;
  Var input;
  Var output;
  Var proposal;
};

struct HiddenPair {
  Var h;
  Var h_tilde;
};

// Numeric snapshot of one step.
struct StepOutput {
  std::vector<double> h_c;
  std::vector<double> h_c_tilde;
  std::vector<double> h_v;
  std::vector<double> h_v_tilde;
  double p_c = 0.0;
  double p_c_tilde = 0.0;
  double p_v = 0.0;
  double p_v_tilde = 0.0;
};

// One-hot vector of length max_positions; positions past the end share the last slot.
std::vector<double> position_onehot(std::size_t position, std::size_t max_positions);

// [item_features | position one-hot] as a tape constant.
Var gate_input(Tape& tape, const StepInput& input, std::size_t max_positions);

// CTR top-down state: U_c h_c_prev when g_prev = 0, U_r h_v_prev when g_prev = 1.
Var top_down_ctr(int g_prev, Var h_c_prev, Var h_v_prev, Var u_c, Var u_r);

// CVR top-down state: U_v h_v_prev, plus W_r h_c_cur when g_cur = 1.
Var top_down_cvr(int g_cur, Var h_v_prev, Var h_c_cur, Var u_v, Var w_r);

// Sigmoid/tanh gates over the affine map of [top_down | input].
GateSet compute_gates(Var top_down, Var input, Var weight, Var bias);

// Positive decay rates delta = f_gamma(W [y | h_c] + b). When behavior is
// empty the h-only head (weight H x H) is used.
Var decay_rate(Var h_c, std::optional<Var> behavior, Var weight, Var bias, double gamma);

// s~ + (s - s~) * exp(-delta * dt). dt = 0 returns s itself.
Var hawkes_decay(const LayerState& state, Var delta, double dt);

// CTR cell update. g_prev = 0: update (behavioral track consumes decayed_s,
// inherent track the raw previous s~). g_prev = 1: summarize, history dropped.
LayerState ctr_step(const LayerState& prev, Var decayed_s, const GateSet& behavioral,
                    const GateSet& inherent, int g_prev);

// CVR cell update. g_cur = 1: update; g_cur = 0: copy prev unchanged.
LayerState cvr_step(const LayerState& prev, const GateSet& behavioral, const GateSet& inherent,
                    int g_cur);

// Hidden states o * tanh(s). In the CVR layer with g_cur = 0 the previous
// hidden pair is returned as is and output gates are not needed.
HiddenPair emit_hidden(const LayerState& state, const GateSet* behavioral,
                       const GateSet* inherent, Layer layer, int g_cur,
                       const HiddenPair* prev_hidden);

// sigmoid(w . h + b) as a one-element Var.
Var readout(Var h, Var weight, Var bias);

}  // namespace heroes
