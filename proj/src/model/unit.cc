#include "heroes/model/unit.h"

#include <algorithm>
#include <stdexcept>

#include "heroes/errors.h"

namespace heroes {

std::vector<double> position_onehot(std::size_t position, std::size_t max_positions) {
  std::vector<double> v(max_positions, 0.0);
  v[std::min(position, max_positions - 1)] = 1.0;
  return v;
}

Var gate_input(Tape& tape, const StepInput& input, std::size_t max_positions) {
  std::vector<double> buf(input.item_features.begin(), input.item_features.end());
  buf.resize(input.item_features.size() + max_positions, 0.0);
  buf[input.item_features.size() + std::min(input.position, max_positions - 1)] = 1.0;
  return tape.constant(buf);
}

Var top_down_ctr(int g_prev, Var h_c_prev, Var h_v_prev, Var u_c, Var u_r) {
  return g_prev ? diff::matvec(u_r, h_v_prev) : diff::matvec(u_c, h_c_prev);
}

Var top_down_cvr(int g_cur, Var h_v_prev, Var h_c_cur, Var u_v, Var w_r) {
  Var recurrent = diff::matvec(u_v, h_v_prev);
  if (!g_cur) return recurrent;
  return diff::add(recurrent, diff::matvec(w_r, h_c_cur));
}

GateSet compute_gates(Var top_down, Var input, Var weight, Var bias) {
  Tape& tape = *top_down.tape();
  const std::size_t h = top_down.size();
  if (bias.size() != 4 * h) {
    throw ShapeError("compute_gates: bias has " + std::to_string(bias.size()) +
                     " entries, expected 4 x hidden = " + std::to_string(4 * h));
  }
  Var pre = tape.add(tape.matvec(weight, tape.concat({top_down, input})), bias);
  return GateSet{
      tape.sigmoid(tape.slice(pre, 0, h)),
      tape.sigmoid(tape.slice(pre, h, h)),
      tape.sigmoid(tape.slice(pre, 2 * h, h)),
      tape.tanh(tape.slice(pre, 3 * h, h)),
  };
}

Var decay_rate(Var h_c, std::optional<Var> behavior, Var weight, Var bias, double gamma) {
  Tape& tape = *h_c.tape();
  Var in = behavior ? tape.concat({*behavior, h_c}) : h_c;
  return tape.softplus(tape.add(tape.matvec(weight, in), bias), gamma);
}

Var hawkes_decay(const LayerState& state, Var delta, double dt) {
  if (dt < 0.0) throw DomainError("hawkes_decay: dt must be nonnegative");
  if (dt == 0.0) return state.s;
  Tape& tape = *delta.tape();
  Var factor = tape.exp(tape.scale(delta, -dt));
  return tape.add(state.s_tilde, tape.mul(tape.sub(state.s, state.s_tilde), factor));
}

LayerState ctr_step(const LayerState& prev, Var decayed_s, const GateSet& behavioral,
                    const GateSet& inherent, int g_prev) {
  Tape& tape = *decayed_s.tape();
  Var fresh = tape.mul(behavioral.input, behavioral.proposal);
  Var fresh_tilde = tape.mul(inherent.input, inherent.proposal);
  if (g_prev) return LayerState{fresh, fresh_tilde};
  return LayerState{
      tape.add(tape.mul(behavioral.forget, decayed_s), fresh),
      tape.add(tape.mul(inherent.forget, prev.s_tilde), fresh_tilde),
  };
}

LayerState cvr_step(const LayerState& prev, const GateSet& behavioral, const GateSet& inherent,
                    int g_cur) {
  if (!g_cur) return prev;
  Tape& tape = *prev.s.tape();
  return LayerState{
      tape.add(tape.mul(behavioral.forget, prev.s),
               tape.mul(behavioral.input, behavioral.proposal)),
      tape.add(tape.mul(inherent.forget, prev.s_tilde),
               tape.mul(inherent.input, inherent.proposal)),
  };
}

HiddenPair emit_hidden(const LayerState& state, const GateSet* behavioral,
                       const GateSet* inherent, Layer layer, int g_cur,
                       const HiddenPair* prev_hidden) {
  if (layer == Layer::kCvr && !g_cur) {
    if (!prev_hidden) {
      throw std::invalid_argument("emit_hidden: CVR copy branch requires the previous hidden");
    }
    return *prev_hidden;
  }
  if (!behavioral || !inherent) {
    throw std::invalid_argument("emit_hidden: output gates required");
  }
  Tape& tape = *state.s.tape();
  return HiddenPair{
      tape.mul(behavioral->output, tape.tanh(state.s)),
      tape.mul(inherent->output, tape.tanh(state.s_tilde)),
  };
}

Var readout(Var h, Var weight, Var bias) {
  Tape& tape = *h.tape();
  return tape.sigmoid(tape.add(tape.matvec(weight, h), bias));
}

}  // namespace heroes
