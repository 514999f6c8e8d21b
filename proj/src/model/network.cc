#include "heroes/model/network.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>

#include "heroes/errors.h"

namespace heroes {

namespace {

using Binder = std::function<Var(const Parameter&)>;

struct BoundParams {
  Var gate_w[2][2];
  Var gate_b[2][2];
  Var u_c[2], u_r[2], u_v[2], w_r[2];
  Var decay_w, decay_b;
  Var head_w[2], head_b[2];
};

BoundParams bind_all(const ModelParams& p, bool two_tracks, const Binder& bind) {
  BoundParams b;
  const std::size_t tracks = two_tracks ? 2 : 1;
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t t = 0; t < tracks; ++t) {
      const GateParams& g = p.gate(static_cast<Layer>(l), static_cast<Track>(t));
      b.gate_w[l][t] = bind(g.weight);
      b.gate_b[l][t] = bind(g.bias);
    }
  }
  for (std::size_t t = 0; t < tracks; ++t) {
    const std::size_t slot = p.track_slot(static_cast<Track>(t));
    b.u_c[t] = bind(p.u_c[slot]);
    b.u_r[t] = bind(p.u_r[slot]);
    b.u_v[t] = bind(p.u_v[slot]);
    b.w_r[t] = bind(p.w_r[slot]);
  }
  const DecayParams& d = p.config.use_behavior_embedding ? p.decay_behavior : p.decay;
  b.decay_w = bind(d.weight);
  b.decay_b = bind(d.bias);
  for (std::size_t l = 0; l < 2; ++l) {
    b.head_w[l] = bind(p.heads[l].weight);
    b.head_b[l] = bind(p.heads[l].bias);
  }
  return b;
}

std::vector<double> copy_values(Var v) { return {v.values().begin(), v.values().end()}; }

SessionForward rollout(Tape& tape, const QuerySession& session, const ModelParams& params,
                       const ForwardOptions& options, const Binder& bind) {
  if (session.items.empty()) {
    throw DataError("forward_session: query " + std::to_string(session.query_id) +
                    " has no items");
  }
  const ModelConfig& cfg = params.config;
  const Ablation ablation = cfg.ablation;
  const bool intra_off = ablation == Ablation::kIntra;
  const bool inter_off = ablation == Ablation::kInter;
  const bool two_tracks = ablation != Ablation::kUnit && !intra_off;
  const bool decay = uses_decay(options.mode, ablation);
  const std::size_t hdim = cfg.hidden;
  constexpr std::size_t kCtr = 0;
  constexpr std::size_t kCvr = 1;
  // Slot of the inherent-track weights inside BoundParams.
  const std::size_t ti = two_tracks ? 1 : 0;

  const BoundParams w = bind_all(params, two_tracks, bind);
  const Var zero = tape.zeros(hdim);

  SessionForward fwd;
  fwd.mode = options.mode;
  fwd.ablation = ablation;
  fwd.steps.reserve(session.size());
  fwd.gates.reserve(session.size());
  fwd.vars.reserve(session.size());

  LayerState ctr{zero, zero};
  LayerState cvr{zero, zero};
  HiddenPair hc{zero, zero};
  HiddenPair hv{zero, zero};
  int g_prev = 0;
  std::optional<Var> delta_prev;
  std::optional<Var> p_v_prev, p_v_tilde_prev;

  for (std::size_t i = 0; i < session.size(); ++i) {
    const Item& item = session.items[i];
    if (item.features.size() != cfg.features) {
      throw ShapeError("forward_session: query " + std::to_string(session.query_id) + " item " +
                       std::to_string(i) + " has " + std::to_string(item.features.size()) +
                       " features, model expects " + std::to_string(cfg.features));
    }
    const Var input = gate_input(tape, StepInput{item.features, i, std::nullopt}, cfg.max_positions);

    // CTR layer.
    Var td, td_tilde;
    if (intra_off) {
      td = td_tilde = zero;
    } else if (inter_off) {
      td = g_prev ? zero : tape.matvec(w.u_c[0], hc.h);
      if (two_tracks) td_tilde = g_prev ? zero : tape.matvec(w.u_c[ti], hc.h_tilde);
    } else {
      td = top_down_ctr(g_prev, hc.h, hv.h, w.u_c[0], w.u_r[0]);
      if (two_tracks) td_tilde = top_down_ctr(g_prev, hc.h_tilde, hv.h_tilde, w.u_c[ti], w.u_r[ti]);
    }
    const GateSet gc = compute_gates(td, input, w.gate_w[kCtr][0], w.gate_b[kCtr][0]);
    const GateSet gc_tilde =
        two_tracks ? compute_gates(td_tilde, input, w.gate_w[kCtr][ti], w.gate_b[kCtr][ti]) : gc;

    if (intra_off) {
      const Var s = tape.mul(gc.input, gc.proposal);
      ctr = LayerState{s, s};
    } else {
      const Var decayed = (decay && delta_prev) ? hawkes_decay(ctr, *delta_prev, options.dt) : ctr.s;
      if (two_tracks) {
        ctr = ctr_step(ctr, decayed, gc, gc_tilde, g_prev);
      } else {
        Var s = tape.mul(gc.input, gc.proposal);
        if (!g_prev) s = tape.add(tape.mul(gc.forget, decayed), s);
        ctr = LayerState{s, s};
      }
    }
    if (two_tracks) {
      hc = emit_hidden(ctr, &gc, &gc_tilde, Layer::kCtr, 1, nullptr);
    } else {
      const Var h = tape.mul(gc.output, tape.tanh(ctr.s));
      hc = HiddenPair{h, h};
    }
    const Var p_c = readout(hc.h, w.head_w[kCtr], w.head_b[kCtr]);
    const Var p_c_tilde = two_tracks ? readout(hc.h_tilde, w.head_w[kCtr], w.head_b[kCtr]) : p_c;

    const int g_cur = options.gate_source == GateSource::kLabels ? (item.click ? 1 : 0)
                                                                 : boundary(p_c.value());

    // CVR layer.
    Var p_v, p_v_tilde;
    if (intra_off) {
      const Var tdv = inter_off ? zero : tape.matvec(w.w_r[0], hc.h);
      const GateSet gv = compute_gates(tdv, input, w.gate_w[kCvr][0], w.gate_b[kCvr][0]);
      const Var s = tape.mul(gv.input, gv.proposal);
      cvr = LayerState{s, s};
      const Var h = tape.mul(gv.output, tape.tanh(s));
      hv = HiddenPair{h, h};
      p_v = p_v_tilde = readout(hv.h, w.head_w[kCvr], w.head_b[kCvr]);
    } else if (g_cur) {
      const Var tdv = inter_off ? tape.matvec(w.u_v[0], hv.h)
                                : top_down_cvr(1, hv.h, hc.h, w.u_v[0], w.w_r[0]);
      const GateSet gv = compute_gates(tdv, input, w.gate_w[kCvr][0], w.gate_b[kCvr][0]);
      if (two_tracks) {
        const Var tdv_tilde = inter_off
                                  ? tape.matvec(w.u_v[ti], hv.h_tilde)
                                  : top_down_cvr(1, hv.h_tilde, hc.h_tilde, w.u_v[ti], w.w_r[ti]);
        const GateSet gv_tilde =
            compute_gates(tdv_tilde, input, w.gate_w[kCvr][ti], w.gate_b[kCvr][ti]);
        cvr = cvr_step(cvr, gv, gv_tilde, 1);
        hv = emit_hidden(cvr, &gv, &gv_tilde, Layer::kCvr, 1, &hv);
      } else {
        const Var s = tape.add(tape.mul(gv.forget, cvr.s), tape.mul(gv.input, gv.proposal));
        cvr = LayerState{s, s};
        const Var h = tape.mul(gv.output, tape.tanh(s));
        hv = HiddenPair{h, h};
      }
      p_v = readout(hv.h, w.head_w[kCvr], w.head_b[kCvr]);
      p_v_tilde = two_tracks ? readout(hv.h_tilde, w.head_w[kCvr], w.head_b[kCvr]) : p_v;
    } else {
      // Copy: state and hidden carry over untouched.
      if (p_v_prev) {
        p_v = *p_v_prev;
        p_v_tilde = *p_v_tilde_prev;
      } else {
        p_v = readout(hv.h, w.head_w[kCvr], w.head_b[kCvr]);
        p_v_tilde = two_tracks ? readout(hv.h_tilde, w.head_w[kCvr], w.head_b[kCvr]) : p_v;
      }
    }

    if (decay) {
      std::optional<Var> y;
      if (cfg.use_behavior_embedding) {
        const double conv = options.gate_source == GateSource::kLabels
                                ? static_cast<double>(item.conversion ? 1 : 0)
                                : static_cast<double>(boundary(p_c.value() * p_v.value()));
        y = tape.constant({static_cast<double>(g_cur), conv});
      }
      delta_prev = decay_rate(hc.h, y, w.decay_w, w.decay_b, cfg.gamma);
    }

    StepOutput out;
    if (options.record_hidden) {
      out.h_c = copy_values(hc.h);
      out.h_c_tilde = copy_values(hc.h_tilde);
      out.h_v = copy_values(hv.h);
      out.h_v_tilde = copy_values(hv.h_tilde);
    }
    out.p_c = p_c.value();
    out.p_c_tilde = p_c_tilde.value();
    out.p_v = p_v.value();
    out.p_v_tilde = p_v_tilde.value();
    fwd.steps.push_back(std::move(out));
    fwd.gates.push_back(g_cur);
    fwd.vars.push_back(StepVars{hc.h, hc.h_tilde, hv.h, hv.h_tilde, p_c, p_c_tilde, p_v, p_v_tilde});

    p_v_prev = p_v;
    p_v_tilde_prev = p_v_tilde;
    g_prev = g_cur;
  }
  return fwd;
}

}  // namespace

int boundary(double p_c) { return p_c > 0.5 ? 1 : 0; }

SessionForward forward_session(Tape& tape, const QuerySession& session, ModelParams& params,
                               const ForwardOptions& options) {
  // The snapshot is non-const here, so handing out mutable leaves is sound.
  return rollout(tape, session, params, options, [&tape](const Parameter& p) {
    return tape.param(const_cast<Parameter&>(p));
  });
}

SessionForward infer_session(Tape& tape, const QuerySession& session, const ModelParams& params,
                             const ForwardOptions& options) {
  return rollout(tape, session, params, options,
                 [&tape](const Parameter& p) { return tape.frozen(p); });
}

std::vector<double> unroll_hazards(std::span<const double> hazards, double* leftover) {
  std::vector<double> out(hazards.size());
  double survive = 1.0;
  for (std::size_t i = 0; i < hazards.size(); ++i) {
    out[i] = hazards[i] * survive;
    survive *= 1.0 - hazards[i];
  }
  if (leftover) *leftover = survive;
  return out;
}

namespace {

void collect(const SessionForward& fwd, Track track, std::vector<double>& pc,
             std::vector<double>& pv) {
  pc.resize(fwd.size());
  pv.resize(fwd.size());
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    const StepOutput& s = fwd.steps[i];
    pc[i] = track == Track::kBehavioral ? s.p_c : s.p_c_tilde;
    pv[i] = track == Track::kBehavioral ? s.p_v : s.p_v_tilde;
  }
}

}  // namespace

Predictions predict_biased(const SessionForward& fwd, Track track) {
  if (fwd.mode != Mode::kBiased) {
    throw std::invalid_argument("predict_biased: forward ran in mode " + to_string(fwd.mode));
  }
  Predictions p;
  p.track = track;
  std::vector<double> pv;
  collect(fwd, track, p.click, pv);
  p.conversion.resize(fwd.size());
  for (std::size_t i = 0; i < fwd.size(); ++i) p.conversion[i] = p.click[i] * pv[i];
  p.click_score = p.click;
  p.conversion_score = p.conversion;
  return p;
}

Predictions predict_unbiased(const SessionForward& fwd, Track track) {
  if (fwd.mode == Mode::kBiased) {
    throw std::invalid_argument("predict_unbiased: forward ran in biased mode");
  }
  Predictions p;
  p.track = track;
  std::vector<double> hc, hv;
  collect(fwd, track, hc, hv);
  p.click = unroll_hazards(hc, &p.click_leftover);
  p.conversion = unroll_hazards(hv, &p.conversion_leftover);
  p.click_score = hc;
  p.conversion_score.resize(fwd.size());
  for (std::size_t i = 0; i < fwd.size(); ++i) p.conversion_score[i] = hc[i] * hv[i];
  return p;
}

Predictions predict(const SessionForward& fwd, Track track) {
  return fwd.mode == Mode::kBiased ? predict_biased(fwd, track) : predict_unbiased(fwd, track);
}

std::vector<std::size_t> rank_scores(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::vector<std::size_t> rank(const Predictions& predictions, Objective objective) {
  return rank_scores(objective == Objective::kCtr ? predictions.click_score
                                                  : predictions.conversion_score);
}

}  // namespace heroes
