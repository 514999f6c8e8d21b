#include "heroes/model/lstm_baseline.h"

#include <cmath>
#include <random>
#include <string>

#include "heroes/errors.h"

namespace heroes {

LstmParams LstmParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const std::size_t h = config.hidden;
  auto uniform = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t({rows, cols});
    for (double& v : t.values()) v = dist(rng);
    return Parameter(name, std::move(t));
  };
  LstmParams p;
  p.config = config;
  p.gate_weight = uniform("lstm.gates.weight", 4 * h, config.gate_input_size());
  p.gate_bias = Parameter("lstm.gates.bias", Tensor({4 * h}, 0.0));
  for (std::size_t i = 0; i < h; ++i) p.gate_bias.value[i] = 1.0;
  p.click_head.weight = uniform("lstm.click_head.weight", 1, h);
  p.click_head.bias = Parameter("lstm.click_head.bias", Tensor({1}, 0.0));
  p.conv_head.weight = uniform("lstm.conv_head.weight", 1, h);
  p.conv_head.bias = Parameter("lstm.conv_head.bias", Tensor({1}, 0.0));
  return p;
}

std::vector<Parameter*> LstmParams::trainable() {
  return {&gate_weight, &gate_bias, &click_head.weight, &click_head.bias, &conv_head.weight,
          &conv_head.bias};
}

std::vector<const Parameter*> LstmParams::trainable() const {
  return {&gate_weight, &gate_bias, &click_head.weight, &click_head.bias, &conv_head.weight,
          &conv_head.bias};
}

namespace {

template <typename P, typename Bind>
LstmForward rollout(Tape& tape, const QuerySession& session, P& params, Bind bind) {
  const ModelConfig& cfg = params.config;
  if (session.items.empty()) {
    throw DataError("query " + std::to_string(session.query_id) + ": empty session");
  }
  const Var w = bind(params.gate_weight), b = bind(params.gate_bias);
  const Var wc = bind(params.click_head.weight), bc = bind(params.click_head.bias);
  const Var wv = bind(params.conv_head.weight), bv = bind(params.conv_head.bias);
  Var h = tape.zeros(cfg.hidden), s = tape.zeros(cfg.hidden);
  LstmForward out;
  for (std::size_t i = 0; i < session.items.size(); ++i) {
    const Item& it = session.items[i];
    if (it.features.size() != cfg.features) {
      throw ShapeError("query " + std::to_string(session.query_id) + ": item has " +
                       std::to_string(it.features.size()) + " features, model expects " +
                       std::to_string(cfg.features));
    }
    const Var x = gate_input(tape, StepInput{it.features, i, std::nullopt}, cfg.max_positions);
    const GateSet g = compute_gates(h, x, w, b);
    s = tape.add(tape.mul(g.forget, s), tape.mul(g.input, g.proposal));
    h = tape.mul(g.output, tape.tanh(s));
    out.p_c.push_back(readout(h, wc, bc));
    out.p_v.push_back(readout(h, wv, bv));
    out.click.push_back(out.p_c.back().value());
    out.conversion.push_back(out.p_v.back().value());
  }
  return out;
}

}  // namespace

LstmForward lstm_forward(Tape& tape, const QuerySession& session, LstmParams& params) {
  return rollout(tape, session, params, [&](Parameter& p) { return tape.param(p); });
}

LstmForward lstm_infer(Tape& tape, const QuerySession& session, const LstmParams& params) {
  return rollout(tape, session, params, [&](const Parameter& p) { return tape.frozen(p); });
}

Var lstm_loss(Tape& tape, const LstmForward& fwd, const QuerySession& session, double alpha) {
  if (fwd.p_c.size() != session.size()) throw ShapeError("lstm_loss: length mismatch");
  std::vector<Var> joint;
  joint.reserve(fwd.p_c.size());
  for (std::size_t i = 0; i < fwd.p_c.size(); ++i) joint.push_back(tape.mul(fwd.p_c[i], fwd.p_v[i]));
  const Var lc = bce(tape, fwd.p_c, session.clicks());
  const Var lv = bce(tape, joint, session.conversions());
  return tape.add(lc, tape.scale(lv, alpha));
}

Predictions lstm_predict(const LstmForward& fwd) {
  Predictions p;
  p.track = Track::kBehavioral;
  p.click = fwd.click;
  p.conversion.resize(fwd.click.size());
  for (std::size_t i = 0; i < fwd.click.size(); ++i) p.conversion[i] = fwd.click[i] * fwd.conversion[i];
  p.click_score = p.click;
  p.conversion_score = p.conversion;
  return p;
}

}  // namespace heroes
