#pragma once

#include <cstdint>
#include <vector>

#include "heroes/data/session.h"
#include "heroes/model/losses.h"
#include "heroes/model/network.h"

namespace heroes {

// Single-layer LSTM over [h_prev | features | position one-hot] with two
// independent sigmoid heads for click and post-click conversion.
struct LstmParams {
  ModelConfig config;
  Parameter gate_weight;  // 4H x (H + F + P), rows forget, input, output, proposal
  Parameter gate_bias;
  HeadParams click_head;
  HeadParams conv_head;

  static LstmParams initialize(const ModelConfig& config, std::uint64_t seed);
  std::vector<Parameter*> trainable();
  std::vector<const Parameter*> trainable() const;
};

struct LstmForward {
  std::vector<Var> p_c;
  std::vector<Var> p_v;
  std::vector<double> click;
  std::vector<double> conversion;  // post-click rate p_v
};

LstmForward lstm_forward(Tape& tape, const QuerySession& session, LstmParams& params);
LstmForward lstm_infer(Tape& tape, const QuerySession& session, const LstmParams& params);

// BCE on p_c and on p_c * p_v, combined as L_c + alpha L_v.
Var lstm_loss(Tape& tape, const LstmForward& fwd, const QuerySession& session, double alpha);

// P(c) = p_c, P(v) = p_c p_v; ranking scores are the same values.
Predictions lstm_predict(const LstmForward& fwd);

}  // namespace heroes
