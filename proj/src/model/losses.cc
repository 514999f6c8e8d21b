#include "heroes/model/losses.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "heroes/errors.h"

namespace heroes {

void LossWeights::validate() const {
  if (!(std::isfinite(alpha) && alpha >= 0.0)) throw ConfigError("alpha must be finite and >= 0");
  if (!(std::isfinite(beta) && beta >= 0.0)) throw ConfigError("beta must be finite and >= 0");
}

namespace {

Var clamp_prob(Tape& tape, Var p) { return tape.clamp(p, kProbEpsilon, 1.0 - kProbEpsilon); }

// log(1 - h) over clamped hazards, summed.
Var sum_log_survive(Tape& tape, std::span<const Var> hazards) {
  std::vector<Var> terms;
  terms.reserve(hazards.size());
  for (Var h : hazards) terms.push_back(tape.log(tape.affine(clamp_prob(tape, h), -1.0, 1.0)));
  return tape.sum(tape.concat(terms));
}

}  // namespace

Var bce(Tape& tape, std::span<const Var> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("bce: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) return tape.scalar(0.0);
  std::vector<Var> terms;
  terms.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Var p = clamp_prob(tape, predictions[i]);
    terms.push_back(labels[i] ? tape.log(p) : tape.log(tape.affine(p, -1.0, 1.0)));
  }
  return tape.neg(tape.sum(tape.concat(terms)));
}

Var pdf_loss(Tape& tape, const LayerOutcome& outcome) {
  if (!outcome.event) throw std::invalid_argument("pdf_loss: outcome has no event");
  const std::size_t j = *outcome.event;
  if (j >= outcome.hazards.size()) throw std::out_of_range("pdf_loss: event index out of range");
  Var ll = tape.log(clamp_prob(tape, outcome.hazards[j]));
  if (j > 0) {
    ll = tape.add(ll, sum_log_survive(tape, std::span<const Var>(outcome.hazards).first(j)));
  }
  return tape.neg(ll);
}

Var occur_loss(Tape& tape, const LayerOutcome& outcome) {
  if (outcome.hazards.empty()) throw std::invalid_argument("occur_loss: empty hazard list");
  // clamped hazards keep the survival product strictly inside (0, 1)
  const Var log_survive = sum_log_survive(tape, outcome.hazards);
  return tape.neg(tape.log(tape.affine(tape.exp(log_survive), -1.0, 1.0)));
}

Var non_occur_loss(Tape& tape, const LayerOutcome& outcome) {
  if (outcome.hazards.empty()) throw std::invalid_argument("non_occur_loss: empty hazard list");
  return tape.neg(sum_log_survive(tape, outcome.hazards));
}

Var survival_loss(Tape& tape, const LayerOutcome& outcome, double beta) {
  if (outcome.event) {
    return tape.add(pdf_loss(tape, outcome), tape.scale(occur_loss(tape, outcome), beta));
  }
  return tape.scale(non_occur_loss(tape, outcome), beta);
}

std::vector<LayerOutcome> segment_episodes(std::span<const Var> hazards,
                                           std::span<const int> events) {
  if (hazards.size() != events.size()) {
    throw ShapeError("segment_episodes: hazards and events differ in length");
  }
  std::vector<LayerOutcome> episodes;
  LayerOutcome current;
  for (std::size_t i = 0; i < hazards.size(); ++i) {
    current.hazards.push_back(hazards[i]);
    if (events[i]) {
      current.event = current.hazards.size() - 1;
      episodes.push_back(std::move(current));
      current = LayerOutcome{};
    }
  }
  if (!current.hazards.empty()) episodes.push_back(std::move(current));
  return episodes;
}

Var total_loss(Tape& tape, const SessionForward& fwd, const QuerySession& session,
               const LossOptions& options) {
  if (fwd.size() != session.size()) {
    throw ShapeError("total_loss: forward covers " + std::to_string(fwd.size()) +
                     " items, session has " + std::to_string(session.size()));
  }
  const std::size_t n = fwd.size();
  const std::vector<int> clicks = session.clicks();
  const std::vector<int> convs = session.conversions();
  std::vector<Var> p_c(n), p_v(n);
  for (std::size_t i = 0; i < n; ++i) {
    p_c[i] = fwd.vars[i].p_c;
    p_v[i] = fwd.vars[i].p_v;
  }

  Var click_loss, conv_loss;
  if (options.mode == Mode::kBiased) {
    click_loss = bce(tape, p_c, clicks);
    std::vector<Var> joint(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Var pc = options.detach_click_in_cvr ? tape.detach(p_c[i]) : p_c[i];
      joint[i] = tape.mul(pc, p_v[i]);
    }
    conv_loss = bce(tape, joint, convs);
  } else {
    const double beta = options.weights.beta;
    std::vector<Var> terms;
    for (const LayerOutcome& ep : segment_episodes(p_c, clicks)) {
      terms.push_back(survival_loss(tape, ep, beta));
    }
    click_loss = tape.sum(tape.concat(terms));

    // Conversion hazards run over the clicked sub-sequence.
    std::vector<Var> clicked_hazards;
    std::vector<int> clicked_convs;
    for (std::size_t i = 0; i < n; ++i) {
      if (clicks[i]) {
        clicked_hazards.push_back(p_v[i]);
        clicked_convs.push_back(convs[i]);
      }
    }
    if (clicked_hazards.empty()) {
      conv_loss = tape.scalar(0.0);
    } else {
      terms.clear();
      for (const LayerOutcome& ep : segment_episodes(clicked_hazards, clicked_convs)) {
        terms.push_back(survival_loss(tape, ep, beta));
      }
      conv_loss = tape.sum(tape.concat(terms));
    }
  }
  return tape.add(click_loss, tape.scale(conv_loss, options.weights.alpha));
}

namespace {

std::vector<Var> as_vars(Tape& tape, std::span<const double> values) {
  std::vector<Var> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(tape.scalar(v));
  return out;
}

}  // namespace

double pdf_loss_value(std::span<const double> hazards, std::size_t event) {
  Tape tape;
  return pdf_loss(tape, LayerOutcome{as_vars(tape, hazards), event}).value();
}

double occur_loss_value(std::span<const double> hazards) {
  Tape tape;
  return occur_loss(tape, LayerOutcome{as_vars(tape, hazards), std::nullopt}).value();
}

double non_occur_loss_value(std::span<const double> hazards) {
  Tape tape;
  return non_occur_loss(tape, LayerOutcome{as_vars(tape, hazards), std::nullopt}).value();
}

double bce_value(std::span<const double> predictions, std::span<const int> labels) {
  Tape tape;
  const auto vars = as_vars(tape, predictions);
  return bce(tape, vars, labels).value();
}

}  // namespace heroes
