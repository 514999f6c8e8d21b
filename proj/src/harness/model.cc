#include "heroes/harness/model.h"

#include "heroes/sim/random.h"

namespace heroes::harness {

RankingModel RankingModel::initialize(const TrainConfig& config) {
  config.validate();
  RankingModel m;
  m.config_ = config;
  const std::uint64_t init_seed = sim::splitmix64(config.seed ^ 0x1a17);
  if (config.architecture == Architecture::kHeroes) {
    m.heroes_ = ModelParams::initialize(config.model_config(), init_seed);
  } else {
    m.lstm_ = LstmParams::initialize(config.model_config(), init_seed);
  }
  return m;
}

std::vector<Parameter*> RankingModel::parameters() {
  return config_.architecture == Architecture::kHeroes ? heroes_.trainable() : lstm_.trainable();
}

std::vector<const Parameter*> RankingModel::parameters() const {
  return config_.architecture == Architecture::kHeroes ? heroes_.trainable() : lstm_.trainable();
}

Var RankingModel::loss(Tape& tape, const QuerySession& session) {
  if (config_.architecture == Architecture::kFlatLstm) {
    const LstmForward f = lstm_forward(tape, session, lstm_);
    return lstm_loss(tape, f, session, config_.alpha);
  }
  const ForwardOptions opts{config_.mode, config_.gate_source, config_.dt, false};
  const SessionForward f = forward_session(tape, session, heroes_, opts);
  return total_loss(tape, f, session, config_.loss_options());
}

Predictions RankingModel::predict(Tape& tape, const QuerySession& session) const {
  tape.clear();
  if (config_.architecture == Architecture::kFlatLstm) {
    return lstm_predict(lstm_infer(tape, session, lstm_));
  }
  const ForwardOptions opts{config_.mode, config_.eval_gate_source, config_.dt, false};
  const SessionForward f = infer_session(tape, session, heroes_, opts);
  Predictions inherent = heroes::predict(f, Track::kInherent);
  const Predictions behavioral = heroes::predict(f, Track::kBehavioral);
  // Probabilities for log loss come from the behavioral track.
  inherent.click = behavioral.click;
  inherent.conversion = behavioral.conversion;
  inherent.click_leftover = behavioral.click_leftover;
  inherent.conversion_leftover = behavioral.conversion_leftover;
  return inherent;
}

}  // namespace heroes::harness
