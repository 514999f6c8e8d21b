#pragma once

#include <cstdint>
#include <vector>

#include "heroes/harness/config.h"
#include "heroes/model/lstm_baseline.h"
#include "heroes/model/network.h"

namespace heroes::harness {

// Either HEROES or the flat LSTM, with the regime it was configured for.
class RankingModel {
 public:
  static RankingModel initialize(const TrainConfig& config);

  const TrainConfig& config() const { return config_; }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  // Per-session training loss on tape (gradients flow into the parameters).
  Var loss(Tape& tape, const QuerySession& session);
  // Inference on a frozen snapshot; ranking scores use the inherent track.
  Predictions predict(Tape& tape, const QuerySession& session) const;

  ModelParams& heroes() { return heroes_; }
  const ModelParams& heroes() const { return heroes_; }
  LstmParams& lstm() { return lstm_; }

 private:
  TrainConfig config_;
  ModelParams heroes_;
  LstmParams lstm_;
};

}  // namespace heroes::harness
