#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "heroes/data/session.h"
#include "heroes/harness/config.h"
#include "heroes/harness/model.h"
#include "json.hpp"

namespace heroes::harness {

// Non-finite loss or gradient during training.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EarlyStopState {
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t bad_epochs = 0;
  std::vector<Tensor> best_params;  // empty until the first validation pass
};

// Everything needed to continue a run bit-identically.
struct Checkpoint {
  TrainConfig config;
  std::string config_hash;
  std::size_t epoch = 0;  // completed epochs
  std::string rng_state;  // mt19937_64 text form
  std::vector<std::string> param_names;
  std::vector<Tensor> params;
  nlohmann::json optimizer;
  EarlyStopState early_stop;
  bool stopped_early = false;
};

nlohmann::json to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Model with the checkpoint's parameters; names and shapes must match.
RankingModel model_from_checkpoint(const Checkpoint& c);
// Same, with the best early-stopping parameters when present.
RankingModel best_model(const Checkpoint& c);

struct EpochLog {
  std::size_t epoch = 0;  // 0 is the loss at initialization
  double train_loss = 0.0;
  std::optional<double> valid_ctr_auc;
  std::optional<double> valid_cvr_auc;
};

void write_log_csv(std::ostream& out, const std::vector<EpochLog>& log);

struct TrainResult {
  Checkpoint checkpoint;  // state after the last completed epoch
  RankingModel model;     // best validated parameters, else the last ones
  std::vector<EpochLog> log;
  bool stopped_early = false;
};

struct TrainHooks {
  // Called after each epoch; returning false stops training (checkpoint stays resumable).
  std::function<bool(const EpochLog&, const Checkpoint&)> on_epoch;
};

// Mini-batch training with shuffled order and batch-averaged gradients.
// valid may be empty; early stopping then never triggers.
TrainResult train(const TrainConfig& config, const Corpus& train_set, const Corpus& valid_set,
                  const Checkpoint* resume = nullptr, const TrainHooks& hooks = {});

// Mean per-session loss under the current parameters.
double mean_loss(RankingModel& model, const Corpus& corpus);

}  // namespace heroes::harness
