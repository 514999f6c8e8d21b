#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "heroes/model/config.h"
#include "heroes/model/losses.h"
#include "heroes/sim/generator.h"
#include "json.hpp"

namespace heroes::harness {

enum class Architecture { kHeroes, kFlatLstm };
enum class OptimizerKind { kAdam, kSgd };

struct TrainConfig {
  Architecture architecture = Architecture::kHeroes;
  Mode mode = Mode::kBiased;
  Ablation ablation = Ablation::kNone;
  GateSource gate_source = GateSource::kLabels;          // training rollouts
  GateSource eval_gate_source = GateSource::kPredicted;  // inference rollouts
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 5.0;
  std::size_t hidden = 16;
  std::size_t features = 8;
  std::size_t max_positions = 32;  // I_max
  bool use_behavior_embedding = false;
  bool share_track_params = true;
  double dt = 1.0;

  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::size_t patience = 5;
  bool early_stopping = true;
  std::uint64_t seed = 0;

  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string output_dir;

  void validate() const;
  ModelConfig model_config() const;
  LossOptions loss_options() const;
};

std::string to_string(Architecture a);
std::string to_string(OptimizerKind k);
Architecture parse_architecture(const std::string& s);
OptimizerKind parse_optimizer(const std::string& s);

nlohmann::json to_json(const TrainConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig config_from_json(const nlohmann::json& j);
TrainConfig load_config(const std::filesystem::path& path);

// FNV-1a over the canonical dump of everything except data paths.
std::string config_hash(const TrainConfig& c);

nlohmann::json to_json(const sim::GeneratorConfig& g);
// Same rules as config_from_json.
sim::GeneratorConfig generator_from_json(const nlohmann::json& j);

}  // namespace heroes::harness
