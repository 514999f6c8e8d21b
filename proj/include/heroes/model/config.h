#pragma once

#include <cstddef>
#include <string>

namespace heroes {

// Training/prediction regime of the network.
//   kBiased        BCE on click and click*conversion (HEROES)
//   kUnbiasedPlain survival losses, CTR layer without Hawkes decay (HEROES+)
//   kUnbiasedComb  survival losses with Hawkes decay (HEROES+_comb)
enum class Mode { kBiased, kUnbiasedPlain, kUnbiasedComb };

// Where the boundary bits g_i come from during a rollout.
enum class GateSource { kLabels, kPredicted };

// Architecture ablations.
//   kIntra  per-item feed-forward instead of within-layer recurrence
//   kInter  cross-layer top-down terms removed, layers trained independently
//   kUnit   plain LSTM cell in both layers (no inherent track, no decay)
enum class Ablation { kNone, kIntra, kInter, kUnit };

enum class Layer { kCtr = 0, kCvr = 1 };
enum class Track { kBehavioral = 0, kInherent = 1 };

struct ModelConfig {
  std::size_t hidden = 32;
  std::size_t features = 8;
  std::size_t max_positions = 64;
  double gamma = 5.0;
  bool use_behavior_embedding = false;
  // Behavioral and inherent tracks use one set of gate/top-down weights.
  bool share_track_params = true;
  Ablation ablation = Ablation::kNone;

  std::size_t gate_input_size() const { return hidden + features + max_positions; }
  void validate() const;
};

// Size of the behavior embedding y (click, conversion).
inline constexpr std::size_t kBehaviorSize = 2;

bool uses_decay(Mode mode, Ablation ablation);
bool is_unbiased(Mode mode);

std::string to_string(Mode mode);
std::string to_string(GateSource source);
std::string to_string(Ablation ablation);
Mode parse_mode(const std::string& s);
GateSource parse_gate_source(const std::string& s);
Ablation parse_ablation(const std::string& s);

}  // namespace heroes
