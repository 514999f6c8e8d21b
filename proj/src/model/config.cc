#include "heroes/model/config.h"

#include "heroes/errors.h"

namespace heroes {

void ModelConfig::validate() const {
  if (hidden == 0) throw ConfigError("hidden size must be positive");
  if (features == 0) throw ConfigError("feature size must be positive");
  if (max_positions == 0) throw ConfigError("max_positions must be positive");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
}

bool uses_decay(Mode mode, Ablation ablation) {
  if (ablation == Ablation::kUnit || ablation == Ablation::kIntra) return false;
  return mode != Mode::kUnbiasedPlain;
}

bool is_unbiased(Mode mode) { return mode != Mode::kBiased; }

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kBiased: return "biased";
    case Mode::kUnbiasedPlain: return "unbiased-plain";
    case Mode::kUnbiasedComb: return "unbiased-comb";
  }
  return "?";
}

std::string to_string(GateSource source) {
  return source == GateSource::kLabels ? "labels" : "predicted";
}

std::string to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::kNone: return "none";
    case Ablation::kIntra: return "intra";
    case Ablation::kInter: return "inter";
    case Ablation::kUnit: return "unit";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "biased") return Mode::kBiased;
  if (s == "unbiased-plain" || s == "plain") return Mode::kUnbiasedPlain;
  if (s == "unbiased-comb" || s == "comb") return Mode::kUnbiasedComb;
  throw ConfigError("unknown mode '" + s + "' (expected biased, unbiased-plain, unbiased-comb)");
}

GateSource parse_gate_source(const std::string& s) {
  if (s == "labels") return GateSource::kLabels;
  if (s == "predicted") return GateSource::kPredicted;
  throw ConfigError("unknown gate source '" + s + "' (expected labels or predicted)");
}

Ablation parse_ablation(const std::string& s) {
  if (s == "none") return Ablation::kNone;
  if (s == "intra") return Ablation::kIntra;
  if (s == "inter") return Ablation::kInter;
  if (s == "unit") return Ablation::kUnit;
  throw ConfigError("unknown ablation '" + s + "' (expected none, intra, inter, unit)");
}

}  // namespace heroes
