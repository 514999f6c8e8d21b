#include "heroes/harness/config.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "heroes/errors.h"

namespace heroes::harness {

std::string to_string(Architecture a) { return a == Architecture::kHeroes ? "heroes" : "lstm"; }
std::string to_string(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "sgd"; }

Architecture parse_architecture(const std::string& s) {
  if (s == "heroes") return Architecture::kHeroes;
  if (s == "lstm") return Architecture::kFlatLstm;
  throw ConfigError("unknown architecture '" + s + "' (expected heroes | lstm)");
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("unknown optimizer '" + s + "' (expected adam | sgd)");
}

void TrainConfig::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(dt >= 0.0)) throw ConfigError("dt must be >= 0");
  loss_options().weights.validate();
  model_config().validate();
  if (architecture == Architecture::kFlatLstm && mode != Mode::kBiased) {
    throw ConfigError("the flat LSTM baseline trains in biased mode only");
  }
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig m;
  m.hidden = hidden;
  m.features = features;
  m.max_positions = max_positions;
  m.gamma = gamma;
  m.use_behavior_embedding = use_behavior_embedding;
  m.share_track_params = share_track_params;
  m.ablation = ablation;
  return m;
}

LossOptions TrainConfig::loss_options() const {
  LossOptions o;
  o.weights = {alpha, beta};
  o.mode = mode;
  o.detach_click_in_cvr = ablation == Ablation::kInter;
  return o;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"architecture", to_string(c.architecture)},
          {"mode", to_string(c.mode)},
          {"ablation", to_string(c.ablation)},
          {"gate_source", to_string(c.gate_source)},
          {"eval_gate_source", to_string(c.eval_gate_source)},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"gamma", c.gamma},
          {"hidden", c.hidden},
          {"features", c.features},
          {"max_positions", c.max_positions},
          {"use_behavior_embedding", c.use_behavior_embedding},
          {"share_track_params", c.share_track_params},
          {"dt", c.dt},
          {"optimizer", to_string(c.optimizer)},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"patience", c.patience},
          {"early_stopping", c.early_stopping},
          {"seed", c.seed},
          {"train_path", c.train_path},
          {"valid_path", c.valid_path},
          {"test_path", c.test_path},
          {"output_dir", c.output_dir}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  TrainConfig c;
  const nlohmann::json defaults = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (auto it = j.find(key); it != j.end()) {
      try {
        it->get_to(field);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
      }
    }
  };
  auto get_enum = [&](const char* key, auto& field, auto parse) {
    if (auto it = j.find(key); it != j.end()) field = parse(it->template get<std::string>());
  };
  get_enum("architecture", c.architecture, parse_architecture);
  get_enum("mode", c.mode, parse_mode);
  get_enum("ablation", c.ablation, parse_ablation);
  get_enum("gate_source", c.gate_source, parse_gate_source);
  get_enum("eval_gate_source", c.eval_gate_source, parse_gate_source);
  get_enum("optimizer", c.optimizer, parse_optimizer);
  get("alpha", c.alpha);
  get("beta", c.beta);
  get("gamma", c.gamma);
  get("hidden", c.hidden);
  get("features", c.features);
  get("max_positions", c.max_positions);
  get("use_behavior_embedding", c.use_behavior_embedding);
  get("share_track_params", c.share_track_params);
  get("dt", c.dt);
  get("learning_rate", c.learning_rate);
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("patience", c.patience);
  get("early_stopping", c.early_stopping);
  get("seed", c.seed);
  get("train_path", c.train_path);
  get("valid_path", c.valid_path);
  get("test_path", c.test_path);
  get("output_dir", c.output_dir);
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_hash(const TrainConfig& c) {
  nlohmann::json j = to_json(c);
  for (const char* k : {"train_path", "valid_path", "test_path", "output_dir"}) j.erase(k);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace heroes::harness

namespace heroes::harness {

namespace {

// Field table shared by both directions of the generator config.
template <class F>
void generator_fields(sim::GeneratorConfig& g, F&& f) {
  f("n_queries", g.n_queries);
  f("min_length", g.min_length);
  f("max_length", g.max_length);
  f("features", g.features);
  f("seed", g.seed);
  f("click_slope", g.click_slope);
  f("conv_slope", g.conv_slope);
  f("feature_noise", g.feature_noise);
  f("query_shift", g.query_shift);
  f("distractors", g.distractors);
  f("excitation", g.excitation);
  f("excitation_decay", g.excitation_decay);
  f("discouragement", g.discouragement);
  f("discouragement_decay", g.discouragement_decay);
  f("click_gap_target", g.click_gap_target);
  f("purchase_gap_target", g.purchase_gap_target);
  f("calibrate", g.calibrate);
  f("calibration_queries", g.calibration_queries);
  f("click_offset", g.click_offset);
  f("conv_offset", g.conv_offset);
}

}  // namespace

nlohmann::json to_json(const sim::GeneratorConfig& g) {
  nlohmann::json j = nlohmann::json::object();
  sim::GeneratorConfig copy = g;
  generator_fields(copy, [&](const char* key, const auto& field) { j[key] = field; });
  return j;
}

sim::GeneratorConfig generator_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("generator config must be an object");
  sim::GeneratorConfig g;
  std::set<std::string> known;
  generator_fields(g, [&](const char* key, auto& field) {
    known.insert(key);
    if (auto it = j.find(key); it != j.end()) {
      try {
        it->get_to(field);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("generator key '") + key + "': " + e.what());
      }
    }
  });
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown generator key '" + key + "'");
  }
  g.validate();
  return g;
}

}  // namespace heroes::harness
