#include "heroes/model/params.h"

#include <cmath>
#include <random>
#include <string>

namespace heroes {

namespace {

Parameter uniform_matrix(const std::string& name, std::size_t rows, std::size_t cols,
                         std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t({rows, cols});
  for (double& v : t.values()) v = dist(rng);
  return Parameter(name, std::move(t));
}

Parameter zero_vector(const std::string& name, std::size_t n) {
  return Parameter(name, Tensor({n}, 0.0));
}

}  // namespace

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  std::mt19937_64 rng(seed);
  const std::size_t h = config.hidden;
  const char* layer_names[2] = {"ctr", "cvr"};
  const char* track_names[2] = {"", "tilde_"};

  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t t = 0; t < 2; ++t) {
      const std::string base = std::string(layer_names[l]) + "." + track_names[t];
      GateParams& g = p.gates[l][t];
      g.weight = uniform_matrix(base + "gates.weight", 4 * h, config.gate_input_size(), rng);
      g.bias = zero_vector(base + "gates.bias", 4 * h);
      // Forget-gate bias starts at 1 so early training keeps memory.
      for (std::size_t i = 0; i < h; ++i) g.bias.value[i] = 1.0;
    }
  }
  for (std::size_t t = 0; t < 2; ++t) {
    const std::string suffix = track_names[t];
    p.u_c[t] = uniform_matrix(suffix + "U_c", h, h, rng);
    p.u_r[t] = uniform_matrix(suffix + "U_r", h, h, rng);
    p.u_v[t] = uniform_matrix(suffix + "U_v", h, h, rng);
    p.w_r[t] = uniform_matrix(suffix + "W_r", h, h, rng);
  }
  p.decay.weight = uniform_matrix("decay.weight", h, h, rng);
  p.decay.bias = zero_vector("decay.bias", h);
  p.decay_behavior.weight = uniform_matrix("decay_y.weight", h, kBehaviorSize + h, rng);
  p.decay_behavior.bias = zero_vector("decay_y.bias", h);
  for (std::size_t l = 0; l < 2; ++l) {
    p.heads[l].weight = uniform_matrix(std::string(layer_names[l]) + ".head.weight", 1, h, rng);
    p.heads[l].bias = zero_vector(std::string(layer_names[l]) + ".head.bias", 1);
  }
  return p;
}

std::vector<Parameter*> ModelParams::trainable() {
  std::vector<Parameter*> out;
  const bool two_tracks = !config.share_track_params && config.ablation != Ablation::kUnit &&
                          config.ablation != Ablation::kIntra;
  const std::size_t tracks = two_tracks ? 2 : 1;
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t t = 0; t < tracks; ++t) {
      out.push_back(&gates[l][t].weight);
      out.push_back(&gates[l][t].bias);
    }
  }
  for (std::size_t t = 0; t < tracks; ++t) {
    if (config.ablation != Ablation::kIntra) {
      out.push_back(&u_c[t]);
      out.push_back(&u_v[t]);
    }
    if (config.ablation != Ablation::kInter) {
      if (config.ablation != Ablation::kIntra) out.push_back(&u_r[t]);
      out.push_back(&w_r[t]);
    }
  }
  if (config.ablation != Ablation::kUnit && config.ablation != Ablation::kIntra) {
    DecayParams& d = config.use_behavior_embedding ? decay_behavior : decay;
    out.push_back(&d.weight);
    out.push_back(&d.bias);
  }
  for (auto& head : heads) {
    out.push_back(&head.weight);
    out.push_back(&head.bias);
  }
  return out;
}

std::vector<const Parameter*> ModelParams::trainable() const {
  auto mut = const_cast<ModelParams*>(this)->trainable();
  return {mut.begin(), mut.end()};
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter* p : trainable()) n += p->value.size();
  return n;
}

}  // namespace heroes
