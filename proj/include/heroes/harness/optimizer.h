#pragma once

#include <span>
#include <vector>

#include "heroes/diff/tensor.h"
#include "heroes/harness/config.h"
#include "json.hpp"

namespace heroes::harness {

using diff::Parameter;
using diff::Tensor;

// Adam (b1 = 0.9, b2 = 0.999, eps = 1e-8) or plain SGD over a fixed parameter list.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);

  void step(std::span<Parameter* const> params);
  std::size_t steps() const { return t_; }

  nlohmann::json state() const;
  void load_state(const nlohmann::json& j);

 private:
  OptimizerKind kind_;
  double lr_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace heroes::harness
