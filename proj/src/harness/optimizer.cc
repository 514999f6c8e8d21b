#include "heroes/harness/optimizer.h"

#include <cmath>
#include <string>

#include "heroes/errors.h"

namespace heroes::harness {

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
}  // namespace

Optimizer::Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
}

void Optimizer::step(std::span<Parameter* const> params) {
  ++t_;
  if (kind_ == OptimizerKind::kSgd) {
    for (Parameter* p : params) {
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr_ * p->grad[i];
    }
    return;
  }
  if (m_.empty()) {
    for (Parameter* p : params) {
      m_.emplace_back(p->value.shape(), 0.0);
      v_.emplace_back(p->value.shape(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw std::logic_error("optimizer: parameter list changed");
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
      p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
    }
  }
}

nlohmann::json Optimizer::state() const {
  nlohmann::json m = nlohmann::json::array(), v = nlohmann::json::array();
  for (const Tensor& t : m_) m.push_back(std::vector<double>(t.values().begin(), t.values().end()));
  for (const Tensor& t : v_) v.push_back(std::vector<double>(t.values().begin(), t.values().end()));
  return {{"kind", to_string(kind_)}, {"learning_rate", lr_}, {"t", t_}, {"m", m}, {"v", v}};
}

void Optimizer::load_state(const nlohmann::json& j) {
  if (parse_optimizer(j.at("kind").get<std::string>()) != kind_) {
    throw ConfigError("optimizer state was saved for a different optimizer");
  }
  t_ = j.at("t").get<std::size_t>();
  m_.clear();
  v_.clear();
  for (const auto& a : j.at("m")) {
    auto vals = a.get<std::vector<double>>();
    const std::size_t n = vals.size();
    m_.emplace_back(std::vector<std::size_t>{n}, std::move(vals));
  }
  for (const auto& a : j.at("v")) {
    auto vals = a.get<std::vector<double>>();
    const std::size_t n = vals.size();
    v_.emplace_back(std::vector<std::size_t>{n}, std::move(vals));
  }
}

}  // namespace heroes::harness
