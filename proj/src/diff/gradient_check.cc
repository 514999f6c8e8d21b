#include "heroes/diff/gradient_check.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace heroes::diff {

GradCheckResult gradient_check(const ScalarObjective& objective,
                               std::span<Parameter* const> params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw ConfigError("gradient_check: eps must lie in [1e-7, 1e-3], got " + std::to_string(eps));
  }
  Tape tape;
  for (Parameter* p : params) p->zero_grad();
  Var root = objective(tape);
  tape.backward(root);

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  // Objective at p[index] = value, evaluated in extended precision so that
  // rounding in the loss stays well below the differences being measured.
  // p is restored before any error propagates.
  Tape probe;
  probe.set_extended(true);
  auto evaluate = [&](Parameter& p, std::size_t index, double value, double saved) {
    const std::string where = p.name + "[" + std::to_string(index) + "]";
    p.value[index] = value;
    probe.clear();
    long double v = 0.0L;
    try {
      v = probe.extended_value(objective(probe));
    } catch (const std::exception& e) {
      p.value[index] = saved;
      throw DomainError("gradient_check: objective failed when perturbing " + where + ": " +
                        e.what());
    }
    p.value[index] = saved;
    if (!std::isfinite(v)) {
      throw DomainError("gradient_check: non-finite objective when perturbing " + where);
    }
    return v;
  };

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      // Steps as actually representable around saved.
      const double hi = saved + eps, lo = saved - eps;
      const long double up = evaluate(p, i, hi, saved);
      const long double down = evaluate(p, i, lo, saved);

      const double numeric = static_cast<double>((up - down) / (static_cast<long double>(hi) - lo));
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      ++result.entries_checked;
      if (err > result.max_relative_error || result.entries_checked == 1) {
        result.max_relative_error = err;
        result.worst_parameter = p.name;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = analytic[k];
  return result;
}

}  // namespace heroes::diff
