#pragma once

#include <functional>
#include <span>
#include <string>

#include "heroes/diff/tape.h"

namespace heroes::diff {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Builds the scalar objective on the given tape from the current parameter values.
using ScalarObjective = std::function<Var(Tape&)>;

// Compares reverse-mode gradients against central differences with step eps.
// Error per entry is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// Leaves parameter values untouched and gradients holding the analytic result.
GradCheckResult gradient_check(const ScalarObjective& objective,
                               std::span<Parameter* const> params, double eps = 1e-5);

}  // namespace heroes::diff
