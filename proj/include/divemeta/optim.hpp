#pragma once

#include <functional>
#include <span>
#include <vector>

namespace divemeta {

struct NelderMeadOptions {
  // Converged once the largest vertex distance from the best vertex drops below this.
  double diameter_tol = 1e-9;
  int max_iterations = 500;
  double initial_step = 0.1;
  // Per-coordinate initial steps; overrides initial_step when non-empty.
  std::vector<double> steps;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

// Derivative-free simplex minimization with standard coefficients
// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Non-finite
// objective values are treated as +infinity.
NelderMeadResult nelder_mead(const Objective& f, std::span<const double> start,
                             const NelderMeadOptions& opts = {});

}  // namespace divemeta
