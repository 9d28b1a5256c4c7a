#pragma once

#include <vector>

#include "divemeta/core.hpp"

namespace divemeta {

// Study effects with their within-study variances.
struct IvwInput {
  std::vector<double> effects;
  std::vector<double> within_var;
};

struct HeterogeneityEstimate {
  double tau2 = 0.0;
  // Method-of-moments value before truncation at zero; may be negative.
  double tau2_untruncated = 0.0;
  double q_stat = 0.0;
  long df = 0;
};

// Inverse-variance fixed-effect pooling, weights 1/sigma_i^2.
PooledResult fe_pool(const IvwInput& input, double alpha = 0.05);

// DerSimonian-Laird moment estimator of tau^2. Requires N >= 2.
HeterogeneityEstimate dl_tau2(const IvwInput& input);

// Inverse-variance pooling with weights 1/(sigma_i^2 + tau2). tau2 = 0 gives fe_pool.
PooledResult re_pool(const IvwInput& input, double tau2, double alpha = 0.05);

}  // namespace divemeta
