#pragma once

#include <span>
#include <vector>

#include "divemeta/core.hpp"

namespace divemeta {

// Normalized sample-size weights n_i / sum(n). Throws DominantStudy, naming the
// study, if any weight reaches 1/2.
WeightVector sample_size_weights(std::span<const StudyRecord> records);

// sum_i w_i * y_i.
double pool(std::span<const double> effects, const WeightVector& weights);

// h_i = w_i^2 / (1 - 2 w_i) and the normalizer 1 + sum(h).
struct DiveCoefficients {
  std::vector<double> h;
  double normalizer = 1.0;

  // k_i = h_i / normalizer, the multipliers of the squared deviations.
  std::vector<double> k() const;
};

DiveCoefficients dive_coefficients(const WeightVector& weights);

struct DiveVariance {
  double variance = 0.0;
  DiveCoefficients coeffs;
};

// Direct variance estimate sum_i k_i (y_i - mu_hat)^2 of the weighted pooled
// effect. Unbiased whenever the effects are independent with a common mean and
// the weights do not depend on the effects.
DiveVariance dive_variance(std::span<const double> effects, const WeightVector& weights);

// Wald interval estimate +/- crit * sqrt(variance); crit from z or t(N-1).
Interval wald_ci(double estimate, double variance, long n_studies, double alpha, CiFlavor flavor);

// Two-sided p-value of estimate / se under z or t(N-1). Throws ZeroSE if se <= 0.
double wald_pvalue(double estimate, double se, long n_studies, CiFlavor flavor);

// Full DiVE analysis with sample-size weights.
PooledResult dive_pool(std::span<const StudyRecord> records, double alpha = 0.05);

}  // namespace divemeta
