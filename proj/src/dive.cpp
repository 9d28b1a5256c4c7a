#include "divemeta/dive.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "divemeta/dist.hpp"

namespace divemeta {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidAlpha, fmt::format("alpha={} outside (0,1)", alpha));
  }
}

void check_lengths(std::span<const double> effects, const WeightVector& weights) {
  if (effects.size() != weights.size()) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} effects vs {} weights", effects.size(), weights.size()));
  }
}

double critical_value(double alpha, long n_studies, CiFlavor flavor) {
  const double p = 1.0 - alpha / 2.0;
  if (flavor == CiFlavor::Z) return normal_quantile(p);
  if (n_studies < 2) return std::numeric_limits<double>::infinity();
  return student_t_quantile(p, static_cast<double>(n_studies - 1));
}

}  // namespace

WeightVector sample_size_weights(std::span<const StudyRecord> records) {
  if (records.size() < 2) {
    throw Error(ErrorCode::EmptyInput, "sample-size weighting needs at least two studies");
  }
  std::vector<double> sizes;
  sizes.reserve(records.size());
  for (const auto& r : records) sizes.push_back(static_cast<double>(r.total_n()));
  const double total = std::accumulate(sizes.begin(), sizes.end(), 0.0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (sizes[i] / total >= 0.5) {
      throw Error(ErrorCode::DominantStudy,
                  fmt::format("study '{}' carries weight {:.4f} >= 0.5", records[i].id, sizes[i] / total));
    }
  }
  return WeightVector::from_raw(sizes);
}

double pool(std::span<const double> effects, const WeightVector& weights) {
  check_lengths(effects, weights);
  double acc = 0.0;
  for (std::size_t i = 0; i < effects.size(); ++i) acc += weights[i] * effects[i];
  return acc;
}

std::vector<double> DiveCoefficients::k() const {
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] / normalizer;
  return out;
}

DiveCoefficients dive_coefficients(const WeightVector& weights) {
  DiveCoefficients c;
  c.h.reserve(weights.size());
  double sum_h = 0.0;
  for (double w : weights.values()) {
    if (w >= 0.5) {
      throw Error(ErrorCode::DominantStudy, fmt::format("weight {} >= 0.5", w));
    }
    const double h = w * w / (1.0 - 2.0 * w);
    c.h.push_back(h);
    sum_h += h;
  }
  c.normalizer = 1.0 + sum_h;
  return c;
}

DiveVariance dive_variance(std::span<const double> effects, const WeightVector& weights) {
  check_lengths(effects, weights);
  if (effects.size() < 2) throw Error(ErrorCode::EmptyInput, "variance needs at least two studies");
  DiveVariance out{0.0, dive_coefficients(weights)};
  const double mu = pool(effects, weights);
  double acc = 0.0;
  for (std::size_t i = 0; i < effects.size(); ++i) {
    const double d = effects[i] - mu;
    acc += out.coeffs.h[i] * d * d;
  }
  out.variance = acc / out.coeffs.normalizer;
  return out;
}

Interval wald_ci(double estimate, double variance, long n_studies, double alpha, CiFlavor flavor) {
  check_alpha(alpha);
  if (!(variance >= 0.0)) {
    throw Error(ErrorCode::NonPositiveVariance, "variance must be nonnegative");
  }
  if (variance == 0.0) return {estimate, estimate};
  const double half = critical_value(alpha, n_studies, flavor) * std::sqrt(variance);
  return {estimate - half, estimate + half};
}

double wald_pvalue(double estimate, double se, long n_studies, CiFlavor flavor) {
  if (!(se > 0.0)) throw Error(ErrorCode::ZeroSE, "standard error must be positive");
  const double stat = std::abs(estimate / se);
  if (flavor == CiFlavor::Z) return std::erfc(stat / std::sqrt(2.0));
  if (n_studies < 2) return 1.0;
  const double df = static_cast<double>(n_studies - 1);
  return 2.0 * student_t_cdf(-stat, df);
}

PooledResult dive_pool(std::span<const StudyRecord> records, double alpha) {
  check_alpha(alpha);
  const WeightVector weights = sample_size_weights(records);
  const std::vector<double> y = effects_of(records);
  const double mu = pool(y, weights);
  const DiveVariance var = dive_variance(y, weights);

  PooledResult res = make_pooled_result(Method::DiVE, mu, var.variance, static_cast<long>(records.size()),
                                        total_participants(records), alpha);
  for (std::size_t i = 0; i < records.size(); ++i) {
    res.study_ids.push_back(records[i].id);
    res.weights.push_back(weights[i]);
    if (weights[i] >= kNearDominanceWarning) {
      res.warnings.push_back(fmt::format(
          "study '{}' has weight {:.3f}; the variance estimate is sensitive to it", records[i].id, weights[i]));
    }
  }
  return res;
}

}  // namespace divemeta
