#include "divemeta/ivw.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace divemeta {

namespace {

void check_input(const IvwInput& in) {
  if (in.effects.size() != in.within_var.size()) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} effects vs {} variances", in.effects.size(), in.within_var.size()));
  }
  if (in.effects.empty()) throw Error(ErrorCode::EmptyInput, "no studies supplied");
  for (double v : in.within_var) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::NonPositiveVariance, fmt::format("within-study variance {} is not positive", v));
    }
  }
}

PooledResult weighted_pool(const IvwInput& in, double tau2, Method method, double alpha) {
  check_input(in);
  if (!(tau2 >= 0.0)) throw Error(ErrorCode::InvalidParams, "tau2 must be nonnegative");
  const std::size_t n = in.effects.size();
  std::vector<double> w(n);
  double sum_w = 0.0;
  double sum_wy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 1.0 / (in.within_var[i] + tau2);
    sum_w += w[i];
    sum_wy += w[i] * in.effects[i];
  }
  PooledResult r = make_pooled_result(method, sum_wy / sum_w, 1.0 / sum_w, static_cast<long>(n), 0, alpha);
  r.tau2 = tau2;
  r.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.weights[i] = w[i] / sum_w;
  return r;
}

}  // namespace

PooledResult fe_pool(const IvwInput& input, double alpha) {
  return weighted_pool(input, 0.0, Method::IvwFe, alpha);
}

HeterogeneityEstimate dl_tau2(const IvwInput& input) {
  check_input(input);
  const std::size_t n = input.effects.size();
  if (n < 2) throw Error(ErrorCode::NeedTwoStudies, "heterogeneity needs at least two studies");
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  double sum_wy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 1.0 / input.within_var[i];
    sum_w += w;
    sum_w2 += w * w;
    sum_wy += w * input.effects[i];
  }
  const double mu = sum_wy / sum_w;
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = input.effects[i] - mu;
    q += d * d / input.within_var[i];
  }
  HeterogeneityEstimate h;
  h.q_stat = q;
  h.df = static_cast<long>(n) - 1;
  h.tau2_untruncated = (q - static_cast<double>(h.df)) / (sum_w - sum_w2 / sum_w);
  h.tau2 = std::max(0.0, h.tau2_untruncated);
  return h;
}

PooledResult re_pool(const IvwInput& input, double tau2, double alpha) {
  return weighted_pool(input, tau2, Method::IvwRe, alpha);
}

}  // namespace divemeta
