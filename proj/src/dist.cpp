#include "divemeta/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "divemeta/error.hpp"
#include "divemeta/rng.hpp"

namespace divemeta {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1/sqrt(2 pi)

// Standardized skew-normal integrand, effectively zero beyond this radius.
constexpr double kSkewNormalTail = 38.0;
constexpr double kSkewQuadTolerance = 1e-12;
constexpr unsigned kSkewQuadMaxDepth = 15;
constexpr double kSkewRootTolerance = 1e-12;

double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidParams, std::string(name) + " must be positive and finite");
  }
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::InvalidParams, std::string(name) + " must be finite");
  }
}

void require_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::ProbabilityOutOfRange, "p=" + std::to_string(p) + " outside (0,1)");
  }
}

double skew_std_pdf(double z, double shape) { return 2.0 * std_normal_pdf(z) * normal_cdf(shape * z); }

// CDF of the standardized skew-normal by adaptive Gauss-Kronrod quadrature of
// the density. The range is split at zero, where Phi(shape * t) turns over.
double skew_std_cdf(double z, double shape) {
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto f = [shape](double t) { return skew_std_pdf(t, shape); };
  if (z <= -kSkewNormalTail) return 0.0;
  if (z >= kSkewNormalTail) return 1.0;
  const double left_end = std::min(z, 0.0);
  double total = Quad::integrate(f, -kSkewNormalTail, left_end, kSkewQuadMaxDepth, kSkewQuadTolerance);
  if (z > 0.0) total += Quad::integrate(f, 0.0, z, kSkewQuadMaxDepth, kSkewQuadTolerance);
  return std::clamp(total, 0.0, 1.0);
}

// Bracketed root of cdf(z) = p: secant steps guarded by bisection.
double skew_std_quantile(double p, double shape) {
  const double delta = shape / std::sqrt(1.0 + shape * shape);
  const double mean = delta * std::sqrt(2.0 / std::numbers::pi);
  const double sd = std::sqrt(1.0 - mean * mean);
  const double guess = mean + sd * normal_quantile(p);

  double lo = guess - sd;
  double hi = guess + sd;
  double flo = skew_std_cdf(lo, shape) - p;
  double fhi = skew_std_cdf(hi, shape) - p;
  for (double step = sd; flo > 0.0; step *= 2.0) {
    hi = lo;
    fhi = flo;
    lo -= step;
    flo = skew_std_cdf(lo, shape) - p;
  }
  for (double step = sd; fhi < 0.0; step *= 2.0) {
    lo = hi;
    flo = fhi;
    hi += step;
    fhi = skew_std_cdf(hi, shape) - p;
  }

  for (int iter = 0; iter < 200; ++iter) {
    if (hi - lo <= kSkewRootTolerance * std::max(1.0, std::abs(lo))) break;
    double x = lo - flo * (hi - lo) / (fhi - flo);
    const double width = hi - lo;
    // Fall back to bisection when the secant lands near an endpoint.
    if (!(x > lo + 0.01 * width && x < hi - 0.01 * width)) x = 0.5 * (lo + hi);
    const double fx = skew_std_cdf(x, shape) - p;
    if (fx == 0.0) return x;
    if (fx < 0.0) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    // A secant step that shrinks the bracket only from one side is followed by
    // a bisection so the bracket always collapses.
    if (hi - lo > 0.5 * width) {
      const double mid = 0.5 * (lo + hi);
      const double fm = skew_std_cdf(mid, shape) - p;
      if (fm < 0.0) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
        fhi = fm;
      }
    }
  }
  return std::abs(flo) < std::abs(fhi) ? lo : hi;
}

double sample_gamma_unit_rate(double shape, CounterStream& stream) {
  // Marsaglia-Tsang; shapes below one use the u^(1/a) boost.
  if (shape < 1.0) {
    const double u = stream.uniform();
    return sample_gamma_unit_rate(shape + 1.0, stream) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = stream.standard_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

std::string_view to_string(FamilyTag tag) {
  switch (tag) {
    case FamilyTag::Normal: return "normal";
    case FamilyTag::LogNormal: return "lognormal";
    case FamilyTag::Weibull: return "weibull";
    case FamilyTag::Gamma: return "gamma";
    case FamilyTag::SkewNormal: return "skew-normal";
  }
  return "unknown";
}

std::size_t parameter_count(FamilyTag tag) { return tag == FamilyTag::SkewNormal ? 3 : 2; }

bool positive_support(FamilyTag tag) {
  return tag == FamilyTag::LogNormal || tag == FamilyTag::Weibull || tag == FamilyTag::Gamma;
}

Family Family::normal(double mean, double sd) {
  require_finite(mean, "mean");
  require_positive(sd, "sd");
  return Family(FamilyTag::Normal, {mean, sd, 0.0});
}

Family Family::lognormal(double meanlog, double sdlog) {
  require_finite(meanlog, "meanlog");
  require_positive(sdlog, "sdlog");
  return Family(FamilyTag::LogNormal, {meanlog, sdlog, 0.0});
}

Family Family::weibull(double shape, double scale) {
  require_positive(shape, "weibull shape");
  require_positive(scale, "weibull scale");
  return Family(FamilyTag::Weibull, {shape, scale, 0.0});
}

Family Family::gamma(double shape, double rate) {
  require_positive(shape, "gamma shape");
  require_positive(rate, "gamma rate");
  return Family(FamilyTag::Gamma, {shape, rate, 0.0});
}

Family Family::skew_normal(double location, double scale, double shape) {
  require_finite(location, "location");
  require_positive(scale, "scale");
  require_finite(shape, "shape");
  return Family(FamilyTag::SkewNormal, {location, scale, shape});
}

Family Family::make(FamilyTag tag, std::span<const double> p) {
  if (p.size() != parameter_count(tag)) {
    throw Error(ErrorCode::InvalidParams, "wrong parameter count for " + std::string(to_string(tag)));
  }
  switch (tag) {
    case FamilyTag::Normal: return normal(p[0], p[1]);
    case FamilyTag::LogNormal: return lognormal(p[0], p[1]);
    case FamilyTag::Weibull: return weibull(p[0], p[1]);
    case FamilyTag::Gamma: return gamma(p[0], p[1]);
    case FamilyTag::SkewNormal: return skew_normal(p[0], p[1], p[2]);
  }
  throw Error(ErrorCode::InvalidParams, "unknown family");
}

double pdf(const Family& f, double x) {
  const double a = f.param(0);
  const double b = f.param(1);
  switch (f.tag()) {
    case FamilyTag::Normal:
      return std_normal_pdf((x - a) / b) / b;
    case FamilyTag::LogNormal:
      if (x <= 0.0) return 0.0;
      return std_normal_pdf((std::log(x) - a) / b) / (x * b);
    case FamilyTag::Weibull: {
      if (x < 0.0) return 0.0;
      const double t = x / b;
      return (a / b) * std::pow(t, a - 1.0) * std::exp(-std::pow(t, a));
    }
    case FamilyTag::Gamma:
      if (x <= 0.0) return 0.0;
      return b * boost::math::gamma_p_derivative(a, b * x);
    case FamilyTag::SkewNormal:
      return skew_std_pdf((x - a) / b, f.param(2)) / b;
  }
  return 0.0;
}

double cdf(const Family& f, double x) {
  const double a = f.param(0);
  const double b = f.param(1);
  switch (f.tag()) {
    case FamilyTag::Normal:
      return normal_cdf((x - a) / b);
    case FamilyTag::LogNormal:
      if (x <= 0.0) return 0.0;
      return normal_cdf((std::log(x) - a) / b);
    case FamilyTag::Weibull:
      if (x <= 0.0) return 0.0;
      return -std::expm1(-std::pow(x / b, a));
    case FamilyTag::Gamma:
      if (x <= 0.0) return 0.0;
      return boost::math::gamma_p(a, b * x);
    case FamilyTag::SkewNormal:
      return skew_std_cdf((x - a) / b, f.param(2));
  }
  return 0.0;
}

double quantile(const Family& f, double p) {
  require_probability(p);
  const double a = f.param(0);
  const double b = f.param(1);
  switch (f.tag()) {
    case FamilyTag::Normal:
      return a + b * normal_quantile(p);
    case FamilyTag::LogNormal:
      return std::exp(a + b * normal_quantile(p));
    case FamilyTag::Weibull:
      return b * std::pow(-std::log1p(-p), 1.0 / a);
    case FamilyTag::Gamma:
      return boost::math::gamma_p_inv(a, p) / b;
    case FamilyTag::SkewNormal:
      return a + b * skew_std_quantile(p, f.param(2));
  }
  return 0.0;
}

double median(const Family& f) { return quantile(f, 0.5); }

std::vector<double> sample(const Family& f, std::size_t n, CounterStream& stream) {
  std::vector<double> out(n);
  const double a = f.param(0);
  const double b = f.param(1);
  switch (f.tag()) {
    case FamilyTag::Normal:
      for (auto& x : out) x = a + b * stream.standard_normal();
      break;
    case FamilyTag::LogNormal:
      for (auto& x : out) x = std::exp(a + b * stream.standard_normal());
      break;
    case FamilyTag::Weibull:
      for (auto& x : out) x = b * std::pow(stream.standard_exponential(), 1.0 / a);
      break;
    case FamilyTag::Gamma:
      for (auto& x : out) x = sample_gamma_unit_rate(a, stream) / b;
      break;
    case FamilyTag::SkewNormal: {
      // Two-normal representation: delta |U| + sqrt(1 - delta^2) V.
      const double shape = f.param(2);
      const double delta = shape / std::sqrt(1.0 + shape * shape);
      const double comp = std::sqrt(1.0 - delta * delta);
      for (auto& x : out) {
        const double u = stream.standard_normal();
        const double v = stream.standard_normal();
        x = a + b * (delta * std::abs(u) + comp * v);
      }
      break;
    }
  }
  return out;
}

double median_variance(const Family& f, long n) {
  if (n < 1) throw Error(ErrorCode::InvalidParams, "group size must be >= 1");
  const double density = pdf(f, median(f));
  if (!(density > 0.0)) {
    throw Error(ErrorCode::ZeroDensityAtMedian, "density at the median is zero");
  }
  return 1.0 / (4.0 * static_cast<double>(n) * density * density);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  require_probability(p);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::InvalidParams, "degrees of freedom must be positive");
  return boost::math::cdf(boost::math::students_t_distribution<double>(df), t);
}

double student_t_quantile(double p, double df) {
  require_probability(p);
  if (!(df > 0.0)) throw Error(ErrorCode::InvalidParams, "degrees of freedom must be positive");
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

}  // namespace divemeta
