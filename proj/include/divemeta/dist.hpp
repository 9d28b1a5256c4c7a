#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace divemeta {

class CounterStream;

enum class FamilyTag { Normal, LogNormal, Weibull, Gamma, SkewNormal };

std::string_view to_string(FamilyTag tag);
std::size_t parameter_count(FamilyTag tag);
bool positive_support(FamilyTag tag);

// A parametric outcome distribution.
//
// Conventions:
//   Normal      (mean, sd)
//   LogNormal   (meanlog, sdlog)
//   Weibull     (shape, scale)
//   Gamma       (shape, rate)
//   SkewNormal  (location, scale, shape), direct parameterization
class Family {
 public:
  static Family normal(double mean, double sd);
  static Family lognormal(double meanlog, double sdlog);
  static Family weibull(double shape, double scale);
  static Family gamma(double shape, double rate);
  static Family skew_normal(double location, double scale, double shape);
  // Throws InvalidParams unless `params` has the right arity and valid values.
  static Family make(FamilyTag tag, std::span<const double> params);

  FamilyTag tag() const { return tag_; }
  std::span<const double> params() const { return {params_.data(), parameter_count(tag_)}; }
  double param(std::size_t i) const { return params_[i]; }

  bool operator==(const Family&) const = default;

 private:
  Family(FamilyTag tag, std::array<double, 3> p) : tag_(tag), params_(p) {}
  FamilyTag tag_;
  std::array<double, 3> params_;
};

// Zero outside the support.
double pdf(const Family& f, double x);
double cdf(const Family& f, double x);
// Throws ProbabilityOutOfRange unless 0 < p < 1.
double quantile(const Family& f, double p);
double median(const Family& f);

// n i.i.d. draws consuming `stream`.
std::vector<double> sample(const Family& f, std::size_t n, CounterStream& stream);

// Large-sample variance of a sample median, 1 / (4 n f(m)^2), m the true median.
double median_variance(const Family& f, long n);

// Reference distributions for Wald inference.
double normal_cdf(double z);
double normal_quantile(double p);
double student_t_cdf(double t, double df);
double student_t_quantile(double p, double df);

}  // namespace divemeta
