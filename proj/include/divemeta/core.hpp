#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "divemeta/error.hpp"

namespace divemeta {

// Reported summaries for one arm of a two-group study.
struct GroupSummary {
  long n = 0;
  double median = 0.0;
  std::optional<double> q1;
  std::optional<double> q3;

  bool has_quartiles() const { return q1.has_value() && q3.has_value(); }
  bool operator==(const GroupSummary&) const = default;
};

struct StudyRecord {
  std::string id;
  GroupSummary group1;
  GroupSummary group2;

  // Effect orientation is fixed: group 1 minus group 2.
  double effect() const { return group1.median - group2.median; }
  long total_n() const { return group1.n + group2.n; }
  // Both arms report q1 and q3.
  bool qe_eligible() const { return group1.has_quartiles() && group2.has_quartiles(); }

  bool operator==(const StudyRecord&) const = default;
};

// Checks sizes, finiteness, quartile ordering and id uniqueness. Pooling needs
// at least two studies, so a single record is rejected as EmptyInput.
std::vector<StudyRecord> validate_studies(std::vector<StudyRecord> records);

// Warning text for a study left out of QE analyses.
std::string not_qe_eligible_warning(std::string_view study_id);

std::vector<double> effects_of(std::span<const StudyRecord> records);
long total_participants(std::span<const StudyRecord> records);

// Normalized nonnegative weights summing to one with every entry below 1/2.
class WeightVector {
 public:
  // Normalizes `raw` to unit sum. Throws InvalidWeights for negative, non-finite
  // or all-zero input and DominantStudy when any normalized entry is >= 0.5.
  static WeightVector from_raw(std::span<const double> raw);

  std::span<const double> values() const { return weights_; }
  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  double max() const;
  std::size_t argmax() const;

 private:
  explicit WeightVector(std::vector<double> w) : weights_(std::move(w)) {}
  std::vector<double> weights_;
};

// Weights at or above this level trigger a sensitivity warning.
inline constexpr double kNearDominanceWarning = 0.45;

enum class Method { DiVE, QeRe, QeFe, IvwFe, IvwRe };
std::string_view to_string(Method m);

enum class CiFlavor { Z, T };

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

struct PooledResult {
  Method method = Method::DiVE;
  double estimate = 0.0;
  double variance = 0.0;
  double se = 0.0;
  double alpha = 0.05;
  Interval ci_z;
  Interval ci_t;
  long df = 0;
  long n_studies = 0;
  long n_total = 0;
  std::optional<double> tau2;
  // Normalized weights actually used, aligned with study_ids.
  std::vector<std::string> study_ids;
  std::vector<double> weights;
  std::vector<std::string> warnings;
};

// Fills se, df and both Wald intervals from estimate and variance.
PooledResult make_pooled_result(Method method, double estimate, double variance,
                                long n_studies, long n_total, double alpha);

}  // namespace divemeta
