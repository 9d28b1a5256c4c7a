#include "divemeta/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "divemeta/dive.hpp"

namespace divemeta {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveSize: return "NonPositiveSize";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::QuartileOrderViolation: return "QuartileOrderViolation";
    case ErrorCode::DuplicateStudyId: return "DuplicateStudyId";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DominantStudy: return "DominantStudy";
    case ErrorCode::InvalidWeights: return "InvalidWeights";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::ZeroSE: return "ZeroSE";
    case ErrorCode::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorCode::NeedTwoStudies: return "NeedTwoStudies";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::ZeroDensityAtMedian: return "ZeroDensityAtMedian";
    case ErrorCode::UnsupportedQuantiles: return "UnsupportedQuantiles";
    case ErrorCode::DegenerateQuartiles: return "DegenerateQuartiles";
    case ErrorCode::OptimizerDiverged: return "OptimizerDiverged";
    case ErrorCode::AllFamiliesFailed: return "AllFamiliesFailed";
    case ErrorCode::NotQeEligible: return "NotQeEligible";
    case ErrorCode::InsufficientQeEligibleStudies: return "InsufficientQeEligibleStudies";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::InfeasibleBaseline: return "InfeasibleBaseline";
    case ErrorCode::ZeroTruthDenominator: return "ZeroTruthDenominator";
    case ErrorCode::ReplicateFailed: return "ReplicateFailed";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::DiVE: return "DiVE";
    case Method::QeRe: return "QE-RE";
    case Method::QeFe: return "QE-FE";
    case Method::IvwFe: return "IVW-FE";
    case Method::IvwRe: return "IVW-RE";
  }
  return "unknown";
}

namespace {

void check_group(const StudyRecord& r, const GroupSummary& g, int which) {
  if (g.n < 1) {
    throw Error(ErrorCode::NonPositiveSize, fmt::format("study '{}' group {} has n={}", r.id, which, g.n));
  }
  auto finite_or_absent = [](const std::optional<double>& v) { return !v || std::isfinite(*v); };
  if (!std::isfinite(g.median) || !finite_or_absent(g.q1) || !finite_or_absent(g.q3)) {
    throw Error(ErrorCode::NonFiniteValue, fmt::format("study '{}' group {} has a non-finite summary", r.id, which));
  }
  if ((g.q1 && *g.q1 > g.median) || (g.q3 && g.median > *g.q3)) {
    throw Error(ErrorCode::QuartileOrderViolation,
                fmt::format("study '{}' group {} violates q1 <= median <= q3", r.id, which));
  }
}

}  // namespace

std::vector<StudyRecord> validate_studies(std::vector<StudyRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no studies supplied");
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    check_group(r, r.group1, 1);
    check_group(r, r.group2, 2);
    if (!seen.insert(r.id).second) {
      throw Error(ErrorCode::DuplicateStudyId, fmt::format("study id '{}' appears twice", r.id));
    }
  }
  if (records.size() < 2) {
    throw Error(ErrorCode::EmptyInput, "pooling needs at least two studies, got one");
  }
  return records;
}

std::string not_qe_eligible_warning(std::string_view study_id) {
  return fmt::format("study '{}' lacks quartiles in at least one arm; not QE-eligible", study_id);
}

std::vector<double> effects_of(std::span<const StudyRecord> records) {
  std::vector<double> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(r.effect());
  return y;
}

long total_participants(std::span<const StudyRecord> records) {
  long n = 0;
  for (const auto& r : records) n += r.total_n();
  return n;
}

WeightVector WeightVector::from_raw(std::span<const double> raw) {
  if (raw.empty()) throw Error(ErrorCode::InvalidWeights, "empty weight vector");
  double total = 0.0;
  for (double w : raw) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::InvalidWeights, "weights must be finite and nonnegative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidWeights, "weights sum to zero");
  std::vector<double> w(raw.begin(), raw.end());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] /= total;
    if (w[i] >= 0.5) {
      throw Error(ErrorCode::DominantStudy, fmt::format("study #{} carries weight {:.4f} >= 0.5", i, w[i]));
    }
  }
  return WeightVector(std::move(w));
}

double WeightVector::max() const { return *std::max_element(weights_.begin(), weights_.end()); }

std::size_t WeightVector::argmax() const {
  return static_cast<std::size_t>(std::max_element(weights_.begin(), weights_.end()) - weights_.begin());
}

PooledResult make_pooled_result(Method method, double estimate, double variance, long n_studies,
                                long n_total, double alpha) {
  PooledResult r;
  r.method = method;
  r.estimate = estimate;
  r.variance = variance;
  r.se = std::sqrt(variance);
  r.alpha = alpha;
  r.df = n_studies - 1;
  r.n_studies = n_studies;
  r.n_total = n_total;
  r.ci_z = wald_ci(estimate, variance, n_studies, alpha, CiFlavor::Z);
  r.ci_t = wald_ci(estimate, variance, n_studies, alpha, CiFlavor::T);
  return r;
}

}  // namespace divemeta
