#pragma once

#include <array>
#include <span>
#include <vector>

#include "divemeta/core.hpp"
#include "divemeta/dist.hpp"

namespace divemeta {

// Candidate families in tie-breaking order.
inline constexpr std::array<FamilyTag, 4> kQeCandidates = {FamilyTag::Normal, FamilyTag::LogNormal,
                                                           FamilyTag::Weibull, FamilyTag::Gamma};

// Losses closer than this are treated as equal; the earlier candidate wins.
inline constexpr double kQeTieTolerance = 1e-12;

struct DistFit {
  Family family;
  // Sum of squared differences between fitted and reported quartiles/median.
  double loss = 0.0;
  // Fitted density at the reported (not fitted) median.
  double density_at_median = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Quantile-matching fit of one family to (q1, median, q3).
// Throws DegenerateQuartiles if q1 == q3, QuartileOrderViolation if unordered,
// UnsupportedQuantiles if a positive-support family meets q1 <= 0, and
// OptimizerDiverged when no finite optimum is found.
DistFit fit_family(FamilyTag tag, double q1, double median, double q3);

// Fits every candidate that supports the data; families that cannot be fitted are skipped.
std::vector<DistFit> fit_candidates(double q1, double median, double q3);

// Minimum-loss candidate. Throws AllFamiliesFailed if none could be fitted.
DistFit select_family(double q1, double median, double q3);

struct QeStudyVariance {
  double var = 0.0;
  DistFit fit1;
  DistFit fit2;
};

// Within-study variance of the median difference from the selected fits.
QeStudyVariance qe_study_variance(const StudyRecord& record);

enum class IvwModel { FE, RE };

// Pools the QE-eligible subset of `records`. Ineligible records and records
// with a zero IQR are skipped with a warning.
PooledResult qe_pool(std::span<const StudyRecord> records, IvwModel model, double alpha = 0.05);

}  // namespace divemeta
