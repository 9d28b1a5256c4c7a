#include "divemeta/qe.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include <fmt/format.h>

#include "divemeta/ivw.hpp"
#include "divemeta/optim.hpp"

namespace divemeta {

namespace {

// IQR of a unit normal.
constexpr double kNormalIqr = 1.3489795003921634;
// ln(ln 4 / ln(4/3)): log ratio of Weibull quartile exponents.
const double kWeibullQuartileLogRatio = std::log(std::log(4.0) / std::log(4.0 / 3.0));

constexpr double kRestartPerturbation = 0.05;

// Maps unconstrained optimizer coordinates to family parameters.
// Positive parameters live on the log scale.
std::array<double, 2> to_params(FamilyTag tag, std::span<const double> z) {
  switch (tag) {
    case FamilyTag::Normal:
    case FamilyTag::LogNormal:
      return {z[0], std::exp(z[1])};
    default:
      return {std::exp(z[0]), std::exp(z[1])};
  }
}

std::array<double, 2> to_coords(FamilyTag tag, const std::array<double, 2>& p) {
  switch (tag) {
    case FamilyTag::Normal:
    case FamilyTag::LogNormal:
      return {p[0], std::log(p[1])};
    default:
      return {std::log(p[0]), std::log(p[1])};
  }
}

bool usable(const std::array<double, 2>& p) {
  return std::isfinite(p[0]) && std::isfinite(p[1]) && p[1] > 0.0;
}

std::array<double, 2> starting_params(FamilyTag tag, double q1, double m, double q3) {
  const double iqr = q3 - q1;
  switch (tag) {
    case FamilyTag::Normal:
      return {m, iqr / kNormalIqr};
    case FamilyTag::LogNormal:
      return {std::log(m), std::log(q3 / q1) / kNormalIqr};
    case FamilyTag::Weibull: {
      const double shape = kWeibullQuartileLogRatio / std::log(q3 / q1);
      const std::array<double, 2> p{shape, m / std::pow(std::numbers::ln2, 1.0 / shape)};
      if (usable(p) && p[0] > 0.0) return p;
      return {1.0, m / std::numbers::ln2};
    }
    case FamilyTag::Gamma: {
      // Treat the median as the mean and IQR/1.349 as the standard deviation.
      const double sd = iqr / kNormalIqr;
      const double shape = (m / sd) * (m / sd);
      const std::array<double, 2> p{shape, shape / m};
      if (usable(p) && p[0] > 0.0) return p;
      return {1.0, std::numbers::ln2 / m};
    }
    case FamilyTag::SkewNormal:
      break;
  }
  throw Error(ErrorCode::InvalidParams, "family is not a QE candidate");
}

// Initial simplex steps: a tenth of the spread for locations, 0.1 on log scales.
std::vector<double> starting_steps(FamilyTag tag, const std::array<double, 2>& start) {
  if (tag == FamilyTag::Normal) return {0.1 * start[1], 0.1};
  return {0.1, 0.1};
}

double quartile_loss(FamilyTag tag, std::span<const double> z, double q1, double m, double q3) {
  const auto p = to_params(tag, z);
  if (!usable(p)) return std::numeric_limits<double>::infinity();
  try {
    const Family f = Family::make(tag, p);
    const double d1 = quantile(f, 0.25) - q1;
    const double d2 = quantile(f, 0.50) - m;
    const double d3 = quantile(f, 0.75) - q3;
    return d1 * d1 + d2 * d2 + d3 * d3;
  } catch (const std::exception&) {
    return std::numeric_limits<double>::infinity();
  }
}

void check_quartiles(double q1, double m, double q3) {
  if (!std::isfinite(q1) || !std::isfinite(m) || !std::isfinite(q3)) {
    throw Error(ErrorCode::NonFiniteValue, "quartiles must be finite");
  }
  if (q1 > m || m > q3) {
    throw Error(ErrorCode::QuartileOrderViolation, fmt::format("({}, {}, {}) is not ordered", q1, m, q3));
  }
  if (q1 == q3) throw Error(ErrorCode::DegenerateQuartiles, "q1 equals q3");
}

}  // namespace

DistFit fit_family(FamilyTag tag, double q1, double median, double q3) {
  check_quartiles(q1, median, q3);
  if (positive_support(tag) && q1 <= 0.0) {
    throw Error(ErrorCode::UnsupportedQuantiles,
                fmt::format("{} needs positive quartiles, got q1={}", to_string(tag), q1));
  }
  const auto start = starting_params(tag, q1, median, q3);
  const auto start_z = to_coords(tag, start);
  auto objective = [&](std::span<const double> z) { return quartile_loss(tag, z, q1, median, q3); };

  NelderMeadOptions opts;
  opts.steps = starting_steps(tag, start);
  NelderMeadResult best = nelder_mead(objective, start_z, opts);
  int iterations = best.iterations;
  if (!best.converged) {
    // One restart from a perturbed copy of the best point so far.
    std::vector<double> restart = best.x;
    for (std::size_t i = 0; i < restart.size(); ++i) {
      restart[i] += kRestartPerturbation * (i == 0 && tag == FamilyTag::Normal ? start[1] : 1.0);
    }
    NelderMeadResult again = nelder_mead(objective, restart, opts);
    iterations += again.iterations;
    if (again.value <= best.value) best = std::move(again);
  }
  if (!std::isfinite(best.value)) {
    throw Error(ErrorCode::OptimizerDiverged, fmt::format("{} fit found no finite loss", to_string(tag)));
  }

  const Family family = Family::make(tag, to_params(tag, best.x));
  const double density = pdf(family, median);
  if (!(density > 0.0) || !std::isfinite(density)) {
    throw Error(ErrorCode::ZeroDensityAtMedian,
                fmt::format("{} fit has density {} at the median", to_string(tag), density));
  }
  return DistFit{family, best.value, density, iterations, best.converged};
}

std::vector<DistFit> fit_candidates(double q1, double median, double q3) {
  check_quartiles(q1, median, q3);
  std::vector<DistFit> fits;
  for (FamilyTag tag : kQeCandidates) {
    try {
      fits.push_back(fit_family(tag, q1, median, q3));
    } catch (const Error& e) {
      const auto code = e.code();
      if (code != ErrorCode::UnsupportedQuantiles && code != ErrorCode::OptimizerDiverged &&
          code != ErrorCode::ZeroDensityAtMedian) {
        throw;
      }
    }
  }
  return fits;
}

DistFit select_family(double q1, double median, double q3) {
  const std::vector<DistFit> fits = fit_candidates(q1, median, q3);
  if (fits.empty()) {
    throw Error(ErrorCode::AllFamiliesFailed, fmt::format("no family fits ({}, {}, {})", q1, median, q3));
  }
  const DistFit* best = &fits.front();
  for (const auto& f : fits) {
    if (f.loss < best->loss - kQeTieTolerance) best = &f;
  }
  return *best;
}

QeStudyVariance qe_study_variance(const StudyRecord& record) {
  if (!record.qe_eligible()) {
    throw Error(ErrorCode::NotQeEligible, fmt::format("study '{}' lacks quartiles", record.id));
  }
  const auto& g1 = record.group1;
  const auto& g2 = record.group2;
  QeStudyVariance out{0.0, select_family(*g1.q1, g1.median, *g1.q3), select_family(*g2.q1, g2.median, *g2.q3)};
  auto term = [](long n, double f) { return 1.0 / (4.0 * static_cast<double>(n) * f * f); };
  out.var = term(g1.n, out.fit1.density_at_median) + term(g2.n, out.fit2.density_at_median);
  return out;
}

PooledResult qe_pool(std::span<const StudyRecord> records, IvwModel model, double alpha) {
  IvwInput input;
  std::vector<std::string> ids;
  std::vector<std::string> warnings;
  long n_total = 0;
  for (const auto& r : records) {
    if (!r.qe_eligible()) {
      warnings.push_back(not_qe_eligible_warning(r.id));
      continue;
    }
    if (*r.group1.q1 == *r.group1.q3 || *r.group2.q1 == *r.group2.q3) {
      warnings.push_back(fmt::format("study '{}' has a zero IQR and is excluded from QE", r.id));
      continue;
    }
    const QeStudyVariance v = qe_study_variance(r);
    input.effects.push_back(r.effect());
    input.within_var.push_back(v.var);
    ids.push_back(r.id);
    n_total += r.total_n();
  }
  if (input.effects.size() < 2) {
    throw Error(ErrorCode::InsufficientQeEligibleStudies,
                fmt::format("QE needs two studies with quartiles in both arms, found {}", input.effects.size()));
  }

  const double tau2 = model == IvwModel::RE ? dl_tau2(input).tau2 : 0.0;
  PooledResult res = re_pool(input, tau2, alpha);
  res.method = model == IvwModel::RE ? Method::QeRe : Method::QeFe;
  res.n_total = n_total;
  res.study_ids = std::move(ids);
  res.warnings = std::move(warnings);
  return res;
}

}  // namespace divemeta
