#include "divemeta/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "divemeta/dive.hpp"
#include "divemeta/ivw.hpp"
#include "divemeta/qe.hpp"

namespace divemeta {

std::string_view to_string(SizePattern p) { return p == SizePattern::Fixed ? "fixed" : "varying"; }

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Normal: return "normal";
    case Outcome::SkewNormal: return "skew-normal";
    case Outcome::LogNormal: return "lognormal";
  }
  return "unknown";
}

std::string_view to_string(SimMethod m) {
  switch (m) {
    case SimMethod::DiVE: return "DiVE";
    case SimMethod::QeRe: return "QE-RE";
    case SimMethod::QeFe: return "QE-FE";
  }
  return "unknown";
}

void validate_scenario(const SimScenario& s) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidScenario, msg); };
  if (s.n_studies < 2) fail(fmt::format("n_studies={} must be >= 2", s.n_studies));
  if (s.avg_n < 1) fail(fmt::format("avg_n={} must be >= 1", s.avg_n));
  if (!(s.i2 >= 0.0 && s.i2 < 1.0)) fail(fmt::format("i2={} outside [0,1)", s.i2));
  if (s.replicates < 1) fail(fmt::format("replicates={} must be >= 1", s.replicates));
  if (!(s.alpha > 0.0 && s.alpha < 1.0)) fail(fmt::format("alpha={} outside (0,1)", s.alpha));
  if (s.size_pattern == SizePattern::Varying && s.avg_n < kBaselineGroupSize) {
    throw Error(ErrorCode::InfeasibleBaseline,
                fmt::format("avg_n={} is below the per-study baseline of {}", s.avg_n, kBaselineGroupSize));
  }
}

double normal_shift(int avg_n) {
  const double z = normal_quantile(0.975) + normal_quantile(0.60);
  return z * std::sqrt(std::numbers::pi / static_cast<double>(avg_n));
}

OutcomeModel outcome_model(const SimScenario& s) {
  switch (s.outcome) {
    case Outcome::Normal: {
      const double c = normal_shift(s.avg_n);
      return {Family::normal(5.0 + c, 1.0), Family::normal(5.0, 1.0), 5.0 + c, 5.0};
    }
    case Outcome::SkewNormal: {
      const Family g1 = Family::skew_normal(5.0, 5.0, 5.0);
      const Family g2 = Family::skew_normal(5.0, 10.0, 10.0);
      return {g1, g2, median(g1), median(g2)};
    }
    case Outcome::LogNormal: {
      const Family g1 = Family::lognormal(2.0, 1.0);
      const Family g2 = Family::lognormal(3.0, 2.0);
      return {g1, g2, std::exp(2.0), std::exp(3.0)};
    }
  }
  throw Error(ErrorCode::InvalidScenario, "unknown outcome");
}

double tau2_from_i2(double i2, std::span<const double> sigma2) {
  if (!(i2 >= 0.0 && i2 < 1.0)) throw Error(ErrorCode::InvalidScenario, "i2 must lie in [0,1)");
  if (sigma2.size() < 2) throw Error(ErrorCode::NeedTwoStudies, "typical variance needs two studies");
  if (i2 == 0.0) return 0.0;
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  for (double v : sigma2) {
    if (!(v > 0.0)) throw Error(ErrorCode::NonPositiveVariance, "sigma^2 must be positive");
    sum_w += 1.0 / v;
    sum_w2 += 1.0 / (v * v);
  }
  const double n = static_cast<double>(sigma2.size());
  const double s2_typical = (n - 1.0) * sum_w / (sum_w * sum_w - sum_w2);
  return i2 / (1.0 - i2) * s2_typical;
}

std::vector<ArmSizes> allocate_sizes(const SimScenario& s, CounterStream& stream) {
  const auto n_studies = static_cast<std::size_t>(s.n_studies);
  if (s.size_pattern == SizePattern::Fixed) {
    return std::vector<ArmSizes>(n_studies, ArmSizes{s.avg_n, s.avg_n});
  }
  const long total = static_cast<long>(s.n_studies) * s.avg_n;
  const long remainder = total - kBaselineGroupSize * s.n_studies;
  if (remainder < 0) {
    throw Error(ErrorCode::InfeasibleBaseline, fmt::format("U - 50N = {} < 0", remainder));
  }

  // Dirichlet(1,...,1) via normalized unit exponentials.
  std::vector<double> cumulative(n_studies);
  double acc = 0.0;
  for (auto& c : cumulative) {
    acc += stream.standard_exponential();
    c = acc;
  }
  for (auto& c : cumulative) c /= acc;
  cumulative.back() = 1.0;

  std::vector<long> extra(n_studies, 0);
  for (long k = 0; k < remainder; ++k) {
    const double u = stream.uniform();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    ++extra[static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                              static_cast<std::ptrdiff_t>(n_studies) - 1))];
  }
  std::vector<ArmSizes> sizes(n_studies);
  for (std::size_t i = 0; i < n_studies; ++i) {
    const long n = kBaselineGroupSize + extra[i];
    sizes[i] = {n, n};
  }
  return sizes;
}

ScenarioTruth analytic_truth(const SimScenario& s, const OutcomeModel& model, std::span<const ArmSizes> sizes) {
  ScenarioTruth t;
  t.mu = model.mu();
  const double f1 = pdf(model.group1, model.median1);
  const double f2 = pdf(model.group2, model.median2);
  if (!(f1 > 0.0) || !(f2 > 0.0)) {
    throw Error(ErrorCode::ZeroDensityAtMedian, "population density at a true median is zero");
  }
  t.sigma2.reserve(sizes.size());
  for (const auto& a : sizes) {
    t.sigma2.push_back(1.0 / (4.0 * static_cast<double>(a.n1) * f1 * f1) +
                       1.0 / (4.0 * static_cast<double>(a.n2) * f2 * f2));
  }
  t.tau2 = tau2_from_i2(s.i2, t.sigma2);

  double total_n = 0.0;
  double sum_w_fe = 0.0;
  double sum_w_re = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    total_n += static_cast<double>(sizes[i].n1 + sizes[i].n2);
    sum_w_fe += 1.0 / t.sigma2[i];
    sum_w_re += 1.0 / (t.sigma2[i] + t.tau2);
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double total_var = t.sigma2[i] + t.tau2;
    const double w_s = static_cast<double>(sizes[i].n1 + sizes[i].n2) / total_n;
    const double w_fe = (1.0 / t.sigma2[i]) / sum_w_fe;
    t.v_target_dive += w_s * w_s * total_var;
    t.v_target_fe += w_fe * w_fe * total_var;
  }
  t.v_target_re = 1.0 / sum_w_re;
  return t;
}

double sample_quantile(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "empty sample");
  const double h = (static_cast<double>(n) + 1.0 / 3.0) * p + 1.0 / 3.0;
  if (h <= 1.0) return sorted.front();
  if (h >= static_cast<double>(n)) return sorted.back();
  const double j = std::floor(h);
  const auto idx = static_cast<std::size_t>(j) - 1;
  return sorted[idx] + (h - j) * (sorted[idx + 1] - sorted[idx]);
}

namespace {

GroupSummary summarize(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  GroupSummary g;
  g.n = static_cast<long>(values.size());
  g.median = sample_quantile(values, 0.5);
  g.q1 = sample_quantile(values, 0.25);
  g.q3 = sample_quantile(values, 0.75);
  return g;
}

}  // namespace

std::vector<StudyRecord> generate_replicate(const SimScenario& s, const OutcomeModel& model,
                                            const ScenarioTruth& truth, std::span<const ArmSizes> sizes,
                                            std::uint32_t replicate) {
  const double tau = std::sqrt(truth.tau2);
  std::vector<StudyRecord> out;
  out.reserve(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const auto study = static_cast<std::uint32_t>(i);
    CounterStream effect_stream({s.seed, replicate, study, Lane::RandomEffect});
    CounterStream g1_stream({s.seed, replicate, study, Lane::Group1});
    CounterStream g2_stream({s.seed, replicate, study, Lane::Group2});

    const double delta = tau * effect_stream.standard_normal();
    std::vector<double> g1 = sample(model.group1, static_cast<std::size_t>(sizes[i].n1), g1_stream);
    for (auto& x : g1) x += delta;
    std::vector<double> g2 = sample(model.group2, static_cast<std::size_t>(sizes[i].n2), g2_stream);

    out.push_back({fmt::format("S{}", i + 1), summarize(std::move(g1)), summarize(std::move(g2))});
  }
  return out;
}

double ReplicateResult::v_target(SimMethod m) const {
  switch (m) {
    case SimMethod::DiVE: return truth.v_target_dive;
    case SimMethod::QeRe: return truth.v_target_re;
    case SimMethod::QeFe: return truth.v_target_fe;
  }
  return 0.0;
}

bool MethodSelection::enabled(SimMethod m) const {
  switch (m) {
    case SimMethod::DiVE: return dive;
    case SimMethod::QeRe: return qe_re;
    case SimMethod::QeFe: return qe_fe;
  }
  return false;
}

ReplicateResult run_replicate(const SimScenario& s, const OutcomeModel& model, std::uint32_t replicate,
                              const MethodSelection& methods) {
  CounterStream alloc_stream({s.seed, replicate, 0, Lane::Allocation});
  const std::vector<ArmSizes> sizes = allocate_sizes(s, alloc_stream);

  ReplicateResult res;
  res.truth = analytic_truth(s, model, sizes);
  const std::vector<StudyRecord> studies = generate_replicate(s, model, res.truth, sizes, replicate);

  if (methods.dive) {
    const WeightVector w = sample_size_weights(studies);
    const std::vector<double> y = effects_of(studies);
    res.estimates[0] = MethodEstimate{pool(y, w), dive_variance(y, w).variance};
  }
  if (methods.any_qe()) {
    // QE-RE and QE-FE share the per-study fits.
    IvwInput input;
    for (const auto& st : studies) {
      input.effects.push_back(st.effect());
      input.within_var.push_back(qe_study_variance(st).var);
    }
    if (methods.qe_re) {
      const PooledResult re = re_pool(input, dl_tau2(input).tau2, s.alpha);
      res.estimates[1] = MethodEstimate{re.estimate, re.variance};
    }
    if (methods.qe_fe) {
      const PooledResult fe = fe_pool(input, s.alpha);
      res.estimates[2] = MethodEstimate{fe.estimate, fe.variance};
    }
  }
  return res;
}

const MethodMetrics& MetricsReport::at(SimMethod m) const {
  for (const auto& mm : methods) {
    if (mm.method == m) return mm;
  }
  throw Error(ErrorCode::InvalidParams, fmt::format("method {} was not run", to_string(m)));
}

MetricsReport compute_metrics(std::span<const ReplicateResult> results, long n_studies, double alpha) {
  if (results.empty()) throw Error(ErrorCode::EmptyInput, "no replicates to score");
  MetricsReport report;
  report.mu = results.front().truth.mu;
  if (report.mu == 0.0) {
    throw Error(ErrorCode::ZeroTruthDenominator, "true pooled difference is zero");
  }
  const double r_count = static_cast<double>(results.size());

  for (SimMethod m : kSimMethods) {
    const auto idx = static_cast<std::size_t>(m);
    if (!results.front().estimates[idx]) continue;
    MethodMetrics mm;
    mm.method = m;
    for (std::size_t r = 0; r < results.size(); ++r) {
      const auto& rep = results[r];
      if (!rep.estimates[idx]) {
        throw Error(ErrorCode::InvalidParams, fmt::format("replicate {} lacks {}", r, to_string(m)));
      }
      const MethodEstimate& e = *rep.estimates[idx];
      const double target = rep.v_target(m);
      if (target == 0.0) throw Error(ErrorCode::ZeroTruthDenominator, "variance target is zero");

      const double point_rel = (e.estimate - rep.truth.mu) / rep.truth.mu;
      const double var_rel = (e.variance - target) / target;
      mm.point_errors.push_back(100.0 * point_rel);
      mm.var_errors.push_back(100.0 * var_rel);
      mm.pct_bias_point += point_rel;
      mm.pct_mse_point += point_rel * point_rel;
      mm.pct_bias_var += var_rel;
      mm.pct_mse_var += var_rel * var_rel;

      const Interval z = wald_ci(e.estimate, e.variance, n_studies, alpha, CiFlavor::Z);
      const Interval t = wald_ci(e.estimate, e.variance, n_studies, alpha, CiFlavor::T);
      mm.z.cp += z.contains(rep.truth.mu) ? 1.0 : 0.0;
      mm.t.cp += t.contains(rep.truth.mu) ? 1.0 : 0.0;
      mm.z.aw += z.width();
      mm.t.aw += t.width();
    }
    mm.pct_bias_point *= 100.0 / r_count;
    mm.pct_mse_point *= 100.0 / r_count;
    mm.pct_bias_var *= 100.0 / r_count;
    mm.pct_mse_var *= 100.0 / r_count;
    mm.z.cp /= r_count;
    mm.t.cp /= r_count;
    mm.z.aw /= r_count;
    mm.t.aw /= r_count;
    report.methods.push_back(std::move(mm));
  }
  return report;
}

MetricsReport run_scenario(const SimScenario& s, const RunOptions& opts) {
  validate_scenario(s);
  const OutcomeModel model = outcome_model(s);
  const auto count = static_cast<std::size_t>(s.replicates);
  std::vector<ReplicateResult> results(count);
  std::vector<std::exception_ptr> failures(count);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t r = next++; r < count; r = next++) {
      try {
        results[r] = run_replicate(s, model, static_cast<std::uint32_t>(r), opts.methods);
      } catch (...) {
        failures[r] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, opts.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t r = 0; r < count; ++r) {
    if (!failures[r]) continue;
    try {
      std::rethrow_exception(failures[r]);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ReplicateFailed, fmt::format("replicate {}: {}", r, e.what()));
    }
  }
  MetricsReport report = compute_metrics(results, s.n_studies, s.alpha);
  report.scenario = s;
  return report;
}

}  // namespace divemeta
