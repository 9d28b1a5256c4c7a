#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "divemeta/core.hpp"
#include "divemeta/dist.hpp"
#include "divemeta/rng.hpp"

namespace divemeta {

enum class SizePattern { Fixed, Varying };
enum class Outcome { Normal, SkewNormal, LogNormal };

std::string_view to_string(SizePattern p);
std::string_view to_string(Outcome o);

// One cell of the factorial simulation design.
struct SimScenario {
  int n_studies = 10;
  SizePattern size_pattern = SizePattern::Fixed;
  int avg_n = 100;
  Outcome outcome = Outcome::Normal;
  double i2 = 0.0;
  int replicates = 1000;
  std::uint64_t seed = 0;
  double alpha = 0.05;
};

// Throws InvalidScenario on out-of-range fields.
void validate_scenario(const SimScenario& s);

// Group-1 shift for the normal outcome, targeting ~60% power of a two-sample
// median comparison: (z_0.975 + z_0.60) * sqrt(pi / n).
double normal_shift(int avg_n);

// Data-generating distributions for both arms and their true medians.
struct OutcomeModel {
  Family group1;
  Family group2;
  double median1 = 0.0;
  double median2 = 0.0;

  double mu() const { return median1 - median2; }
};

OutcomeModel outcome_model(const SimScenario& s);

// tau^2 = I^2/(1 - I^2) * s2_typical with the unequal-size typical variance
// s2_typical = (N - 1) sum(w) / (sum(w)^2 - sum(w^2)), w = 1/sigma^2.
double tau2_from_i2(double i2, std::span<const double> sigma2);

struct ArmSizes {
  long n1 = 0;
  long n2 = 0;
  bool operator==(const ArmSizes&) const = default;
};

// Minimum group-1 size per study under the varying pattern.
inline constexpr long kBaselineGroupSize = 50;

// Fixed: every study (n, n). Varying: 50 per study plus a Dirichlet(1)-multinomial
// split of the remaining N*(avg_n - 50); group 2 mirrors group 1.
std::vector<ArmSizes> allocate_sizes(const SimScenario& s, CounterStream& stream);

struct ScenarioTruth {
  double mu = 0.0;
  double tau2 = 0.0;
  std::vector<double> sigma2;
  double v_target_dive = 0.0;
  double v_target_re = 0.0;
  double v_target_fe = 0.0;
};

ScenarioTruth analytic_truth(const SimScenario& s, const OutcomeModel& model, std::span<const ArmSizes> sizes);

// Sample quartiles use Hyndman-Fan type 8 (approximately median-unbiased).
inline constexpr int kSampleQuantileType = 8;

// Type-8 quantile of an ascending sample.
double sample_quantile(std::span<const double> sorted, double p);

// Draws one meta-analytic dataset: per study a random effect added to every
// group-1 observation, then medians and quartiles of both arms.
std::vector<StudyRecord> generate_replicate(const SimScenario& s, const OutcomeModel& model,
                                            const ScenarioTruth& truth, std::span<const ArmSizes> sizes,
                                            std::uint32_t replicate);

enum class SimMethod { DiVE = 0, QeRe = 1, QeFe = 2 };
inline constexpr std::array<SimMethod, 3> kSimMethods = {SimMethod::DiVE, SimMethod::QeRe, SimMethod::QeFe};
std::string_view to_string(SimMethod m);

struct MethodEstimate {
  double estimate = 0.0;
  double variance = 0.0;
};

struct ReplicateResult {
  ScenarioTruth truth;
  std::array<std::optional<MethodEstimate>, 3> estimates;

  double v_target(SimMethod m) const;
};

struct MethodSelection {
  bool dive = true;
  bool qe_re = true;
  bool qe_fe = true;

  bool any_qe() const { return qe_re || qe_fe; }
  bool enabled(SimMethod m) const;
};

ReplicateResult run_replicate(const SimScenario& s, const OutcomeModel& model, std::uint32_t replicate,
                              const MethodSelection& methods = {});

struct IntervalMetrics {
  double cp = 0.0;
  double aw = 0.0;
};

struct MethodMetrics {
  SimMethod method = SimMethod::DiVE;
  double pct_bias_point = 0.0;
  double pct_mse_point = 0.0;
  double pct_bias_var = 0.0;
  double pct_mse_var = 0.0;
  IntervalMetrics z;
  IntervalMetrics t;
  // Replicate-level percentage errors, in replicate order.
  std::vector<double> point_errors;
  std::vector<double> var_errors;
};

struct MetricsReport {
  SimScenario scenario;
  double mu = 0.0;
  std::vector<MethodMetrics> methods;

  const MethodMetrics& at(SimMethod m) const;
};

// Aggregates replicate results. Throws ZeroTruthDenominator if mu or a
// variance target is zero.
MetricsReport compute_metrics(std::span<const ReplicateResult> results, long n_studies, double alpha);

struct RunOptions {
  int workers = 1;
  MethodSelection methods;
};

// Runs every replicate and aggregates in replicate order. Output does not
// depend on the worker count. A failing replicate is rethrown as
// ReplicateFailed naming the lowest failing index.
MetricsReport run_scenario(const SimScenario& s, const RunOptions& opts = {});

}  // namespace divemeta
