#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "divemeta/dist.hpp"
#include "divemeta/qe.hpp"
#include "divemeta/rng.hpp"
#include "divemeta/sim.hpp"
#include "test_support.hpp"

using namespace divemeta;
using divemeta::testing::arm;
using divemeta::testing::error_code;
using divemeta::testing::esd_records;

namespace {

constexpr double kZ75 = 0.6744897501960817;

// exp(2 + {-z75, 0, z75}): quartiles of LogNormal(2, 1).
const double kLnQ1 = std::exp(2.0 - kZ75);
const double kLnM = std::exp(2.0);
const double kLnQ3 = std::exp(2.0 + kZ75);

}  // namespace

TEST_CASE("normal fit to exact normal quartiles") {
  const auto fit = fit_family(FamilyTag::Normal, -kZ75, 0.0, kZ75);
  CHECK(fit.family.tag() == FamilyTag::Normal);
  CHECK(std::abs(fit.family.param(0)) < 1e-6);
  CHECK(fit.family.param(1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(fit.loss < 1e-10);
  CHECK(fit.density_at_median == doctest::Approx(pdf(fit.family, 0.0)));
}

TEST_CASE("log-normal fit to exact log-normal quartiles") {
  const auto fit = fit_family(FamilyTag::LogNormal, kLnQ1, kLnM, kLnQ3);
  CHECK(fit.family.param(0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(fit.family.param(1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(fit.loss < 1e-8);
  CHECK(fit.converged);

  const auto normal = fit_family(FamilyTag::Normal, kLnQ1, kLnM, kLnQ3);
  CHECK(normal.loss > 1e-3);
  CHECK(normal.loss > fit.loss);
}

TEST_CASE("density is taken at the reported median") {
  const auto fit = fit_family(FamilyTag::Normal, 1.0, 2.0, 4.0);
  CHECK(fit.loss > 0.0);
  CHECK(fit.density_at_median == pdf(fit.family, 2.0));
}

TEST_CASE("weibull and gamma fits recover exact quartiles") {
  const Family wb = Family::weibull(1.7, 12.0);
  const auto fw = fit_family(FamilyTag::Weibull, quantile(wb, 0.25), quantile(wb, 0.5), quantile(wb, 0.75));
  CHECK(fw.loss < 1e-10);
  CHECK(fw.family.param(0) == doctest::Approx(1.7).epsilon(1e-5));
  CHECK(fw.family.param(1) == doctest::Approx(12.0).epsilon(1e-5));

  const Family ga = Family::gamma(3.5, 0.4);
  const auto fg = fit_family(FamilyTag::Gamma, quantile(ga, 0.25), quantile(ga, 0.5), quantile(ga, 0.75));
  CHECK(fg.loss < 1e-10);
  CHECK(fg.family.param(0) == doctest::Approx(3.5).epsilon(1e-5));
  CHECK(fg.family.param(1) == doctest::Approx(0.4).epsilon(1e-5));
}

TEST_CASE("selection") {
  SUBCASE("exact log-normal quartiles select log-normal") {
    const auto fit = select_family(kLnQ1, kLnM, kLnQ3);
    CHECK(fit.family.tag() == FamilyTag::LogNormal);
  }
  SUBCASE("symmetric quartiles tie-break to normal") {
    CHECK(select_family(-kZ75, 0.0, kZ75).family.tag() == FamilyTag::Normal);
    CHECK(select_family(10 - kZ75, 10.0, 10 + kZ75).family.tag() == FamilyTag::Normal);
  }
  SUBCASE("negative q1 leaves only the normal family") {
    const auto fits = fit_candidates(-1.0, 0.5, 3.0);
    REQUIRE(fits.size() == 1);
    CHECK(fits[0].family.tag() == FamilyTag::Normal);
    CHECK(select_family(-1.0, 0.5, 3.0).family.tag() == FamilyTag::Normal);
  }
  SUBCASE("selected loss is no larger than any candidate") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int rep = 0; rep < 50; ++rep) {
      const double q1 = u(gen);
      const double m = q1 + u(gen);
      const double q3 = m + u(gen);
      const auto best = select_family(q1, m, q3);
      for (const auto& f : fit_candidates(q1, m, q3)) CHECK(best.loss <= f.loss + kQeTieTolerance);
    }
  }
}

TEST_CASE("fit errors") {
  CHECK(error_code([] { fit_family(FamilyTag::Normal, 2, 2, 2); }) == ErrorCode::DegenerateQuartiles);
  CHECK(error_code([] { fit_family(FamilyTag::Normal, 3, 2, 4); }) == ErrorCode::QuartileOrderViolation);
  CHECK(error_code([] { fit_family(FamilyTag::Gamma, 0, 2, 4); }) == ErrorCode::UnsupportedQuantiles);
  CHECK(error_code([] { fit_family(FamilyTag::Normal, std::nan(""), 2, 4); }) == ErrorCode::NonFiniteValue);
  StudyRecord no_q{"x", arm(10, 1), arm(10, 2)};
  CHECK(error_code([&] { qe_study_variance(no_q); }) == ErrorCode::NotQeEligible);
}

TEST_CASE("normal fit is equivariant under affine maps of the quartiles") {
  const double q1 = 1.0, m = 2.0, q3 = 4.0;
  const auto base = fit_family(FamilyTag::Normal, q1, m, q3);
  for (auto [a, b] : {std::pair{2.0, 0.0}, {0.5, -3.0}, {10.0, 100.0}, {0.01, 0.2}}) {
    const auto fit = fit_family(FamilyTag::Normal, a * q1 + b, a * m + b, a * q3 + b);
    CHECK(std::abs(fit.family.param(0) - (a * base.family.param(0) + b)) <= 1e-6 * std::max(1.0, std::abs(b)));
    CHECK(std::abs(fit.family.param(1) - a * base.family.param(1)) <= 1e-6 * std::max(1.0, a));
  }
}

TEST_CASE("per-group variance term for exact log-normal quartiles") {
  StudyRecord r{"ln", arm(100, kLnM, kLnQ1, kLnQ3), arm(100, kLnM, kLnQ1, kLnQ3)};
  const auto v = qe_study_variance(r);
  CHECK(std::abs(v.var / 2.0 - 0.857625735218596) < 1e-4);
  CHECK(v.fit1.family.tag() == FamilyTag::LogNormal);
}

TEST_CASE("copenhagen row yields a finite positive variance") {
  const auto v = qe_study_variance(esd_records()[3]);
  CHECK(std::isfinite(v.var));
  CHECK(v.var > 0.0);
}

TEST_CASE("qe pooling on esd") {
  const auto recs = esd_records();
  const auto re = qe_pool(recs, IvwModel::RE);
  CHECK(re.method == Method::QeRe);
  CHECK(re.n_studies == 2);
  CHECK(re.n_total == 147);
  CHECK(std::abs(re.estimate - -5.92) < 0.02);
  CHECK(std::abs(re.ci_z.lo - -22.54) < 0.1);
  CHECK(std::abs(re.ci_z.hi - 10.70) < 0.1);
  CHECK(std::abs(re.ci_t.lo - -113.67) < 1.0);
  CHECK(std::abs(re.ci_t.hi - 101.83) < 1.0);
  CHECK(re.warnings.size() == 6);

  const auto fe = qe_pool(recs, IvwModel::FE);
  const auto v1 = qe_study_variance(recs[0]).var;
  const auto v2 = qe_study_variance(recs[3]).var;
  CHECK(fe.variance == doctest::Approx(1.0 / (1.0 / v1 + 1.0 / v2)).epsilon(1e-14));
  CHECK(fe.method == Method::QeFe);
}

TEST_CASE("two identical studies give zero heterogeneity") {
  std::vector<StudyRecord> recs{{"a", arm(40, 10, 7, 15), arm(40, 12, 8, 18)},
                                {"b", arm(40, 10, 7, 15), arm(40, 12, 8, 18)}};
  const auto re = qe_pool(recs, IvwModel::RE);
  const auto fe = qe_pool(recs, IvwModel::FE);
  CHECK(re.tau2.value() == 0.0);
  CHECK(re.estimate == fe.estimate);
  CHECK(re.variance == fe.variance);
}

TEST_CASE("qe pooling eligibility") {
  std::vector<StudyRecord> none{{"a", arm(40, 10), arm(40, 12)}, {"b", arm(40, 10), arm(40, 12)}};
  CHECK(error_code([&] { qe_pool(none, IvwModel::FE); }) == ErrorCode::InsufficientQeEligibleStudies);

  std::vector<StudyRecord> zero_iqr{{"a", arm(40, 10, 7, 15), arm(40, 12, 8, 18)},
                                    {"flat", arm(40, 10, 10, 10), arm(40, 12, 8, 18)},
                                    {"c", arm(30, 11, 6, 14), arm(35, 12, 9, 20)}};
  const auto r = qe_pool(zero_iqr, IvwModel::RE);
  CHECK(r.n_studies == 2);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("flat") != std::string::npos);
}

// Large-sample quartiles from each candidate family should point back to it.
TEST_CASE("selection recovers the generating family from large samples") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int hits = 0, trials = 0;
  std::uint64_t seed = 1;
  for (FamilyTag tag : kQeCandidates) {
    for (int rep = 0; rep < 25; ++rep) {
      Family f = Family::normal(0, 1);
      switch (tag) {
        case FamilyTag::Normal: f = Family::normal(20 * u(gen) - 10, 0.5 + 4 * u(gen)); break;
        case FamilyTag::LogNormal: f = Family::lognormal(4 * u(gen) - 1, 0.6 + 0.6 * u(gen)); break;
        case FamilyTag::Weibull: f = Family::weibull(0.6 + 0.3 * u(gen), 1 + 10 * u(gen)); break;
        default: f = Family::gamma(2.0 + 2.0 * u(gen), 0.2 + 2 * u(gen)); break;
      }
      CounterStream s({seed++, 0, 0, Lane::Group1});
      auto x = sample(f, 200'000, s);
      std::sort(x.begin(), x.end());
      const auto fit = select_family(sample_quantile(x, 0.25), sample_quantile(x, 0.5), sample_quantile(x, 0.75));
      hits += fit.family.tag() == tag ? 1 : 0;
      ++trials;
    }
  }
  INFO("recovered ", hits, " of ", trials);
  CHECK(hits >= 0.95 * trials);
}
