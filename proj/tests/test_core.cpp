#include <doctest.h>

#include <cmath>
#include <limits>

#include "divemeta/core.hpp"
#include "test_support.hpp"

using namespace divemeta;
using divemeta::testing::arm;
using divemeta::testing::error_code;
using divemeta::testing::esd_records;

TEST_CASE("esd records validate unchanged") {
  const auto recs = esd_records();
  CHECK(validate_studies(recs) == recs);
  CHECK(total_participants(recs) == 875);
}

TEST_CASE("validation is idempotent") {
  const auto once = validate_studies(esd_records());
  CHECK(validate_studies(once) == once);
}

TEST_CASE("effects are group 1 minus group 2") {
  const auto eff = effects_of(esd_records());
  const std::vector<double> expected{-15, -4, -1, 2, -6, -9, -11, 2};
  CHECK(eff == expected);
}

TEST_CASE("qe eligibility needs both quartiles in both arms") {
  const auto recs = esd_records();
  int eligible = 0;
  for (const auto& r : recs) eligible += r.qe_eligible() ? 1 : 0;
  CHECK(eligible == 2);
  CHECK(recs[0].qe_eligible());
  CHECK(recs[3].qe_eligible());

  StudyRecord half{"x", {10, 1.0, 0.5, std::nullopt}, arm(10, 1.0, 0.5, 2.0)};
  CHECK_FALSE(half.qe_eligible());
}

TEST_CASE("validation errors") {
  SUBCASE("empty") { CHECK(error_code([] { validate_studies({}); }) == ErrorCode::EmptyInput); }
  SUBCASE("single record cannot be pooled") {
    CHECK(error_code([] { validate_studies({{"a", arm(10, 1), arm(10, 2)}}); }) == ErrorCode::EmptyInput);
  }
  SUBCASE("q1 above median") {
    std::vector<StudyRecord> recs{{"a", arm(10, 15, 22, 30), arm(10, 2)}, {"b", arm(10, 1), arm(10, 2)}};
    CHECK(error_code([&] { validate_studies(recs); }) == ErrorCode::QuartileOrderViolation);
  }
  SUBCASE("median above q3") {
    std::vector<StudyRecord> recs{{"a", arm(10, 1), arm(10, 5, 1, 4)}, {"b", arm(10, 1), arm(10, 2)}};
    CHECK(error_code([&] { validate_studies(recs); }) == ErrorCode::QuartileOrderViolation);
  }
  SUBCASE("lone q1 is still ordered against the median") {
    std::vector<StudyRecord> recs{{"a", {10, 15.0, 22.0, std::nullopt}, arm(10, 2)}, {"b", arm(10, 1), arm(10, 2)}};
    CHECK(error_code([&] { validate_studies(recs); }) == ErrorCode::QuartileOrderViolation);
  }
  SUBCASE("non-positive size") {
    std::vector<StudyRecord> recs{{"a", arm(0, 1), arm(10, 2)}, {"b", arm(10, 1), arm(10, 2)}};
    CHECK(error_code([&] { validate_studies(recs); }) == ErrorCode::NonPositiveSize);
  }
  SUBCASE("non-finite median") {
    std::vector<StudyRecord> recs{{"a", arm(10, std::nan("")), arm(10, 2)}, {"b", arm(10, 1), arm(10, 2)}};
    CHECK(error_code([&] { validate_studies(recs); }) == ErrorCode::NonFiniteValue);
  }
  SUBCASE("duplicate id") {
    std::vector<StudyRecord> recs{{"a", arm(10, 1), arm(10, 2)}, {"a", arm(11, 1), arm(10, 2)}};
    CHECK(error_code([&] { validate_studies(recs); }) == ErrorCode::DuplicateStudyId);
  }
}

TEST_CASE("zero effects are ordinary data") {
  std::vector<StudyRecord> recs{{"a", arm(10, 3), arm(10, 3)}, {"b", arm(12, 1), arm(10, 1)}};
  CHECK(validate_studies(recs).size() == 2);
  CHECK(effects_of(recs) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("weight vector normalizes and guards dominance") {
  const std::vector<double> raw{1, 1, 2};
  CHECK(error_code([&] { WeightVector::from_raw(raw); }) == ErrorCode::DominantStudy);

  const std::vector<double> ok{2, 3, 5, 4};
  const auto w = WeightVector::from_raw(ok);
  CHECK(w.size() == 4);
  CHECK(w[2] == doctest::Approx(5.0 / 14.0));
  CHECK(w.max() == doctest::Approx(5.0 / 14.0));
  CHECK(w.argmax() == 2);
  double sum = 0.0;
  for (double x : w.values()) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));

  const std::vector<double> neg{1, -1, 3};
  CHECK(error_code([&] { WeightVector::from_raw(neg); }) == ErrorCode::InvalidWeights);
  const std::vector<double> zero{0, 0};
  CHECK(error_code([&] { WeightVector::from_raw(zero); }) == ErrorCode::InvalidWeights);
  const std::vector<double> inf{1, std::numeric_limits<double>::infinity()};
  CHECK(error_code([&] { WeightVector::from_raw(inf); }) == ErrorCode::InvalidWeights);
}

TEST_CASE("pooled result fills se and both intervals") {
  const auto r = make_pooled_result(Method::DiVE, 1.0, 4.0, 5, 100, 0.05);
  CHECK(r.se == doctest::Approx(2.0));
  CHECK(r.df == 4);
  CHECK(r.ci_z.lo == doctest::Approx(1.0 - 1.959963984540054 * 2.0));
  // t(4) 97.5% quantile 2.776445105197793
  CHECK(r.ci_t.hi == doctest::Approx(1.0 + 2.776445105197793 * 2.0).epsilon(1e-12));
  CHECK(r.ci_t.width() > r.ci_z.width());
  CHECK(r.ci_z.contains(1.0));
}
