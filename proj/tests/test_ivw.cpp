#include <doctest.h>

#include <cmath>
#include <random>

#include "divemeta/ivw.hpp"
#include "test_support.hpp"

using namespace divemeta;
using divemeta::testing::error_code;

TEST_CASE("fixed-effect hand oracles") {
  const auto a = fe_pool({{0, 2}, {1, 1}});
  CHECK(a.estimate == doctest::Approx(1.0));
  CHECK(a.variance == doctest::Approx(0.5));
  CHECK(a.method == Method::IvwFe);

  const auto b = fe_pool({{0, 2}, {1, 3}});
  CHECK(b.estimate == doctest::Approx(0.5));
  CHECK(b.variance == doctest::Approx(0.75));

  const auto single = fe_pool({{4.2}, {0.3}});
  CHECK(single.estimate == doctest::Approx(4.2));
  CHECK(single.variance == doctest::Approx(0.3));
}

TEST_CASE("DerSimonian-Laird hand oracles") {
  const auto a = dl_tau2({{0, 2}, {1, 1}});
  CHECK(a.q_stat == doctest::Approx(2.0));
  CHECK(a.tau2 == doctest::Approx(1.0));
  CHECK(a.df == 1);

  const auto b = dl_tau2({{0, 1}, {1, 1}});
  CHECK(b.q_stat == doctest::Approx(0.5));
  CHECK(b.tau2 == 0.0);
  CHECK(b.tau2_untruncated == doctest::Approx(-0.5));

  const auto c = dl_tau2({{3, 3, 3}, {1, 2, 0.5}});
  CHECK(c.q_stat == doctest::Approx(0.0));
  CHECK(c.tau2 == 0.0);

  CHECK(error_code([] { dl_tau2({{1.0}, {1.0}}); }) == ErrorCode::NeedTwoStudies);
}

TEST_CASE("random-effects hand oracles and reductions") {
  const auto a = re_pool({{0, 2}, {1, 1}}, 1.0);
  CHECK(a.estimate == doctest::Approx(1.0));
  CHECK(a.variance == doctest::Approx(1.0));
  CHECK(a.method == Method::IvwRe);

  const IvwInput in{{0.3, -1.2, 2.5, 0.9}, {0.4, 1.1, 0.7, 2.0}};
  const auto fe = fe_pool(in);
  const auto re0 = re_pool(in, 0.0);
  CHECK(re0.estimate == fe.estimate);
  CHECK(re0.variance == fe.variance);

  const auto huge = re_pool(in, 1e9);
  CHECK(huge.estimate == doctest::Approx((0.3 - 1.2 + 2.5 + 0.9) / 4).epsilon(1e-6));
  for (double w : huge.weights) CHECK(w == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("invalid inputs") {
  CHECK(error_code([] { fe_pool({{1, 2}, {1}}); }) == ErrorCode::LengthMismatch);
  CHECK(error_code([] { fe_pool({{1, 2}, {1, 0}}); }) == ErrorCode::NonPositiveVariance);
}

TEST_CASE("properties on random inputs") {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> norm(0.0, 3.0);
  std::uniform_real_distribution<double> var(0.05, 4.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rep % 15;
    IvwInput in;
    for (std::size_t i = 0; i < n; ++i) {
      in.effects.push_back(norm(gen));
      in.within_var.push_back(var(gen));
    }

    // Q as the pairwise double sum: sum_{i<j} w_i w_j (y_i - y_j)^2 / sum(w).
    double sw = 0.0, pair = 0.0;
    for (std::size_t i = 0; i < n; ++i) sw += 1.0 / in.within_var[i];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = in.effects[i] - in.effects[j];
        pair += d * d / (in.within_var[i] * in.within_var[j]);
      }
    }
    const auto h = dl_tau2(in);
    CHECK(h.q_stat == doctest::Approx(pair / sw).epsilon(1e-10));
    CHECK(h.tau2 >= 0.0);

    IvwInput shifted = in;
    for (auto& y : shifted.effects) y += 12.5;
    const auto hs = dl_tau2(shifted);
    CHECK(hs.q_stat == doctest::Approx(h.q_stat).epsilon(1e-8));
    CHECK(hs.tau2 == doctest::Approx(h.tau2).epsilon(1e-8));

    IvwInput scaled = in;
    for (auto& v : scaled.within_var) v *= 3.7;
    const auto fe = fe_pool(in);
    const auto fes = fe_pool(scaled);
    CHECK(fes.estimate == doctest::Approx(fe.estimate).epsilon(1e-12));
    CHECK(fes.variance == doctest::Approx(3.7 * fe.variance).epsilon(1e-12));

    double prev = 0.0;
    for (double t2 : {0.0, 0.01, 0.1, 0.5, 1.0, 10.0, 100.0}) {
      const double v = re_pool(in, t2).variance;
      CHECK(v >= prev);
      prev = v;
    }
  }
}
