#include "doctest.h"

#include <cmath>
#include <vector>

#include "ri2d/mathstat.hpp"
#include "ri2d/rng.hpp"

using namespace ri2d;

TEST_SUITE("mathstat") {

TEST_CASE("regularized gamma functions hit chi-square table values") {
  // Classical 5% critical points of the chi-square distribution.
  CHECK(std::abs(regularized_gamma_q(0.5, 3.841 / 2) - 0.05) < 5e-4);
  CHECK(std::abs(regularized_gamma_q(5.0, 18.307 / 2) - 0.05) < 5e-4);
  // P + Q = 1 across both evaluation branches.
  for (const double a : {0.5, 2.0, 10.0, 40.0})
    for (const double x : {0.1, 1.0, 5.0, 60.0})
      CHECK(std::abs(regularized_gamma_p(a, x) + regularized_gamma_q(a, x) - 1.0) < 1e-12);
  CHECK(regularized_gamma_p(1.0, 0.0) == 0.0);
}

TEST_CASE("chi-square goodness of fit on exact counts") {
  // Counts exactly matching expectations give statistic 0, p = 1.
  auto g = chi_square_goodness({100, 200, 300}, {1.0 / 6, 2.0 / 6, 3.0 / 6});
  CHECK(g.stat == doctest::Approx(0.0));
  CHECK(g.pvalue == doctest::Approx(1.0));
  // A gross violation is detected.
  auto bad = chi_square_goodness({600, 0, 0}, {1.0 / 6, 2.0 / 6, 3.0 / 6});
  CHECK(bad.pvalue < 1e-12);
  // Sparse tail cells get pooled instead of blowing up the statistic.
  auto pooled = chi_square_goodness({1000, 2, 1, 0}, {0.995, 0.003, 0.0015, 0.0005});
  CHECK(pooled.pooled_cells > 0);
  CHECK(pooled.pvalue > 1e-6);
}

TEST_CASE("ks two-sample sanity") {
  Rng r(2024, 0);
  std::vector<double> a(4000), b(4000), c(4000);
  for (auto& v : a) v = r.normal();
  for (auto& v : b) v = r.normal();
  for (auto& v : c) v = r.normal() + 0.5;
  CHECK(ks_two_sample(a, b).pvalue > 1e-3);   // same law
  CHECK(ks_two_sample(a, c).pvalue < 1e-8);   // shifted law
}

TEST_CASE("normal cdf and tail quantile") {
  CHECK(std::abs(normal_cdf(0.0) - 0.5) < 1e-15);
  CHECK(std::abs(normal_cdf(1.959963985) - 0.975) < 1e-9);
  CHECK(std::abs(normal_upper_quantile(0.025) - 1.959963985) < 1e-6);
  CHECK(std::abs(normal_upper_quantile(1e-8) - 5.612001244) < 1e-5);
  // Round trip at several tails.
  for (const double t : {0.25, 0.05, 1e-3, 1e-6}) {
    const double z = normal_upper_quantile(t);
    CHECK(std::abs((1.0 - normal_cdf(z)) - t) < 1e-9 + 1e-6 * t);
  }
}

TEST_CASE("linear fit recovers an exact line") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 10; ++i) {
    xs.push_back(double(i));
    ys.push_back(3.5 * i - 2.0);
  }
  const auto f = linear_fit(xs, ys);
  CHECK(f.slope == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK_THROWS(linear_fit({1.0}, {2.0}));
  CHECK_THROWS(linear_fit({1.0, 1.0}, {2.0, 3.0}));
}

TEST_CASE("quantile interpolates order statistics") {
  std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
  CHECK(quantile(v, 0.0) == doctest::Approx(1.0));
  CHECK(quantile(v, 1.0) == doctest::Approx(4.0));
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
}

TEST_CASE("binomial confidence half-width") {
  // z * sqrt(p(1-p)/n) with the default z = 3.
  CHECK(binomial_ci_halfwidth(0.5, 10000) == doctest::Approx(3.0 * 0.005));
  CHECK(binomial_ci_halfwidth(0.0, 100) > 0.0);  // never degenerate at the edge
}

}  // TEST_SUITE
