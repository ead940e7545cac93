#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "ri2d/rng.hpp"

using namespace ri2d;

TEST_SUITE("rng") {

TEST_CASE("philox known-answer vector, zero key zero counter") {
  Rng r(0, 0);
  CHECK(r.next_u32() == 0x6627e8d5u);
  CHECK(r.next_u32() == 0xe169c58du);
  CHECK(r.next_u32() == 0xbc57ac4cu);
  CHECK(r.next_u32() == 0x9b00dbd8u);
}

TEST_CASE("streams are deterministic and disjoint") {
  Rng a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 64; ++i) CHECK(a.next_u64() == b.next_u64());
  bool any_diff = false;
  Rng a2(42, 7);
  for (int i = 0; i < 64; ++i) any_diff |= (a2.next_u64() != c.next_u64());
  CHECK(any_diff);
  // Child streams derived from distinct indices differ.
  Rng p(9, 1);
  Rng c0 = p.child(0), c1 = p.child(1);
  bool child_diff = false;
  for (int i = 0; i < 64; ++i) child_diff |= (c0.next_u64() != c1.next_u64());
  CHECK(child_diff);
}

TEST_CASE("u01 lies in [0,1) and has the right mean") {
  Rng r(123, 0);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.u01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  // Var = 1/12, so 5 sigma over n samples:
  CHECK(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("below(n) is uniform over residues") {
  Rng r(77, 0);
  std::vector<int> counts(7, 0);
  const int n = 140000;
  for (int i = 0; i < n; ++i) ++counts[r.below(7)];
  for (int k = 0; k < 7; ++k) {
    const double expect = n / 7.0;
    CHECK(std::abs(counts[k] - expect) < 5.0 * std::sqrt(expect));
  }
  // Power-of-two path.
  std::vector<int> c2(8, 0);
  for (int i = 0; i < n; ++i) ++c2[r.below(8)];
  for (int k = 0; k < 8; ++k)
    CHECK(std::abs(c2[k] - n / 8.0) < 5.0 * std::sqrt(n / 8.0));
}

TEST_CASE("exponential and normal moments") {
  Rng r(5, 3);
  const int n = 200000;
  double se = 0.0, se2 = 0.0, sn = 0.0, sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = r.exponential();
    CHECK(e >= 0.0);
    se += e;
    se2 += e * e;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(se / n - 1.0) < 5.0 / std::sqrt(double(n)));       // sd 1
  CHECK(std::abs(se2 / n - 2.0) < 5.0 * std::sqrt(20.0 / n));       // sd sqrt(20)
  CHECK(std::abs(sn / n) < 5.0 / std::sqrt(double(n)));
  CHECK(std::abs(sn2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("poisson mean and variance, both sampling paths") {
  Rng r(11, 0);
  for (const double mean : {0.3, 4.0, 150.0}) {
    const int n = 60000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double k = double(r.poisson(mean));
      s += k;
      s2 += k * k;
    }
    const double m = s / n;
    const double v = s2 / n - m * m;
    CHECK(std::abs(m - mean) < 5.0 * std::sqrt(mean / n));
    CHECK(std::abs(v - mean) < 5.0 * std::sqrt((mean + 2.0 * mean * mean) / n));
  }
  CHECK(Rng(1, 1).poisson(0.0) == 0);
}

TEST_CASE("alias table reproduces weights") {
  Rng r(31, 0);
  const AliasTable t({1.0, 2.0, 3.0});
  std::vector<int> counts(3, 0);
  const int n = 120000;
  for (int i = 0; i < n; ++i) ++counts[t.sample(r)];
  const double w[3] = {1.0 / 6, 2.0 / 6, 3.0 / 6};
  for (int k = 0; k < 3; ++k) {
    const double expect = n * w[k];
    CHECK(std::abs(counts[k] - expect) < 5.0 * std::sqrt(expect));
  }
  CHECK_THROWS(AliasTable(std::vector<double>{}));
  CHECK_THROWS(AliasTable({0.0, 0.0}));
  CHECK_THROWS(AliasTable({1.0, -0.5}));
}

}  // TEST_SUITE
