#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "ri2d/potential.hpp"

using namespace ri2d;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent oracle: a(x) = sum_k [p_k(0) - p_k(x)] with p_k the k-step
// transition weight of the simple walk, computed by dynamic programming on a
// window wide enough that escaping mass is negligible.  Consecutive partial
// sums are averaged to cancel the parity oscillation, then one Richardson
// step removes the remaining O(1/K) tail.
class SeriesOracle {
 public:
  explicit SeriesOracle(const std::vector<Point>& targets, int base_k)
      : targets_(targets), base_k_(base_k) {
    const int steps = 2 * base_k + 1;
    const int w = int(5.0 * std::sqrt(double(steps))) + 1;
    const int side = 2 * w + 1;
    std::vector<double> cur(std::size_t(side) * side, 0.0), nxt(cur);
    auto at = [&](std::vector<double>& v, int x, int y) -> double& {
      return v[std::size_t(x + w) * side + (y + w)];
    };
    at(cur, 0, 0) = 1.0;
    partial_.assign(targets.size(), std::vector<double>(steps + 1, 0.0));
    std::vector<double> s(targets.size(), 0.0);
    for (int k = 0; k <= steps; ++k) {
      for (std::size_t t = 0; t < targets.size(); ++t) {
        s[t] += at(cur, 0, 0) - at(cur, targets[t].x, targets[t].y);
        partial_[t][std::size_t(k)] = s[t];
      }
      if (k == steps) break;
      std::fill(nxt.begin(), nxt.end(), 0.0);
      for (int x = -w; x <= w; ++x)
        for (int y = -w; y <= w; ++y) {
          const double m = at(cur, x, y);
          if (m == 0.0) continue;
          if (x > -w) at(nxt, x - 1, y) += 0.25 * m;
          if (x < w) at(nxt, x + 1, y) += 0.25 * m;
          if (y > -w) at(nxt, x, y - 1) += 0.25 * m;
          if (y < w) at(nxt, x, y + 1) += 0.25 * m;
        }
      cur.swap(nxt);
    }
  }

  double value(std::size_t t) const {
    auto paired = [&](int k) {
      return 0.5 * (partial_[t][std::size_t(k)] + partial_[t][std::size_t(k) + 1]);
    };
    return 2.0 * paired(2 * base_k_) - paired(base_k_);
  }

 private:
  std::vector<Point> targets_;
  int base_k_;
  std::vector<std::vector<double>> partial_;
};

}  // namespace

TEST_SUITE("potential") {

TEST_CASE("closed-form values at small arguments") {
  const auto t = PotentialTable::build(64);
  CHECK(t.a({0, 0}) == 0.0);
  CHECK(std::abs(t.a({1, 0}) - 1.0) < 5e-4);
  CHECK(std::abs(t.a({1, 1}) - 4.0 / kPi) < 5e-4);
  CHECK(std::abs(t.a({2, 0}) - (4.0 - 8.0 / kPi)) < 5e-4);
  // Diagonal values are partial sums of the odd harmonic series.
  CHECK(std::abs(t.a({2, 2}) - 16.0 / (3.0 * kPi)) < 5e-4);
  CHECK(std::abs(t.a({3, 3}) - (4.0 / kPi) * (1.0 + 1.0 / 3 + 1.0 / 5)) < 5e-4);
}

TEST_CASE("origin defect emerges as a(1,0) and interior rows are harmonic") {
  const auto t = PotentialTable::build(64);
  CHECK(t.origin_defect() == doctest::Approx(t.a({1, 0})).epsilon(1e-12));
  CHECK(std::abs(t.origin_defect() - 1.0) < 5e-4);
  CHECK(t.max_harmonicity_defect() < 1e-10);
}

TEST_CASE("eightfold symmetry is exact by construction") {
  const auto t = PotentialTable::build(32);
  CHECK(t.a({-3, 2}) == t.a({2, 3}));
  CHECK(t.a({5, -7}) == t.a({7, 5}));
  CHECK(t.a({0, 9}) == t.a({9, 0}));
}

TEST_CASE("far lookups fall back to the asymptotic form") {
  const auto t = PotentialTable::build(32);
  const auto in = t.a_lookup({10, 10});
  CHECK(in.from_table);
  const auto out = t.a_lookup({40, 0});
  CHECK(!out.from_table);
  CHECK(out.value == a_asymptotic({40, 0}));
  // Near the table edge the two representations agree to O(R^-2).
  const auto edge = t.a_lookup({31, 0});
  CHECK(edge.from_table);
  CHECK(std::abs(edge.value - a_asymptotic({31, 0})) < 2e-3);
  // Far-field constant matches its closed form.
  CHECK(kPotentialFarConstant ==
        doctest::Approx((2.0 * std::numbers::egamma + std::log(8.0)) / kPi)
            .epsilon(1e-15));
}

TEST_CASE("series oracle confirms the boundary-value solve") {
  const std::vector<Point> pts = {{1, 0}, {1, 1}, {2, 1}, {5, 0}, {3, 3}};
  const SeriesOracle oracle(pts, 512);
  const auto t = PotentialTable::build(64);
  for (std::size_t i = 0; i < pts.size(); ++i)
    CHECK(std::abs(oracle.value(i) - t.a(pts[i])) < 3e-3);
}

TEST_CASE("direct and iterative solves agree") {
  const auto d = PotentialTable::build(64, 1e-12, PotentialTable::Method::kDirect);
  const auto it = PotentialTable::build(64, 1e-12, PotentialTable::Method::kIterative);
  CHECK(d.build_info().method == "direct");
  CHECK(it.build_info().method == "iterative");
  double worst = 0.0;
  for (int x = 0; x < 64; ++x)
    for (int y = 0; y <= x; ++y)
      if (std::int64_t(x) * x + std::int64_t(y) * y < 64 * 64)
        worst = std::max(worst, std::abs(d.a({x, y}) - it.a({x, y})));
  CHECK(worst < 1e-9);
}

TEST_CASE("cache round-trip is bitwise and corruption is refused") {
  const fs::path dir =
      fs::temp_directory_path() / ("ri2d_pot_test_" + std::to_string(std::rand()));
  fs::create_directories(dir);
  const auto t = PotentialTable::build(32);
  const fs::path file = dir / "pot.bin";
  t.save(file);
  const auto back = PotentialTable::load(file);
  CHECK(back.R() == 32);
  for (int x = 0; x < 32; ++x)
    for (int y = 0; y <= x; ++y)
      if (std::int64_t(x) * x + std::int64_t(y) * y < 32 * 32)
        CHECK(back.a({x, y}) == t.a({x, y}));

  // Flip one payload byte; the checksum must catch it.
  {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(64);
    char c;
    f.seekg(64);
    f.read(&c, 1);
    c = char(c ^ 0x5a);
    f.seekp(64);
    f.write(&c, 1);
  }
  CHECK_THROWS_AS(PotentialTable::load(file), ResourceError);

  // load_or_build rebuilds on a miss and then hits its own cache.
  const auto first = PotentialTable::load_or_build(dir, 16);
  const auto second = PotentialTable::load_or_build(dir, 16);
  CHECK(first.a({1, 0}) == second.a({1, 0}));
  std::error_code ec;
  fs::remove_all(dir, ec);
}

}  // TEST_SUITE
