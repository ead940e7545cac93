#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ri2d/harmonic.hpp"
#include "ri2d/lattice.hpp"
#include "ri2d/mathstat.hpp"
#include "ri2d/potential.hpp"
#include "ri2d/rng.hpp"
#include "ri2d/solver.hpp"
#include "ri2d/walks.hpp"

using namespace ri2d;

namespace {

const PotentialTable& table128() {
  static const PotentialTable t = PotentialTable::build(128);
  return t;
}

}  // namespace

TEST_SUITE("walks") {

TEST_CASE("hat step frequencies match the potential-weighted law") {
  const auto& t = table128();
  const Point p{3, 2};
  const auto nb = neighbors4(p);
  double w[4], total = 0;
  for (int i = 0; i < 4; ++i) {
    w[i] = t.a(nb[i]);
    total += w[i];
  }

  Rng rng(42, 7);
  const int n = 400000;
  std::vector<std::int64_t> counts(4, 0);
  for (int i = 0; i < n; ++i) {
    const Point q = hat_step(p, t, rng);
    const auto it = std::find(nb.begin(), nb.end(), q);
    REQUIRE(it != nb.end());
    ++counts[std::size_t(it - nb.begin())];
  }
  for (int i = 0; i < 4; ++i) {
    const double want = w[i] / total;
    const double got = double(counts[std::size_t(i)]) / n;
    CHECK(std::abs(got - want) < binomial_ci_halfwidth(want, n, 4.0));
  }

  // From a neighbour of the origin, the walk never lands on the origin.
  Rng rng2(42, 8);
  for (int i = 0; i < 100000; ++i)
    CHECK(hat_step({1, 0}, t, rng2) != Point{0, 0});

  CHECK_THROWS_AS(hat_step({0, 0}, t, rng), ConfigError);
}

TEST_CASE("hat one-step law approaches the plain walk far from the origin") {
  const auto& t = table128();
  const double tv2 = hat_step_tv({2, 0}, t);
  const double tv10 = hat_step_tv({10, 0}, t);
  const double tv50 = hat_step_tv({50, 0}, t);
  CHECK(tv10 < tv2);
  CHECK(tv50 < tv10);
  CHECK(tv50 < 0.01);
  CHECK_THROWS_AS(hat_step_tv({0, 0}, t), ConfigError);
}

TEST_CASE("plain-walk exit frequencies match the solver exit law") {
  const auto B = enumerate_ball(Ball::of({0, 0}, 4));
  const auto sys = AbsorbingSystem::build(B, srw_plane());
  const auto law = sys.exit_law({{{0, 0}, 1.0}});

  std::vector<Point> pts;
  std::vector<double> probs;
  for (const auto& [p, w] : law) {
    pts.push_back(p);
    probs.push_back(w);
  }

  Rng rng(2026, 3);
  const int n = 40000;
  std::vector<std::int64_t> counts(pts.size(), 0);
  const std::int64_t r2 = Ball::of({0, 0}, 4).r2floor;
  for (int i = 0; i < n; ++i) {
    Point p{0, 0};
    while (norm2(p) <= r2) p = srw_step(p, rng);
    const auto it = std::lower_bound(pts.begin(), pts.end(), p);
    REQUIRE(it != pts.end());
    REQUIRE(*it == p);
    ++counts[std::size_t(it - pts.begin())];
  }
  const auto res = chi_square_goodness(counts, probs);
  CHECK(res.pvalue > 1e-3);
}

TEST_CASE("torus excursion ladder keeps consistent books") {
  const Torus torus = Torus::of(41);
  const auto inner = enumerate_ball(Ball::of({0, 0}, 6));
  const auto outer_bd = internal_boundary(enumerate_ball(Ball::of({0, 0}, 14)));

  Rng rng(11, 0);
  const auto r = torus_excursions(torus, inner, outer_bd, 60000, {17, -12}, rng);
  REQUIRE(r.completed.size() > 4);
  std::int64_t prev_exit = -1;
  for (const auto& e : r.completed) {
    CHECK(sorted_contains(inner, e.entry));
    CHECK(sorted_contains(outer_bd, e.exit));
    CHECK(e.entry_time > prev_exit);
    CHECK(e.entry_time < e.exit_time);
    CHECK(e.exit_time <= r.horizon);
    prev_exit = e.exit_time;
  }
  CHECK(torus.wrap(r.final_position) == r.final_position);

  CHECK_THROWS_AS(
      torus_excursions(torus, inner, inner, 10, {0, 0}, rng),
      ConfigError);
  CHECK_THROWS_AS(
      torus_excursions(torus, inner, outer_bd, 10, {500, 0}, rng),
      ConfigError);
}

TEST_CASE("first torus excursion exits by the absorbing-system law") {
  const Torus torus = Torus::of(41);
  const auto inner = enumerate_ball(Ball::of({0, 0}, 6));
  const auto outer_bd = internal_boundary(enumerate_ball(Ball::of({0, 0}, 14)));
  const Point y{2, 1};

  // Exact exit law: free torus walk from y absorbed on the outer boundary.
  std::vector<Point> dom;
  for (const Point p : torus.enumerate())
    if (!sorted_contains(outer_bd, p)) dom.push_back(p);
  std::sort(dom.begin(), dom.end());
  const auto sys = AbsorbingSystem::build(dom, srw_torus(torus));
  const auto law = sys.exit_law({{y, 1.0}});

  std::vector<Point> pts;
  std::vector<double> probs;
  for (const auto& [p, w] : law) {
    pts.push_back(p);
    probs.push_back(w);
  }

  Rng rng(12, 0);
  const int n = 3000;
  std::vector<std::int64_t> counts(pts.size(), 0);
  for (int i = 0; i < n; ++i) {
    Rng child = rng.child(std::uint64_t(i));
    const auto r = torus_excursions(torus, inner, outer_bd, 40000, y, child);
    REQUIRE(!r.completed.empty());
    const Point e = r.completed.front().exit;
    const auto it = std::lower_bound(pts.begin(), pts.end(), e);
    REQUIRE(it != pts.end());
    REQUIRE(*it == e);
    ++counts[std::size_t(it - pts.begin())];
  }
  const auto res = chi_square_goodness(counts, probs);
  CHECK(res.pvalue > 1e-3);
}

TEST_CASE("hat trace reproduces the two-point capacity ratio") {
  const auto& t = table128();
  HatTraceSampler sampler(enumerate_ball(Ball::of({0, 0}, 5)), t);
  CHECK(std::abs(sampler.cap() -
                 capacity(enumerate_ball(Ball::of({0, 0}, 5)), t).value) <
        1e-8);

  // Rate identity: cap(window) * P[trace visits x] = cap({0, x}).
  const Point x{3, 4};
  const double want = capacity({{0, 0}, x}, t).value / sampler.cap();

  Rng rng(77, 0);
  const int n = 50000;
  int hits = 0;
  std::vector<Point> buf;
  for (int i = 0; i < n; ++i) {
    buf.clear();
    sampler.trace(sampler.sample_entry(rng), rng, buf);
    REQUIRE(!buf.empty());  // entry point is in the window
    bool sees_x = false;
    for (const Point p : buf) {
      CHECK(p != Point{0, 0});  // the conditioned walk never visits the origin
      if (p == x) sees_x = true;
    }
    if (sees_x) ++hits;
  }
  const double f = double(hits) / n;
  CHECK(std::abs(f - want) < binomial_ci_halfwidth(want, n, 4.0));
}

TEST_CASE("trace from a distant start escapes at the exact rate") {
  const auto& t = table128();
  HatTraceSampler sampler(enumerate_ball(Ball::of({0, 0}, 3)), t);
  const Point far{200, 0};
  const HatHitKernel hk(enumerate_ball(Ball::of({0, 0}, 3)), t);
  const double want = hk.hit_prob(far);

  Rng rng(78, 0);
  const int n = 20000;
  int touched = 0;
  std::vector<Point> buf;
  for (int i = 0; i < n; ++i) {
    buf.clear();
    sampler.trace(far, rng, buf);
    if (!buf.empty()) ++touched;
  }
  const double f = double(touched) / n;
  CHECK(std::abs(f - want) < binomial_ci_halfwidth(want, n, 4.0));

  CHECK_THROWS_AS(sampler.trace({0, 0}, rng, buf), ConfigError);
}

}  // TEST_SUITE
