#include "doctest.h"

#include <cmath>
#include <map>
#include <vector>

#include "ri2d/potential.hpp"
#include "ri2d/rng.hpp"
#include "ri2d/solver.hpp"

using namespace ri2d;

namespace {

double exit_mass_at(const std::vector<std::pair<Point, double>>& law, Point b) {
  double m = 0.0;
  for (const auto& [p, w] : law)
    if (p == b) m += w;
  return m;
}

double total_mass(const std::vector<std::pair<Point, double>>& law) {
  double m = 0.0;
  for (const auto& [p, w] : law) m += w;
  return m;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("single-point domain exits uniformly") {
  const auto sys = AbsorbingSystem::build({{0, 0}}, srw_plane());
  const auto law = sys.exit_law({{{0, 0}, 1.0}});
  REQUIRE(law.size() == 4);
  for (const auto& [p, w] : law) CHECK(w == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("exit law from the radius-1 ball matches the hand-solved chain") {
  // Absorbed on leaving {0, +-e1, +-e2}; from the center, each of the four
  // axis exits carries 1/12 and each diagonal exit 1/6 (solve the five-state
  // chain by symmetry: h = 1/16 + h/4).
  const auto sys =
      AbsorbingSystem::build(enumerate_ball(Ball::of({0, 0}, 1.0)), srw_plane());
  const auto law = sys.exit_law({{{0, 0}, 1.0}});
  CHECK(total_mass(law) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(exit_mass_at(law, {2, 0}) == doctest::Approx(1.0 / 12).epsilon(1e-12));
  CHECK(exit_mass_at(law, {0, -2}) == doctest::Approx(1.0 / 12).epsilon(1e-12));
  CHECK(exit_mass_at(law, {1, 1}) == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(exit_mass_at(law, {-1, 1}) == doctest::Approx(1.0 / 6).epsilon(1e-12));

  // Expected visits to the center before exit: return probability 1/4.
  const auto g = sys.green_column({0, 0});
  CHECK(g[std::size_t(sys.index_of({0, 0}))] ==
        doctest::Approx(4.0 / 3).epsilon(1e-12));

  // Monte Carlo cross-check of the same law.
  Rng rng(99, 0);
  std::map<Point, int> counts;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    Point p{0, 0};
    while (sys.index_of(p) >= 0) {
      const auto nb = neighbors4(p);
      p = nb[rng.below(4)];
    }
    ++counts[p];
  }
  for (const auto& [b, c] : counts) {
    const double expect = n * exit_mass_at(law, b);
    CHECK(std::abs(c - expect) < 5.0 * std::sqrt(expect) + 1.0);
  }
}

TEST_CASE("full-boundary hitting probability is one everywhere") {
  const auto ball = enumerate_ball(Ball::of({0, 0}, 9.0));
  const auto sys = AbsorbingSystem::build(ball, srw_plane());
  const auto h = sys.hitting_before(sys.boundary());
  for (const double v : h) CHECK(std::abs(v - 1.0) < 1e-12);

  // Same property for the conditioned walk on a domain rimming the origin:
  // edges into the origin carry zero weight, so no mass leaks there.
  const auto table = PotentialTable::build(64);
  auto dom = enumerate_ball(Ball::of({0, 0}, 6.0));
  dom.erase(std::remove(dom.begin(), dom.end(), Point{0, 0}), dom.end());
  const auto hat = AbsorbingSystem::build(dom, hat_plane(table));
  for (const Point b : hat.boundary()) CHECK(!(b == Point{0, 0}));
  const auto hh = hat.hitting_before(hat.boundary());
  for (const double v : hh) CHECK(std::abs(v - 1.0) < 1e-11);
}

TEST_CASE("exit law and hitting probability are mutually consistent") {
  const auto sys =
      AbsorbingSystem::build(enumerate_ball(Ball::of({0, 0}, 5.0)), srw_plane());
  const Point x{2, 1};
  const auto law = sys.exit_law({{x, 1.0}});
  for (const auto& [b, w] : law) {
    const auto h = sys.hitting_before({b});
    CHECK(std::abs(h[std::size_t(sys.index_of(x))] - w) < 1e-12);
  }
}

TEST_CASE("green column reproduces the classical potential-kernel identity") {
  // For a walk absorbed outside D:  G_D(x,y) = E_x[a(exit - y)] - a(x - y).
  const auto table = PotentialTable::build(128);
  const auto dom = enumerate_ball(Ball::of({0, 0}, 12.0));
  const auto sys = AbsorbingSystem::build(dom, srw_plane());
  for (const Point y : {Point{0, 0}, Point{3, -2}, Point{-7, 1}}) {
    const auto g = sys.green_column(y);
    const auto ha =
        sys.boundary_value([&](Point b) { return table.a(b - y); });
    for (const Point x : {Point{0, 0}, Point{1, 0}, Point{-4, -4}, Point{10, 0}}) {
      const auto i = std::size_t(sys.index_of(x));
      CHECK(std::abs(g[i] - (ha[i] - table.a(x - y))) < 1e-3);
    }
  }
}

TEST_CASE("conditioned-walk green function is reversible in a-squared") {
  const auto table = PotentialTable::build(64);
  const Annulus ann = Annulus::of({0, 0}, 1.0, 8.0);
  const auto sys = AbsorbingSystem::build(enumerate_annulus(ann), hat_plane(table));
  const Point x{3, 0}, y{-2, 4};
  const auto gx = sys.green_column(x);
  const auto gy = sys.green_column(y);
  const double gxy = gy[std::size_t(sys.index_of(x))];
  const double gyx = gx[std::size_t(sys.index_of(y))];
  CHECK(std::abs(gxy / sys.mu(y) - gyx / sys.mu(x)) < 1e-12);
}

TEST_CASE("torus absorption conserves mass and both solvers agree") {
  const Torus t = Torus::of(21);
  std::vector<Point> dom;
  const Point hole{5, -5};
  for (const Point p : t.enumerate())
    if (!(p == hole)) dom.push_back(p);
  const auto direct = AbsorbingSystem::build(dom, srw_torus(t), 1e-12,
                                             AbsorbingSystem::Method::kDirect);
  CHECK(direct.boundary().size() == 1);
  const auto h = direct.hitting_before({hole});
  for (const double v : h) CHECK(std::abs(v - 1.0) < 1e-10);

  const auto iter = AbsorbingSystem::build(dom, srw_torus(t), 1e-12,
                                           AbsorbingSystem::Method::kIterative);
  CHECK(iter.stats().method == "iterative");
  const auto gd = direct.green_column({0, 0});
  const auto gi = iter.green_column({0, 0});
  double worst = 0.0;
  for (std::size_t i = 0; i < gd.size(); ++i)
    worst = std::max(worst, std::abs(gd[i] - gi[i]));
  CHECK(worst < 1e-8);
}

TEST_CASE("degenerate configurations are rejected") {
  CHECK_THROWS_AS(AbsorbingSystem::build({}, srw_plane()), ConfigError);
  const Torus t = Torus::of(9);
  CHECK_THROWS_AS(AbsorbingSystem::build(t.enumerate(), srw_torus(t)),
                  ConfigError);  // nothing absorbs
  const auto table = PotentialTable::build(32);
  CHECK_THROWS_AS(
      AbsorbingSystem::build(enumerate_ball(Ball::of({0, 0}, 2.0)),
                             hat_plane(table)),
      ConfigError);  // origin has zero reversing measure
}

}  // TEST_SUITE
