#include "doctest.h"

#include <algorithm>

#include "ri2d/lattice.hpp"

using namespace ri2d;

TEST_SUITE("lattice") {

TEST_CASE("ball membership is exact integer arithmetic") {
  const Ball b = Ball::of({0, 0}, 5.0);
  CHECK(b.contains({3, 4}));   // 25 <= 25
  CHECK(b.contains({5, 0}));
  CHECK(!b.contains({4, 4}));  // 32 > 25
  const Ball tight = Ball::of({0, 0}, 4.9999999);
  CHECK(!tight.contains({3, 4}));  // floor(r^2) = 24
  const Ball off = Ball::of({7, -2}, 2.0);
  CHECK(off.contains({9, -2}));
  CHECK(!off.contains({9, -1}));  // dist^2 = 5 > 4
}

TEST_CASE("ball enumeration matches brute-force count") {
  // Oracle: direct double loop over the bounding square.
  std::int64_t brute = 0;
  for (int x = -50; x <= 50; ++x)
    for (int y = -50; y <= 50; ++y)
      if (std::int64_t(x) * x + std::int64_t(y) * y <= 2500) ++brute;
  CHECK(brute == 7845);  // frozen lattice-point count of the radius-50 disk

  const auto pts = enumerate_ball(Ball::of({0, 0}, 50.0));
  CHECK(std::int64_t(pts.size()) == brute);
  CHECK(std::is_sorted(pts.begin(), pts.end()));
  CHECK(std::adjacent_find(pts.begin(), pts.end()) == pts.end());
}

TEST_CASE("internal boundary of a small ball") {
  const auto pts = enumerate_ball(Ball::of({0, 0}, 1.0));
  REQUIRE(pts.size() == 5);
  const auto bd = internal_boundary(pts);
  CHECK(bd.size() == 4);  // all but the center
  CHECK(!sorted_contains(bd, {0, 0}));
}

TEST_CASE("ball_boundary agrees with enumerate + internal_boundary") {
  const Ball b = Ball::of({3, -1}, 20.0);
  auto direct = ball_boundary(b);
  auto via_set = internal_boundary(enumerate_ball(b));
  std::sort(direct.begin(), direct.end());
  std::sort(via_set.begin(), via_set.end());
  CHECK(direct == via_set);
}

TEST_CASE("annulus keeps the inner internal boundary") {
  const Annulus a = Annulus::of({0, 0}, 2.0, 4.0);
  CHECK(a.contains({2, 0}));    // on the inner boundary ring
  CHECK(!a.contains({1, 0}));   // strictly inside the inner ball
  CHECK(!a.contains({0, 0}));
  CHECK(a.contains({3, 0}));
  CHECK(a.contains({4, 0}));
  CHECK(!a.contains({5, 0}));
  const auto pts = enumerate_annulus(a);
  CHECK(std::is_sorted(pts.begin(), pts.end()));
  for (Point p : pts) CHECK(a.contains(p));
  // Every annulus point is in the outer ball and not strictly interior to
  // the inner ball.
  std::int64_t expect = 0;
  for (int x = -5; x <= 5; ++x)
    for (int y = -5; y <= 5; ++y) expect += a.contains({x, y}) ? 1 : 0;
  CHECK(std::int64_t(pts.size()) == expect);
}

TEST_CASE("torus wrap and neighbors") {
  const Torus t = Torus::of(5);
  CHECK(t.lo() == -2);
  CHECK(t.hi() == 2);
  CHECK(t.wrap({3, 0}) == Point{-2, 0});
  CHECK(t.wrap({-3, 7}) == Point{2, 2});
  const auto n = t.neighbors({2, 2});
  CHECK(std::count(n.begin(), n.end(), Point{-2, 2}) == 1);
  CHECK(std::count(n.begin(), n.end(), Point{2, -2}) == 1);
  CHECK(t.enumerate().size() == 25);

  const Torus even = Torus::of(6);
  CHECK(even.lo() == -3);
  CHECK(even.hi() == 2);
  CHECK(even.wrap({3, 0}) == Point{-3, 0});
}

TEST_CASE("resource guards reject runaway sizes") {
  CHECK_THROWS_AS(Ball::of({0, 0}, 2.0e7), ResourceError);
  CHECK_THROWS_AS(Ball::of({0, 0}, -1.0), ConfigError);
  CHECK_THROWS_AS(Annulus::of({0, 0}, 4.0, 2.0), ConfigError);
  CHECK_THROWS_AS(Torus::of(2), ConfigError);
}

}  // TEST_SUITE
