#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ri2d {

// Errors that map to distinct process exit codes in the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Point {
  std::int32_t x = 0;
  std::int32_t y = 0;
  friend bool operator==(const Point&, const Point&) = default;
  // Lexicographic (x, then y); all deterministic enumerations use this order.
  friend auto operator<=>(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }

inline std::int64_t norm2(Point p) {
  return std::int64_t(p.x) * p.x + std::int64_t(p.y) * p.y;
}
inline std::int64_t dist2(Point a, Point b) { return norm2(a - b); }
inline double norm(Point p) { return std::sqrt(double(norm2(p))); }

inline std::array<Point, 4> neighbors4(Point p) {
  return {Point{p.x + 1, p.y}, Point{p.x - 1, p.y}, Point{p.x, p.y + 1},
          Point{p.x, p.y - 1}};
}

std::string to_string(Point p);

struct PointHash {
  std::size_t operator()(Point p) const noexcept {
    // splitmix64 finalizer over the packed coordinates.
    std::uint64_t z = (std::uint64_t(std::uint32_t(p.x)) << 32) | std::uint32_t(p.y);
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return std::size_t(z ^ (z >> 31));
  }
};

// Closed lattice ball { p : |p - center| <= radius }.  Membership compares the
// integer |p - center|^2 against floor(radius^2), so real-valued radii never
// produce floating-point ties.
struct Ball {
  Point center;
  double radius = 0.0;
  std::int64_t r2floor = 0;

  static Ball of(Point center, double radius);
  bool contains(Point p) const { return dist2(p, center) <= r2floor; }
};

// A(inner, outer) around a common center: the closed outer ball minus the
// open interior of the inner ball.  Points of the inner ball stay in when
// they lie on its internal boundary (have a 4-neighbor outside the inner
// ball); everything strictly inside is removed.
struct Annulus {
  Ball inner;
  Ball outer;

  static Annulus of(Point center, double inner_radius, double outer_radius);
  bool contains(Point p) const;
};

// Square torus of a given side, identified with the square centered at the
// origin: canonical coordinates lie in [-floor(side/2), side-1-floor(side/2)].
struct Torus {
  std::int32_t side = 0;

  static Torus of(std::int32_t side);
  std::int32_t lo() const { return -(side / 2); }
  std::int32_t hi() const { return side - 1 - side / 2; }
  Point wrap(Point p) const;
  std::array<Point, 4> neighbors(Point p) const;
  std::int64_t site_count() const { return std::int64_t(side) * side; }
  std::vector<Point> enumerate() const;
};

// Guard for domain enumeration; generous but keeps runaway radii from
// exhausting memory.
inline constexpr std::int64_t kMaxDomainPoints = 200'000'000;

std::vector<Point> enumerate_ball(const Ball& b);
std::vector<Point> enumerate_annulus(const Annulus& a);

// Points of the (sorted, unique) set with at least one 4-neighbor outside it.
std::vector<Point> internal_boundary(const std::vector<Point>& sorted_set);
// Internal boundary of a ball, without enumerating its interior.
std::vector<Point> ball_boundary(const Ball& b);

bool sorted_contains(const std::vector<Point>& sorted_set, Point p);

}  // namespace ri2d
