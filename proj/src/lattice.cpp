#include "ri2d/lattice.hpp"

#include <algorithm>

namespace ri2d {

std::string to_string(Point p) {
  return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

Ball Ball::of(Point center, double radius) {
  if (!(radius >= 0.0)) throw ConfigError("ball radius must be >= 0");
  if (radius > 1.0e7) throw ResourceError("ball radius above resource cap");
  Ball b;
  b.center = center;
  b.radius = radius;
  b.r2floor = std::int64_t(std::floor(radius * radius));
  return b;
}

Annulus Annulus::of(Point center, double inner_radius, double outer_radius) {
  if (!(inner_radius >= 0.0) || !(outer_radius > inner_radius))
    throw ConfigError("annulus requires 0 <= inner < outer");
  return Annulus{Ball::of(center, inner_radius), Ball::of(center, outer_radius)};
}

bool Annulus::contains(Point p) const {
  if (!outer.contains(p)) return false;
  if (!inner.contains(p)) return true;
  for (Point q : neighbors4(p))
    if (!inner.contains(q)) return true;  // on the inner internal boundary
  return false;
}

Torus Torus::of(std::int32_t side) {
  if (side < 3) throw ConfigError("torus side must be >= 3");
  if (std::int64_t(side) * side > kMaxDomainPoints)
    throw ResourceError("torus site count above resource cap");
  return Torus{side};
}

Point Torus::wrap(Point p) const {
  auto m = [this](std::int64_t v) {
    std::int64_t half = side / 2;
    std::int64_t r = (v + half) % side;
    if (r < 0) r += side;
    return std::int32_t(r - half);
  };
  return {m(p.x), m(p.y)};
}

std::array<Point, 4> Torus::neighbors(Point p) const {
  auto n = neighbors4(p);
  for (Point& q : n) q = wrap(q);
  return n;
}

std::vector<Point> Torus::enumerate() const {
  std::vector<Point> pts;
  pts.reserve(std::size_t(site_count()));
  for (std::int32_t x = lo(); x <= hi(); ++x)
    for (std::int32_t y = lo(); y <= hi(); ++y) pts.push_back({x, y});
  return pts;
}

std::vector<Point> enumerate_ball(const Ball& b) {
  const double est = 3.2 * (b.radius + 1.0) * (b.radius + 1.0);
  if (est > double(kMaxDomainPoints))
    throw ResourceError("ball enumeration above resource cap");
  std::vector<Point> pts;
  pts.reserve(std::size_t(est) + 8);
  const std::int32_t r = std::int32_t(std::floor(b.radius));
  for (std::int32_t dx = -r; dx <= r; ++dx) {
    // Exact integer re-check per point; the sqrt only prunes the scan range.
    const std::int64_t rem = b.r2floor - std::int64_t(dx) * dx;
    if (rem < 0) continue;
    const std::int32_t ymax = std::int32_t(std::floor(std::sqrt(double(rem)) + 0.5));
    for (std::int32_t dy = -ymax - 1; dy <= ymax + 1; ++dy) {
      Point p{b.center.x + dx, b.center.y + dy};
      if (b.contains(p)) pts.push_back(p);
    }
  }
  return pts;  // lexicographic by construction
}

std::vector<Point> enumerate_annulus(const Annulus& a) {
  std::vector<Point> pts;
  const double est = 3.2 * (a.outer.radius + 1.0) * (a.outer.radius + 1.0) -
                     3.0 * a.inner.radius * a.inner.radius;
  if (est > double(kMaxDomainPoints))
    throw ResourceError("annulus enumeration above resource cap");
  pts.reserve(std::size_t(std::max(est, 16.0)));
  const std::int32_t r = std::int32_t(std::floor(a.outer.radius));
  for (std::int32_t dx = -r; dx <= r; ++dx)
    for (std::int32_t dy = -r; dy <= r; ++dy) {
      Point p{a.outer.center.x + dx, a.outer.center.y + dy};
      if (a.contains(p)) pts.push_back(p);
    }
  return pts;
}

bool sorted_contains(const std::vector<Point>& sorted_set, Point p) {
  auto it = std::lower_bound(sorted_set.begin(), sorted_set.end(), p);
  return it != sorted_set.end() && *it == p;
}

std::vector<Point> internal_boundary(const std::vector<Point>& sorted_set) {
  std::vector<Point> bd;
  for (Point p : sorted_set)
    for (Point q : neighbors4(p))
      if (!sorted_contains(sorted_set, q)) {
        bd.push_back(p);
        break;
      }
  return bd;
}

std::vector<Point> ball_boundary(const Ball& b) {
  std::vector<Point> bd;
  const std::int32_t r = std::int32_t(std::floor(b.radius));
  for (std::int32_t dx = -r; dx <= r; ++dx) {
    const std::int64_t rem = b.r2floor - std::int64_t(dx) * dx;
    if (rem < 0) continue;
    const std::int32_t ymax = std::int32_t(std::floor(std::sqrt(double(rem)) + 0.5));
    for (std::int32_t dy = -ymax - 1; dy <= ymax + 1; ++dy) {
      Point p{b.center.x + dx, b.center.y + dy};
      if (!b.contains(p)) continue;
      bool edge = false;
      for (Point q : neighbors4(p))
        if (!b.contains(q)) {
          edge = true;
          break;
        }
      if (edge) bd.push_back(p);
    }
  }
  return bd;
}

}  // namespace ri2d
