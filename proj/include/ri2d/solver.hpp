#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ri2d/lattice.hpp"
#include "ri2d/potential.hpp"

namespace ri2d {

// Reversible nearest-neighbour kernel: transition P(p,q) = s(p,q) / mu(p)
// with s symmetric and mu the reversing measure.  Zero edge weight means the
// move is forbidden (used to keep the conditioned walk off the origin).
struct Stencil {
  std::function<double(Point)> mu;
  std::function<double(Point, Point)> s;
  std::function<std::vector<Point>(Point)> neighbors;
};

// Plane walk: mu = 1, s = 1/4 on lattice edges.
Stencil srw_plane();
// Same walk with torus-wrapped edges.
Stencil srw_torus(Torus t);
// Walk conditioned to avoid the origin forever: mu = a^2, s = a(p)a(q)/4.
// a(0) = 0 makes every edge into the origin vanish, so the origin can sit on
// a domain's rim without ever absorbing mass.  `table` must outlive the
// stencil and every system built from it.
Stencil hat_plane(const PotentialTable& table);

// Linear algebra for a walk absorbed on first exit from a finite domain.
// The operator T = diag(row sums of s) - s restricted to the domain is
// symmetric positive definite as long as some edge leaves the domain, which
// turns every absorption question into one symmetric solve:
//   hit probabilities   T h = s * 1_targets
//   Dirichlet data      T h = s * f
//   exit distribution   T z = start,  nu(b) = sum_k z_k s(k,b)
//   Green's function    G(x,y) = mu(y) [T^-1 e_y]_x
class AbsorbingSystem {
 public:
  enum class Method { kAuto, kDirect, kIterative };

  struct Stats {
    std::string method;       // "direct" or "iterative"
    std::int64_t unknowns = 0;
    std::int64_t boundary = 0;
    double assemble_seconds = 0;
  };

  static AbsorbingSystem build(std::vector<Point> domain, const Stencil& st,
                               double tol = 1e-12, Method method = Method::kAuto);

  const std::vector<Point>& domain() const;    // sorted unique interior points
  const std::vector<Point>& boundary() const;  // sorted absorbing points
  std::int64_t index_of(Point p) const;        // -1 when p is not interior
  double mu(Point p) const;
  const Stats& stats() const;

  // P_x[exit lands in targets] for every interior x; targets are boundary
  // points (entries that are not absorbing here contribute nothing).
  std::vector<double> hitting_before(const std::vector<Point>& targets) const;

  // h(x) = E_x[f(exit point)]; f is evaluated on the absorbing boundary.
  std::vector<double> boundary_value(
      const std::function<double(Point)>& f) const;

  // Distribution of the absorption point for a start measure carried by
  // interior points.  Returned sorted by point, masses summed per point.
  std::vector<std::pair<Point, double>> exit_law(
      const std::vector<std::pair<Point, double>>& start) const;

  // G(., y): expected visits to y before absorption, all starts at once.
  std::vector<double> green_column(Point y) const;

  // Raw symmetric solve T x = rhs for callers composing their own identities.
  std::vector<double> solve(const std::vector<double>& rhs) const;

  ~AbsorbingSystem();
  AbsorbingSystem(AbsorbingSystem&&) noexcept;
  AbsorbingSystem& operator=(AbsorbingSystem&&) noexcept;

 private:
  AbsorbingSystem();
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ri2d
