#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ri2d/lattice.hpp"
#include "ri2d/potential.hpp"

namespace ri2d {

// Nonnegative weights on a sorted finite support.
struct MeasureOnSet {
  std::vector<Point> support;
  std::vector<double> weight;

  double total() const;
  double at(Point p) const;  // 0 when p is outside the support
  void normalize();          // ConfigError when total mass is not positive
};

// Total-variation distance between two measures (taken over the union of
// supports; both should be normalized for the usual interpretation).
double tv_distance(const MeasureOnSet& a, const MeasureOnSet& b);

// Radial far-field value (2/pi) ln r + far constant; the r^-1 correction is
// part of the consumers' error certificates.
double a_radial(double r);

// Dense saddle-point system over the internal boundary of a finite set:
//   [ K  1 ] [u]   [rhs]       K_vw = a(v - w)
//   [ 1' 0 ] [l] = [ s ]
// One LU factorization answers the harmonic-measure problem (rhs = 0, s = 1,
// multiplier = -capacity) and gives the exact entrance law from any outside
// point z (rhs_v = a(z - v), s = 1, solution = the law itself).
class EntranceKernel {
 public:
  EntranceKernel(std::vector<Point> set, const PotentialTable& table);
  ~EntranceKernel();
  EntranceKernel(EntranceKernel&&) noexcept;
  EntranceKernel& operator=(EntranceKernel&&) noexcept;

  const std::vector<Point>& set() const;       // sorted input set
  const std::vector<Point>& boundary() const;  // internal boundary, sorted
  const std::vector<double>& hm() const;       // probability on boundary()
  double robin() const;                        // = capacity when 0 is in the set

  // P_z[first visited point of the set is boundary()[i]], exact for any z
  // outside the set.  Sums to 1 (recurrence).
  std::vector<double> entrance_law(Point z) const;

  // Low-level resolvent solve [[K,1],[1',0]][u;l] = [rhs;1] against the
  // factored saddle matrix; returns (u, l).  rhs must have boundary() size.
  std::pair<std::vector<double>, double> saddle(
      const std::vector<double>& rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Hitting machinery for the conditioned walk on a finite target set: the
// kernel is built on set-union-origin, where the saddle multiplier equals the
// capacity, and each query costs one dense back-substitution or less.
class HatHitKernel {
 public:
  HatHitKernel(std::vector<Point> set, const PotentialTable& table);

  const EntranceKernel& kernel() const { return kernel_; }
  double cap() const { return cap_; }

  // P_z[the conditioned walk ever hits the set], z outside set and origin.
  double hit_prob(Point z) const;
  // Entrance sub-law: mass_i = P_z[hits, first point = boundary()[i]];
  // total mass = hit_prob(z).  Origin entries are zero.
  std::vector<double> entrance_sub_law(Point z) const;

 private:
  const PotentialTable& table_;
  EntranceKernel kernel_;
  double cap_ = 0;
  std::vector<double> q_;  // hit_prob(z) = (cap + sum_v a(z-v) q_v) / a(z)
};

// Harmonic measure of a finite set by the defining limit: entrance law into
// the set from a uniform start on a distant lattice circle, the walk killed
// on a ring 25% farther out, conditioned on entering the set.  Bias is
// O(diam/rfar); doubling rfar should show Cauchy behavior.
struct FarHmOptions {
  double rfar = 0;            // explicit far radius; 0 derives it from the factor
  double rfar_factor = 16.0;  // rfar = factor * max(diam(set), 1)
  double tol = 1e-12;
};
struct FarHmResult {
  MeasureOnSet hm;      // conditional entrance law, normalized
  double rfar = 0;
  double entered_mass = 0;  // pre-conditioning entering probability
  std::int64_t unknowns = 0;
  std::string method;
};
FarHmResult far_circle_hm(const std::vector<Point>& set,
                          const FarHmOptions& opts = {});

// Capacity sum a(x) hm(x): the set is first translated so its point of
// minimal norm sits at the origin (capacity is translation invariant); the
// saddle multiplier cross-checks the sum, and their gap goes into the
// certificate.
struct CapacityResult {
  double value = 0;
  std::string method;   // "exact-limit" or "formula"
  double certificate = 0;
};
CapacityResult capacity(const std::vector<Point>& set,
                        const PotentialTable& table);

// Equilibrium measure of the conditioned walk: e(x) = a^2(x) P_x[never
// returns to the set], computed exactly by a guard-ball decomposition —
// absorbing solve to the guard ring, then the exact hit probability from the
// ring via HatHitKernel.  hm is e normalized; total is the hat capacity.
struct HatEquilibriumResult {
  MeasureOnSet equilibrium;  // unnormalized, supported on the internal boundary
  MeasureOnSet hm;           // normalized
  double total = 0;
};
HatEquilibriumResult hat_equilibrium(const std::vector<Point>& set,
                                     const PotentialTable& table);

// Relative harmonic measure between nested sets: weight at y in the inner
// boundary proportional to P_y[reach the outer set's internal boundary
// before returning to the inner set], for either walk.
enum class WalkKind { kSimple, kConditioned };
MeasureOnSet relative_hm(const std::vector<Point>& inner,
                         const std::vector<Point>& outer, WalkKind kind,
                         const PotentialTable& table);

// Closed-form approximations with order-of-error certificates (certificate =
// the sum of the formula's error-term orders evaluated with constant 1; an
// order estimate, not a proven bound).
struct FormulaValue {
  double value = 0;
  double certificate = 0;
};
// Capacity of {0} union a distant ball B(y, r), valid for ‖y‖ > 2r >= 1.
FormulaValue distant_ball_capacity(Point y, double r,
                                   const PotentialTable& table);
// P_x[the conditioned walk ever hits B(y, r)], x outside the ball,
// ‖y‖ > 2r >= 1; clamped to [0, 1].
FormulaValue hat_hit_prob_formula(Point x, Point y, double r,
                                  const PotentialTable& table);
// P_x[reach the circle of radius n+k before re-entering B(n)] for
// x on the internal boundary of B(n), from the harmonic-measure form.
double escape_to_radius_formula(Point x, std::int32_t n, double k,
                                const MeasureOnSet& hm_bn);

}  // namespace ri2d
