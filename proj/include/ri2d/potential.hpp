#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ri2d/lattice.hpp"

namespace ri2d {

// Far-field form of the lattice potential kernel:
//   (2/pi) ln|x| + (2*gamma + ln 8)/pi,  accurate to O(|x|^-2).
double a_asymptotic(Point p);
extern const double kPotentialFarConstant;  // (2*gamma + ln 8)/pi

// Potential kernel a(x) of the planar simple random walk, tabulated on
// |x| < R by solving the discrete boundary-value problem
//   a(0) = 0,  a harmonic away from the origin,  a = far-field form on |x| >= R.
// The solve runs on the fundamental wedge 0 <= y <= x (8-fold symmetry),
// with rows scaled by orbit size so the reduced system stays symmetric
// positive definite.  Lookups fold arbitrary points into the wedge; beyond
// the table radius they fall back to the far-field form.
class PotentialTable {
 public:
  enum class Method { kAuto, kDirect, kIterative };

  struct BuildInfo {
    std::string method;     // "direct" or "iterative"
    int iterations = 0;     // CG iterations (0 for direct)
    double solve_error = 0; // solver-reported relative residual
    double seconds = 0;
    std::int64_t unknowns = 0;
  };

  struct Lookup {
    double value = 0;
    bool from_table = false;
  };

  static PotentialTable build(std::int32_t R, double tol = 1e-12,
                              Method method = Method::kAuto);

  // Cache round-trip.  Files carry format version, parameters, and a CRC of
  // the payload; load refuses mismatches.
  void save(const std::filesystem::path& file) const;
  static PotentialTable load(const std::filesystem::path& file);
  static PotentialTable load_or_build(const std::filesystem::path& cache_dir,
                                      std::int32_t R, double tol = 1e-12,
                                      Method method = Method::kAuto);

  double a(Point p) const;
  Lookup a_lookup(Point p) const;

  std::int32_t R() const { return R_; }
  double tol() const { return tol_; }
  const BuildInfo& build_info() const { return info_; }

  // Harmonicity defect (1/4) sum_nbr a - a at the origin; equals a((1,0)),
  // which the defining identities force to 1.  Not enforced by the solve, so
  // it doubles as an independent quality probe.
  double origin_defect() const;
  // Max harmonicity defect over all tabulated points except the origin.
  double max_harmonicity_defect() const;

 private:
  PotentialTable() = default;
  std::int64_t wedge_index(std::int32_t x, std::int32_t y) const;

  std::int32_t R_ = 0;
  double tol_ = 0;
  std::int64_t r2_ = 0;  // R^2; table covers folded |p|^2 < r2_
  std::vector<std::int64_t> offset_;  // per wedge column x
  std::vector<std::int32_t> ymax_;
  std::vector<double> val_;
  BuildInfo info_;
};

}  // namespace ri2d
