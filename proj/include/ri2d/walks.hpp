#pragma once

#include <cstdint>
#include <vector>

#include "ri2d/harmonic.hpp"
#include "ri2d/lattice.hpp"
#include "ri2d/potential.hpp"
#include "ri2d/rng.hpp"

namespace ri2d {

// One step of the plain nearest-neighbour walk.
inline Point srw_step(Point p, Rng& rng) {
  return neighbors4(p)[rng.below(4)];
}

// One step of the conditioned walk: neighbour q drawn with weight a(q).  The
// origin has zero weight, so the walk never lands on it; stepping from the
// origin is rejected.  Weights are normalized by their computed sum.
Point hat_step(Point p, const PotentialTable& table, Rng& rng);

// Total-variation gap between the conditioned and plain one-step laws at p.
double hat_step_tv(Point p, const PotentialTable& table);

// One completed inner-to-outer excursion of the torus walk.
struct Excursion {
  Point entry;                 // first point of the inner set reached
  Point exit;                  // first outer-boundary point reached afterwards
  std::int64_t entry_time = 0;
  std::int64_t exit_time = 0;
};

struct TorusExcursionResult {
  std::vector<Excursion> completed;  // excursions finished within the horizon
  std::int64_t horizon = 0;
  Point final_position{};
};

// Stopping-time ladder on the torus: walk from `start`; alternately wait for
// the inner set, then for the outer boundary, recording each completed pair.
// `inner` and `outer_bd` must be sorted, disjoint, wrapped into the torus.
TorusExcursionResult torus_excursions(const Torus& torus,
                                      const std::vector<Point>& inner,
                                      const std::vector<Point>& outer_bd,
                                      std::int64_t horizon, Point start,
                                      Rng& rng);

// Samples window traces of conditioned-walk trajectories: simulate steps
// inside a guard ball around the window, and replace each far flight by one
// exact first-passage renewal — escape forever, or jump straight to the
// re-entrance point on the window boundary.
class HatTraceSampler {
 public:
  HatTraceSampler(std::vector<Point> window, const PotentialTable& table);

  const std::vector<Point>& window() const { return window_; }
  // Normalized equilibrium measure: the entry law of a trajectory that
  // touches the window at all.
  const MeasureOnSet& entry_hm() const { return eq_.hm; }
  double cap() const { return eq_.total; }
  Point sample_entry(Rng& rng) const;

  // Append every window visit of one trajectory from `start` to `out`, in
  // visit order with repeats.  `start` must not be the origin.
  void trace(Point start, Rng& rng, std::vector<Point>& out) const;

 private:
  std::vector<Point> window_;
  const PotentialTable* table_;
  HatHitKernel hit_;
  HatEquilibriumResult eq_;
  AliasTable entry_alias_;
  Ball guard_;
};

}  // namespace ri2d
