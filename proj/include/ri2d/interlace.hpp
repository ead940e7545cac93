#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ri2d/harmonic.hpp"
#include "ri2d/lattice.hpp"
#include "ri2d/potential.hpp"
#include "ri2d/rng.hpp"
#include "ri2d/walks.hpp"

namespace ri2d {

// One Poisson soup of conditioned-walk trajectories restricted to a window.
// Labels are i.i.d. uniform on (0, level]; keeping only trajectories with
// label at or below a lower level reproduces the soup of that level, so the
// vacant sets of coupled levels are nested by construction.
struct RISample {
  double level = 0.0;
  std::int64_t trajectory_count = 0;      // Poisson(pi * level * hat capacity)
  std::vector<double> labels;             // per trajectory, in (0, level]
  std::vector<std::vector<Point>> paths;  // window points visited, in order
  std::vector<Point> occupied;            // sorted union over paths
  std::vector<Point> vacant;              // window \ occupied, sorted
  // Bound on the probability that some window visit went unrecorded.  Renewal
  // jumps are decided by exact hitting laws, so nothing is truncated: 0.
  double miss_bound = 0.0;
};

// Occupation law of the interlacement set inside a finite window: trajectories
// arrive at rate pi * level * cap(window U {0}), start on the normalized
// hat-equilibrium measure of the window, and are traced until they escape for
// good.  The window may or may not contain the origin; the origin itself is
// never visited.
class RISampler {
 public:
  RISampler(std::vector<Point> window, const PotentialTable& table);

  const std::vector<Point>& window() const { return window_; }
  // cap(window U {0}); trajectory rate per unit level is pi times this.
  double hat_capacity() const { return capacity_; }

  RISample sample(double level, Rng& rng) const;
  // Sub-soup of trajectories with label <= level (level must not exceed the
  // sampled one); its vacant set always contains the full soup's.
  RISample thin(const RISample& full, double level) const;

 private:
  std::vector<Point> window_;
  double capacity_ = 0.0;
  std::optional<HatTraceSampler> tracer_;  // absent when the rate is zero
};

struct VacantEstimate {
  double level = 0.0;
  Point site{};
  std::int64_t samples = 0;
  double estimate = 0.0;      // frequency of {site unvisited}
  double ci_halfwidth = 0.0;  // 3-sigma binomial half-width
  double target = 0.0;        // exp(-pi * level * a(site) / 2)
  double asymptotic = 0.0;    // |site|^-level * exp(-level (2 gamma + ln 8)/2)
};

// Monte Carlo estimate of P[site vacant at the given level].  Soups run on a
// ball around the site rather than the bare singleton, so the estimate
// genuinely exercises entry sampling and tracing instead of reducing to the
// Poisson void probability.
VacantEstimate vacant_prob(double level, Point site, std::int64_t samples,
                           const PotentialTable& table, Rng& rng);

struct DecouplingPoint {
  Point site{};
  std::int64_t conditioning_hits = 0;  // samples with the site vacant
  double conditional = 0.0;            // P[set vacant | site vacant] estimate
  double ci_halfwidth = 0.0;           // 3-sigma half-width given the hits
};

struct DecouplingResult {
  double level = 0.0;
  double set_capacity = 0.0;  // cap(set U {0})
  double unconditional = 0.0;  // exp(-pi * level * set_capacity)
  double limit = 0.0;          // exp(-(pi * level / 4) * set_capacity)
  std::vector<DecouplingPoint> points;
};

// Estimates P[set vacant | site vacant] for each distant site.  Conditioning
// on vacancy far away thins the soup near the set to an effective level of a
// quarter of the nominal one, so the estimates drift toward `limit` as the
// sites recede.  Requires the origin in `set` and every site at distance at
// least 8 * diam(set) (any nonzero distance for singleton sets); throws
// ResourceError when fewer than 50 samples realize a conditioning event.
DecouplingResult conditional_decoupling(double level,
                                        const std::vector<Point>& set,
                                        const std::vector<Point>& sites,
                                        std::int64_t samples,
                                        const PotentialTable& table, Rng& rng);

struct ExcursionCountSample {
  std::int64_t trajectories = 0;             // soup size hitting the ball
  std::int64_t total = 0;                    // excursions summed over the soup
  std::vector<std::int32_t> per_trajectory;  // one count (>= 1) per trajectory
};

struct ExcursionCountResult {
  double rate = 0.0;                 // pi * level * cap(ball U {0})
  double mean_per_trajectory = 0.0;  // exact E[count] from the hitting kernel
  std::vector<ExcursionCountSample> samples;
};

// Counts excursions of soup trajectories between B(center, radius) and the
// concentric ball scaled by outer_factor: an excursion runs from a visit to
// the inner ball until the walk first leaves the outer one, and another
// starts if the walk ever returns.  Per-trajectory counts are roughly
// geometric; their soup total is compound Poisson.  Requires
// |center| >= 2 * outer_factor * radius so the origin stays well outside.
ExcursionCountResult ri_excursion_counts(double level, Point center,
                                         double radius, double outer_factor,
                                         std::int64_t samples,
                                         const PotentialTable& table, Rng& rng);

}  // namespace ri2d
