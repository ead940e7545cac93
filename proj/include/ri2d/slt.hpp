#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "ri2d/harmonic.hpp"
#include "ri2d/lattice.hpp"
#include "ri2d/potential.hpp"
#include "ri2d/rng.hpp"
#include "ri2d/solver.hpp"

namespace ri2d {

// Unit-rate Poisson clocks on alphabet-site columns, materialized lazily.
// Each site owns a derived stream, so heights are identical no matter which
// consumer asks first or how far ahead another consumer has read.  A point
// may carry one mark (an excursion outcome index): whoever consumes the
// point first draws the mark, and every later consumer sees the same value.
class PoissonPool {
 public:
  PoissonPool(std::size_t sites, Rng base);

  std::size_t sites() const { return clocks_.size(); }
  // Height of arrival `index` (0-based) in column `site`: a strictly
  // increasing cumulative sum of Exp(1) gaps.
  double height(std::size_t site, std::size_t index);
  std::int32_t mark(std::size_t site, std::size_t index) const;  // -1 unset
  void set_mark(std::size_t site, std::size_t index, std::int32_t value);

 private:
  struct Column {
    Rng rng;
    std::vector<double> heights;
    std::vector<std::int32_t> marks;
  };
  std::vector<Column> clocks_;
};

struct SLTSelection {
  std::size_t site = 0;         // alphabet index of the consumed point
  std::size_t point_index = 0;  // arrival index within that column
  double xi = 0.0;              // envelope increment scale, Exp(1) in law
  bool tie = false;             // argmin not unique (fp coincidence)
};

// One consumer of a shared pool.  Each step raises the consumer's envelope
// by xi * density with xi exactly large enough to swallow one new point;
// the envelope stays the explicit running sum of its increments, so it can
// be replayed term by term.  Consumers of one pool are independent in their
// counters and envelopes; overlap of their consumed sets is meaningful.
class SLTProcess {
 public:
  explicit SLTProcess(std::shared_ptr<PoissonPool> pool);

  // `density` is a probability vector over the pool's sites (sum within
  // 1e-9 of one, entries nonnegative); ConfigError otherwise.
  SLTSelection step(const std::vector<double>& density);

  const std::vector<double>& envelope() const { return envelope_; }
  std::size_t consumed(std::size_t site) const { return next_[site]; }
  std::int64_t steps() const { return steps_; }
  std::int64_t ties() const { return ties_; }
  PoissonPool& pool() { return *pool_; }

 private:
  std::shared_ptr<PoissonPool> pool_;
  std::vector<double> envelope_;
  std::vector<std::size_t> next_;
  std::int64_t steps_ = 0;
  std::int64_t ties_ = 0;
};

// Excursion geometry for the walk on a torus of side round(gamma2 * n):
// excursions enter the ball A = B(n) (alphabet = its internal boundary) and
// run until the internal boundary of B(gamma1 * n).  Entrance rows come
// from one absorbing solve on torus \ A; excursions themselves never feel
// the wrap, so end rows are plane solves inside B(gamma1 * n), and the
// stationary entrance profile is the relative harmonic measure of A there.
class TorusExcursionModel {
 public:
  TorusExcursionModel(std::int32_t inner_radius, double gamma1, double gamma2,
                      const PotentialTable& table);

  const Torus& torus() const { return torus_; }
  std::int32_t inner_radius() const { return inner_radius_; }
  const std::vector<Point>& alphabet() const { return alphabet_; }
  const std::vector<Point>& ends() const { return ends_; }
  const std::vector<double>& hm_row() const { return hm_; }

  // Entrance law into the alphabet for the torus walk started at x, which
  // must lie outside B(n).  Rows are computed once per start and cached.
  const std::vector<double>& entry_row(Point x) const;
  // Law of the excursion end for an excursion begun at alphabet()[site],
  // as a row over ends().
  const std::vector<double>& end_row(std::size_t site) const;
  std::size_t sample_end(std::size_t site, Rng& rng) const;

 private:
  Torus torus_;
  std::int32_t inner_radius_ = 0;
  std::vector<Point> alphabet_, ends_;
  std::vector<double> hm_;
  std::unique_ptr<AbsorbingSystem> outside_;  // torus minus the inner ball
  mutable std::map<Point, std::vector<double>> entry_cache_;
  std::vector<std::vector<double>> end_rows_;
  std::vector<AliasTable> end_alias_;
};

// Runs independent excursion chains and measures the sup over the alphabet
// of |L_k - k * hm| at each checkpoint.  The fitted log-log slope of the
// median against k tracks the sqrt(k) growth of the fluctuation.
struct DeviationRow {
  std::int64_t k = 0;
  double median_sup = 0.0;
  double q95_sup = 0.0;
};
struct DeviationReport {
  std::vector<DeviationRow> rows;
  double loglog_slope = 0.0;
};
DeviationReport deviation_experiment(const TorusExcursionModel& model,
                                     Point start,
                                     std::vector<std::int64_t> checkpoints,
                                     std::int64_t reps, Rng& rng);

// Couples the torus excursion chain with an i.i.d. stream on one shared
// pool.  The i.i.d. row is the entrance profile of the conditioned walk
// into a distant plane copy of the same ball pair, translated back onto the
// torus alphabet.  The walk stream takes `walk_steps` selections and drives
// excursion marks; the i.i.d. stream takes the (smaller) `iid_steps`, and
// the report records which of its points the walk stream also consumed.
struct CouplingReport {
  std::int64_t walk_steps = 0;
  std::int64_t iid_steps = 0;
  std::vector<bool> iid_point_in_walk;  // per i.i.d. selection, in order
  std::int64_t shared_points = 0;
  bool included = false;  // every i.i.d. point consumed by the walk stream
  double walk_sup_dev = 0.0;  // sup |L_m - m * hm_row| over the alphabet
  double iid_sup_dev = 0.0;   // sup |L'_m' - m' * iid_row|
  std::int64_t ties = 0;
};
// Step deficit of the i.i.d. stream as a multiple of sqrt(walk steps),
// calibrated by pilot sweeps at 256 walk steps on the radius-20 geometry:
// inclusion holds in ~99% of runs at this value and in ~89% one unit lower.
inline constexpr double kCouplingMarginConstant = 4.0;

class ExcursionCoupler {
 public:
  ExcursionCoupler(std::int32_t inner_radius, double gamma1, double gamma2,
                   Point plane_center, const PotentialTable& table);

  const TorusExcursionModel& model() const { return model_; }
  const std::vector<double>& iid_row() const { return iid_row_; }
  // sup |iid_row - hm_row|: the bias the coupling margin must absorb.
  double row_gap() const;

  CouplingReport run(std::int64_t walk_steps, std::int64_t iid_steps,
                     Point start, Rng& rng) const;

 private:
  TorusExcursionModel model_;
  std::vector<double> iid_row_;
};

// Two constructions of the soft local time of the pair at center_a on a
// torus that also hosts a second, disjoint pair at center_b.  `standalone`
// runs the pool machinery on a chain that only knows the first pair.
// `joint` realizes the full chronology of both pairs' excursions (route
// probabilities and route-conditioned entrances from exact rows), extracts
// the first pair's subsequence, and accumulates Exp(1)-weighted marginal
// rows along it — the soft local time its own pool would have produced.
// The two envelopes after k selections of the tracked pair agree in law.
class ConsistencySampler {
 public:
  ConsistencySampler(std::int32_t torus_side, std::int32_t inner_radius,
                     std::int32_t outer_radius, Point center_a, Point center_b,
                     Point start, const PotentialTable& table);

  const std::vector<Point>& alphabet() const { return alphabet_a_; }
  const std::vector<double>& hm_row() const { return hm_a_; }
  // Entrance density of the tracked pair's first excursion.
  const std::vector<double>& start_row() const;

  std::vector<double> standalone(std::int64_t k, Rng& rng) const;
  std::vector<double> joint(std::int64_t k, Rng& rng) const;
  // Entrance site of the tracked pair's first excursion in the joint
  // chronology; its law must be start_row().
  std::size_t joint_first_site(Rng& rng) const;

 private:
  const std::vector<double>& row_alone(Point x) const;
  const std::vector<double>& row_union(Point x) const;

  Torus torus_;
  Point start_;
  std::vector<Point> alphabet_a_, alphabet_b_, union_alphabet_;
  std::vector<std::size_t> union_to_a_, union_to_b_;  // or npos
  std::vector<Point> ends_a_, ends_b_;
  std::vector<double> hm_a_;
  std::unique_ptr<AbsorbingSystem> alone_, both_;
  mutable std::map<Point, std::vector<double>> alone_cache_, union_cache_;
  std::vector<AliasTable> end_alias_a_, end_alias_b_;
};

struct ConsistencyReport {
  std::int64_t k = 0;
  std::int64_t reps = 0;
  std::vector<std::size_t> tracked_sites;  // highest-weight alphabet sites
  std::vector<double> site_pvalues;        // KS, standalone vs joint
  double sup_pvalue = 1.0;    // KS on sup_y L(y)
  double total_pvalue = 1.0;  // KS on sum_y L(y)
};
ConsistencyReport consistency_experiment(const ConsistencySampler& sampler,
                                         std::int64_t k, std::int64_t reps,
                                         Rng& rng);

}  // namespace ri2d
