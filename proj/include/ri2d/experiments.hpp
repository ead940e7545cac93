#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ri2d/harmonic.hpp"
#include "ri2d/lattice.hpp"
#include "ri2d/potential.hpp"
#include "ri2d/rng.hpp"
#include "ri2d/solver.hpp"

namespace ri2d {

// ---------------------------------------------------------------------------
// Entrance-ratio regularity scan.
//
// On the annulus A = (B(cn) \ B(n)) plus the internal boundary of B(n), a
// walk started in the middle band enters the inner circle with a law close
// to harmonic measure.  The scan quantifies how fast the normalized ratios
// H(x, y) / hm(y) flatten: binned mean gaps |ratio(y) - ratio(z)| against
// |y - z| / n follow a power law whose exponent the fit estimates.
// ---------------------------------------------------------------------------

// Start point in polar form relative to the inner radius:
// x = round(rho * n * (cos angle, sin angle)).  Must land strictly inside
// the band (B(c(1-eps)n) \ B((1+2eps)n)).
struct PolarStart {
  double rho = 2.4;
  double angle = 0.0;
};

// One annulus geometry with its exact inner entrance law.  Built once per
// inner radius; evaluating a start point is a single absorbing solve.
class HolderGeometry {
 public:
  HolderGeometry(std::int32_t n, double c, double eps, const PotentialTable& table);

  std::int32_t n() const { return n_; }
  const std::vector<Point>& ring() const { return ring_; }
  const std::vector<double>& hm() const { return hm_; }  // exact, sums to one
  const AbsorbingSystem& system() const { return *system_; }

  // H(x, ring()[i]) / hm()[i] for every inner-ring site; ConfigError when x
  // lies outside the admissible band.
  std::vector<double> ratios(Point x) const;

  Point place(const PolarStart& start) const;  // rounds and validates

 private:
  std::int32_t n_;
  double c_;
  double eps_;
  std::int64_t band_lo2_;  // norm2 must exceed this
  std::int64_t band_hi2_;  // and not exceed this
  std::vector<Point> ring_;
  std::vector<double> hm_;
  std::unique_ptr<AbsorbingSystem> system_;
};

struct HolderPairGap {
  std::int32_t n = 0;
  Point x;
  Point y;
  Point z;
  double separation = 0.0;  // |y - z| / n
  double gap = 0.0;         // |H(x,y)/hm(y) - H(x,z)/hm(z)|
};

struct HolderBin {
  double separation = 0.0;  // geometric bin center
  double mean_gap = 0.0;
  std::int64_t pairs = 0;
};

struct HolderFit {
  std::int32_t n = 0;  // 0 marks the fit pooled over every inner radius
  double beta = 0.0;   // log-log slope of mean gap against separation
  double log_c = 0.0;  // intercept; exp(log_c) scales the power law
  double r2 = 0.0;
  std::vector<HolderBin> bins;
};

// Far-circle entrance law against the exact kernel values, one row per
// truncation radius; the gap shrinks like diameter / rfar.
struct HolderSensitivityRow {
  std::int32_t n = 0;
  double rfar = 0.0;
  double max_rel_gap = 0.0;
  std::int64_t unknowns = 0;
};

struct HolderScanResult {
  std::vector<std::int32_t> ns;
  double c = 0.0;
  double eps = 0.0;
  std::vector<HolderPairGap> pairs;        // every (y, z) pair per start
  std::vector<HolderFit> fits;             // one per n, then pooled (n = 0)
  std::vector<HolderSensitivityRow> sensitivity;
};

// Runs the scan over every inner radius and start point.  Sensitivity rows
// (optional) compare the far-circle route against the exact kernel for the
// smallest n, at rfar = factor * ball diameter; factors below 16 are
// rejected (the far-circle construction needs that much separation).
HolderScanResult holder_scan(const std::vector<std::int32_t>& ns, double c, double eps,
                             const std::vector<PolarStart>& starts,
                             const PotentialTable& table,
                             const std::vector<double>& sensitivity_factors = {});

// ---------------------------------------------------------------------------
// Reversibility of the annulus entrance law: for every inner-ring site u,
// the entrance mass H(x, u) equals one quarter of the sum of Green values
// G(v, x) over annulus-interior neighbours v of u.  Both sides come from
// independent solves, so the residual is a machine-precision cross-check.
// ---------------------------------------------------------------------------

struct ReversibilityReport {
  std::int32_t n = 0;
  double c = 0.0;
  double max_residual = 0.0;
  std::int64_t starts = 0;             // probe points x
  std::int64_t ring_sites = 0;         // inner-ring sites checked
  std::int64_t silent_ring_sites = 0;  // no interior neighbour; both sides 0
};

ReversibilityReport reversibility_check(std::int32_t n, double c);

// ---------------------------------------------------------------------------
// Torus excursion counts.  On the torus of side n, excursions alternate
// between B(gamma1 n) and the internal boundary of B(gamma2 n); the count
// completed by time t concentrates at pi t / (2 n^2 ln(gamma2 / gamma1)).
// ---------------------------------------------------------------------------

struct TorusWindowStats {
  std::int64_t horizon = 0;
  double target = 0.0;     // predicted mean at this horizon
  double mean = 0.0;
  double ci3 = 0.0;        // 3-sigma half-width of the mean
  double tail_freq = 0.0;  // frequency of |count - target| > target / 2
};

struct TorusExcursionReport {
  std::int32_t n = 0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  std::int64_t t = 0;
  std::int64_t reps = 0;
  TorusWindowStats at_t;
  TorusWindowStats at_2t;
  TorusWindowStats at_4t;
};

// Each rep walks one trajectory from a uniform start to horizon 4t and
// tallies completed excursions by their completion times.
TorusExcursionReport torus_excursion_test(std::int32_t n, double gamma1, double gamma2,
                                          std::int64_t t, std::int64_t reps, Rng& rng);

// ---------------------------------------------------------------------------
// Critical-regime pipeline on the desk ladder of scales b.  Around a centre
// at distance b the ball B(v, sqrt(b)) is hit by roughly (4/3) ln b
// trajectories, each contributing a geometric number of excursions with
// escape rate 2 ln(gamma) / (3 ln b).  The pipeline measures, per scale:
//   Phi : the excursion count N stays below the lower threshold m''
//   J   : m' i.i.d. excursions leave some ball site uncovered
//   M   : the walk-chain envelope at m'' sits below the i.i.d. one at m'
// and asserts that Phi and J and M together force a vacant site.
// ---------------------------------------------------------------------------

struct CriticalRunConfig {
  std::vector<double> bs{1e3, 31622.776601683793, 1e6};
  double gamma = 1.2;           // ring ratio, in (1, sqrt(pi/2))
  double beta = 0.48;           // target lower-tail mass for Phi
  std::int64_t model_reps = 4000;
  std::int64_t engine_reps = 240;
  double max_engine_b = 4e4;    // realized excursions only at ladder scales below this
};

// Closed-form centring for one scale: the count N has mean `center` =
// 2 ln^2 b / ln(gamma) and spread `scale` = sqrt(6) ln^{3/2} b / ln(gamma);
// m'' subtracts q_beta spreads, m' subtracts ln^{11/9} b.
struct ScaleThresholds {
  double b = 0.0;
  double lambda = 0.0;    // trajectory rate (4/3) ln b
  double geom_p = 0.0;    // escape rate 2 ln(gamma) / (3 ln b)
  double center = 0.0;
  double scale = 0.0;
  double m_prime = 0.0;
  double m_dprime = 0.0;
};

ScaleThresholds critical_thresholds(double b, double gamma, double q_beta);

struct CriticalScaleReport {
  ScaleThresholds thresholds;

  // Count-model route: sampled and exact (compound-Poisson recursion).
  std::int64_t model_reps = 0;
  double model_mean = 0.0;
  double model_sd = 0.0;
  double phi_freq_model = 0.0;
  double phi_exact = 0.0;  // exact P[N <= m''] under the count model

  // Realized-excursion route (skipped above max_engine_b).
  bool engine_run = false;
  std::int64_t engine_reps = 0;
  double lambda_exact = 0.0;  // pi * cap(ball + origin)
  double engine_mean = 0.0;
  double engine_sd = 0.0;
  double phi_freq_engine = 0.0;
  double j_freq = 0.0;
  double m_freq = 0.0;
  std::int64_t conjunctions = 0;           // reps with Phi and J and M
  std::int64_t vacancies_at_conjunction = 0;
  bool implication_held = true;            // vacancy on every conjunction
  double mean_vacant_fraction = 0.0;       // vacant share of the ball per rep
};

struct CriticalReport {
  CriticalRunConfig config;
  double q_beta = 0.0;
  std::vector<CriticalScaleReport> scales;
};

CriticalReport critical_pipeline(const CriticalRunConfig& config, Rng& rng,
                                 const PotentialTable& table);

// Exact lower-tail mass P[N <= bound] for the compound count model at one
// scale: Poisson(lambda) trajectories, geometric(p) excursions each.
double compound_count_lower_tail(double lambda, double p, double bound);

}  // namespace ri2d
