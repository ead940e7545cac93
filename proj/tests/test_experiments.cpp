#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ri2d/experiments.hpp"
#include "ri2d/lattice.hpp"
#include "ri2d/mathstat.hpp"
#include "ri2d/potential.hpp"
#include "ri2d/rng.hpp"
#include "ri2d/solver.hpp"

namespace ri2d {
namespace {

const PotentialTable& table128() {
  static const PotentialTable t = PotentialTable::build(128);
  return t;
}

const HolderFit& fit_for(const HolderScanResult& res, std::int32_t n) {
  for (const HolderFit& f : res.fits)
    if (f.n == n) return f;
  REQUIRE(false);
  return res.fits.front();
}

}  // namespace

TEST_SUITE_BEGIN("experiments");

TEST_CASE("entrance ratios are admissible only inside the sampling band") {
  const HolderGeometry geo(20, 4.0, 0.1, table128());
  CHECK(geo.ring().size() > 50);
  double mass = 0.0;
  for (double w : geo.hm()) mass += w;
  CHECK(std::abs(mass - 1.0) < 1e-12);

  // Band is (1.2 n, 3.6 n]: inner edge excluded, outer edge included.
  CHECK_THROWS_AS(geo.ratios((Point{24, 0})), ConfigError);
  CHECK_THROWS_AS(geo.ratios((Point{73, 0})), ConfigError);
  CHECK_THROWS_AS(geo.place((PolarStart{1.1, 0.0})), ConfigError);
  CHECK_THROWS_AS(geo.place((PolarStart{3.9, 0.0})), ConfigError);
  const Point placed = geo.place({2.4, 0.0});
  const Point expected{48, 0};
  CHECK(placed == expected);

  // Degenerate band rejected outright.
  CHECK_THROWS_AS(HolderGeometry(20, 1.2, 0.4, table128()), ConfigError);

  const std::vector<double> r = geo.ratios({48, 0});
  REQUIRE(r.size() == geo.ring().size());
  for (double v : r) CHECK(v >= 0.0);
  // Weighted by the entrance law the ratios integrate back to the total
  // inner-entry mass, which the log-ratio exit formula predicts.
  double entry = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) entry += r[k] * geo.hm()[k];
  const double predicted =
      (std::log(80.0) - std::log(48.0)) / (std::log(80.0) - std::log(20.0));
  CHECK(std::abs(entry - predicted) < 0.02);
  CHECK(entry <= 1.0 + 1e-12);
}

TEST_CASE("entrance ratio gaps shrink with separation at a stable exponent") {
  const std::vector<PolarStart> starts{{2.4, 0.0}, {1.8, 2.0}};
  const HolderScanResult res = holder_scan({20, 40}, 4.0, 0.1, starts, table128());

  REQUIRE(res.fits.size() == 3);  // per n plus pooled
  for (const HolderPairGap& p : res.pairs) {
    CHECK(p.separation > 0.0);
    CHECK(p.separation <= 2.0);
    CHECK(p.gap >= 0.0);
  }
  for (std::int32_t n : {20, 40, 0}) {
    const HolderFit& f = fit_for(res, n);
    CHECK(f.beta > 0.0);
    CHECK(f.r2 >= 0.9);
  }

  CHECK_THROWS_AS(holder_scan({20}, 4.0, 0.1, starts, table128(), {2.0}),
                  ConfigError);
  CHECK_THROWS_AS(holder_scan({}, 4.0, 0.1, starts, table128()), ConfigError);
}

TEST_CASE("far-circle entrance law converges to the exact kernel values") {
  const HolderScanResult res =
      holder_scan({8}, 4.0, 0.1, {{2.4, 0.0}}, table128(), {16.0, 24.0});
  REQUIRE(res.sensitivity.size() == 2);
  // Truncation bias shrinks as the far circle recedes.
  CHECK(res.sensitivity[1].max_rel_gap < res.sensitivity[0].max_rel_gap);
  CHECK(res.sensitivity[0].max_rel_gap < 1e-4);
}

TEST_CASE("entrance mass equals the interior Green sum at machine precision") {
  const ReversibilityReport rep = reversibility_check(20, 3.0);
  CHECK(rep.starts >= 6);
  CHECK(rep.ring_sites > 50);
  CHECK(rep.silent_ring_sites == 0);
  CHECK(rep.max_residual <= 1e-9);

  CHECK_THROWS_AS(reversibility_check(20, 0.9), ConfigError);
}

TEST_CASE("ring sites without interior neighbours carry zero on both routes") {
  // One free site: its ring of absorbing neighbours is at L1 distance 1, so
  // any farther point is absent from the exit law and has no interior
  // neighbour either; both sides of the identity vanish together.
  const AbsorbingSystem sys =
      AbsorbingSystem::build({{0, 0}}, srw_plane(), 1e-12);
  const Point u{2, 0};
  const auto law = sys.exit_law({{{0, 0}, 1.0}});
  double mass_at_u = 0.0;
  for (const auto& [p, m] : law)
    if (p == u) mass_at_u = m;
  double green_sum = 0.0;
  for (const Point& w : neighbors4(u))
    if (sys.index_of(w) >= 0) green_sum += sys.green_column({0, 0})[0];
  CHECK(mass_at_u == 0.0);
  CHECK(green_sum == 0.0);
}

TEST_CASE("torus excursion counts track the area-log law across horizons") {
  Rng rng(0x5017a600b1ull, 7);
  const std::int32_t n = 60;
  const std::int64_t t = 3 * std::int64_t(n) * n;
  const TorusExcursionReport rep =
      torus_excursion_test(n, 0.15, 0.35, t, 1000, rng);

  CHECK(std::abs(rep.at_t.mean - rep.at_t.target) <= 0.10 * rep.at_t.target);
  // Doubling the horizon doubles the count within the joint uncertainty.
  CHECK(std::abs(rep.at_2t.mean - 2.0 * rep.at_t.mean) <=
        rep.at_2t.ci3 + 2.0 * rep.at_t.ci3);
  CHECK(rep.at_4t.tail_freq < rep.at_t.tail_freq);

  CHECK_THROWS_AS(torus_excursion_test(n, 0.35, 0.15, t, 100, rng), ConfigError);
  CHECK_THROWS_AS(torus_excursion_test(n, 0.15, 0.35, n, 100, rng), ConfigError);
}

TEST_CASE("count-model thresholds and exact lower tail are consistent") {
  const double q = normal_upper_quantile(0.48);
  CHECK(std::abs(q - 0.0501535) < 1e-5);

  const ScaleThresholds th = critical_thresholds(1e3, 1.2, q);
  CHECK(th.m_dprime < th.m_prime);
  CHECK(th.m_prime < th.center);
  CHECK(std::abs(th.center - 523.40) < 0.05);
  CHECK(std::abs(th.m_prime - 512.79) < 0.05);
  CHECK(std::abs(th.m_dprime - 511.17) < 0.05);

  // Exact tail via the convolution recursion against a direct sample.
  Rng rng(0x5017a600b2ull, 11);
  const double exact = compound_count_lower_tail(th.lambda, th.geom_p, th.m_dprime);
  std::int64_t hits = 0;
  const std::int64_t reps = 20000;
  double sum = 0.0;
  for (std::int64_t r = 0; r < reps; ++r) {
    std::int64_t k = rng.poisson(th.lambda);
    std::int64_t nv = 0;
    const double rate = -std::log1p(-th.geom_p);
    for (std::int64_t i = 0; i < k; ++i)
      nv += 1 + std::int64_t(std::floor(rng.exponential() / rate));
    sum += double(nv);
    if (double(nv) <= th.m_dprime) ++hits;
  }
  const double freq = double(hits) / double(reps);
  const double sig = std::sqrt(exact * (1.0 - exact) / double(reps));
  CHECK(std::abs(freq - exact) <= 3.0 * sig);
  CHECK(std::abs(sum / double(reps) - th.center) <= 3.0 * th.scale / std::sqrt(double(reps)));

  CHECK(compound_count_lower_tail(th.lambda, th.geom_p, -1.0) == 0.0);
  CHECK(compound_count_lower_tail(th.lambda, th.geom_p, 400.0) <
        compound_count_lower_tail(th.lambda, th.geom_p, 600.0));
  CHECK_THROWS_AS(critical_thresholds(50.0, 1.2, q), ConfigError);
  CHECK_THROWS_AS(compound_count_lower_tail(0.0, 0.5, 10.0), ConfigError);
}

TEST_CASE("excursion soup matches the count model and forces vacancies") {
  CriticalRunConfig config;
  config.bs = {1e3};
  config.model_reps = 2000;
  config.engine_reps = 150;

  Rng rng(0x5017a600b3ull, 13);
  const CriticalReport rep = critical_pipeline(config, rng, table128());
  REQUIRE(rep.scales.size() == 1);
  const CriticalScaleReport& sc = rep.scales[0];

  CHECK(sc.engine_run);

  // The exact chain rate agrees with the model rate up to the 1/ln b tilt.
  CHECK(std::abs(sc.lambda_exact - sc.thresholds.lambda) / sc.thresholds.lambda < 0.35);
  CHECK(std::abs(sc.phi_freq_model - sc.phi_exact) < 0.05);
  CHECK(sc.phi_exact > 0.0);
  CHECK(sc.phi_exact < 1.0);
  // Realized counts run above the model centring at this scale (the same
  // 1/ln b tilt), yet stay within a factor two of it.
  CHECK(sc.engine_mean > sc.thresholds.m_dprime);
  CHECK(sc.engine_mean < 2.0 * sc.thresholds.center);
  CHECK(sc.phi_freq_engine > 0.05);
  CHECK(sc.phi_freq_engine < 0.45);
  CHECK(sc.j_freq >= 0.0);
  CHECK(sc.j_freq <= 1.0);
  CHECK(sc.m_freq >= 0.0);
  CHECK(sc.m_freq <= 1.0);
  // The structural gate: whenever all three events land, a vacant site
  // exists.  Holds with zero conjunctions too; the counts are reported.
  CHECK(sc.implication_held);
  CHECK(sc.vacancies_at_conjunction == sc.conjunctions);
  CHECK(sc.mean_vacant_fraction >= 0.0);

  CriticalRunConfig bad = config;
  bad.gamma = 1.3;  // escape exponent pi / (4 gamma^2) too small for beta
  bad.beta = 0.4;
  CHECK_THROWS_AS(critical_pipeline(bad, rng, table128()), ConfigError);
  bad = config;
  bad.bs = {50.0};
  CHECK_THROWS_AS(critical_pipeline(bad, rng, table128()), ConfigError);
}

TEST_SUITE_END();

}  // namespace ri2d
