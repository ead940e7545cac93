#include "ri2d/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <unordered_map>
#include <utility>

#include "ri2d/mathstat.hpp"
#include "ri2d/slt.hpp"
#include "ri2d/walks.hpp"

namespace ri2d {

namespace {

constexpr double kSolveTol = 1e-12;
constexpr double kBinRatio = 1.4142135623730951;  // geometric bin width
constexpr std::int64_t kMinPairsPerBin = 16;
constexpr double kMaxSeparation = 2.0;  // diameter / radius on a circle
constexpr double kMinSensitivityFactor = 16.0;  // diameter multiples
constexpr std::int64_t kMaxEngineCells = 8'000'000;

std::int64_t radius_floor2(double r) {
  return static_cast<std::int64_t>(std::floor(r * r));
}

// Masses of a sorted point law aligned to a sorted site list; absent sites
// carry zero.
std::vector<double> align_law(const std::vector<std::pair<Point, double>>& law,
                              const std::vector<Point>& sites) {
  std::vector<double> out(sites.size(), 0.0);
  std::size_t i = 0;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    while (i < law.size() && law[i].first < sites[k]) ++i;
    if (i < law.size() && law[i].first == sites[k]) out[k] = law[i].second;
  }
  return out;
}

std::vector<double> align_measure(const MeasureOnSet& m,
                                  const std::vector<Point>& sites) {
  std::vector<double> out(sites.size(), 0.0);
  double placed = 0.0;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    out[k] = m.at(sites[k]);
    placed += out[k];
  }
  if (std::abs(placed - m.total()) > 1e-9 * std::max(1.0, m.total()))
    throw ConfigError("measure support does not match the site list");
  return out;
}

void normalize_density(std::vector<double>& row) {
  double s = 0.0;
  for (double v : row) s += v;
  if (!(s > 0.0)) throw ConfigError("density has no mass");
  for (double& v : row) v /= s;
}

HolderFit fit_from_gaps(std::int32_t n,
                        const std::vector<std::pair<double, double>>& gaps) {
  HolderFit fit;
  fit.n = n;
  if (gaps.empty()) return fit;
  double lo = kMaxSeparation;
  for (const auto& g : gaps) lo = std::min(lo, g.first);
  const double lratio = std::log(kBinRatio);
  const auto bin_of = [&](double sep) {
    return static_cast<std::size_t>(
        std::floor(std::log(kMaxSeparation / sep) / lratio));
  };
  std::vector<HolderBin> bins(bin_of(lo) + 1);
  for (std::size_t k = 0; k < bins.size(); ++k)
    bins[k].separation = kMaxSeparation * std::pow(kBinRatio, -(double(k) + 0.5));
  for (const auto& g : gaps) {
    HolderBin& b = bins[bin_of(g.first)];
    b.mean_gap += g.second;
    b.pairs += 1;
  }
  std::vector<double> lx, ly;
  for (HolderBin& b : bins) {
    if (b.pairs > 0) b.mean_gap /= double(b.pairs);
    if (b.pairs >= kMinPairsPerBin && b.mean_gap > 0.0) {
      lx.push_back(std::log(b.separation));
      ly.push_back(std::log(b.mean_gap));
    }
  }
  if (lx.size() >= 3) {
    const LinFit lf = linear_fit(lx, ly);
    fit.beta = lf.slope;
    fit.log_c = lf.intercept;
    fit.r2 = lf.r2;
  }
  fit.bins = std::move(bins);
  return fit;
}

}  // namespace

// ---------------------------------------------------------------------------
// Entrance-ratio regularity
// ---------------------------------------------------------------------------

HolderGeometry::HolderGeometry(std::int32_t n, double c, double eps,
                               const PotentialTable& table)
    : n_(n), c_(c), eps_(eps) {
  if (n < 4) throw ConfigError("inner radius too small: " + std::to_string(n));
  if (!(c > 1.0)) throw ConfigError("outer multiple must exceed 1");
  if (!(eps > 0.0 && eps < 1.0))
    throw ConfigError("band parameter must lie in (0, 1)");
  if (!(c * (1.0 - eps) > 1.0 + 2.0 * eps))
    throw ConfigError("empty sampling band: need c (1 - eps) > 1 + 2 eps");
  band_lo2_ = radius_floor2((1.0 + 2.0 * eps) * n);
  band_hi2_ = radius_floor2(c * (1.0 - eps) * n);

  const std::vector<Point> annulus =
      enumerate_annulus(Annulus::of({0, 0}, double(n), c * n));
  const std::vector<Point> rim = internal_boundary(annulus);
  std::vector<Point> free;
  free.reserve(annulus.size() - rim.size());
  std::set_difference(annulus.begin(), annulus.end(), rim.begin(), rim.end(),
                      std::back_inserter(free));
  if (free.empty()) throw ConfigError("annulus has no interior sites");
  system_ = std::make_unique<AbsorbingSystem>(
      AbsorbingSystem::build(std::move(free), srw_plane(), kSolveTol));

  ring_ = ball_boundary(Ball::of({0, 0}, double(n)));
  EntranceKernel kernel(enumerate_ball(Ball::of({0, 0}, double(n))), table);
  if (kernel.boundary() != ring_)
    throw ConfigError("entrance kernel boundary does not match the ring");
  hm_ = kernel.hm();
}

std::vector<double> HolderGeometry::ratios(Point x) const {
  const std::int64_t r2 = norm2(x);
  if (r2 <= band_lo2_ || r2 > band_hi2_)
    throw ConfigError("start point outside the sampling band");
  if (system_->index_of(x) < 0)
    throw ConfigError("start point is not an interior annulus site");
  std::vector<double> h = align_law(system_->exit_law({{x, 1.0}}), ring_);
  for (std::size_t k = 0; k < h.size(); ++k) h[k] /= hm_[k];
  return h;
}

Point HolderGeometry::place(const PolarStart& start) const {
  const Point x{
      static_cast<std::int32_t>(std::llround(start.rho * n_ * std::cos(start.angle))),
      static_cast<std::int32_t>(std::llround(start.rho * n_ * std::sin(start.angle)))};
  const std::int64_t r2 = norm2(x);
  if (r2 <= band_lo2_ || r2 > band_hi2_)
    throw ConfigError("start point outside the sampling band");
  return x;
}

HolderScanResult holder_scan(const std::vector<std::int32_t>& ns, double c,
                             double eps, const std::vector<PolarStart>& starts,
                             const PotentialTable& table,
                             const std::vector<double>& sensitivity_factors) {
  if (ns.empty()) throw ConfigError("no inner radii given");
  if (starts.empty()) throw ConfigError("no start points given");
  for (double f : sensitivity_factors)
    if (f < kMinSensitivityFactor)
      throw ConfigError("sensitivity factor below " +
                        std::to_string(kMinSensitivityFactor));

  HolderScanResult res;
  res.ns = ns;
  res.c = c;
  res.eps = eps;

  const std::int32_t n_min = *std::min_element(ns.begin(), ns.end());
  std::vector<std::pair<double, double>> pooled;
  for (std::int32_t n : ns) {
    const HolderGeometry geo(n, c, eps, table);
    std::vector<std::pair<double, double>> local;
    for (const PolarStart& s : starts) {
      const Point x = geo.place(s);
      const std::vector<double> r = geo.ratios(x);
      const std::vector<Point>& ring = geo.ring();
      for (std::size_t i = 0; i < ring.size(); ++i)
        for (std::size_t j = i + 1; j < ring.size(); ++j) {
          const double sep = std::sqrt(double(dist2(ring[i], ring[j]))) / n;
          const double gap = std::abs(r[i] - r[j]);
          res.pairs.push_back({n, x, ring[i], ring[j], sep, gap});
          local.emplace_back(sep, gap);
        }
    }
    pooled.insert(pooled.end(), local.begin(), local.end());
    res.fits.push_back(fit_from_gaps(n, local));

    if (n == n_min && !sensitivity_factors.empty()) {
      const std::vector<Point> ball = enumerate_ball(Ball::of({0, 0}, double(n)));
      for (double f : sensitivity_factors) {
        FarHmOptions opts;
        opts.rfar_factor = f;  // rfar = f * diameter of the ball
        const FarHmResult far = far_circle_hm(ball, opts);
        double worst = 0.0;
        for (std::size_t k = 0; k < geo.ring().size(); ++k) {
          const double exact = geo.hm()[k];
          worst = std::max(worst, std::abs(far.hm.at(geo.ring()[k]) - exact) / exact);
        }
        res.sensitivity.push_back({n, far.rfar, worst, far.unknowns});
      }
    }
  }
  res.fits.push_back(fit_from_gaps(0, pooled));
  return res;
}

// ---------------------------------------------------------------------------
// Annulus entrance-law reversibility
// ---------------------------------------------------------------------------

ReversibilityReport reversibility_check(std::int32_t n, double c) {
  if (n < 2) throw ConfigError("inner radius too small: " + std::to_string(n));
  if (!(c > 1.0)) throw ConfigError("outer multiple must exceed 1");

  const std::vector<Point> annulus =
      enumerate_annulus(Annulus::of({0, 0}, double(n), c * n));
  const std::vector<Point> rim = internal_boundary(annulus);
  std::vector<Point> free;
  free.reserve(annulus.size());
  std::set_difference(annulus.begin(), annulus.end(), rim.begin(), rim.end(),
                      std::back_inserter(free));
  if (free.empty()) throw ConfigError("annulus has no interior sites");
  const AbsorbingSystem sys =
      AbsorbingSystem::build(std::move(free), srw_plane(), kSolveTol);
  const std::vector<Point> ring = ball_boundary(Ball::of({0, 0}, double(n)));

  // Probe starts spread across the annulus interior, nudged onto free sites.
  std::vector<Point> xs;
  for (double frac : {0.15, 0.35, 0.6, 0.85})
    for (double ang : {0.0, 2.2}) {
      const double rho = (1.0 + frac * (c - 1.0)) * n;
      const Point want{static_cast<std::int32_t>(std::llround(rho * std::cos(ang))),
                       static_cast<std::int32_t>(std::llround(rho * std::sin(ang)))};
      Point best = want;
      bool found = false;
      for (std::int32_t radius = 0; radius <= 3 && !found; ++radius)
        for (std::int32_t dx = -radius; dx <= radius && !found; ++dx)
          for (std::int32_t dy = -radius; dy <= radius && !found; ++dy) {
            const Point p{want.x + dx, want.y + dy};
            if (sys.index_of(p) >= 0) {
              best = p;
              found = true;
            }
          }
      if (found && std::find(xs.begin(), xs.end(), best) == xs.end())
        xs.push_back(best);
    }
  if (xs.empty()) throw ConfigError("no interior probe points in the annulus");

  ReversibilityReport rep;
  rep.n = n;
  rep.c = c;
  rep.starts = std::int64_t(xs.size());
  rep.ring_sites = std::int64_t(ring.size());
  for (const Point& u : ring) {
    bool any = false;
    for (const Point& w : neighbors4(u))
      if (sys.index_of(w) >= 0) any = true;
    if (!any) ++rep.silent_ring_sites;
  }

  for (const Point& x : xs) {
    const std::vector<double> h = align_law(sys.exit_law({{x, 1.0}}), ring);
    const std::vector<double> g = sys.green_column(x);
    for (std::size_t k = 0; k < ring.size(); ++k) {
      double sum = 0.0;
      for (const Point& w : neighbors4(ring[k])) {
        const std::int64_t idx = sys.index_of(w);
        if (idx >= 0) sum += g[std::size_t(idx)];
      }
      rep.max_residual = std::max(rep.max_residual, std::abs(h[k] - 0.25 * sum));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Torus excursion counts
// ---------------------------------------------------------------------------

TorusExcursionReport torus_excursion_test(std::int32_t n, double gamma1,
                                          double gamma2, std::int64_t t,
                                          std::int64_t reps, Rng& rng) {
  if (n < 8) throw ConfigError("torus side too small: " + std::to_string(n));
  if (!(gamma1 > 0.0 && gamma1 < gamma2 && gamma2 < 0.5))
    throw ConfigError("need 0 < gamma1 < gamma2 < 1/2");
  if (t < std::int64_t(n) * n)
    throw ConfigError("horizon below the mixing scale n^2");
  if (reps < 8) throw ConfigError("need at least 8 repetitions");

  const Torus torus = Torus::of(n);
  const double r1 = gamma1 * n;
  const double r2 = gamma2 * n;
  if (radius_floor2(r1) < 1) throw ConfigError("inner ball is a single point");
  const std::vector<Point> inner = enumerate_ball(Ball::of({0, 0}, r1));
  const std::vector<Point> outer_bd = ball_boundary(Ball::of({0, 0}, r2));
  for (const Point& p : outer_bd)
    if (sorted_contains(inner, p))
      throw ConfigError("rings overlap: gamma2 too close to gamma1");
  for (const Point& p : outer_bd)
    if (p.x < torus.lo() || p.x > torus.hi() || p.y < torus.lo() || p.y > torus.hi())
      throw ConfigError("outer ring does not fit on the torus");

  const double log_ratio = std::log(gamma2 / gamma1);
  const auto target_at = [&](std::int64_t h) {
    return std::numbers::pi * double(h) / (2.0 * double(n) * n * log_ratio);
  };
  const std::array<std::int64_t, 3> horizons{t, 2 * t, 4 * t};
  std::array<double, 3> sum{}, sumsq{};
  std::array<std::int64_t, 3> tail{};

  for (std::int64_t r = 0; r < reps; ++r) {
    const Point start{torus.lo() + std::int32_t(rng.below(std::uint64_t(torus.side))),
                      torus.lo() + std::int32_t(rng.below(std::uint64_t(torus.side)))};
    const TorusExcursionResult res =
        torus_excursions(torus, inner, outer_bd, 4 * t, start, rng);
    for (std::size_t w = 0; w < horizons.size(); ++w) {
      std::int64_t count = 0;
      for (const Excursion& e : res.completed)
        if (e.exit_time <= horizons[w]) ++count;
      sum[w] += double(count);
      sumsq[w] += double(count) * double(count);
      const double tgt = target_at(horizons[w]);
      if (std::abs(double(count) - tgt) > 0.5 * tgt) ++tail[w];
    }
  }

  TorusExcursionReport rep;
  rep.n = n;
  rep.gamma1 = gamma1;
  rep.gamma2 = gamma2;
  rep.t = t;
  rep.reps = reps;
  TorusWindowStats* windows[3] = {&rep.at_t, &rep.at_2t, &rep.at_4t};
  for (std::size_t w = 0; w < horizons.size(); ++w) {
    TorusWindowStats& st = *windows[w];
    st.horizon = horizons[w];
    st.target = target_at(horizons[w]);
    st.mean = sum[w] / double(reps);
    const double var =
        std::max(0.0, sumsq[w] / double(reps) - st.mean * st.mean);
    st.ci3 = 3.0 * std::sqrt(var / double(reps));
    st.tail_freq = double(tail[w]) / double(reps);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Critical-regime pipeline
// ---------------------------------------------------------------------------

ScaleThresholds critical_thresholds(double b, double gamma, double q_beta) {
  if (!(b >= 100.0)) throw ConfigError("scale too small for the thresholds");
  if (!(gamma > 1.0)) throw ConfigError("ring ratio must exceed 1");
  if (!(q_beta > 0.0)) throw ConfigError("quantile must be positive");
  const double lb = std::log(b);
  const double lg = std::log(gamma);
  ScaleThresholds th;
  th.b = b;
  th.lambda = (4.0 / 3.0) * lb;
  th.geom_p = 2.0 * lg / (3.0 * lb);
  th.center = 2.0 * lb * lb / lg;
  th.scale = std::sqrt(6.0) * std::pow(lb, 1.5) / lg;
  th.m_prime = th.center - std::pow(lb, 11.0 / 9.0);
  th.m_dprime = th.center - q_beta * th.scale;
  if (!(th.geom_p > 0.0 && th.geom_p < 1.0))
    throw ConfigError("escape rate outside (0, 1)");
  if (!(th.m_dprime > 0.0 && th.m_dprime < th.m_prime && th.m_prime < th.center))
    throw ConfigError("thresholds out of order at this scale");
  return th;
}

double compound_count_lower_tail(double lambda, double p, double bound) {
  if (!(lambda > 0.0)) throw ConfigError("trajectory rate must be positive");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("escape rate outside (0, 1)");
  if (bound < 0.0) return 0.0;
  const std::int64_t nmax = std::int64_t(std::floor(bound));
  // Recursive convolution of Poisson(lambda) many geometric(p) counts:
  // P[N = n] = (lambda / n) sum_{j=1..n} j f(j) P[N = n - j].
  std::vector<double> pr(std::size_t(nmax) + 1, 0.0);
  std::vector<double> f(std::size_t(nmax) + 1, 0.0);
  for (std::int64_t j = 1; j <= nmax; ++j)
    f[std::size_t(j)] = (j == 1) ? p : f[std::size_t(j - 1)] * (1.0 - p);
  pr[0] = std::exp(-lambda);
  double cdf = pr[0];
  for (std::int64_t m = 1; m <= nmax; ++m) {
    double s = 0.0;
    for (std::int64_t j = 1; j <= m; ++j)
      s += double(j) * f[std::size_t(j)] * pr[std::size_t(m - j)];
    pr[std::size_t(m)] = lambda / double(m) * s;
    cdf += pr[std::size_t(m)];
  }
  return cdf;
}

namespace {

std::int64_t sample_count_model(double lambda, double p, Rng& rng) {
  const std::int64_t k = rng.poisson(lambda);
  const double rate = -std::log1p(-p);
  std::int64_t total = 0;
  for (std::int64_t i = 0; i < k; ++i)
    total += 1 + std::int64_t(std::floor(rng.exponential() / rate));
  return total;
}

// Realized excursion machinery at one scale: a ball at distance b from the
// origin, excursions of the conditioned walk from its inner ring to the
// surrounding ring, and two soft-local-time consumers of one shared pool of
// entrance points.  Pool marks index simulated paths, so any point consumed
// by both consumers carries the same excursion.
class ScaleEngine {
 public:
  ScaleEngine(double b, double gamma, const PotentialTable& table)
      : center_{std::int32_t(std::llround(b)), 0} {
    const double r_in = std::sqrt(b);
    const double r_out = gamma * r_in;
    if (!(b > 4.0 * r_out))
      throw ConfigError("ball not well separated from the origin");
    const std::int32_t reach = std::int32_t(std::floor(r_out)) + 1;
    side_ = 2 * reach + 1;
    if (std::int64_t(side_) * side_ > kMaxEngineCells)
      throw ResourceError("engine window too large at this scale");
    base_ = Point{center_.x - reach, center_.y - reach};

    const Ball inner_ball = Ball::of(center_, r_in);
    const Ball outer_ball = Ball::of(center_, r_out);
    inner_pts_ = enumerate_ball(inner_ball);
    ring_ = internal_boundary(inner_pts_);
    const std::vector<Point> stop = ball_boundary(outer_ball);

    a_.assign(std::size_t(side_) * side_, 0.0);
    inner_id_.assign(a_.size(), -1);
    stop_mask_.assign(a_.size(), 0);
    for (std::int32_t dy = 0; dy < side_; ++dy)
      for (std::int32_t dx = 0; dx < side_; ++dx) {
        const Point p{base_.x + dx, base_.y + dy};
        a_[cell(p)] = table.a(p);
      }
    for (std::size_t i = 0; i < inner_pts_.size(); ++i)
      inner_id_[cell(inner_pts_[i])] = std::int32_t(i);
    for (const Point& p : stop) stop_mask_[cell(p)] = 1;

    hit_ = std::make_unique<HatHitKernel>(inner_pts_, table);
    lambda_exact_ = std::numbers::pi * hit_->cap();
    const std::vector<Point>& kb = hit_->kernel().boundary();
    kb_to_ring_.assign(kb.size(), -1);
    for (std::size_t i = 0; i < kb.size(); ++i) {
      const auto it = std::lower_bound(ring_.begin(), ring_.end(), kb[i]);
      if (it != ring_.end() && *it == kb[i])
        kb_to_ring_[i] = std::int32_t(it - ring_.begin());
      else if (kb[i] != Point{0, 0})
        throw ConfigError("hit kernel boundary leaks outside the ring");
    }

    // Trajectory entry law: the equilibrium weight a(x)^2 * P[one-step escape
    // without return], computed from the exact hit kernel.  Equivalent to
    // hat_equilibrium() but avoids its large auxiliary solve at this radius.
    fresh_row_.assign(ring_.size(), 0.0);
    for (std::size_t i = 0; i < ring_.size(); ++i) {
      const Point x = ring_[i];
      double esc = 0.0;
      for (const Point q : neighbors4(x)) {
        if (inner_id_[cell(q)] >= 0) continue;
        esc += table.a(q) * (1.0 - hit_->hit_prob(q));
      }
      fresh_row_[i] = table.a(x) * esc;
    }
    normalize_density(fresh_row_);
    iid_row_ = align_measure(
        relative_hm(inner_pts_, enumerate_ball(outer_ball), WalkKind::kConditioned,
                    table),
        ring_);
    normalize_density(iid_row_);

    visit_stamp_.assign(inner_pts_.size(), 0);
    ri_stamp_.assign(inner_pts_.size(), 0);
    iid_stamp_.assign(inner_pts_.size(), 0);
    max_steps_ = 64 * std::int64_t(std::llround(r_out * r_out - r_in * r_in + 100.0));
  }

  double lambda_exact() const { return lambda_exact_; }
  std::size_t ball_sites() const { return inner_pts_.size(); }

  struct RepOutcome {
    std::int64_t n_k = 0;
    bool phi = false, j_event = false, m_event = false, vacant = false;
    double vacant_fraction = 0.0;
  };

  RepOutcome run_rep(const ScaleThresholds& th, Rng& rng) {
    auto pool = std::make_shared<PoissonPool>(ring_.size(),
                                              Rng(rng.next_u64(), rng.next_u64()));
    SLTProcess chain(pool), iid(pool);
    paths_.clear();
    ++rep_stamp_;

    const std::int64_t m2 = std::int64_t(std::floor(th.m_dprime));
    const std::int64_t m1 = std::int64_t(std::floor(th.m_prime));
    const std::int64_t cap_selections = 64 * (m1 + m2 + 64);
    const std::int64_t traj_target = rng.poisson(lambda_exact_);

    std::int64_t n_k = traj_target == 0 ? 0 : -1;
    std::int64_t traj_done = 0;
    std::int64_t selections = 0;
    const std::vector<double>* row = &fresh_row_;
    std::vector<double> chain_envelope;
    while (n_k < 0 || selections < m2) {
      if (selections > cap_selections)
        throw ResourceError("excursion chain failed to terminate");
      const SLTSelection sel = chain.step(*row);
      ++selections;
      const std::int32_t path_id = path_for(*pool, sel, rng);
      const Path& path = paths_[std::size_t(path_id)];
      if (traj_done < traj_target)
        for (std::int32_t s : path.sites) ri_stamp_[std::size_t(s)] = rep_stamp_;
      if (selections == m2) chain_envelope = chain.envelope();
      const RetRow& ret = ret_row(path.end);
      if (rng.u01() >= ret.hit) {  // trajectory escapes for good
        ++traj_done;
        if (traj_done == traj_target && n_k < 0) n_k = selections;
        row = &fresh_row_;
      } else {
        row = &ret.row;
      }
    }

    for (std::int64_t j = 0; j < m1; ++j) {
      const SLTSelection sel = iid.step(iid_row_);
      const std::int32_t path_id = path_for(*pool, sel, rng);
      for (std::int32_t s : paths_[std::size_t(path_id)].sites)
        iid_stamp_[std::size_t(s)] = rep_stamp_;
    }

    RepOutcome out;
    out.n_k = n_k;
    out.phi = double(n_k) <= th.m_dprime;
    std::int64_t ri_uncovered = 0, iid_uncovered = 0;
    for (std::size_t i = 0; i < inner_pts_.size(); ++i) {
      if (ri_stamp_[i] != rep_stamp_) ++ri_uncovered;
      if (iid_stamp_[i] != rep_stamp_) ++iid_uncovered;
    }
    out.j_event = iid_uncovered > 0;
    out.vacant = ri_uncovered > 0;
    out.vacant_fraction = double(ri_uncovered) / double(inner_pts_.size());
    out.m_event = true;
    for (std::size_t k = 0; k < ring_.size(); ++k)
      if (chain_envelope[k] > iid.envelope()[k]) {
        out.m_event = false;
        break;
      }
    return out;
  }

 private:
  struct Path {
    std::vector<std::int32_t> sites;  // deduped ball ids along the excursion
    Point end;
  };
  struct RetRow {
    double hit = 0.0;         // return probability from the end point
    std::vector<double> row;  // conditional re-entrance law on the ring
  };

  std::size_t cell(Point p) const {
    return std::size_t(p.x - base_.x) + std::size_t(side_) * std::size_t(p.y - base_.y);
  }

  std::int32_t path_for(PoissonPool& pool, const SLTSelection& sel, Rng& rng) {
    std::int32_t id = pool.mark(sel.site, sel.point_index);
    if (id >= 0) return id;
    id = simulate(ring_[sel.site], rng);
    pool.set_mark(sel.site, sel.point_index, id);
    return id;
  }

  std::int32_t simulate(Point start, Rng& rng) {
    Path path;
    ++visit_counter_;
    Point p = start;
    path.sites.push_back(inner_id_[cell(p)]);
    visit_stamp_[std::size_t(path.sites.back())] = visit_counter_;
    for (std::int64_t step = 0;; ++step) {
      if (step > max_steps_) throw ResourceError("excursion failed to reach the outer ring");
      const std::array<Point, 4> nb = neighbors4(p);
      double w[4];
      double total = 0.0;
      for (int i = 0; i < 4; ++i) {
        w[i] = a_[cell(nb[i])];
        total += w[i];
      }
      double u = rng.u01() * total;
      int pick = 3;
      for (int i = 0; i < 3; ++i) {
        if (u < w[i]) {
          pick = i;
          break;
        }
        u -= w[i];
      }
      p = nb[pick];
      const std::size_t c = cell(p);
      if (stop_mask_[c]) break;
      const std::int32_t id = inner_id_[c];
      if (id >= 0 && visit_stamp_[std::size_t(id)] != visit_counter_) {
        visit_stamp_[std::size_t(id)] = visit_counter_;
        path.sites.push_back(id);
      }
    }
    path.end = p;
    paths_.push_back(std::move(path));
    return std::int32_t(paths_.size()) - 1;
  }

  const RetRow& ret_row(Point end) {
    auto it = returns_.find(end);
    if (it != returns_.end()) return it->second;
    RetRow rr;
    const std::vector<double> sub = hit_->entrance_sub_law(end);
    rr.row.assign(ring_.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < sub.size(); ++i) {
      total += sub[i];
      if (kb_to_ring_[i] >= 0) rr.row[std::size_t(kb_to_ring_[i])] = sub[i];
    }
    rr.hit = total;
    if (total > 0.0)
      for (double& v : rr.row) v /= total;
    return returns_.emplace(end, std::move(rr)).first->second;
  }

  Point center_;
  Point base_;
  std::int32_t side_ = 0;
  std::vector<double> a_;
  std::vector<std::int32_t> inner_id_;
  std::vector<std::uint8_t> stop_mask_;
  std::vector<Point> inner_pts_;
  std::vector<Point> ring_;
  std::unique_ptr<HatHitKernel> hit_;
  std::vector<std::int32_t> kb_to_ring_;
  double lambda_exact_ = 0.0;
  std::vector<double> fresh_row_;
  std::vector<double> iid_row_;
  std::unordered_map<Point, RetRow, PointHash> returns_;
  std::vector<Path> paths_;
  std::vector<std::uint32_t> visit_stamp_;
  std::uint32_t visit_counter_ = 0;
  std::vector<std::uint32_t> ri_stamp_, iid_stamp_;
  std::uint32_t rep_stamp_ = 0;
  std::int64_t max_steps_ = 0;
};

}  // namespace

CriticalReport critical_pipeline(const CriticalRunConfig& config, Rng& rng,
                                 const PotentialTable& table) {
  if (config.bs.empty()) throw ConfigError("no scales given");
  if (!(config.gamma > 1.0 && config.gamma < std::sqrt(std::numbers::pi / 2.0)))
    throw ConfigError("ring ratio outside (1, sqrt(pi/2))");
  if (!(config.beta > 0.0 && config.beta < 0.5))
    throw ConfigError("tail target outside (0, 1/2)");
  if (!(config.beta + std::numbers::pi / (4.0 * config.gamma * config.gamma) > 1.0))
    throw ConfigError("tail target too small for this ring ratio");
  if (config.model_reps < 100) throw ConfigError("need at least 100 model reps");
  if (config.engine_reps < 0) throw ConfigError("negative engine reps");
  for (double b : config.bs)
    if (!(b >= 100.0 && b <= 2e6))
      throw ConfigError("scale outside the supported ladder range");

  CriticalReport report;
  report.config = config;
  report.q_beta = normal_upper_quantile(config.beta);

  for (double b : config.bs) {
    CriticalScaleReport sc;
    sc.thresholds = critical_thresholds(b, config.gamma, report.q_beta);

    sc.model_reps = config.model_reps;
    double sum = 0.0, sumsq = 0.0;
    std::int64_t below = 0;
    for (std::int64_t r = 0; r < config.model_reps; ++r) {
      const std::int64_t nv =
          sample_count_model(sc.thresholds.lambda, sc.thresholds.geom_p, rng);
      sum += double(nv);
      sumsq += double(nv) * double(nv);
      if (double(nv) <= sc.thresholds.m_dprime) ++below;
    }
    sc.model_mean = sum / double(config.model_reps);
    sc.model_sd = std::sqrt(std::max(
        0.0, sumsq / double(config.model_reps) - sc.model_mean * sc.model_mean));
    sc.phi_freq_model = double(below) / double(config.model_reps);
    sc.phi_exact = compound_count_lower_tail(
        sc.thresholds.lambda, sc.thresholds.geom_p, sc.thresholds.m_dprime);

    if (b <= config.max_engine_b && config.engine_reps > 0) {
      ScaleEngine engine(b, config.gamma, table);
      sc.engine_run = true;
      sc.engine_reps = config.engine_reps;
      sc.lambda_exact = engine.lambda_exact();
      double esum = 0.0, esumsq = 0.0, vfrac = 0.0;
      std::int64_t phi_n = 0, j_n = 0, m_n = 0;
      for (std::int64_t r = 0; r < config.engine_reps; ++r) {
        const ScaleEngine::RepOutcome out = engine.run_rep(sc.thresholds, rng);
        esum += double(out.n_k);
        esumsq += double(out.n_k) * double(out.n_k);
        vfrac += out.vacant_fraction;
        if (out.phi) ++phi_n;
        if (out.j_event) ++j_n;
        if (out.m_event) ++m_n;
        if (out.phi && out.j_event && out.m_event) {
          ++sc.conjunctions;
          if (out.vacant) ++sc.vacancies_at_conjunction;
        }
      }
      sc.engine_mean = esum / double(config.engine_reps);
      sc.engine_sd = std::sqrt(std::max(
          0.0, esumsq / double(config.engine_reps) - sc.engine_mean * sc.engine_mean));
      sc.phi_freq_engine = double(phi_n) / double(config.engine_reps);
      sc.j_freq = double(j_n) / double(config.engine_reps);
      sc.m_freq = double(m_n) / double(config.engine_reps);
      sc.mean_vacant_fraction = vfrac / double(config.engine_reps);
      sc.implication_held = sc.vacancies_at_conjunction == sc.conjunctions;
    }
    report.scales.push_back(std::move(sc));
  }
  return report;
}

}  // namespace ri2d
