#include "ri2d/interlace.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

#include "ri2d/mathstat.hpp"
#include "ri2d/solver.hpp"

namespace ri2d {
namespace {

// Soup window placed around a probed site so vacancy of the site depends on
// entry sampling and tracing, not just on the Poisson void probability.
constexpr double kVacantWindowRadius = 2.0;
// Below this many conditioning events the conditional frequency is noise.
constexpr std::int64_t kMinConditioningHits = 50;
// A renewal loop that fails to terminate is a bug, not a long trajectory.
constexpr std::int64_t kTrajectoryStepCap = 50'000'000;

std::vector<Point> sorted_unique(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

std::vector<Point> minus_sorted(const std::vector<Point>& a,
                                const std::vector<Point>& b) {
  std::vector<Point> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

double diameter(const std::vector<Point>& pts) {
  std::int64_t best = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::max(best, dist2(pts[i], pts[j]));
  return std::sqrt(static_cast<double>(best));
}

// Rebuild the occupied/vacant partition of the window from the kept paths.
void finish_occupancy(const std::vector<Point>& window, RISample& s) {
  std::vector<Point> occ;
  for (const auto& path : s.paths)
    occ.insert(occ.end(), path.begin(), path.end());
  occ = sorted_unique(std::move(occ));
  s.vacant = minus_sorted(window, occ);
  s.occupied = std::move(occ);
}

// First re-entry point given that the walk at z does return; sub-law masses
// sum to h = hit_prob(z), so u is drawn against that total.
Point entrance_jump(const HatHitKernel& kernel, Point z, double h, Rng& rng) {
  const auto sub = kernel.entrance_sub_law(z);
  const auto& bd = kernel.kernel().boundary();
  double u = rng.u01() * h;
  std::size_t best = 0;
  for (std::size_t i = 0; i < sub.size(); ++i) {
    if (sub[i] > sub[best]) best = i;
    u -= sub[i];
    if (u <= 0.0) return bd[i];
  }
  return bd[best];  // numeric slack lands on the modal entry
}

}  // namespace

RISampler::RISampler(std::vector<Point> window, const PotentialTable& table)
    : window_(sorted_unique(std::move(window))) {
  if (window_.empty()) throw ConfigError("ri sampler: empty window");
  // The pure-origin window is hit by no trajectory: a(0) = 0 kills the rate.
  if (window_.size() == 1 && window_[0] == Point{0, 0}) return;
  tracer_.emplace(window_, table);
  capacity_ = tracer_->cap();
}

RISample RISampler::sample(double level, Rng& rng) const {
  if (!(level > 0.0)) throw ConfigError("ri sample: level must be positive");
  RISample out;
  out.level = level;
  out.trajectory_count =
      static_cast<std::int64_t>(rng.poisson(std::numbers::pi * level * capacity_));
  const auto n = static_cast<std::size_t>(out.trajectory_count);
  out.labels.resize(n);
  for (auto& u : out.labels) u = level * (1.0 - rng.u01());  // in (0, level]
  out.paths.resize(n);
  for (auto& path : out.paths)
    tracer_->trace(tracer_->sample_entry(rng), rng, path);
  finish_occupancy(window_, out);
  return out;
}

RISample RISampler::thin(const RISample& full, double level) const {
  if (!(level > 0.0) || level > full.level)
    throw ConfigError("ri thin: level must lie in (0, sampled level]");
  RISample out;
  out.level = level;
  out.miss_bound = full.miss_bound;
  for (std::size_t i = 0; i < full.labels.size(); ++i) {
    if (full.labels[i] > level) continue;
    out.labels.push_back(full.labels[i]);
    out.paths.push_back(full.paths[i]);
  }
  out.trajectory_count = static_cast<std::int64_t>(out.labels.size());
  finish_occupancy(window_, out);
  return out;
}

VacantEstimate vacant_prob(double level, Point site, std::int64_t samples,
                           const PotentialTable& table, Rng& rng) {
  if (!(level > 0.0)) throw ConfigError("vacant prob: level must be positive");
  if (samples < 1) throw ConfigError("vacant prob: need at least one sample");
  const RISampler soup(enumerate_ball(Ball::of(site, kVacantWindowRadius)),
                       table);
  std::int64_t vacant = 0;
  for (std::int64_t i = 0; i < samples; ++i) {
    const RISample s = soup.sample(level, rng);
    if (!sorted_contains(s.occupied, site)) ++vacant;
  }
  VacantEstimate out;
  out.level = level;
  out.site = site;
  out.samples = samples;
  out.estimate = static_cast<double>(vacant) / static_cast<double>(samples);
  out.ci_halfwidth = binomial_ci_halfwidth(out.estimate, samples, 3.0);
  out.target = std::exp(-std::numbers::pi * level * table.a(site) / 2.0);
  // pi * kPotentialFarConstant = 2 gamma + ln 8.
  out.asymptotic =
      site == Point{0, 0}
          ? 1.0
          : std::pow(norm(site), -level) *
                std::exp(-level * std::numbers::pi * kPotentialFarConstant / 2.0);
  return out;
}

DecouplingResult conditional_decoupling(double level,
                                        const std::vector<Point>& set,
                                        const std::vector<Point>& sites,
                                        std::int64_t samples,
                                        const PotentialTable& table, Rng& rng) {
  if (!(level > 0.0)) throw ConfigError("decoupling: level must be positive");
  if (samples < 1) throw ConfigError("decoupling: need at least one sample");
  if (sites.empty()) throw ConfigError("decoupling: no conditioning sites");
  const auto a_set = sorted_unique(set);
  if (!sorted_contains(a_set, Point{0, 0}))
    throw ConfigError("decoupling: set must contain the origin");
  const double diam = diameter(a_set);

  DecouplingResult out;
  out.level = level;
  out.set_capacity = capacity(a_set, table).value;
  out.unconditional = std::exp(-std::numbers::pi * level * out.set_capacity);
  out.limit = std::exp(-std::numbers::pi * level / 4.0 * out.set_capacity);

  for (const Point x : sites) {
    if (norm(x) < std::max(8.0 * diam, 1.0))
      throw ConfigError("decoupling: conditioning site too close to the set");
    auto window = a_set;
    window.push_back(x);
    const RISampler soup(std::move(window), table);
    std::int64_t hits = 0;
    std::int64_t joint = 0;
    for (std::int64_t i = 0; i < samples; ++i) {
      const RISample s = soup.sample(level, rng);
      if (sorted_contains(s.occupied, x)) continue;
      ++hits;
      bool set_vacant = true;
      for (const Point p : a_set)
        if (sorted_contains(s.occupied, p)) {
          set_vacant = false;
          break;
        }
      joint += set_vacant ? 1 : 0;
    }
    if (hits < kMinConditioningHits)
      throw ResourceError("decoupling: conditioning event too rare; "
                          "increase samples");
    DecouplingPoint pt;
    pt.site = x;
    pt.conditioning_hits = hits;
    pt.conditional = static_cast<double>(joint) / static_cast<double>(hits);
    pt.ci_halfwidth = binomial_ci_halfwidth(pt.conditional, hits, 3.0);
    out.points.push_back(pt);
  }
  return out;
}

ExcursionCountResult ri_excursion_counts(double level, Point center,
                                         double radius, double outer_factor,
                                         std::int64_t samples,
                                         const PotentialTable& table,
                                         Rng& rng) {
  if (!(level > 0.0))
    throw ConfigError("excursion counts: level must be positive");
  if (radius < 1.0)
    throw ConfigError("excursion counts: radius must be at least 1");
  if (!(outer_factor > 1.0))
    throw ConfigError("excursion counts: outer factor must exceed 1");
  if (samples < 1)
    throw ConfigError("excursion counts: need at least one sample");
  if (norm(center) < 2.0 * outer_factor * radius)
    throw ConfigError("excursion counts: ball too close to the origin");

  const Ball inner = Ball::of(center, radius);
  const Ball outer = Ball::of(center, outer_factor * radius);
  const auto ball_pts = enumerate_ball(inner);
  const auto bd = internal_boundary(ball_pts);
  const HatHitKernel kernel(ball_pts, table);
  const auto eq = hat_equilibrium(ball_pts, table);
  const auto sys = AbsorbingSystem::build(enumerate_ball(outer),
                                          hat_plane(table));

  // Kernel boundary is the ball rim plus the origin; map rows onto the rim.
  const auto& kbd = kernel.kernel().boundary();
  std::vector<std::ptrdiff_t> rim_index(kbd.size(), -1);
  for (std::size_t i = 0; i < kbd.size(); ++i) {
    const auto it = std::lower_bound(bd.begin(), bd.end(), kbd[i]);
    if (it != bd.end() && *it == kbd[i]) rim_index[i] = it - bd.begin();
  }

  // Expected excursions from each entry point: one now, plus the law of the
  // next entry obtained by exiting the outer ball and returning to the rim.
  const auto n = static_cast<Eigen::Index>(bd.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto nu = sys.exit_law({{bd[static_cast<std::size_t>(j)], 1.0}});
    for (const auto& [z, mass] : nu) {
      if (mass == 0.0) continue;
      const auto sub = kernel.entrance_sub_law(z);
      for (std::size_t i = 0; i < sub.size(); ++i)
        if (rim_index[i] >= 0)
          m(j, static_cast<Eigen::Index>(rim_index[i])) -= mass * sub[i];
    }
  }
  const Eigen::VectorXd per_entry =
      Eigen::PartialPivLU<Eigen::MatrixXd>(m).solve(Eigen::VectorXd::Ones(n));

  ExcursionCountResult out;
  out.rate = std::numbers::pi * level * eq.total;
  for (Eigen::Index i = 0; i < n; ++i)
    out.mean_per_trajectory +=
        eq.hm.weight[static_cast<std::size_t>(i)] * per_entry(i);

  const Ball guard = Ball::of(center, 2.0 * outer.radius + 16.0);
  const AliasTable entry(eq.hm.weight);
  out.samples.reserve(static_cast<std::size_t>(samples));
  for (std::int64_t s = 0; s < samples; ++s) {
    ExcursionCountSample rec;
    rec.trajectories = static_cast<std::int64_t>(rng.poisson(out.rate));
    rec.per_trajectory.reserve(static_cast<std::size_t>(rec.trajectories));
    for (std::int64_t t = 0; t < rec.trajectories; ++t) {
      Point pos = bd[entry.sample(rng)];
      std::int32_t count = 0;
      std::int64_t steps = 0;
      bool alive = true;
      while (alive) {
        ++count;  // an excursion begins at every rim entry
        while (outer.contains(pos)) {
          pos = hat_step(pos, table, rng);
          if (++steps > kTrajectoryStepCap)
            throw ResourceError("excursion counts: step cap exceeded");
        }
        // Free flight: returning to the ball opens the next excursion; past
        // the guard ring one draw against the exact hitting law settles it.
        for (;;) {
          if (inner.contains(pos)) break;
          if (!guard.contains(pos)) {
            const double h = kernel.hit_prob(pos);
            if (rng.u01() >= h) {
              alive = false;
            } else {
              pos = entrance_jump(kernel, pos, h, rng);
            }
            break;
          }
          pos = hat_step(pos, table, rng);
          if (++steps > kTrajectoryStepCap)
            throw ResourceError("excursion counts: step cap exceeded");
        }
      }
      rec.per_trajectory.push_back(count);
      rec.total += count;
    }
    out.samples.push_back(std::move(rec));
  }
  return out;
}

}  // namespace ri2d
