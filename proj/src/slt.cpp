#include "ri2d/slt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>

#include "ri2d/mathstat.hpp"

namespace ri2d {

namespace {

// How far a density row may drift from total mass one before it is rejected.
constexpr double kDensityTolerance = 1e-9;
// Hard cap on joint-chain selections per requested pair selection; the
// expected overhead is a small constant, so hitting this means a broken row.
constexpr std::int64_t kJointSelectionFactor = 1000;

constexpr std::size_t kNoSite = std::numeric_limits<std::size_t>::max();

std::vector<Point> minus_sorted(const std::vector<Point>& a,
                                const std::vector<Point>& b) {
  std::vector<Point> out;
  out.reserve(a.size());
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

// Expand an exit law (sorted, sparse) to a dense row over `sites` (sorted).
std::vector<double> dense_over(const std::vector<Point>& sites,
                               const std::vector<std::pair<Point, double>>& law) {
  std::vector<double> row(sites.size(), 0.0);
  std::size_t i = 0;
  for (const auto& [p, w] : law) {
    while (i < sites.size() && sites[i] < p) ++i;
    if (i == sites.size() || !(sites[i] == p))
      throw ConfigError("excursion row: exit mass outside the alphabet at " +
                        to_string(p));
    row[i] += w;
  }
  return row;
}

Rng fresh_pool_base(Rng& rng) {
  const auto seed = rng.next_u64();
  const auto stream = rng.next_u64();
  return Rng(seed, stream);
}

double sup_abs_gap(const std::vector<double>& env, double steps,
                   const std::vector<double>& row) {
  double s = 0.0;
  for (std::size_t i = 0; i < env.size(); ++i)
    s = std::max(s, std::abs(env[i] - steps * row[i]));
  return s;
}

}  // namespace

PoissonPool::PoissonPool(std::size_t sites, Rng base) {
  if (sites == 0) throw ConfigError("poisson pool: empty alphabet");
  clocks_.reserve(sites);
  for (std::size_t i = 0; i < sites; ++i)
    clocks_.push_back(Column{base.child(i), {}, {}});
}

double PoissonPool::height(std::size_t site, std::size_t index) {
  auto& col = clocks_.at(site);
  while (col.heights.size() <= index) {
    const double last = col.heights.empty() ? 0.0 : col.heights.back();
    col.heights.push_back(last + col.rng.exponential());
    col.marks.push_back(-1);
  }
  return col.heights[index];
}

std::int32_t PoissonPool::mark(std::size_t site, std::size_t index) const {
  const auto& marks = clocks_.at(site).marks;
  return index < marks.size() ? marks[index] : -1;
}

void PoissonPool::set_mark(std::size_t site, std::size_t index,
                           std::int32_t value) {
  auto& col = clocks_.at(site);
  if (index >= col.marks.size())
    throw ConfigError("poisson pool: mark set before the point exists");
  col.marks[index] = value;
}

SLTProcess::SLTProcess(std::shared_ptr<PoissonPool> pool)
    : pool_(std::move(pool)) {
  if (!pool_) throw ConfigError("slt process: missing pool");
  envelope_.assign(pool_->sites(), 0.0);
  next_.assign(pool_->sites(), 0);
}

SLTSelection SLTProcess::step(const std::vector<double>& density) {
  if (density.size() != envelope_.size())
    throw ConfigError("slt step: density size does not match the alphabet");
  double total = 0.0;
  for (const double d : density) {
    if (!(d >= 0.0)) throw ConfigError("slt step: negative density entry");
    total += d;
  }
  if (std::abs(total - 1.0) > kDensityTolerance)
    throw ConfigError("slt step: density does not sum to one");

  SLTSelection sel;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < density.size(); ++y) {
    if (density[y] <= 0.0) continue;
    const double xi = (pool_->height(y, next_[y]) - envelope_[y]) / density[y];
    if (xi < best) {
      best = xi;
      sel.site = y;
      sel.tie = false;
    } else if (xi == best) {
      sel.tie = true;
    }
  }
  sel.xi = best;
  for (std::size_t y = 0; y < density.size(); ++y)
    envelope_[y] += best * density[y];
  sel.point_index = next_[sel.site]++;
  ++steps_;
  if (sel.tie) ++ties_;
  return sel;
}

TorusExcursionModel::TorusExcursionModel(std::int32_t inner_radius,
                                         double gamma1, double gamma2,
                                         const PotentialTable& table)
    : inner_radius_(inner_radius) {
  if (inner_radius < 2)
    throw ConfigError("torus excursions: inner radius must be at least 2");
  if (!(gamma1 > 1.0) || !(gamma2 > 2.0 * gamma1))
    throw ConfigError(
        "torus excursions: need 1 < gamma1 and gamma2 > 2 * gamma1");
  const double r_out = gamma1 * inner_radius;
  if (!(r_out >= inner_radius + 2.0))
    throw ConfigError(
        "torus excursions: outer radius must exceed the inner by 2");
  const auto side = std::int32_t(std::llround(gamma2 * inner_radius));
  if (!(2.0 * r_out + 2.0 < side))
    throw ConfigError("torus excursions: outer ball does not fit the torus");
  torus_ = Torus::of(side);

  const auto inner = enumerate_ball(Ball::of({0, 0}, double(inner_radius)));
  alphabet_ = internal_boundary(inner);
  const auto outer = enumerate_ball(Ball::of({0, 0}, r_out));
  ends_ = internal_boundary(outer);

  outside_ = std::make_unique<AbsorbingSystem>(AbsorbingSystem::build(
      minus_sorted(torus_.enumerate(), inner), srw_torus(torus_)));
  if (outside_->boundary() != alphabet_)
    throw ConfigError("torus excursions: absorbing set is not the alphabet");

  const auto inside =
      AbsorbingSystem::build(minus_sorted(outer, ends_), srw_plane());
  if (inside.boundary() != ends_)
    throw ConfigError("torus excursions: end ring mismatch");
  end_rows_.reserve(alphabet_.size());
  end_alias_.reserve(alphabet_.size());
  for (const Point y : alphabet_) {
    end_rows_.push_back(dense_over(ends_, inside.exit_law({{y, 1.0}})));
    end_alias_.emplace_back(end_rows_.back());
  }

  auto m = relative_hm(inner, outer, WalkKind::kSimple, table);
  if (m.support != alphabet_)
    throw ConfigError("torus excursions: entrance profile support mismatch");
  hm_ = std::move(m.weight);
}

const std::vector<double>& TorusExcursionModel::entry_row(Point x) const {
  const Point w = torus_.wrap(x);
  if (const auto it = entry_cache_.find(w); it != entry_cache_.end())
    return it->second;
  if (outside_->index_of(w) < 0)
    throw ConfigError("torus excursions: entry start " + to_string(x) +
                      " is not outside the inner ball");
  auto row = dense_over(alphabet_, outside_->exit_law({{w, 1.0}}));
  return entry_cache_.emplace(w, std::move(row)).first->second;
}

const std::vector<double>& TorusExcursionModel::end_row(
    std::size_t site) const {
  return end_rows_.at(site);
}

std::size_t TorusExcursionModel::sample_end(std::size_t site, Rng& rng) const {
  return end_alias_.at(site).sample(rng);
}

DeviationReport deviation_experiment(const TorusExcursionModel& model,
                                     Point start,
                                     std::vector<std::int64_t> checkpoints,
                                     std::int64_t reps, Rng& rng) {
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()),
                    checkpoints.end());
  if (checkpoints.empty() || checkpoints.front() < 1)
    throw ConfigError("deviation experiment: checkpoints must be >= 1");
  if (reps < 2) throw ConfigError("deviation experiment: need at least 2 reps");

  const auto kmax = checkpoints.back();
  const auto& hm = model.hm_row();
  std::vector<std::vector<double>> sups(checkpoints.size());

  for (std::int64_t rep = 0; rep < reps; ++rep) {
    auto pool = std::make_shared<PoissonPool>(model.alphabet().size(),
                                              fresh_pool_base(rng));
    SLTProcess proc(pool);
    Point w = start;
    std::size_t ci = 0;
    for (std::int64_t k = 1; k <= kmax; ++k) {
      const auto sel = proc.step(model.entry_row(w));
      w = model.ends()[model.sample_end(sel.site, rng)];
      if (k == checkpoints[ci]) {
        sups[ci].push_back(sup_abs_gap(proc.envelope(), double(k), hm));
        ++ci;
      }
    }
  }

  DeviationReport out;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    DeviationRow row;
    row.k = checkpoints[i];
    row.median_sup = quantile(sups[i], 0.5);
    row.q95_sup = quantile(sups[i], 0.95);
    out.rows.push_back(row);
    lx.push_back(std::log(double(row.k)));
    ly.push_back(std::log(row.median_sup));
  }
  if (out.rows.size() >= 2) out.loglog_slope = linear_fit(lx, ly).slope;
  return out;
}

ExcursionCoupler::ExcursionCoupler(std::int32_t inner_radius, double gamma1,
                                   double gamma2, Point plane_center,
                                   const PotentialTable& table)
    : model_(inner_radius, gamma1, gamma2, table) {
  const double r_out = gamma1 * inner_radius;
  if (!(norm(plane_center) >= 2.0 * r_out))
    throw ConfigError("excursion coupler: plane center too close to origin");
  const auto inner = enumerate_ball(Ball::of(plane_center, double(inner_radius)));
  const auto outer = enumerate_ball(Ball::of(plane_center, r_out));
  auto m = relative_hm(inner, outer, WalkKind::kConditioned, table);
  if (m.support.size() != model_.alphabet().size())
    throw ConfigError("excursion coupler: alphabet sizes differ");
  for (std::size_t i = 0; i < m.support.size(); ++i)
    if (!(m.support[i] - plane_center == model_.alphabet()[i]))
      throw ConfigError("excursion coupler: alphabet shapes differ");
  iid_row_ = std::move(m.weight);
}

double ExcursionCoupler::row_gap() const {
  double g = 0.0;
  for (std::size_t i = 0; i < iid_row_.size(); ++i)
    g = std::max(g, std::abs(iid_row_[i] - model_.hm_row()[i]));
  return g;
}

CouplingReport ExcursionCoupler::run(std::int64_t walk_steps,
                                     std::int64_t iid_steps, Point start,
                                     Rng& rng) const {
  if (walk_steps < 1 || iid_steps < 1 || iid_steps > walk_steps)
    throw ConfigError("excursion coupler: need 1 <= iid_steps <= walk_steps");
  auto pool = std::make_shared<PoissonPool>(model_.alphabet().size(),
                                            fresh_pool_base(rng));

  // Walk stream: a real excursion chain.  It owns the marks, so a point
  // consumed by both streams names one and the same excursion.
  SLTProcess walk(pool);
  Point w = start;
  for (std::int64_t j = 0; j < walk_steps; ++j) {
    const auto sel = walk.step(model_.entry_row(w));
    std::int32_t mk = pool->mark(sel.site, sel.point_index);
    if (mk < 0) {
      mk = std::int32_t(model_.sample_end(sel.site, rng));
      pool->set_mark(sel.site, sel.point_index, mk);
    }
    w = model_.ends()[std::size_t(mk)];
  }

  // Independent stream: the same row every step, same pool.
  SLTProcess iid(pool);
  CouplingReport rep;
  rep.walk_steps = walk_steps;
  rep.iid_steps = iid_steps;
  rep.iid_point_in_walk.reserve(std::size_t(iid_steps));
  for (std::int64_t j = 0; j < iid_steps; ++j) {
    const auto sel = iid.step(iid_row_);
    const bool hit = sel.point_index < walk.consumed(sel.site);
    rep.iid_point_in_walk.push_back(hit);
    if (hit) ++rep.shared_points;
  }
  rep.included = rep.shared_points == iid_steps;
  rep.walk_sup_dev =
      sup_abs_gap(walk.envelope(), double(walk_steps), model_.hm_row());
  rep.iid_sup_dev = sup_abs_gap(iid.envelope(), double(iid_steps), iid_row_);
  rep.ties = walk.ties() + iid.ties();
  return rep;
}

ConsistencySampler::ConsistencySampler(std::int32_t torus_side,
                                       std::int32_t inner_radius,
                                       std::int32_t outer_radius,
                                       Point center_a, Point center_b,
                                       Point start,
                                       const PotentialTable& table)
    : start_(start) {
  if (inner_radius < 2 || outer_radius < inner_radius + 2)
    throw ConfigError("consistency sampler: need 2 <= r and r + 2 <= R");
  torus_ = Torus::of(torus_side);
  for (const Point c : {center_a, center_b}) {
    if (c.x - outer_radius < torus_.lo() || c.x + outer_radius > torus_.hi() ||
        c.y - outer_radius < torus_.lo() || c.y + outer_radius > torus_.hi())
      throw ConfigError("consistency sampler: a pair touches the wrap");
  }

  const auto inner_a = enumerate_ball(Ball::of(center_a, double(inner_radius)));
  const auto inner_b = enumerate_ball(Ball::of(center_b, double(inner_radius)));
  const auto outer_a = enumerate_ball(Ball::of(center_a, double(outer_radius)));
  const auto outer_b = enumerate_ball(Ball::of(center_b, double(outer_radius)));
  std::vector<Point> overlap;
  std::set_intersection(outer_a.begin(), outer_a.end(), outer_b.begin(),
                        outer_b.end(), std::back_inserter(overlap));
  if (!overlap.empty())
    throw ConfigError("consistency sampler: the two outer balls overlap");

  alphabet_a_ = internal_boundary(inner_a);
  alphabet_b_ = internal_boundary(inner_b);
  ends_a_ = internal_boundary(outer_a);
  ends_b_ = internal_boundary(outer_b);
  if (sorted_contains(inner_a, start) || sorted_contains(inner_b, start))
    throw ConfigError("consistency sampler: start lies inside a pair");

  union_alphabet_.reserve(alphabet_a_.size() + alphabet_b_.size());
  std::merge(alphabet_a_.begin(), alphabet_a_.end(), alphabet_b_.begin(),
             alphabet_b_.end(), std::back_inserter(union_alphabet_));
  union_to_a_.assign(union_alphabet_.size(), kNoSite);
  union_to_b_.assign(union_alphabet_.size(), kNoSite);
  for (std::size_t i = 0; i < union_alphabet_.size(); ++i) {
    const Point p = union_alphabet_[i];
    const auto ia = std::lower_bound(alphabet_a_.begin(), alphabet_a_.end(), p);
    if (ia != alphabet_a_.end() && *ia == p)
      union_to_a_[i] = std::size_t(ia - alphabet_a_.begin());
    const auto ib = std::lower_bound(alphabet_b_.begin(), alphabet_b_.end(), p);
    if (ib != alphabet_b_.end() && *ib == p)
      union_to_b_[i] = std::size_t(ib - alphabet_b_.begin());
  }

  const auto all = torus_.enumerate();
  alone_ = std::make_unique<AbsorbingSystem>(
      AbsorbingSystem::build(minus_sorted(all, inner_a), srw_torus(torus_)));
  if (alone_->boundary() != alphabet_a_)
    throw ConfigError("consistency sampler: standalone absorbing set mismatch");
  both_ = std::make_unique<AbsorbingSystem>(AbsorbingSystem::build(
      minus_sorted(minus_sorted(all, inner_a), inner_b), srw_torus(torus_)));
  if (both_->boundary() != union_alphabet_)
    throw ConfigError("consistency sampler: joint absorbing set mismatch");

  const auto build_ends = [](const std::vector<Point>& outer,
                             const std::vector<Point>& ends,
                             const std::vector<Point>& alphabet,
                             std::vector<AliasTable>& alias) {
    const auto sys =
        AbsorbingSystem::build(minus_sorted(outer, ends), srw_plane());
    if (sys.boundary() != ends)
      throw ConfigError("consistency sampler: end ring mismatch");
    alias.reserve(alphabet.size());
    for (const Point y : alphabet)
      alias.emplace_back(dense_over(ends, sys.exit_law({{y, 1.0}})));
  };
  build_ends(outer_a, ends_a_, alphabet_a_, end_alias_a_);
  build_ends(outer_b, ends_b_, alphabet_b_, end_alias_b_);

  auto m = relative_hm(inner_a, outer_a, WalkKind::kSimple, table);
  if (m.support != alphabet_a_)
    throw ConfigError("consistency sampler: entrance profile mismatch");
  hm_a_ = std::move(m.weight);
}

const std::vector<double>& ConsistencySampler::row_alone(Point x) const {
  const Point w = torus_.wrap(x);
  if (const auto it = alone_cache_.find(w); it != alone_cache_.end())
    return it->second;
  if (alone_->index_of(w) < 0)
    throw ConfigError("consistency sampler: start inside the standalone pair");
  auto row = dense_over(alphabet_a_, alone_->exit_law({{w, 1.0}}));
  return alone_cache_.emplace(w, std::move(row)).first->second;
}

const std::vector<double>& ConsistencySampler::row_union(Point x) const {
  const Point w = torus_.wrap(x);
  if (const auto it = union_cache_.find(w); it != union_cache_.end())
    return it->second;
  if (both_->index_of(w) < 0)
    throw ConfigError("consistency sampler: start inside a pair");
  auto row = dense_over(union_alphabet_, both_->exit_law({{w, 1.0}}));
  return union_cache_.emplace(w, std::move(row)).first->second;
}

std::vector<double> ConsistencySampler::standalone(std::int64_t k,
                                                   Rng& rng) const {
  if (k < 1) throw ConfigError("consistency sampler: k must be >= 1");
  auto pool =
      std::make_shared<PoissonPool>(alphabet_a_.size(), fresh_pool_base(rng));
  SLTProcess proc(pool);
  Point w = start_;
  for (std::int64_t j = 0; j < k; ++j) {
    const auto sel = proc.step(row_alone(w));
    w = ends_a_[end_alias_a_[sel.site].sample(rng)];
  }
  return proc.envelope();
}

const std::vector<double>& ConsistencySampler::start_row() const {
  return row_alone(start_);
}

namespace {

// Which pair the next excursion belongs to and where it enters, drawn from
// a union entrance row split by the pair partition.
std::pair<bool, std::size_t> draw_route(const std::vector<double>& row,
                                        const std::vector<std::size_t>& to_a,
                                        Rng& rng) {
  double pa = 0.0, pb = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i)
    (to_a[i] != kNoSite ? pa : pb) += row[i];
  if (!(pa + pb > 0.0))
    throw ConfigError("consistency sampler: empty union entrance row");
  const bool is_a = rng.u01() * (pa + pb) < pa;
  double u = rng.u01() * (is_a ? pa : pb);
  std::size_t last = kNoSite;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if ((to_a[i] != kNoSite) != is_a || row[i] <= 0.0) continue;
    last = i;
    u -= row[i];
    if (u <= 0.0) break;
  }
  if (last == kNoSite)
    throw ConfigError("consistency sampler: route carries no entrance mass");
  return {is_a, last};
}

}  // namespace

std::vector<double> ConsistencySampler::joint(std::int64_t k, Rng& rng) const {
  if (k < 1) throw ConfigError("consistency sampler: k must be >= 1");
  std::vector<double> env(alphabet_a_.size(), 0.0);
  Point w = start_;
  Point prev_end = start_;
  std::int64_t got = 0;
  std::int64_t spent = 0;
  while (got < k) {
    if (++spent > kJointSelectionFactor * k)
      throw ResourceError("consistency sampler: joint chain does not reach "
                          "the tracked pair");
    const auto [is_a, u_site] = draw_route(row_union(w), union_to_a_, rng);
    if (is_a) {
      // The tracked pair's soft local time rises by an Exp(1) multiple of
      // its own marginal row; the chronological entrance drives the end.
      const double xi = rng.exponential();
      const auto& marginal = row_alone(prev_end);
      for (std::size_t y = 0; y < env.size(); ++y) env[y] += xi * marginal[y];
      w = ends_a_[end_alias_a_[union_to_a_[u_site]].sample(rng)];
      prev_end = w;
      ++got;
    } else {
      w = ends_b_[end_alias_b_[union_to_b_[u_site]].sample(rng)];
    }
  }
  return env;
}

std::size_t ConsistencySampler::joint_first_site(Rng& rng) const {
  Point w = start_;
  std::int64_t spent = 0;
  for (;;) {
    if (++spent > kJointSelectionFactor)
      throw ResourceError("consistency sampler: joint chain does not reach "
                          "the tracked pair");
    const auto [is_a, u_site] = draw_route(row_union(w), union_to_a_, rng);
    if (is_a) return union_to_a_[u_site];
    w = ends_b_[end_alias_b_[union_to_b_[u_site]].sample(rng)];
  }
}

ConsistencyReport consistency_experiment(const ConsistencySampler& sampler,
                                         std::int64_t k, std::int64_t reps,
                                         Rng& rng) {
  if (k < 1 || reps < 8)
    throw ConfigError("consistency experiment: need k >= 1 and reps >= 8");

  // Track the heaviest entrance sites; they see the most selections.
  const auto& hm = sampler.hm_row();
  std::vector<std::size_t> order(hm.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return hm[a] > hm[b]; });
  order.resize(std::min<std::size_t>(4, order.size()));

  std::vector<std::vector<double>> site_alone(order.size());
  std::vector<std::vector<double>> site_joint(order.size());
  std::vector<double> sup_alone, sup_joint, tot_alone, tot_joint;
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    const auto a = sampler.standalone(k, rng);
    const auto j = sampler.joint(k, rng);
    for (std::size_t t = 0; t < order.size(); ++t) {
      site_alone[t].push_back(a[order[t]]);
      site_joint[t].push_back(j[order[t]]);
    }
    sup_alone.push_back(*std::max_element(a.begin(), a.end()));
    sup_joint.push_back(*std::max_element(j.begin(), j.end()));
    tot_alone.push_back(std::accumulate(a.begin(), a.end(), 0.0));
    tot_joint.push_back(std::accumulate(j.begin(), j.end(), 0.0));
  }

  ConsistencyReport out;
  out.k = k;
  out.reps = reps;
  out.tracked_sites = order;
  for (std::size_t t = 0; t < order.size(); ++t)
    out.site_pvalues.push_back(
        ks_two_sample(site_alone[t], site_joint[t]).pvalue);
  out.sup_pvalue = ks_two_sample(sup_alone, sup_joint).pvalue;
  out.total_pvalue = ks_two_sample(tot_alone, tot_joint).pvalue;
  return out;
}

}  // namespace ri2d
