#include "ri2d/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "ri2d/solver.hpp"

namespace ri2d {
namespace {

// Dense saddle systems get cubic factorization cost and quadratic memory;
// past this boundary size callers should work with coarser sets.
constexpr std::int64_t kMaxKernelBoundary = 4000;
constexpr double kMinFarFactor = 16.0;

std::vector<Point> sorted_unique(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

Point rounded_centroid(const std::vector<Point>& pts) {
  double sx = 0, sy = 0;
  for (const Point p : pts) {
    sx += p.x;
    sy += p.y;
  }
  return {std::int32_t(std::lround(sx / double(pts.size()))),
          std::int32_t(std::lround(sy / double(pts.size())))};
}

double max_dist_from(Point c, const std::vector<Point>& pts) {
  std::int64_t best = 0;
  for (const Point p : pts) best = std::max(best, dist2(p, c));
  return std::sqrt(double(best));
}

double diameter(const std::vector<Point>& pts) {
  std::int64_t best = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::max(best, dist2(pts[i], pts[j]));
  return std::sqrt(double(best));
}

// Set difference of two sorted point vectors.
std::vector<Point> minus_sorted(const std::vector<Point>& a,
                                const std::vector<Point>& b) {
  std::vector<Point> out;
  out.reserve(a.size());
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

}  // namespace

double MeasureOnSet::total() const {
  double t = 0;
  for (const double w : weight) t += w;
  return t;
}

double MeasureOnSet::at(Point p) const {
  const auto it = std::lower_bound(support.begin(), support.end(), p);
  if (it == support.end() || !(*it == p)) return 0.0;
  return weight[std::size_t(it - support.begin())];
}

void MeasureOnSet::normalize() {
  const double t = total();
  if (!(t > 0)) throw ConfigError("measure: cannot normalize zero mass");
  for (double& w : weight) w /= t;
}

double tv_distance(const MeasureOnSet& a, const MeasureOnSet& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.support.size(); ++i)
    d += std::abs(a.weight[i] - b.at(a.support[i]));
  for (std::size_t i = 0; i < b.support.size(); ++i)
    if (a.at(b.support[i]) == 0.0) d += b.weight[i];
  return 0.5 * d;
}

double a_radial(double r) {
  if (!(r >= 1.0)) throw ConfigError("a_radial: radius must be >= 1");
  return (2.0 / std::numbers::pi) * std::log(r) + kPotentialFarConstant;
}

struct EntranceKernel::Impl {
  const PotentialTable* table;
  std::vector<Point> set;
  std::vector<Point> boundary;
  std::vector<double> hm;
  double robin = 0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;

  // Solve [[K,1],[1',0]] [u;l] = [rhs;1].
  std::pair<std::vector<double>, double> saddle(
      const std::vector<double>& rhs) const {
    const std::int64_t m = std::int64_t(boundary.size());
    Eigen::VectorXd b(m + 1);
    for (std::int64_t i = 0; i < m; ++i) b[Eigen::Index(i)] = rhs[std::size_t(i)];
    b[Eigen::Index(m)] = 1.0;
    const Eigen::VectorXd x = lu.solve(b);
    std::vector<double> u(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) u[std::size_t(i)] = x[Eigen::Index(i)];
    return {std::move(u), x[Eigen::Index(m)]};
  }
};

EntranceKernel::~EntranceKernel() = default;
EntranceKernel::EntranceKernel(EntranceKernel&&) noexcept = default;
EntranceKernel& EntranceKernel::operator=(EntranceKernel&&) noexcept = default;

EntranceKernel::EntranceKernel(std::vector<Point> set,
                               const PotentialTable& table)
    : impl_(std::make_unique<Impl>()) {
  if (set.empty()) throw ConfigError("entrance kernel: empty set");
  impl_->table = &table;
  impl_->set = sorted_unique(std::move(set));
  impl_->boundary = internal_boundary(impl_->set);
  if (impl_->boundary.empty()) impl_->boundary = impl_->set;  // singleton-ish
  const std::int64_t m = std::int64_t(impl_->boundary.size());
  if (m > kMaxKernelBoundary)
    throw ResourceError("entrance kernel: boundary too large for dense solve");

  Eigen::MatrixXd M(m + 1, m + 1);
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < m; ++j)
      M(Eigen::Index(i), Eigen::Index(j)) =
          table.a(impl_->boundary[std::size_t(i)] -
                  impl_->boundary[std::size_t(j)]);
    M(Eigen::Index(i), Eigen::Index(m)) = 1.0;
    M(Eigen::Index(m), Eigen::Index(i)) = 1.0;
  }
  M(Eigen::Index(m), Eigen::Index(m)) = 0.0;
  impl_->lu.compute(M);

  auto [u, l] = impl_->saddle(std::vector<double>(std::size_t(m), 0.0));
  for (double& w : u) {
    if (w < -1e-8)
      throw ResourceError("entrance kernel: negative harmonic-measure weight");
    w = std::max(w, 0.0);
  }
  impl_->hm = std::move(u);
  impl_->robin = -l;
}

const std::vector<Point>& EntranceKernel::set() const { return impl_->set; }
const std::vector<Point>& EntranceKernel::boundary() const {
  return impl_->boundary;
}
const std::vector<double>& EntranceKernel::hm() const { return impl_->hm; }
double EntranceKernel::robin() const { return impl_->robin; }

std::pair<std::vector<double>, double> EntranceKernel::saddle(
    const std::vector<double>& rhs) const {
  if (rhs.size() != impl_->boundary.size())
    throw ConfigError("saddle: rhs size does not match the boundary");
  return impl_->saddle(rhs);
}

std::vector<double> EntranceKernel::entrance_law(Point z) const {
  if (sorted_contains(impl_->set, z))
    throw ConfigError("entrance law: source point lies in the set");
  const std::size_t m = impl_->boundary.size();
  std::vector<double> rhs(m);
  for (std::size_t i = 0; i < m; ++i)
    rhs[i] = impl_->table->a(z - impl_->boundary[i]);
  auto [u, l] = impl_->saddle(rhs);
  (void)l;
  for (double& w : u) {
    if (w < -1e-8)
      throw ResourceError("entrance law: negative weight, kernel ill-conditioned");
    w = std::max(w, 0.0);
  }
  return u;
}

HatHitKernel::HatHitKernel(std::vector<Point> set, const PotentialTable& table)
    : table_(table),
      kernel_(
          [&set] {
            set.push_back({0, 0});
            return std::move(set);
          }(),
          table) {
  cap_ = kernel_.robin();
  if (!(cap_ > 0))
    throw ConfigError("hat hit kernel: set with zero capacity (singleton origin?)");
  const auto& bd = kernel_.boundary();
  const std::size_t m = bd.size();
  std::vector<double> rhs(m);
  for (std::size_t i = 0; i < m; ++i) rhs[i] = table_.a(bd[i]);
  const auto [u0, l0] = kernel_.saddle(rhs);
  // Centered resolvent of the potential vector; its total vanishes because
  // sum hm(v) a(v) equals the capacity when the set holds the origin.
  q_.resize(m);
  const auto& hm = kernel_.hm();
  for (std::size_t i = 0; i < m; ++i)
    q_[i] = u0[i] + (l0 / cap_ - 1.0) * hm[i];
}

double HatHitKernel::hit_prob(Point z) const {
  if (z == Point{0, 0}) throw ConfigError("hat hit: source is the origin");
  if (sorted_contains(kernel_.set(), z))
    throw ConfigError("hat hit: source point lies in the set");
  const auto& bd = kernel_.boundary();
  double s = cap_;
  for (std::size_t i = 0; i < bd.size(); ++i)
    s += table_.a(z - bd[i]) * q_[i];
  const double v = s / table_.a(z);
  return std::clamp(v, 0.0, 1.0);
}

std::vector<double> HatHitKernel::entrance_sub_law(Point z) const {
  if (z == Point{0, 0}) throw ConfigError("hat entrance: source is the origin");
  const auto g = kernel_.entrance_law(z);
  const auto& bd = kernel_.boundary();
  const double az = table_.a(z);
  std::vector<double> mass(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    mass[i] = std::max(0.0, g[i] * table_.a(bd[i]) / az);
  return mass;
}

FarHmResult far_circle_hm(const std::vector<Point>& set,
                          const FarHmOptions& opts) {
  if (set.empty()) throw ConfigError("far-circle hm: empty set");
  const auto A = sorted_unique(set);
  const double diam = std::max(diameter(A), 1.0);
  double rfar = opts.rfar > 0 ? opts.rfar : opts.rfar_factor * diam;
  if (rfar < kMinFarFactor * diam)
    throw ConfigError("far-circle hm: far radius below 16x set diameter");
  const Point center = rounded_centroid(A);
  const double rkill = 1.25 * rfar;

  const auto all = enumerate_ball(Ball::of(center, rkill));
  const auto domain = minus_sorted(all, A);
  const auto sys = AbsorbingSystem::build(domain, srw_plane(), opts.tol);

  const auto circle = ball_boundary(Ball::of(center, rfar));
  std::vector<std::pair<Point, double>> start;
  start.reserve(circle.size());
  for (const Point p : circle) {
    if (sorted_contains(A, p))
      throw ConfigError("far-circle hm: set touches the far circle");
    start.emplace_back(p, 1.0 / double(circle.size()));
  }

  FarHmResult out;
  out.rfar = rfar;
  out.unknowns = sys.stats().unknowns;
  out.method = sys.stats().method;
  for (const auto& [b, w] : sys.exit_law(start)) {
    if (!sorted_contains(A, b)) continue;  // killed on the outer ring
    out.hm.support.push_back(b);
    out.hm.weight.push_back(w);
    out.entered_mass += w;
  }
  if (out.hm.support.empty())
    throw ResourceError("far-circle hm: no mass entered the set");
  out.hm.normalize();
  return out;
}

CapacityResult capacity(const std::vector<Point>& set,
                        const PotentialTable& table) {
  if (set.empty()) throw ConfigError("capacity: empty set");
  auto A = sorted_unique(set);
  // Deterministic translation: the minimal-norm point (ties by point order)
  // goes to the origin; capacity is translation invariant.
  Point anchor = A.front();
  for (const Point p : A)
    if (norm2(p) < norm2(anchor)) anchor = p;
  for (Point& p : A) p = p - anchor;
  std::sort(A.begin(), A.end());

  CapacityResult out;
  out.method = "exact-limit";
  if (A.size() == 1) {
    out.value = 0.0;  // cap({0}) = 0 since a(0) = 0
    out.certificate = 0.0;
    return out;
  }
  const EntranceKernel k(A, table);
  double sum = 0;
  for (std::size_t i = 0; i < k.boundary().size(); ++i)
    sum += table.a(k.boundary()[i]) * k.hm()[i];
  out.value = sum;
  out.certificate = std::abs(sum - k.robin()) + 1e-12 * std::max(1.0, sum);
  return out;
}

HatEquilibriumResult hat_equilibrium(const std::vector<Point>& set,
                                     const PotentialTable& table) {
  const auto A = sorted_unique(set);
  const auto bd = internal_boundary(A);
  if (bd.empty()) throw ConfigError("hat equilibrium: set has no boundary");

  const Point center = rounded_centroid(A);
  const double rad = max_dist_from(center, A);
  const double guard = 2.0 * rad + 16.0;

  auto domain = minus_sorted(enumerate_ball(Ball::of(center, guard)), A);
  domain.erase(std::remove(domain.begin(), domain.end(), Point{0, 0}),
               domain.end());
  const auto sys = AbsorbingSystem::build(domain, hat_plane(table));
  const HatHitKernel hit(A, table);

  HatEquilibriumResult out;
  out.equilibrium.support = bd;
  out.equilibrium.weight.assign(bd.size(), 0.0);
  for (std::size_t i = 0; i < bd.size(); ++i) {
    const Point x = bd[i];
    const double ax = table.a(x);
    if (ax == 0.0) continue;  // the origin carries no equilibrium mass
    // One conditioned-walk step out of x, then absorb on the guard ring and
    // finish with the exact never-hit probability from there.
    std::vector<std::pair<Point, double>> start;
    double direct_escape = 0.0;
    for (const Point q : neighbors4(x)) {
      const double w = table.a(q) / (4.0 * ax);
      if (w == 0.0 || sorted_contains(A, q)) continue;
      if (sys.index_of(q) >= 0)
        start.emplace_back(q, w);
      else
        direct_escape += w * (1.0 - hit.hit_prob(q));
    }
    double esc = direct_escape;
    if (!start.empty())
      for (const auto& [z, mass] : sys.exit_law(start)) {
        if (sorted_contains(A, z) || mass == 0.0) continue;
        esc += mass * (1.0 - hit.hit_prob(z));
      }
    out.equilibrium.weight[i] = ax * ax * esc;
  }
  out.total = out.equilibrium.total();
  out.hm = out.equilibrium;
  out.hm.normalize();
  return out;
}

MeasureOnSet relative_hm(const std::vector<Point>& inner,
                         const std::vector<Point>& outer, WalkKind kind,
                         const PotentialTable& table) {
  const auto A = sorted_unique(inner);
  const auto Ap = sorted_unique(outer);
  for (const Point p : A)
    if (!sorted_contains(Ap, p))
      throw ConfigError("relative hm: inner set not contained in outer set");
  const auto bd_in = internal_boundary(A);
  const auto bd_out = internal_boundary(Ap);
  auto domain = minus_sorted(minus_sorted(Ap, bd_out), A);
  const bool hat = kind == WalkKind::kConditioned;
  if (hat)
    domain.erase(std::remove(domain.begin(), domain.end(), Point{0, 0}),
                 domain.end());

  const auto sys = AbsorbingSystem::build(
      domain, hat ? hat_plane(table) : srw_plane());
  const auto h = sys.hitting_before(bd_out);

  MeasureOnSet out;
  out.support = bd_in;
  out.weight.assign(bd_in.size(), 0.0);
  for (std::size_t i = 0; i < bd_in.size(); ++i) {
    const Point y = bd_in[i];
    const double ay = table.a(y);
    if (hat && ay == 0.0) continue;  // conditioned walk never sits at 0
    double esc = 0.0;
    for (const Point q : neighbors4(y)) {
      const double w = hat ? table.a(q) / (4.0 * ay) : 0.25;
      if (w == 0.0) continue;
      if (sorted_contains(A, q)) continue;
      const auto j = sys.index_of(q);
      if (j >= 0)
        esc += w * h[std::size_t(j)];
      else if (std::binary_search(bd_out.begin(), bd_out.end(), q))
        esc += w;
      else
        throw ConfigError("relative hm: inner boundary touches outside the outer set");
    }
    out.weight[i] = esc;
  }
  out.normalize();
  return out;
}

FormulaValue distant_ball_capacity(Point y, double r,
                                   const PotentialTable& table) {
  if (!(r >= 0.5) || !(norm(y) > 2.0 * r))
    throw ConfigError("distant ball capacity: need norm(y) > 2r >= 1");
  const double ay = table.a(y);
  FormulaValue out;
  out.value = ay * ay / (2.0 * ay - a_radial(std::max(r, 1.0)));
  out.certificate = 1.0 / std::max(r, 1.0) + r / norm(y);
  return out;
}

FormulaValue hat_hit_prob_formula(Point x, Point y, double r,
                                  const PotentialTable& table) {
  if (!(r >= 0.5) || !(norm(y) > 2.0 * r))
    throw ConfigError("hat hit formula: need norm(y) > 2r >= 1");
  if (double(dist2(x, y)) <= r * r)
    throw ConfigError("hat hit formula: x must be outside the ball");
  const double ax = table.a(x), ay = table.a(y);
  FormulaValue out;
  out.value = std::clamp(
      ay * (ay + ax - table.a(x - y)) /
          (ax * (2.0 * ay - a_radial(std::max(r, 1.0)))),
      0.0, 1.0);
  out.certificate = 1.0 / std::max(r, 1.0) + r / norm(y);
  return out;
}

double escape_to_radius_formula(Point x, std::int32_t n, double k,
                                const MeasureOnSet& hm_bn) {
  if (k < 1.0) throw ConfigError("escape formula: k must be >= 1");
  const double w = hm_bn.at(x);
  if (w == 0.0) throw ConfigError("escape formula: x not on the ball boundary");
  return w / ((2.0 / std::numbers::pi) * std::log1p(k / double(n)));
}

}  // namespace ri2d
