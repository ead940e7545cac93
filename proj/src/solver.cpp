#include "ri2d/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace ri2d {
namespace {

constexpr std::int64_t kDirectUnknownCap = 200'000;
constexpr int kMaxCgIterations = 50'000;

using SpMat = Eigen::SparseMatrix<double>;
using Direct = Eigen::SimplicialLDLT<SpMat>;
using Iterative =
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>;

}  // namespace

Stencil srw_plane() {
  Stencil st;
  st.mu = [](Point) { return 1.0; };
  st.s = [](Point p, Point q) { return dist2(p, q) == 1 ? 0.25 : 0.0; };
  st.neighbors = [](Point p) {
    const auto n = neighbors4(p);
    return std::vector<Point>(n.begin(), n.end());
  };
  return st;
}

Stencil srw_torus(Torus t) {
  Stencil st;
  st.mu = [](Point) { return 1.0; };
  st.s = [t](Point p, Point q) {
    const auto n = t.neighbors(p);
    return std::count(n.begin(), n.end(), t.wrap(q)) > 0 ? 0.25 : 0.0;
  };
  st.neighbors = [t](Point p) {
    const auto n = t.neighbors(p);
    return std::vector<Point>(n.begin(), n.end());
  };
  return st;
}

Stencil hat_plane(const PotentialTable& table) {
  Stencil st;
  st.mu = [&table](Point p) {
    const double v = table.a(p);
    return v * v;
  };
  st.s = [&table](Point p, Point q) {
    if (dist2(p, q) != 1) return 0.0;
    return table.a(p) * table.a(q) / 4.0;
  };
  st.neighbors = [](Point p) {
    const auto n = neighbors4(p);
    return std::vector<Point>(n.begin(), n.end());
  };
  return st;
}

struct AbsorbingSystem::Impl {
  std::vector<Point> domain;
  std::vector<Point> boundary;
  std::vector<double> mu;
  // Edges from interior rows into the absorbing boundary.
  struct Edge {
    std::int64_t row;
    std::int64_t bidx;
    double weight;
  };
  std::vector<Edge> edges;
  SpMat T;
  std::unique_ptr<Direct> direct;
  std::unique_ptr<Iterative> iterative;
  Stats stats;

  std::int64_t index_of(Point p) const {
    const auto it = std::lower_bound(domain.begin(), domain.end(), p);
    if (it == domain.end() || !(*it == p)) return -1;
    return it - domain.begin();
  }
  std::int64_t boundary_index(Point p) const {
    const auto it = std::lower_bound(boundary.begin(), boundary.end(), p);
    if (it == boundary.end() || !(*it == p)) return -1;
    return it - boundary.begin();
  }
  Eigen::VectorXd run(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x;
    if (direct) {
      x = direct->solve(rhs);
      if (direct->info() != Eigen::Success)
        throw ResourceError("absorbing system: direct solve failed");
    } else {
      x = iterative->solve(rhs);
      if (iterative->info() != Eigen::Success)
        throw ResourceError("absorbing system: cg did not converge");
    }
    return x;
  }
};

AbsorbingSystem::AbsorbingSystem() = default;
AbsorbingSystem::~AbsorbingSystem() = default;
AbsorbingSystem::AbsorbingSystem(AbsorbingSystem&&) noexcept = default;
AbsorbingSystem& AbsorbingSystem::operator=(AbsorbingSystem&&) noexcept = default;

AbsorbingSystem AbsorbingSystem::build(std::vector<Point> domain,
                                       const Stencil& st, double tol,
                                       Method method) {
  const auto t0 = std::chrono::steady_clock::now();
  if (domain.empty()) throw ConfigError("absorbing system: empty domain");
  if (std::int64_t(domain.size()) > kMaxDomainPoints)
    throw ResourceError("absorbing system: domain too large");
  if (!(tol > 0.0) || tol > 1e-6)
    throw ConfigError("absorbing system: tol out of range");
  std::sort(domain.begin(), domain.end());
  domain.erase(std::unique(domain.begin(), domain.end()), domain.end());

  AbsorbingSystem sys;
  sys.impl_ = std::make_unique<Impl>();
  Impl& im = *sys.impl_;
  im.domain = std::move(domain);
  const std::int64_t n = std::int64_t(im.domain.size());

  im.mu.resize(std::size_t(n));
  for (std::int64_t i = 0; i < n; ++i) {
    im.mu[std::size_t(i)] = st.mu(im.domain[std::size_t(i)]);
    if (!(im.mu[std::size_t(i)] > 0.0))
      throw ConfigError("absorbing system: reversing measure must be positive "
                        "on the domain");
  }

  // One pass: diagonal = total outgoing weight, off-diagonals for interior
  // edges, boundary edges kept for exit-law bookkeeping.
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(5 * n));
  struct RawEdge {
    std::int64_t row;
    Point b;
    double weight;
  };
  std::vector<RawEdge> raw;
  for (std::int64_t i = 0; i < n; ++i) {
    const Point p = im.domain[std::size_t(i)];
    double total = 0.0;
    for (const Point q : st.neighbors(p)) {
      const double w = st.s(p, q);
      if (w < 0.0) throw ConfigError("absorbing system: negative edge weight");
      if (w == 0.0) continue;
      total += w;
      const std::int64_t j = im.index_of(q);
      if (j >= 0)
        trips.emplace_back(int(i), int(j), -w);
      else
        raw.push_back({i, q, w});
    }
    if (total <= 0.0)
      throw ConfigError("absorbing system: isolated domain point");
    trips.emplace_back(int(i), int(i), total);
  }
  if (raw.empty())
    throw ConfigError("absorbing system: no absorbing boundary");

  im.boundary.reserve(raw.size());
  for (const auto& e : raw) im.boundary.push_back(e.b);
  std::sort(im.boundary.begin(), im.boundary.end());
  im.boundary.erase(std::unique(im.boundary.begin(), im.boundary.end()),
                    im.boundary.end());
  im.edges.reserve(raw.size());
  for (const auto& e : raw)
    im.edges.push_back({e.row, im.boundary_index(e.b), e.weight});

  im.T.resize(Eigen::Index(n), Eigen::Index(n));
  im.T.setFromTriplets(trips.begin(), trips.end());
  im.T.makeCompressed();

  const bool direct = method == Method::kDirect ||
                      (method == Method::kAuto && n <= kDirectUnknownCap);
  if (direct) {
    im.direct = std::make_unique<Direct>();
    im.direct->compute(im.T);
    if (im.direct->info() != Eigen::Success)
      throw ResourceError("absorbing system: factorization failed");
    im.stats.method = "direct";
  } else {
    im.iterative = std::make_unique<Iterative>();
    im.iterative->setTolerance(tol);
    im.iterative->setMaxIterations(kMaxCgIterations);
    im.iterative->compute(im.T);
    if (im.iterative->info() != Eigen::Success)
      throw ResourceError("absorbing system: preconditioner failed");
    im.stats.method = "iterative";
  }
  im.stats.unknowns = n;
  im.stats.boundary = std::int64_t(im.boundary.size());
  im.stats.assemble_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return sys;
}

const std::vector<Point>& AbsorbingSystem::domain() const {
  return impl_->domain;
}
const std::vector<Point>& AbsorbingSystem::boundary() const {
  return impl_->boundary;
}
std::int64_t AbsorbingSystem::index_of(Point p) const {
  return impl_->index_of(p);
}
double AbsorbingSystem::mu(Point p) const {
  const std::int64_t i = impl_->index_of(p);
  if (i < 0) throw ConfigError("mu: point not in domain");
  return impl_->mu[std::size_t(i)];
}
const AbsorbingSystem::Stats& AbsorbingSystem::stats() const {
  return impl_->stats;
}

std::vector<double> AbsorbingSystem::hitting_before(
    const std::vector<Point>& targets) const {
  const Impl& im = *impl_;
  std::vector<char> is_target(im.boundary.size(), 0);
  for (const Point t : targets) {
    const std::int64_t b = im.boundary_index(t);
    if (b >= 0) is_target[std::size_t(b)] = 1;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(Eigen::Index(im.domain.size()));
  for (const auto& e : im.edges)
    if (is_target[std::size_t(e.bidx)]) rhs[Eigen::Index(e.row)] += e.weight;
  const Eigen::VectorXd h = im.run(rhs);
  return std::vector<double>(h.data(), h.data() + h.size());
}

std::vector<double> AbsorbingSystem::boundary_value(
    const std::function<double(Point)>& f) const {
  const Impl& im = *impl_;
  std::vector<double> fb(im.boundary.size());
  for (std::size_t i = 0; i < im.boundary.size(); ++i) fb[i] = f(im.boundary[i]);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(Eigen::Index(im.domain.size()));
  for (const auto& e : im.edges)
    rhs[Eigen::Index(e.row)] += e.weight * fb[std::size_t(e.bidx)];
  const Eigen::VectorXd h = im.run(rhs);
  return std::vector<double>(h.data(), h.data() + h.size());
}

std::vector<std::pair<Point, double>> AbsorbingSystem::exit_law(
    const std::vector<std::pair<Point, double>>& start) const {
  const Impl& im = *impl_;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(Eigen::Index(im.domain.size()));
  for (const auto& [p, w] : start) {
    const std::int64_t i = im.index_of(p);
    if (i < 0) throw ConfigError("exit_law: start point not in domain");
    if (w < 0.0) throw ConfigError("exit_law: negative start mass");
    u[Eigen::Index(i)] += w;
  }
  const Eigen::VectorXd z = im.run(u);
  std::vector<double> mass(im.boundary.size(), 0.0);
  for (const auto& e : im.edges)
    mass[std::size_t(e.bidx)] += z[Eigen::Index(e.row)] * e.weight;
  std::vector<std::pair<Point, double>> law;
  law.reserve(mass.size());
  for (std::size_t i = 0; i < mass.size(); ++i)
    law.emplace_back(im.boundary[i], mass[i]);
  return law;
}

std::vector<double> AbsorbingSystem::green_column(Point y) const {
  const Impl& im = *impl_;
  const std::int64_t j = im.index_of(y);
  if (j < 0) throw ConfigError("green_column: point not in domain");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(Eigen::Index(im.domain.size()));
  rhs[Eigen::Index(j)] = 1.0;
  Eigen::VectorXd g = im.run(rhs);
  g *= im.mu[std::size_t(j)];
  return std::vector<double>(g.data(), g.data() + g.size());
}

std::vector<double> AbsorbingSystem::solve(
    const std::vector<double>& rhs) const {
  const Impl& im = *impl_;
  if (rhs.size() != im.domain.size())
    throw ConfigError("solve: rhs size mismatch");
  Eigen::VectorXd b(Eigen::Index(rhs.size()));
  for (std::size_t i = 0; i < rhs.size(); ++i) b[Eigen::Index(i)] = rhs[i];
  const Eigen::VectorXd x = im.run(b);
  return std::vector<double>(x.data(), x.data() + x.size());
}

}  // namespace ri2d
