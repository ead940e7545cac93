#include "ri2d/potential.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "ri2d/io.hpp"

namespace ri2d {
namespace {

constexpr std::int64_t kDirectUnknownCap = 200'000;  // direct solve below this
constexpr std::uint32_t kCacheVersion = 1;
constexpr char kCacheMagic[4] = {'R', 'I', 'P', 'T'};

struct CacheHeader {
  char magic[4];
  std::uint32_t version;
  std::int32_t R;
  std::int32_t pad;
  double tol;
  std::uint64_t count;
};

// Canonical wedge representative of p under the dihedral symmetries of the
// lattice: coordinates (max(|x|,|y|), min(|x|,|y|)).
inline std::pair<std::int32_t, std::int32_t> fold(Point p) {
  std::int32_t ax = p.x < 0 ? -p.x : p.x;
  std::int32_t ay = p.y < 0 ? -p.y : p.y;
  if (ax < ay) std::swap(ax, ay);
  return {ax, ay};
}

inline int orbit_size(std::int32_t x, std::int32_t y) {
  return (y == 0 || y == x) ? 4 : 8;
}

}  // namespace

const double kPotentialFarConstant =
    (2.0 * std::numbers::egamma + std::log(8.0)) / std::numbers::pi;

double a_asymptotic(Point p) {
  const std::int64_t n2 = norm2(p);
  if (n2 == 0) return 0.0;
  return std::log(double(n2)) / std::numbers::pi + kPotentialFarConstant;
}

std::int64_t PotentialTable::wedge_index(std::int32_t x, std::int32_t y) const {
  return offset_[std::size_t(x)] + y;
}

PotentialTable PotentialTable::build(std::int32_t R, double tol, Method method) {
  if (R < 8) throw ConfigError("potential table radius must be >= 8");
  if (std::int64_t(R) * R > 3 * kMaxDomainPoints)
    throw ResourceError("potential table radius above resource cap");
  if (!(tol > 0.0 && tol <= 1e-6))
    throw ConfigError("potential solve tolerance must be in (0, 1e-6]");

  PotentialTable t;
  t.R_ = R;
  t.tol_ = tol;
  t.r2_ = std::int64_t(R) * R;

  // Wedge layout: for each column x = 1..R-1, rows y = 0..ymax(x) with
  // x^2 + y^2 < R^2 and y <= x.
  t.offset_.assign(std::size_t(R) + 1, 0);
  t.ymax_.assign(std::size_t(R) + 1, -1);
  std::int64_t count = 0;
  for (std::int32_t x = 1; x < R; ++x) {
    const std::int64_t rem = t.r2_ - 1 - std::int64_t(x) * x;
    if (rem < 0) break;
    std::int32_t ym = std::int32_t(std::floor(std::sqrt(double(rem))));
    while (std::int64_t(x) * x + std::int64_t(ym) * ym >= t.r2_) --ym;
    while (std::int64_t(x) * x + std::int64_t(ym + 1) * (ym + 1) < t.r2_) ++ym;
    ym = std::min(ym, x);
    t.offset_[std::size_t(x)] = count;
    t.ymax_[std::size_t(x)] = ym;
    count += ym + 1;
  }
  t.info_.unknowns = count;

  using SpMat = Eigen::SparseMatrix<double>;
  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> trips;
  trips.reserve(std::size_t(count) * 5);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(count);
  Eigen::VectorXd guess(count);

  for (std::int32_t x = 1; x < R; ++x) {
    for (std::int32_t y = 0; y <= t.ymax_[std::size_t(x)]; ++y) {
      const std::int64_t row = t.wedge_index(x, y);
      const double w = orbit_size(x, y);
      trips.emplace_back(int(row), int(row), 4.0 * w);
      guess[row] = a_asymptotic({x, y});
      for (Point q : neighbors4({x, y})) {
        const auto [fx, fy] = fold(q);
        if (fx == 0 && fy == 0) continue;  // pinned: a(0) = 0
        if (std::int64_t(fx) * fx + std::int64_t(fy) * fy < t.r2_) {
          trips.emplace_back(int(row), int(t.wedge_index(fx, fy)), -w);
        } else {
          b[row] += w * a_asymptotic({fx, fy});
        }
      }
    }
  }

  SpMat A(count, count);
  A.setFromTriplets(trips.begin(), trips.end());
  trips.clear();
  trips.shrink_to_fit();

  const bool direct = method == Method::kDirect ||
                      (method == Method::kAuto && count <= kDirectUnknownCap);
  const auto t0 = std::chrono::steady_clock::now();
  Eigen::VectorXd sol;
  if (direct) {
    Eigen::SimplicialLDLT<SpMat> ldlt(A);
    if (ldlt.info() != Eigen::Success)
      throw ResourceError("potential solve: factorization failed");
    sol = ldlt.solve(b);
    t.info_.method = "direct";
    t.info_.solve_error = (A * sol - b).norm() / std::max(b.norm(), 1.0);
  } else {
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(50000);
    cg.compute(A);
    if (cg.info() != Eigen::Success)
      throw ResourceError("potential solve: preconditioner failed");
    sol = cg.solveWithGuess(b, guess);
    if (cg.info() != Eigen::Success)
      throw ResourceError("potential solve: iteration did not converge");
    t.info_.method = "iterative";
    t.info_.iterations = int(cg.iterations());
    t.info_.solve_error = cg.error();
  }
  t.info_.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  t.val_.assign(std::size_t(count), 0.0);
  for (std::int64_t i = 0; i < count; ++i) t.val_[std::size_t(i)] = sol[i];
  return t;
}

PotentialTable::Lookup PotentialTable::a_lookup(Point p) const {
  const auto [fx, fy] = fold(p);
  if (fx == 0 && fy == 0) return {0.0, true};
  if (std::int64_t(fx) * fx + std::int64_t(fy) * fy < r2_)
    return {val_[std::size_t(wedge_index(fx, fy))], true};
  return {a_asymptotic({fx, fy}), false};
}

double PotentialTable::a(Point p) const { return a_lookup(p).value; }

double PotentialTable::origin_defect() const {
  double s = 0.0;
  for (Point q : neighbors4({0, 0})) s += a(q);
  return 0.25 * s;
}

double PotentialTable::max_harmonicity_defect() const {
  double worst = 0.0;
  for (std::int32_t x = 1; x < R_; ++x) {
    for (std::int32_t y = 0; y <= ymax_[std::size_t(x)]; ++y) {
      double s = 0.0;
      for (Point q : neighbors4({x, y})) s += a(q);
      const double d = std::fabs(0.25 * s - val_[std::size_t(wedge_index(x, y))]);
      if (d > worst) worst = d;
    }
  }
  return worst;
}

void PotentialTable::save(const std::filesystem::path& file) const {
  CacheHeader h{};
  std::memcpy(h.magic, kCacheMagic, 4);
  h.version = kCacheVersion;
  h.R = R_;
  h.pad = 0;
  h.tol = tol_;
  h.count = val_.size();
  std::string blob(sizeof h, '\0');
  std::memcpy(blob.data(), &h, sizeof h);
  blob.append(reinterpret_cast<const char*>(val_.data()),
              val_.size() * sizeof(double));
  const std::uint32_t crc =
      crc32(val_.data(), val_.size() * sizeof(double));
  blob.append(reinterpret_cast<const char*>(&crc), sizeof crc);
  atomic_write(file, blob.data(), blob.size());
}

PotentialTable PotentialTable::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ResourceError("cannot open cache " + file.string());
  CacheHeader h{};
  in.read(reinterpret_cast<char*>(&h), sizeof h);
  if (!in || std::memcmp(h.magic, kCacheMagic, 4) != 0)
    throw ResourceError("potential cache: bad magic");
  if (h.version != kCacheVersion)
    throw ResourceError("potential cache: unsupported version");
  if (h.R < 8 || h.count > std::uint64_t(kMaxDomainPoints))
    throw ResourceError("potential cache: implausible header");

  PotentialTable t;
  t.R_ = h.R;
  t.tol_ = h.tol;
  t.r2_ = std::int64_t(h.R) * h.R;
  t.offset_.assign(std::size_t(h.R) + 1, 0);
  t.ymax_.assign(std::size_t(h.R) + 1, -1);
  std::int64_t count = 0;
  for (std::int32_t x = 1; x < h.R; ++x) {
    const std::int64_t rem = t.r2_ - 1 - std::int64_t(x) * x;
    if (rem < 0) break;
    std::int32_t ym = std::int32_t(std::floor(std::sqrt(double(rem))));
    while (std::int64_t(x) * x + std::int64_t(ym) * ym >= t.r2_) --ym;
    while (std::int64_t(x) * x + std::int64_t(ym + 1) * (ym + 1) < t.r2_) ++ym;
    ym = std::min(ym, x);
    t.offset_[std::size_t(x)] = count;
    t.ymax_[std::size_t(x)] = ym;
    count += ym + 1;
  }
  if (std::uint64_t(count) != h.count)
    throw ResourceError("potential cache: count mismatch");

  t.val_.assign(std::size_t(count), 0.0);
  in.read(reinterpret_cast<char*>(t.val_.data()),
          std::streamsize(t.val_.size() * sizeof(double)));
  std::uint32_t crc_stored = 0;
  in.read(reinterpret_cast<char*>(&crc_stored), sizeof crc_stored);
  if (!in) throw ResourceError("potential cache: truncated");
  const std::uint32_t crc_actual =
      crc32(t.val_.data(), t.val_.size() * sizeof(double));
  if (crc_stored != crc_actual)
    throw ResourceError("potential cache: checksum mismatch");
  t.info_.method = "cache";
  t.info_.unknowns = count;
  return t;
}

PotentialTable PotentialTable::load_or_build(
    const std::filesystem::path& cache_dir, std::int32_t R, double tol,
    Method method) {
  char name[64];
  std::snprintf(name, sizeof name, "potential_R%d_tol%.0e.bin", int(R), tol);
  const auto file = cache_dir / name;
  if (std::filesystem::exists(file)) {
    PotentialTable t = load(file);
    if (t.R() == R && std::fabs(t.tol() - tol) <= 1e-15 * tol) return t;
  }
  PotentialTable t = build(R, tol, method);
  t.save(file);
  return t;
}

}  // namespace ri2d
