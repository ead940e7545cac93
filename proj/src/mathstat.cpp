#include "ri2d/mathstat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ri2d {
namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 1e-15;

// Series expansion of P(a,x), valid for x < a+1.
double gamma_p_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x), valid for x >= a+1 (modified Lentz).
double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a, c = 1.0 / 1e-300, d = 1.0 / b, h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_p domain");
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_q domain");
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

ChiSquareResult chi_square_goodness(const std::vector<std::int64_t>& counts,
                                    const std::vector<double>& probs,
                                    double min_expected) {
  if (counts.size() != probs.size() || counts.empty())
    throw std::invalid_argument("chi_square: size mismatch");
  std::int64_t total = 0;
  double ptotal = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0 || !(probs[i] >= 0.0))
      throw std::invalid_argument("chi_square: negative input");
    total += counts[i];
    ptotal += probs[i];
  }
  if (total == 0 || !(ptotal > 0.0))
    throw std::invalid_argument("chi_square: empty sample");

  ChiSquareResult r;
  double stat = 0.0;
  int cells = 0;
  double acc_obs = 0.0, acc_exp = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    acc_obs += double(counts[i]);
    acc_exp += probs[i] / ptotal * double(total);
    if (acc_exp >= min_expected || i + 1 == counts.size()) {
      if (acc_exp > 0.0) {
        stat += (acc_obs - acc_exp) * (acc_obs - acc_exp) / acc_exp;
        ++cells;
      }
      if (acc_exp < min_expected) ++r.pooled_cells;
      acc_obs = acc_exp = 0.0;
    } else {
      ++r.pooled_cells;
    }
  }
  r.stat = stat;
  r.dof = std::max(1, cells - 1);
  r.pvalue = regularized_gamma_q(0.5 * r.dof, 0.5 * stat);
  return r;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(double(i) / na - double(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += 2.0 * sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return {d, std::clamp(p, 0.0, 1.0)};
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_upper_quantile(double tail, double tol) {
  if (!(tail > 0.0) || !(tail < 1.0))
    throw std::invalid_argument("normal_upper_quantile: tail in (0,1)");
  double lo = -40.0, hi = 40.0;
  auto upper = [](double q) { return 0.5 * std::erfc(q / std::sqrt(2.0)); };
  // Bisection to locality, then Newton to the requested tail tolerance.
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (upper(mid) > tail ? lo : hi) = mid;
  }
  double q = 0.5 * (lo + hi);
  for (int i = 0; i < 60; ++i) {
    const double f = upper(q) - tail;
    if (std::fabs(f) <= tol) break;
    const double pdf = std::exp(-0.5 * q * q) / std::sqrt(2.0 * M_PI);
    if (pdf < 1e-300) break;
    q += f / pdf;  // d(upper)/dq = -pdf
  }
  return q;
}

LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: need >= 2 points");
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  const double cxy = sxy - sx * sy / n;
  if (!(vx > 0.0)) throw std::invalid_argument("linear_fit: degenerate x");
  LinFit f;
  f.slope = cxy / vx;
  f.intercept = (sy - f.slope * sx) / n;
  f.r2 = vy > 0.0 ? (cxy * cxy) / (vx * vy) : 1.0;
  return f;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty");
  std::sort(values.begin(), values.end());
  const double h = (double(values.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const std::size_t lo = std::size_t(h);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - double(lo)) * (values[lo + 1] - values[lo]);
}

double binomial_ci_halfwidth(double phat, std::uint64_t n, double z) {
  if (n == 0) throw std::invalid_argument("binomial_ci: n == 0");
  const double p = std::clamp(phat, 0.0, 1.0);
  return z * std::sqrt(std::max(p * (1.0 - p), 1e-12) / double(n));
}

}  // namespace ri2d
