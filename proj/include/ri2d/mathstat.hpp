#pragma once

#include <cstdint>
#include <vector>

namespace ri2d {

// Regularized incomplete gamma functions P(a,x), Q(a,x) = 1 - P(a,x),
// accurate to ~1e-12 (series / continued fraction).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

struct ChiSquareResult {
  double stat = 0.0;
  int dof = 0;
  double pvalue = 1.0;
  int pooled_cells = 0;  // cells merged to keep expected counts >= threshold
};

// Goodness-of-fit of observed counts against probabilities (need not be
// normalized; they are rescaled to the observed total).  Cells with expected
// count below min_expected are pooled into the following cells.
ChiSquareResult chi_square_goodness(const std::vector<std::int64_t>& counts,
                                    const std::vector<double>& probs,
                                    double min_expected = 5.0);

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
struct KsResult {
  double stat = 0.0;
  double pvalue = 1.0;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

double normal_cdf(double z);
// q with P[Z > q] = tail, solved to |P - tail| <= tol by bisection + Newton.
double normal_upper_quantile(double tail, double tol = 1e-8);

struct LinFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Type-7 sample quantile (sorts a copy).
double quantile(std::vector<double> values, double q);

// Half-width of the normal-approximation CI for a binomial proportion.
double binomial_ci_halfwidth(double phat, std::uint64_t n, double z = 3.0);

}  // namespace ri2d
