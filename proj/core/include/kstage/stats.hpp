#pragma once

#include <cstddef>
#include <vector>

namespace kstage {

/* Mean, unbiased variance, and standard error of the mean. */
struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double se = 0.0;
};

SampleSummary summarize(const std::vector<double>& xs);

/* Standard error of the unbiased sample variance, via the fourth central
 * moment (no normality assumption):
 *   Var(s^2) = m4/R - s^4 (R-3)/(R(R-1)). */
double variance_se(const std::vector<double>& xs);

/* Standard normal CDF. */
double normal_cdf(double z);

/* Kolmogorov tail Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2). */
double kolmogorov_tail(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

/* Two-sample Kolmogorov-Smirnov distance. Ties are handled by comparing the
 * ECDFs only at distinct pooled values. The p-value is the asymptotic
 * Kolmogorov law evaluated at the effective sample size n1*n2/(n1+n2) with
 * the Stephens finite-sample correction. */
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/* Ordinary least squares for y = intercept + slope * x. */
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r_squared = 1.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/* One-sided Mann-Whitney rank test: p-value against the alternative that
 * values in `a` are stochastically smaller than values in `b`. Normal
 * approximation with midranks, tie correction, and continuity correction. */
double mann_whitney_less(const std::vector<double>& a, const std::vector<double>& b);

/* Empirical p-quantile with linear interpolation between order statistics. */
double quantile(std::vector<double> xs, double p);

}  // namespace kstage
