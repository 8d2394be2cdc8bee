#include "kstage/stats.hpp"

#include <algorithm>
#include <cmath>

#include "kstage/errors.hpp"

namespace kstage {

SampleSummary summarize(const std::vector<double>& xs) {
  require(!xs.empty(), "summarize: empty sample");
  SampleSummary s;
  s.count = xs.size();
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count >= 2) {
    double ss = 0.0;
    for (double x : xs) {
      const double d = x - s.mean;
      ss += d * d;
    }
    s.variance = ss / static_cast<double>(s.count - 1);
    s.se = std::sqrt(s.variance / static_cast<double>(s.count));
  }
  return s;
}

double variance_se(const std::vector<double>& xs) {
  require(xs.size() >= 2, "variance_se: need at least two samples");
  const SampleSummary s = summarize(xs);
  const double r = static_cast<double>(s.count);
  double m4 = 0.0;
  for (double x : xs) {
    const double d = x - s.mean;
    m4 += d * d * d * d;
  }
  m4 /= r;
  const double var_of_var = m4 / r - s.variance * s.variance * (r - 3.0) / (r * (r - 1.0));
  return std::sqrt(std::max(var_of_var, 0.0));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double kolmogorov_tail(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double q = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    q += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * q, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  KsResult r;
  r.n1 = a.size();
  r.n2 = b.size();

  const double inv1 = 1.0 / static_cast<double>(r.n1);
  const double inv2 = 1.0 / static_cast<double>(r.n2);
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double v;
    if (i < a.size() && j < b.size()) {
      v = std::min(a[i], b[j]);
    } else if (i < a.size()) {
      v = a[i];
    } else {
      v = b[j];
    }
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) * inv1 - static_cast<double>(j) * inv2));
  }
  r.statistic = d;

  const double ne = static_cast<double>(r.n1) * static_cast<double>(r.n2) /
                    static_cast<double>(r.n1 + r.n2);
  const double sq = std::sqrt(ne);
  r.p_value = kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "linear_fit: size mismatch");
  const std::size_t m = x.size();
  require(m >= 2, "linear_fit: need at least two points");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0.0, "linear_fit: degenerate abscissae");

  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ssr += e * e;
  }
  if (m > 2) f.slope_se = std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
  f.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return f;
}

double mann_whitney_less(const std::vector<double>& a, const std::vector<double>& b) {
  require(!a.empty() && !b.empty(), "mann_whitney_less: empty sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const std::size_t total = a.size() + b.size();

  std::vector<std::pair<double, int>> pooled;  // (value, 0 = from a, 1 = from b)
  pooled.reserve(total);
  for (double v : a) pooled.emplace_back(v, 0);
  for (double v : b) pooled.emplace_back(v, 1);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  std::size_t i = 0;
  while (i < total) {
    std::size_t j = i;
    while (j < total && pooled[j].first == pooled[i].first) ++j;
    const double t = static_cast<double>(j - i);
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t l = i; l < j; ++l) {
      if (pooled[l].second == 0) rank_sum_a += midrank;
    }
    tie_term += t * t * t - t;
    i = j;
  }

  const double u = rank_sum_a - na * (na + 1.0) / 2.0;
  const double mu = na * nb / 2.0;
  const double nn = static_cast<double>(total);
  const double var = na * nb / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  if (var <= 0.0) return 0.5;  // all observations tied: no ordering evidence
  return normal_cdf((u - mu + 0.5) / std::sqrt(var));
}

double quantile(std::vector<double> xs, double p) {
  require(!xs.empty(), "quantile: empty sample");
  require(p >= 0.0 && p <= 1.0, "quantile: p must lie in [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double h = p * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= xs.size()) return xs.back();
  const double w = h - static_cast<double>(lo);
  return xs[lo] + w * (xs[lo + 1] - xs[lo]);
}

}  // namespace kstage
