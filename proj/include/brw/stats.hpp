#pragma once

// Small statistics helpers shared by the simulation-facing checks: order
// statistics of samples, Wilson score bounds, least-squares slopes, and a
// one-sample Kolmogorov-Smirnov distance against a callable cdf.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace brw {

inline double quantile_of_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (q <= 0) return sorted.front();
  if (q >= 1) return sorted.back();
  double pos = q * static_cast<double>(sorted.size() - 1);
  size_t i = static_cast<size_t>(pos);
  double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] * (1 - frac) + sorted[i + 1] * frac;
}

inline double sample_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  return quantile_of_sorted(v, q);
}

inline double sample_median(std::vector<double> v) { return sample_quantile(std::move(v), 0.5); }

inline double sample_mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = sample_mean(v), s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Wilson score interval upper bound for a binomial proportion.
inline double wilson_upper(uint64_t successes, uint64_t trials, double z = 1.959963984540054) {
  if (trials == 0) return 1.0;
  double n = static_cast<double>(trials);
  double p = static_cast<double>(successes) / n;
  double z2 = z * z;
  double denom = 1 + z2 / n;
  double center = p + z2 / (2 * n);
  double rad = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return (center + rad) / denom;
}

inline double wilson_lower(uint64_t successes, uint64_t trials, double z = 1.959963984540054) {
  if (trials == 0) return 0.0;
  double n = static_cast<double>(trials);
  double p = static_cast<double>(successes) / n;
  double z2 = z * z;
  double denom = 1 + z2 / n;
  double center = p + z2 / (2 * n);
  double rad = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  double lo = (center - rad) / denom;
  return lo < 0 ? 0 : lo;
}

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ls_slope: bad input");
  double mx = sample_mean(x), my = sample_mean(y);
  double num = 0, den = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  if (den == 0) throw std::invalid_argument("ls_slope: degenerate x");
  return num / den;
}

// Two-sided KS distance between a sample and a continuous cdf.
inline double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks on empty sample");
  std::sort(sample.begin(), sample.end());
  double n = static_cast<double>(sample.size());
  double d = 0;
  for (size_t i = 0; i < sample.size(); ++i) {
    double F = cdf(sample[i]);
    double lo = static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::abs(F - lo), std::abs(hi - F)));
  }
  return d;
}

}  // namespace brw
