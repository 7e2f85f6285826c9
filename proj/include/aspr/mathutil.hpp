#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace aspr {

// log(1 + e^x) without overflow for large |x|.
inline double log1pexp(double x) {
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

// 1 / (1 + e^-x), stable on both tails.
inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Upper tail Pr(Z > x); accurate far into the tail.
inline double norm_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

double norm_quantile(double p);

// CDF of the standard Student t with (possibly non-integer) df.
double student_t_cdf(double x, double df);
double student_t_quantile(double p, double df);

// Type-7 (linear interpolation) quantile of a sample; sorts a copy.
double quantile(std::vector<double> x, double q);

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace aspr
