#include "hmccond/stats.hpp"

#include <cmath>

#include "hmccond/common.hpp"

namespace hmccond {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014327;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

namespace {

// Acklam's rational approximation to the normal quantile (|error| < 1.2e-9).
double quantile_initial(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw OutOfRange("norm_quantile: p must lie in (0, 1)");
  double x = quantile_initial(p);
  // One Newton step against the exact CDF.
  const double pdf = norm_pdf(x);
  if (pdf > 0.0) x -= (norm_cdf(x) - p) / pdf;
  return x;
}

Moments compute_moments(const std::vector<double>& xs) {
  Moments m;
  m.count = xs.size();
  if (xs.empty()) return m;
  double s = 0.0;
  for (double x : xs) s += x;
  m.mean = s / static_cast<double>(xs.size());
  double s2 = 0.0, s3 = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    s2 += d * d;
    s3 += d * d * d;
  }
  const double n = static_cast<double>(xs.size());
  m.variance = s2 / n;
  const double sd = std::sqrt(m.variance);
  m.skewness = sd > 0.0 ? (s3 / n) / (sd * sd * sd) : 0.0;
  return m;
}

double mean_of(const std::vector<double>& xs) { return compute_moments(xs).mean; }

double variance_of(const std::vector<double>& xs) { return compute_moments(xs).variance; }

}  // namespace hmccond
