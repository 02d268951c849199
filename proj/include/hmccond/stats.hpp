#pragma once

#include <cstddef>
#include <vector>

namespace hmccond {

// Standard normal CDF.
double norm_cdf(double x);

// Standard normal density.
double norm_pdf(double x);

// Inverse standard normal CDF.  Rational approximation refined by one Newton
// step on norm_cdf; absolute error below 1e-9.  Throws OutOfRange unless
// 0 < p < 1.
double norm_quantile(double p);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // population (1/n) convention
  double skewness = 0.0;
  std::size_t count = 0;
};

Moments compute_moments(const std::vector<double>& xs);

double mean_of(const std::vector<double>& xs);
double variance_of(const std::vector<double>& xs);

}  // namespace hmccond
