#pragma once

// Test-side oracles kept independent of the library implementations they
// check: adaptive quadrature, a two-sample KS test, and random SPD builders.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "hmccond/kernels.hpp"
#include "hmccond/matrix.hpp"
#include "hmccond/precond.hpp"
#include "hmccond/rng.hpp"
#include "hmccond/spectra.hpp"

namespace testsupport {

using hmccond::Matrix;
using hmccond::Rng;

// Adaptive Simpson quadrature.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 24) {
  struct Impl {
    const std::function<double(double)>& f;
    double run(double a, double b, double fa, double fm, double fb, double whole, double tol,
               int depth) {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
      return run(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
             run(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  };
  Impl impl{f};
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return impl.run(a, b, fa, fm, fb, whole, tol, depth);
}

// Integrates f over [a, b] after the substitution x = m + r sin(t), which
// removes square-root endpoint behavior; the integrand is treated as a
// black box.
inline double quad_endpoint_sqrt(const std::function<double(double)>& f, double a, double b,
                                 double tol) {
  const double mid = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  const double half_pi = 1.5707963267948966;
  auto g = [&](double t) { return f(mid + r * std::sin(t)) * r * std::cos(t); };
  return adaptive_simpson(g, -half_pi, half_pi, tol);
}

// Two-sample Kolmogorov-Smirnov asymptotic p-value.
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = a.size(), m = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n && j < m) {
    const double x = std::min(a[i], b[j]);
    while (i < n && a[i] <= x) ++i;
    while (j < m && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / n - double(j) / m));
  }
  const double ne = std::sqrt(double(n) * m / double(n + m));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

// Random SPD matrix A A^T / n + eps I.
inline hmccond::spectra::SpdMatrix random_spd(int n, Rng& rng, double eps = 0.05) {
  Matrix a(n, n);
  rng.fill_normal(a.data(), static_cast<std::size_t>(n) * n);
  Matrix c = hmccond::kernels::matmul(a, hmccond::transpose(a));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) c(i, j) /= n;
    c(i, i) += eps;
  }
  return hmccond::spectra::SpdMatrix(std::move(c));
}

// Random diagonal-target spectrum with entries in [lo, hi].
inline hmccond::spectra::Spectrum random_spectrum(int n, Rng& rng, double lo = 0.5, double hi = 4.0) {
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = rng.uniform(lo, hi);
  return hmccond::spectra::Spectrum(std::move(s));
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace testsupport
