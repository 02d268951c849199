#include "hmccond/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hmccond/common.hpp"

namespace hmccond::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

bool go_parallel(Exec exec, std::size_t work) {
#ifdef _OPENMP
  if (exec == Exec::serial) return false;
  if (exec == Exec::parallel) return true;
  return work >= 1u << 16 && max_threads() > 1;
#else
  (void)exec;
  (void)work;
  return false;
#endif
}

inline void matmul_row(const Matrix& a, const Matrix& bt, Matrix& c, int i) {
  const int n = bt.rows();
  const int k = a.cols();
  const double* ai = a.row(i);
  double* ci = c.row(i);
  for (int j = 0; j < n; ++j) {
    const double* bj = bt.row(j);
    double s = 0.0;
    for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
    ci[j] = s;
  }
}

// xt is the transposed sample matrix (N x S) so each dot runs over contiguous rows.
inline void syrk_row(const Matrix& xt, double scale, Matrix& c, int i) {
  const int s_count = xt.cols();
  const double* xi = xt.row(i);
  for (int j = 0; j <= i; ++j) {
    const double* xj = xt.row(j);
    double s = 0.0;
    for (int r = 0; r < s_count; ++r) s += xi[r] * xj[r];
    c(i, j) = scale * s;
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b, Exec exec) {
  if (a.cols() != b.rows()) throw InvalidConfig("matmul: inner dimensions differ");
  const Matrix bt = ::hmccond::transpose(b);
  Matrix c(a.rows(), b.cols());
  const std::size_t work =
      static_cast<std::size_t>(a.rows()) * b.cols() * a.cols();
  if (go_parallel(exec, work)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows(); ++i) matmul_row(a, bt, c, i);
#endif
  } else {
    for (int i = 0; i < a.rows(); ++i) matmul_row(a, bt, c, i);
  }
  return c;
}

Matrix syrk_scaled(const Matrix& x, double scale, Exec exec) {
  const int n = x.cols();
  const Matrix xt = ::hmccond::transpose(x);
  Matrix c(n, n);
  const std::size_t work = static_cast<std::size_t>(n) * n * x.rows() / 2;
  if (go_parallel(exec, work)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) syrk_row(xt, scale, c, i);
#endif
  } else {
    for (int i = 0; i < n; ++i) syrk_row(xt, scale, c, i);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) c(i, j) = c(j, i);
  return c;
}

ModeTables make_mode_tables(const std::vector<double>& sigmas, double h) {
  ModeTables t;
  t.n_modes = static_cast<int>(sigmas.size());
  t.sigma = sigmas;
  t.theta.resize(sigmas.size());
  t.inv_gamma.resize(sigmas.size());
  t.gamma.resize(sigmas.size());
  t.chi.resize(sigmas.size());
  t.sqrt_chi.resize(sigmas.size());
  t.q.resize(sigmas.size());
  for (std::size_t n = 0; n < sigmas.size(); ++n) {
    const double sigma = sigmas[n];
    const double r = h / (2.0 * sigma);
    if (!(r < 1.0)) throw Unstable("mode tables: require h < 2 sigma for every mode");
    const double q = r * r;
    t.q[n] = q;
    t.theta[n] = std::acos(1.0 - 2.0 * q);
    const double g = std::sqrt(1.0 - q) / sigma;
    t.gamma[n] = g;
    t.inv_gamma[n] = 1.0 / g;
    t.chi[n] = q * q / (1.0 - q);
    t.sqrt_chi[n] = std::sqrt(t.chi[n]);
  }
  return t;
}

namespace {

inline void mode_one(const ModeTables& t, long long ell, const double* x, const double* xi,
                     double* x_out, double* xi_out, double* delta_out, int n) {
  const double angle = static_cast<double>(ell) * t.theta[n];
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double x0 = x[n];
  const double xi0 = xi[n];
  x_out[n] = c * x0 + s * t.inv_gamma[n] * xi0;
  xi_out[n] = -s * t.gamma[n] * x0 + c * xi0;
  const double inv_sigma = 1.0 / t.sigma[n];
  const double xs = x0 * inv_sigma;
  delta_out[n] = 0.5 * s * s * t.q[n] * (xi0 * xi0 - xs * xs) +
                 0.5 * s * s * t.chi[n] * xi0 * xi0 +
                 c * s * t.sqrt_chi[n] * xs * xi0;
}

}  // namespace

void mode_sweep(const ModeTables& t, long long ell, const double* x, const double* xi,
                double* x_out, double* xi_out, double* delta_out, Exec exec) {
  const int n_modes = t.n_modes;
  if (go_parallel(exec, static_cast<std::size_t>(n_modes))) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int n = 0; n < n_modes; ++n) mode_one(t, ell, x, xi, x_out, xi_out, delta_out, n);
#endif
  } else {
    for (int n = 0; n < n_modes; ++n) mode_one(t, ell, x, xi, x_out, xi_out, delta_out, n);
  }
}

void parallel_trials(int n, const std::function<void(int)>& fn, Exec exec) {
  if (go_parallel(exec, static_cast<std::size_t>(n) << 16)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) fn(i);
#endif
  } else {
    for (int i = 0; i < n; ++i) fn(i);
  }
}

}  // namespace hmccond::kernels
