#include "hmccond/randmat.hpp"

#include <cmath>

#include "hmccond/common.hpp"

namespace hmccond::randmat {

using spectra::SpdMatrix;

SpdMatrix wishart_sample(int n, int s, Rng& rng, kernels::Exec exec) {
  if (n < 1 || s < 1) throw InvalidConfig("wishart_sample: need n >= 1 and s >= 1");
  Matrix x(s, n);
  rng.fill_normal(x.data(), static_cast<std::size_t>(s) * n);
  return SpdMatrix(kernels::syrk_scaled(x, 1.0 / s, exec));
}

SpdMatrix wishart_sample(int n, int s, std::uint64_t seed) {
  Rng rng(seed);
  return wishart_sample(n, s, rng);
}

SpdMatrix wishart_sample(const WishartParams& p, std::uint64_t seed) {
  return wishart_sample(p.dim, p.samples, seed);
}

double mp_edge_lower(double omega) {
  const double r = 1.0 - 1.0 / std::sqrt(omega);
  return r * r;
}

double mp_edge_upper(double omega) {
  const double r = 1.0 + 1.0 / std::sqrt(omega);
  return r * r;
}

double mp_density(double x, double omega) {
  if (!(omega > 1.0)) throw OmegaTooSmall("mp_density: omega must exceed 1");
  const double a = mp_edge_lower(omega);
  const double b = mp_edge_upper(omega);
  if (x <= a || x >= b) return 0.0;
  return omega / (2.0 * 3.14159265358979323846 * x) * std::sqrt((b - x) * (x - a));
}

double asymptotic_kappa(int n, double omega) {
  if (!(omega > 1.0)) throw OmegaTooSmall("asymptotic_kappa: omega must exceed 1");
  return std::pow(n, 0.25) * std::pow(1.0 + 1.0 / omega, 0.25) / (1.0 - 1.0 / std::sqrt(omega));
}

namespace {

// kappa of the inverse from the Wishart eigenvalues mu (descending):
// kappa^4 = mu_min^{-2} * sum mu^2.
double kappa_of_inverse_from_eigs(const std::vector<double>& mu) {
  const double lo = mu.back();
  if (!(lo > 0.0) || lo <= 1e-12 * mu.front()) throw SingularDraw("wishart draw numerically singular");
  double sum = 0.0;
  for (double m : mu) {
    const double r = m / lo;
    sum += r * r;
  }
  return std::pow(sum, 0.25);
}

}  // namespace

std::vector<double> inverse_wishart_kappa_samples(int n, int s, int n_draws, std::uint64_t seed) {
  if (s <= n) throw InvalidConfig("inverse_wishart_kappa_samples: need S > N");
  std::vector<double> out(n_draws, 0.0);
  kernels::parallel_trials(n_draws, [&](int trial) {
    const int max_retries = 5;
    for (int attempt = 0;; ++attempt) {
      Rng rng(child_seed(seed, static_cast<std::uint64_t>(trial) * (max_retries + 1) + attempt));
      Matrix x(s, n);
      rng.fill_normal(x.data(), static_cast<std::size_t>(s) * n);
      const Matrix w = kernels::syrk_scaled(x, 1.0 / s, kernels::Exec::serial);
      try {
        const auto e = spectra::symmetric_eigen(w, false);
        out[trial] = kappa_of_inverse_from_eigs(e.values);
        break;
      } catch (const SingularDraw&) {
        if (attempt + 1 >= max_retries) throw;
      }
    }
  });
  return out;
}

double g_n(int n, double s) {
  if (!(s > n)) throw OmegaTooSmall("g_n: need S > N");
  const double ratio = static_cast<double>(n) / s;
  return std::pow(n, 0.25) * std::pow(1.0 + ratio, 0.25) / (1.0 - std::sqrt(ratio));
}

double burn_in_curve_u(double omega) {
  if (!(omega > 1.0)) throw OmegaTooSmall("burn_in_curve_u: omega must exceed 1");
  const double sq = std::sqrt(omega);
  const double num = 4.0 * (sq - 1.0) * (sq - 1.0) * std::pow(omega * omega + omega, 0.75);
  return num / (2.0 * omega + sq + 1.0);
}

BurnInPlan burn_in_plan(double kappa0, int n, double s_final) {
  if (n < 1) throw InvalidConfig("burn_in_plan: need n >= 1");
  if (!(kappa0 >= std::pow(n, 0.25)))
    throw OutOfRange("burn_in_plan: kappa0 must be at least N^{1/4}");
  if (!(s_final > 0.0)) throw InvalidConfig("burn_in_plan: need S_f > 0");

  BurnInPlan plan;
  plan.kappa0 = kappa0;
  plan.dim = n;
  plan.final_samples = s_final;

  const double rhs = std::pow(n, 0.25) / kappa0 * (s_final / n);
  // U increases from 0 at omega -> 1+ and is unbounded, so any positive
  // right-hand side has a unique root; bisect on [1 + 1e-6, 1e6].
  double lo = 1.0 + 1e-6;
  double hi = 1e6;
  if (burn_in_curve_u(lo) > rhs) {
    plan.omega_star = lo;
  } else {
    while (burn_in_curve_u(hi) < rhs) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (burn_in_curve_u(mid) < rhs)
        lo = mid;
      else
        hi = mid;
      if ((hi - lo) <= 1e-10 * hi) break;
    }
    plan.omega_star = 0.5 * (lo + hi);
  }
  plan.s_star = static_cast<long long>(std::ceil(plan.omega_star * n));
  const double g = g_n(n, static_cast<double>(plan.s_star));
  plan.speedup = s_final * kappa0 / (static_cast<double>(plan.s_star) * kappa0 + s_final * g);
  return plan;
}

std::pair<std::vector<double>, std::vector<double>> preconditioned_kappa_law_check(
    const SpdMatrix& c_true, int s, int n_trials, std::uint64_t seed) {
  const int n = c_true.dim();
  if (s <= n) throw InvalidConfig("preconditioned_kappa_law_check: need S > N");
  std::vector<double> set_a(n_trials, 0.0);
  const Matrix& l_true = c_true.cholesky();

  kernels::parallel_trials(n_trials, [&](int trial) {
    Rng rng(child_seed(seed, trial));
    // S i.i.d. draws of N(0, C_true): rows z L^T.
    Matrix x(s, n);
    std::vector<double> z(n);
    for (int row = 0; row < s; ++row) {
      rng.fill_normal(z.data(), z.size());
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j <= i; ++j) acc += l_true(i, j) * z[j];
        x(row, i) = acc;
      }
    }
    const SpdMatrix c_hat(kernels::syrk_scaled(x, 1.0 / s, kernels::Exec::serial));
    const Matrix& l_hat = c_hat.cholesky();
    // Preconditioned covariance L_hat^{-1} C_true L_hat^{-T}.
    Matrix m = spectra::solve_lower(l_hat, c_true.matrix());
    m = transpose(spectra::solve_lower(l_hat, transpose(m)));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double v = 0.5 * (m(i, j) + m(j, i));
        m(i, j) = v;
        m(j, i) = v;
      }
    set_a[trial] = spectra::kappa_spd(SpdMatrix(std::move(m)));
  });

  std::vector<double> set_b = inverse_wishart_kappa_samples(n, s, n_trials, splitmix64(seed ^ 0x5bd1e995u));
  return {std::move(set_a), std::move(set_b)};
}

}  // namespace hmccond::randmat
