#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hmccond/kernels.hpp"
#include "hmccond/rng.hpp"
#include "hmccond/spectra.hpp"

namespace hmccond::randmat {

struct WishartParams {
  int dim = 0;      // N
  int samples = 0;  // S >= N so inverses exist almost surely
  double omega() const { return static_cast<double>(samples) / dim; }
};

// (1/S) sum_s X^s (X^s)^T with X^s i.i.d. standard normal N-vectors.
spectra::SpdMatrix wishart_sample(int n, int s, Rng& rng, kernels::Exec exec = kernels::Exec::automatic);
spectra::SpdMatrix wishart_sample(int n, int s, std::uint64_t seed);
spectra::SpdMatrix wishart_sample(const WishartParams& p, std::uint64_t seed);

// Marchenko-Pastur density at x for oversampling ratio omega > 1.
double mp_density(double x, double omega);
double mp_edge_lower(double omega);
double mp_edge_upper(double omega);

// N^{1/4} (1 + 1/omega)^{1/4} / (1 - omega^{-1/2}); the large-N kappa of an
// inverse-Wishart draw.  Throws OmegaTooSmall for omega <= 1.
double asymptotic_kappa(int n, double omega);

// kappa of the inverse of each Wishart(N, S) draw, computed from the Wishart
// eigenvalues directly (kappa^4 = mu_min^{-2} sum mu^2 for eigenvalues mu)
// without forming the inverse.  Draws that come out numerically singular are
// redrawn a bounded number of times before SingularDraw is thrown.
std::vector<double> inverse_wishart_kappa_samples(int n, int s, int n_draws, std::uint64_t seed);

// g_N(S) = N^{1/4} (1 + N/S)^{1/4} / (1 - sqrt(N/S)); equals
// asymptotic_kappa(N, S/N).
double g_n(int n, double s);

// U(omega) = 4 (sqrt(omega) - 1)^2 (omega^2 + omega)^{3/4} / (2 omega + sqrt(omega) + 1).
// Strictly increasing on (1, inf) with limit 0 at 1+.
double burn_in_curve_u(double omega);

struct BurnInPlan {
  double kappa0 = 0.0;
  int dim = 0;
  double final_samples = 0.0;
  double omega_star = 0.0;
  long long s_star = 0;
  double speedup = 0.0;
};

// Solves U(omega) = (N^{1/4} / kappa0) (S_f / N) for the burn-in
// oversampling ratio, then S* = ceil(omega* N) and the predicted speedup
// S_f kappa0 / (S* kappa0 + S_f g_N(S*)).
BurnInPlan burn_in_plan(double kappa0, int n, double s_final);

// Draws S samples of N(0, C_true), preconditions with the Cholesky factor of
// their sample covariance, and records the resulting kappa (set A) next to
// plain inverse-Wishart kappa draws (set B) for distributional comparison.
std::pair<std::vector<double>, std::vector<double>> preconditioned_kappa_law_check(
    const spectra::SpdMatrix& c_true, int s, int n_trials, std::uint64_t seed);

}  // namespace hmccond::randmat
