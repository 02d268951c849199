#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "hmccond/rng.hpp"
#include "hmccond/spectra.hpp"

namespace hmccond::integrator {

struct PhasePoint {
  std::vector<double> x;   // position
  std::vector<double> xi;  // momentum, unit mass
};

using GradFn = std::function<std::vector<double>(const std::vector<double>&)>;

// One half-kick / drift / half-kick update.  Exactly reversible: integrating
// again with the momentum negated walks back to the start.
PhasePoint leapfrog_step(const PhasePoint& p, double h, const GradFn& grad_logp);

// ell-fold composition of leapfrog_step (adjacent half-kicks fused).
PhasePoint leapfrog_trajectory(const PhasePoint& p, double h, long long ell, const GradFn& grad_logp);

// H(x, xi) = x^T C^{-1} x / 2 + ||xi||^2 / 2, dropping the log-normalizer.
double hamiltonian(const PhasePoint& p, const spectra::CovarianceModel& c);

// Closed-form dynamics of one eigencomponent of a Gaussian target under the
// leapfrog map: a rotation by theta = arccos(1 - h^2 / 2 sigma^2) per step in
// the (x, xi / gamma) plane.  Requires h < 2 sigma.
struct ModeDynamics {
  double sigma;
  double h;
  double theta;
  double gamma;  // gamma = sqrt(1 - (h/2s)^2) / s, so U_h^l = [[cos, sin/g], [-g sin, cos]]
  double chi;    // (h/2s)^4 / (1 - (h/2s)^2)

  ModeDynamics(double sigma, double h);  // throws Unstable when h >= 2 sigma
  std::pair<double, double> propagate(long long ell, double x0, double xi0) const;
  double energy_error(long long ell, double x0, double xi0) const;
};

std::pair<double, double> mode_propagate(double sigma, double h, long long ell, double x0, double xi0);
double mode_energy_error(double sigma, double h, long long ell, double x0, double xi0);

// Law of the random integration time: T ~ U(lo, hi) scaled by sigma1, so a
// trajectory covers time sigma1 * T.  Uniform laws satisfy the Fourier
// regularity bound |pi_hat| <= C_pi < 1 away from zero frequency.
struct IntegrationTimeLaw {
  double lo = 0.5;
  double hi = 1.5;
  double sigma1 = 1.0;

  IntegrationTimeLaw() = default;
  IntegrationTimeLaw(double lo_, double hi_, double sigma1_ = 1.0);

  double draw_scaled_time(Rng& rng) const;  // sigma1 * U(lo, hi)
  IntegrationTimeLaw with_sigma1(double s1) const { return IntegrationTimeLaw(lo, hi, s1); }

  // C_pi = sup over |omega| >= 2 of |pi_hat(omega)| for the U(lo, hi) shape.
  double fourier_bound() const;
};

// Integral of sin^2(t / sigma_n) against the density of sigma1 * U(lo, hi),
// by the closed-form antiderivative.  Always lies in [0, 1].
double sin2_average(double sigma_n, const IntegrationTimeLaw& law);

}  // namespace hmccond::integrator
