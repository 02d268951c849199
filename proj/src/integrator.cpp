#include "hmccond/integrator.hpp"

#include <cmath>

#include "hmccond/common.hpp"

namespace hmccond::integrator {

PhasePoint leapfrog_step(const PhasePoint& p, double h, const GradFn& grad_logp) {
  if (p.x.size() != p.xi.size()) throw InvalidConfig("leapfrog_step: x and xi sizes differ");
  PhasePoint out = p;
  auto g = grad_logp(out.x);
  for (std::size_t i = 0; i < out.xi.size(); ++i) out.xi[i] += 0.5 * h * g[i];
  for (std::size_t i = 0; i < out.x.size(); ++i) out.x[i] += h * out.xi[i];
  g = grad_logp(out.x);
  for (std::size_t i = 0; i < out.xi.size(); ++i) out.xi[i] += 0.5 * h * g[i];
  return out;
}

PhasePoint leapfrog_trajectory(const PhasePoint& p, double h, long long ell, const GradFn& grad_logp) {
  if (p.x.size() != p.xi.size()) throw InvalidConfig("leapfrog_trajectory: x and xi sizes differ");
  if (ell < 0) throw InvalidConfig("leapfrog_trajectory: negative step count");
  if (ell == 0) return p;
  PhasePoint out = p;
  auto g = grad_logp(out.x);
  for (std::size_t i = 0; i < out.xi.size(); ++i) out.xi[i] += 0.5 * h * g[i];
  for (long long step = 0; step < ell; ++step) {
    for (std::size_t i = 0; i < out.x.size(); ++i) out.x[i] += h * out.xi[i];
    g = grad_logp(out.x);
    const double kick = (step + 1 < ell) ? h : 0.5 * h;
    for (std::size_t i = 0; i < out.xi.size(); ++i) out.xi[i] += kick * g[i];
  }
  return out;
}

double hamiltonian(const PhasePoint& p, const spectra::CovarianceModel& c) {
  if (p.x.size() != p.xi.size() || static_cast<int>(p.x.size()) != c.dim())
    throw InvalidConfig("hamiltonian: dimension mismatch");
  double kinetic = 0.0;
  for (double v : p.xi) kinetic += v * v;
  return 0.5 * c.inv_quad(p.x) + 0.5 * kinetic;
}

ModeDynamics::ModeDynamics(double sigma_, double h_) : sigma(sigma_), h(h_) {
  if (!(sigma > 0.0) || h < 0.0) throw InvalidConfig("ModeDynamics: need sigma > 0 and h >= 0");
  const double r = h / (2.0 * sigma);
  if (!(r < 1.0)) throw Unstable("ModeDynamics: stability requires h < 2 sigma");
  const double q = r * r;
  theta = std::acos(1.0 - 2.0 * q);
  gamma = std::sqrt(1.0 - q) / sigma;
  chi = q * q / (1.0 - q);
}

std::pair<double, double> ModeDynamics::propagate(long long ell, double x0, double xi0) const {
  const double angle = static_cast<double>(ell) * theta;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * x0 + s / gamma * xi0, -gamma * s * x0 + c * xi0};
}

double ModeDynamics::energy_error(long long ell, double x0, double xi0) const {
  const double angle = static_cast<double>(ell) * theta;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double q = (h / (2.0 * sigma)) * (h / (2.0 * sigma));
  const double xs = x0 / sigma;
  return 0.5 * s * s * q * (xi0 * xi0 - xs * xs) + 0.5 * s * s * chi * xi0 * xi0 +
         c * s * std::sqrt(chi) * xs * xi0;
}

std::pair<double, double> mode_propagate(double sigma, double h, long long ell, double x0, double xi0) {
  return ModeDynamics(sigma, h).propagate(ell, x0, xi0);
}

double mode_energy_error(double sigma, double h, long long ell, double x0, double xi0) {
  return ModeDynamics(sigma, h).energy_error(ell, x0, xi0);
}

IntegrationTimeLaw::IntegrationTimeLaw(double lo_, double hi_, double sigma1_)
    : lo(lo_), hi(hi_), sigma1(sigma1_) {
  if (!(lo > 0.0) || !(hi > lo)) throw InvalidConfig("IntegrationTimeLaw: require 0 < lo < hi");
  if (!(sigma1 > 0.0)) throw InvalidConfig("IntegrationTimeLaw: require sigma1 > 0");
}

double IntegrationTimeLaw::draw_scaled_time(Rng& rng) const { return sigma1 * rng.uniform(lo, hi); }

double IntegrationTimeLaw::fourier_bound() const {
  // |pi_hat(omega)| = |sinc(omega w / 2)| with w = hi - lo.  The sup over
  // |omega| >= 2 is the sup of |sin x| / x over x >= w, which lives in
  // [w, w + 2 pi] because |sinc| <= 1/x beyond and that interval holds a
  // full period.  Dense scan plus local refinement.
  const double w = hi - lo;
  auto f = [](double x) { return std::abs(std::sin(x)) / x; };
  const double a = w;
  const double b = w + 2.0 * 3.14159265358979323846;
  const int n = 4096;
  double best_x = a, best = f(a);
  for (int i = 1; i <= n; ++i) {
    const double x = a + (b - a) * i / n;
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  double lo_x = std::max(a, best_x - (b - a) / n);
  double hi_x = std::min(b, best_x + (b - a) / n);
  for (int it = 0; it < 60; ++it) {
    const double m1 = lo_x + (hi_x - lo_x) / 3.0;
    const double m2 = hi_x - (hi_x - lo_x) / 3.0;
    if (f(m1) < f(m2))
      lo_x = m1;
    else
      hi_x = m2;
  }
  return std::max(best, f(0.5 * (lo_x + hi_x)));
}

double sin2_average(double sigma_n, const IntegrationTimeLaw& law) {
  if (!(sigma_n > 0.0)) throw InvalidConfig("sin2_average: require sigma_n > 0");
  const double w = law.hi - law.lo;
  const double s1 = law.sigma1;
  const double value = 0.5 - sigma_n / (4.0 * s1 * w) *
                                 (std::sin(2.0 * s1 * law.hi / sigma_n) - std::sin(2.0 * s1 * law.lo / sigma_n));
  return value;
}

}  // namespace hmccond::integrator
