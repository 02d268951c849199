#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hmccond/common.hpp"
#include "hmccond/integrator.hpp"
#include "hmccond/stats.hpp"
#include "support.hpp"

using namespace hmccond;
using namespace hmccond::integrator;
using spectra::CovarianceModel;
using spectra::Spectrum;

namespace {

GradFn gaussian_grad(double sigma) {
  const double inv = 1.0 / (sigma * sigma);
  return [inv](const std::vector<double>& x) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = -x[i] * inv;
    return g;
  };
}

}  // namespace

TEST_CASE("leapfrog single step on the unit Gaussian") {
  const PhasePoint p{{1.0}, {0.0}};
  const auto out = leapfrog_step(p, 1.0, gaussian_grad(1.0));
  CHECK(out.x[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out.xi[0] == doctest::Approx(-0.75).epsilon(1e-15));
}

TEST_CASE("leapfrog h=0 is the identity, zero gradient is pure drift") {
  const PhasePoint p{{1.25, -0.5}, {0.75, 0.25}};
  const auto same = leapfrog_step(p, 0.0, gaussian_grad(1.0));
  CHECK(same.x == p.x);
  CHECK(same.xi == p.xi);

  GradFn flat = [](const std::vector<double>& x) { return std::vector<double>(x.size(), 0.0); };
  const auto drift = leapfrog_step(p, 0.5, flat);
  CHECK(drift.x[0] == doctest::Approx(p.x[0] + 0.5 * p.xi[0]));
  CHECK(drift.x[1] == doctest::Approx(p.x[1] + 0.5 * p.xi[1]));
  CHECK(drift.xi == p.xi);
}

TEST_CASE("trajectory composition") {
  const PhasePoint p{{1.0}, {0.0}};
  const auto zero = leapfrog_trajectory(p, 1.0, 0, gaussian_grad(1.0));
  CHECK(zero.x == p.x);

  const auto one = leapfrog_trajectory(p, 1.0, 1, gaussian_grad(1.0));
  CHECK(one.x[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(one.xi[0] == doctest::Approx(-0.75).epsilon(1e-15));

  // Matches explicit composition of single steps.
  PhasePoint manual = p;
  for (int i = 0; i < 20; ++i) manual = leapfrog_step(manual, 0.3, gaussian_grad(1.0));
  const auto fused = leapfrog_trajectory(p, 0.3, 20, gaussian_grad(1.0));
  CHECK(fused.x[0] == doctest::Approx(manual.x[0]).epsilon(1e-12));
  CHECK(fused.xi[0] == doctest::Approx(manual.xi[0]).epsilon(1e-12));
}

TEST_CASE("trajectory matches the closed form") {
  const PhasePoint p{{1.0}, {0.0}};
  const auto end = leapfrog_trajectory(p, 0.1, 200, gaussian_grad(1.0));
  const auto [x, xi] = mode_propagate(1.0, 0.1, 200, 1.0, 0.0);
  CHECK(end.x[0] == doctest::Approx(x).epsilon(1e-8));
  CHECK(end.xi[0] == doctest::Approx(xi).epsilon(1e-8));
}

TEST_CASE("hamiltonian values") {
  const auto c = CovarianceModel::diagonal(Spectrum::flat(1));
  CHECK(hamiltonian({{0.0}, {0.0}}, c) == 0.0);
  CHECK(hamiltonian({{1.0}, {0.0}}, c) == doctest::Approx(0.5));
  CHECK(hamiltonian({{0.5}, {-0.75}}, c) == doctest::Approx(0.40625).epsilon(1e-15));
}

TEST_CASE("mode dynamics basics") {
  const auto [x0, xi0] = mode_propagate(1.0, 1.0, 0, 0.3, -0.2);
  CHECK(x0 == doctest::Approx(0.3));
  CHECK(xi0 == doctest::Approx(-0.2));

  const ModeDynamics m(1.0, 1.0);
  CHECK(m.theta == doctest::Approx(std::acos(0.5)).epsilon(1e-15));

  const auto [x1, xi1] = m.propagate(1, 1.0, 0.0);
  CHECK(x1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(xi1 == doctest::Approx(-0.75).epsilon(1e-12));

  CHECK_THROWS_AS(ModeDynamics(1.0, 2.0), Unstable);
  CHECK_THROWS_AS(mode_propagate(0.4, 0.81, 1, 0.0, 0.0), Unstable);
}

TEST_CASE("mode energy error examples and bound") {
  CHECK(mode_energy_error(1.0, 1.0, 1, 1.0, 0.0) == doctest::Approx(-0.09375).epsilon(1e-12));
  // h -> 0 limit
  CHECK(std::abs(mode_energy_error(1.0, 1e-4, 3, 1.0, 0.5)) < 1e-7);

  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    const double sigma = rng.uniform(0.3, 3.0);
    const double h = rng.uniform(0.01, 1.8) * sigma;
    const long long ell = 1 + (long long)(rng.uniform() * 50);
    const double x0 = rng.normal() * sigma;
    const double xi0 = rng.normal();
    const double q = h / (2.0 * sigma);
    const double chi = std::pow(q, 4) / (1.0 - q * q);
    const double bound = (h * h) / (8.0 * sigma * sigma) * std::abs(xi0 * xi0 - x0 * x0 / (sigma * sigma)) +
                          0.5 * chi * xi0 * xi0 + std::sqrt(chi) * std::abs(x0 * xi0) / sigma;
    CHECK(std::abs(mode_energy_error(sigma, h, ell, x0, xi0)) <= bound + 1e-14);
  }
}

TEST_CASE("energy error equals the Hamiltonian difference of the closed form") {
  Rng rng(8);
  for (int t = 0; t < 1000; ++t) {
    const double sigma = rng.uniform(0.2, 4.0);
    const double h = rng.uniform(0.05, 1.9) * sigma;
    const long long ell = 1 + (long long)(rng.uniform() * 1000);
    const double x0 = rng.normal() * sigma;
    const double xi0 = rng.normal();
    const auto [x1, xi1] = mode_propagate(sigma, h, ell, x0, xi0);
    const double h_before = 0.5 * x0 * x0 / (sigma * sigma) + 0.5 * xi0 * xi0;
    const double h_after = 0.5 * x1 * x1 / (sigma * sigma) + 0.5 * xi1 * xi1;
    const double delta = mode_energy_error(sigma, h, ell, x0, xi0);
    CHECK(delta == doctest::Approx(h_after - h_before).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("closed form matches iterated leapfrog over random cases") {
  Rng rng(9);
  for (int t = 0; t < 1000; ++t) {
    const double sigma = rng.uniform(0.3, 3.0);
    const double h = rng.uniform(0.02, 1.8) * sigma;  // h / 2 sigma <= 0.9
    const long long ell = 1 + (long long)(rng.uniform() * 10000);
    const double x0 = rng.normal() * sigma;
    const double xi0 = rng.normal();
    const PhasePoint start{{x0}, {xi0}};
    const auto end = leapfrog_trajectory(start, h, ell, gaussian_grad(sigma));
    const auto [x1, xi1] = mode_propagate(sigma, h, ell, x0, xi0);
    CHECK(end.x[0] == doctest::Approx(x1).epsilon(1e-8).scale(1.0));
    CHECK(end.xi[0] == doctest::Approx(xi1).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("reversibility: negate momentum, integrate, negate again") {
  Rng rng(10);
  for (int t = 0; t < 50; ++t) {
    const int n = 3;
    PhasePoint start;
    for (int i = 0; i < n; ++i) {
      start.x.push_back(rng.normal());
      start.xi.push_back(rng.normal());
    }
    const double h = rng.uniform(0.05, 0.9);
    const long long ell = 1 + (long long)(rng.uniform() * 1000);
    const auto grad = gaussian_grad(1.0);
    const auto fwd = leapfrog_trajectory(start, h, ell, grad);
    PhasePoint flipped = fwd;
    for (double& v : flipped.xi) v = -v;
    auto back = leapfrog_trajectory(flipped, h, ell, grad);
    for (double& v : back.xi) v = -v;
    for (int i = 0; i < n; ++i) {
      CHECK(back.x[i] == doctest::Approx(start.x[i]).epsilon(1e-10).scale(1.0));
      CHECK(back.xi[i] == doctest::Approx(start.xi[i]).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("symplectic volume: |det U_h| = 1") {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const double sigma = rng.uniform(0.2, 5.0);
    const double h = rng.uniform(0.01, 1.99) * sigma;
    const ModeDynamics m(sigma, h);
    // Determinant from the images of the basis vectors under one step.
    const auto [a, c] = m.propagate(1, 1.0, 0.0);
    const auto [b, d] = m.propagate(1, 0.0, 1.0);
    CHECK(std::abs(a * d - b * c) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("sin2_average closed form") {
  // sigma_n = sigma_1 = 1, uniform on [0, pi] has average exactly 1/2 --
  // realized here as lo -> 0 via a tiny positive endpoint.
  const double pi = 3.14159265358979323846;
  const IntegrationTimeLaw law(1e-300, pi, 1.0);
  CHECK(sin2_average(1.0, law) == doctest::Approx(0.5).epsilon(1e-12));

  // Flat case against the frozen closed-form value on the default law.
  const IntegrationTimeLaw def(0.5, 1.5, 1.0);
  CHECK(sin2_average(1.0, def) == doctest::Approx(0.6750877441870073).epsilon(1e-13));

  // sigma_n << sigma_1: the oscillation averages out toward 1/2.
  const IntegrationTimeLaw scaled(0.5, 1.5, 1.0);
  CHECK(std::abs(sin2_average(1e-4, scaled) - 0.5) < 1e-3);

  // Always within [0,1], and deviation from 1/2 bounded by C_pi / 2.
  Rng rng(12);
  const double c_pi = def.fourier_bound();
  CHECK(c_pi < 1.0);
  for (int t = 0; t < 500; ++t) {
    const double sn = rng.uniform(0.05, 1.0);
    const double v = sin2_average(sn, def);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(std::abs(v - 0.5) <= 0.5 * c_pi + 1e-12);
  }
}

TEST_CASE("fourier bound for the uniform law") {
  // Width 1: sup_{x >= 1} |sin x| / x = sin(1).
  const IntegrationTimeLaw law(0.5, 1.5, 1.0);
  CHECK(law.fourier_bound() == doctest::Approx(std::sin(1.0)).epsilon(1e-6));
  // Wide laws give small bounds.
  const IntegrationTimeLaw wide(0.5, 20.5, 1.0);
  CHECK(law.fourier_bound() > wide.fourier_bound());
  CHECK(wide.fourier_bound() < 0.06);
}

TEST_CASE("equilibrium mean of the energy error") {
  // With x0 ~ N(0, sigma^2), xi0 ~ N(0,1): E[delta] = sin^2(l theta) chi / 2,
  // whose leading term is sin^2(l theta) (h/2s)^4 / 2.
  const double sigma = 1.3, h = 0.52;
  const long long ell = 37;
  const ModeDynamics m(sigma, h);
  Rng rng(13);
  const int draws = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double x0 = sigma * rng.normal();
    const double xi0 = rng.normal();
    const double d = m.energy_error(ell, x0, xi0);
    sum += d;
    sum2 += d * d;
  }
  const double mean = sum / draws;
  const double var = sum2 / draws - mean * mean;
  const double se = std::sqrt(var / draws);
  const double s = std::sin(ell * m.theta);
  const double expected = 0.5 * s * s * m.chi;
  CHECK(std::abs(mean - expected) <= 3.0 * se);
  const double leading = 0.5 * s * s * std::pow(h / (2.0 * sigma), 4);
  CHECK(testsupport::rel_err(expected, leading) < 0.05);
}

TEST_CASE("law validation") {
  CHECK_THROWS_AS(IntegrationTimeLaw(1.5, 0.5), InvalidConfig);
  CHECK_THROWS_AS(IntegrationTimeLaw(0.0, 1.0), InvalidConfig);
  CHECK_THROWS_AS(IntegrationTimeLaw(0.5, 1.5, -1.0), InvalidConfig);
}
