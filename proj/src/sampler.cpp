#include "hmccond/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "hmccond/common.hpp"
#include "hmccond/stats.hpp"

namespace hmccond::sampler {

using integrator::IntegrationTimeLaw;
using spectra::CovarianceModel;
using spectra::SpdMatrix;
using spectra::Spectrum;

double alpha_for_acceptance(double abar) {
  if (!(abar > 0.0 && abar < 1.0)) throw OutOfRange("alpha_for_acceptance: abar must lie in (0, 1)");
  const double z = norm_quantile(1.0 - 0.5 * abar);
  return 4.0 * z * z;
}

double acceptance_for_alpha(double alpha) {
  if (alpha < 0.0) throw OutOfRange("acceptance_for_alpha: alpha must be nonnegative");
  return 2.0 * norm_cdf(-0.5 * std::sqrt(alpha));
}

double step_size_simple(const Spectrum& s, double alpha) {
  if (!(alpha > 0.0)) throw OutOfRange("step_size_simple: alpha must be positive");
  double sum = 0.0;
  for (double sn : s.sigmas()) {
    const double r = 1.0 / (2.0 * sn);
    const double r2 = r * r;
    sum += 0.5 * r2 * r2;
  }
  return std::pow(sum / alpha, -0.25);
}

double step_size_exact(const Spectrum& s, double alpha, const IntegrationTimeLaw& law) {
  if (!(alpha > 0.0)) throw OutOfRange("step_size_exact: alpha must be positive");
  const IntegrationTimeLaw scaled = law.with_sigma1(s.sigma1());
  double sum = 0.0;
  for (double sn : s.sigmas()) {
    const double r = 1.0 / (2.0 * sn);
    const double r2 = r * r;
    sum += integrator::sin2_average(sn, scaled) * r2 * r2;
  }
  return std::pow(sum / alpha, -0.25);
}

StepSizePlan make_step_size_plan(const Spectrum& s, double abar, const IntegrationTimeLaw& law) {
  StepSizePlan plan;
  plan.target_accept = abar;
  plan.alpha = alpha_for_acceptance(abar);
  plan.h_simple = step_size_simple(s, plan.alpha);
  plan.h_exact = step_size_exact(s, plan.alpha, law);
  return plan;
}

namespace {

long long steps_for_time(double scaled_time, double h) {
  return static_cast<long long>(std::ceil(scaled_time / h));
}

}  // namespace

ChainResult run_chain(const CovarianceModel& c, double h, const IntegrationTimeLaw& law,
                      long long n_samples, std::uint64_t seed, const ChainOptions& opt) {
  if (n_samples < 1) throw InvalidConfig("run_chain: need n_samples >= 1");
  if (!(h > 0.0)) throw InvalidConfig("run_chain: need h > 0");
  if (!(h < 2.0 * c.sigma_min())) throw Unstable("run_chain: h >= 2 sigma_min");

  const int n = c.dim();
  const IntegrationTimeLaw scaled = law.with_sigma1(c.sigma1());
  Rng rng(seed);

  ChainResult out;
  out.seed = seed;
  out.rng_name = Rng::name();
  out.delta_samples.reserve(n_samples);

  integrator::PhasePoint state;
  state.x = c.sample(rng);
  state.xi.assign(n, 0.0);

  auto grad = [&c](const std::vector<double>& x) { return c.grad_log_density(x); };

  long long accepted = 0;
  for (long long i = 0; i < n_samples; ++i) {
    rng.fill_normal(state.xi.data(), state.xi.size());
    const double time = scaled.draw_scaled_time(rng);
    const long long ell = steps_for_time(time, h);
    out.leapfrog_steps_total += ell;

    const double h0 = integrator::hamiltonian(state, c);
    integrator::PhasePoint prop = integrator::leapfrog_trajectory(state, h, ell, grad);
    const double h1 = integrator::hamiltonian(prop, c);
    const double delta = h1 - h0;
    out.delta_samples.push_back(delta);

    const double u = rng.uniform();
    const bool take = u < std::exp(-delta);
    out.accept_flags.push_back(take ? 1 : 0);
    if (take) {
      state.x = std::move(prop.x);
      ++accepted;
    }
    if (opt.store_samples && (i % opt.store_every) == opt.store_every - 1)
      out.samples.push_back(state.x);
  }
  out.accept_rate = static_cast<double>(accepted) / static_cast<double>(n_samples);
  return out;
}

ChainResult run_chain_exact_gaussian(const Spectrum& s, double h, const IntegrationTimeLaw& law,
                                     long long n_samples, std::uint64_t seed, const ChainOptions& opt) {
  if (n_samples < 1) throw InvalidConfig("run_chain_exact_gaussian: need n_samples >= 1");
  if (!(h > 0.0)) throw InvalidConfig("run_chain_exact_gaussian: need h > 0");
  if (!(h < 2.0 * s.sigma_min())) throw Unstable("run_chain_exact_gaussian: h >= 2 sigma_min");

  const int n = s.dim();
  const IntegrationTimeLaw scaled = law.with_sigma1(s.sigma1());
  const kernels::ModeTables tables = kernels::make_mode_tables(s.sigmas(), h);
  Rng rng(seed);

  ChainResult out;
  out.seed = seed;
  out.rng_name = Rng::name();
  out.delta_samples.reserve(n_samples);

  std::vector<double> x(n), xi(n), x_prop(n), xi_prop(n), delta_buf(n);
  rng.fill_normal(x.data(), x.size());
  for (int i = 0; i < n; ++i) x[i] *= s.sigmas()[i];

  long long accepted = 0;
  for (long long i = 0; i < n_samples; ++i) {
    rng.fill_normal(xi.data(), xi.size());
    const double time = scaled.draw_scaled_time(rng);
    const long long ell = steps_for_time(time, h);
    out.leapfrog_steps_total += ell;

    kernels::mode_sweep(tables, ell, x.data(), xi.data(), x_prop.data(), xi_prop.data(),
                        delta_buf.data(), opt.exec);
    double delta = 0.0;
    for (int m = 0; m < n; ++m) delta += delta_buf[m];
    out.delta_samples.push_back(delta);

    const double u = rng.uniform();
    const bool take = u < std::exp(-delta);
    out.accept_flags.push_back(take ? 1 : 0);
    if (take) {
      std::swap(x, x_prop);
      ++accepted;
    }
    if (opt.store_samples && (i % opt.store_every) == opt.store_every - 1) out.samples.push_back(x);
  }
  out.accept_rate = static_cast<double>(accepted) / static_cast<double>(n_samples);
  return out;
}

namespace {

// Pilot acceptance at a candidate step size; unstable step sizes count as
// fully rejected so the bisection can treat acceptance as decreasing in h.
double pilot_acceptance(const CovarianceModel& c, double h, const IntegrationTimeLaw& law,
                        long long proposals, std::uint64_t seed) {
  if (!(h < 2.0 * c.sigma_min())) return 0.0;
  ChainOptions opt;
  opt.store_samples = false;
  if (c.kind() == CovarianceModel::Kind::dense) {
    return run_chain(c, h, law, proposals, seed, opt).accept_rate;
  }
  return run_chain_exact_gaussian(spectra::Spectrum(c.mode_sigmas()), h, law, proposals, seed, opt)
      .accept_rate;
}

}  // namespace

TuneResult tune_step_size(const CovarianceModel& c, double target_abar, const IntegrationTimeLaw& law,
                          const TuneBudget& budget, std::uint64_t seed) {
  if (!(target_abar > 0.0 && target_abar < 1.0))
    throw OutOfRange("tune_step_size: target must lie in (0, 1)");

  const Spectrum s(c.mode_sigmas());
  const double alpha = alpha_for_acceptance(target_abar);
  const double h_bar = step_size_simple(s, alpha);
  const double h_cap = 1.999 * c.sigma_min();

  double lo = std::min(h_bar / 8.0, h_cap);
  double hi = std::min(8.0 * h_bar, h_cap);

  TuneResult best;
  double best_err = 2.0;
  auto probe = [&](double h, int pilot_index) {
    const double a = pilot_acceptance(c, h, law, budget.pilot_proposals, child_seed(seed, pilot_index));
    if (std::abs(a - target_abar) < best_err) {
      best_err = std::abs(a - target_abar);
      best.h = h;
      best.achieved_accept = a;
    }
    return a;
  };

  int pilots = 0;
  double log_lo = std::log(lo), log_hi = std::log(hi);
  for (; pilots < budget.max_iters; ++pilots) {
    const double mid = 0.5 * (log_lo + log_hi);
    const double a = probe(std::exp(mid), pilots);
    if (std::abs(a - target_abar) <= budget.tolerance) {
      best.converged = true;
      break;
    }
    if (a > target_abar)
      log_lo = mid;  // acceptance too high: step can grow
    else
      log_hi = mid;
  }
  best.pilots_run = pilots + (best.converged ? 1 : 0);
  return best;
}

double infer_kappa(double sigma1_hat, double h, double abar_hat) {
  if (!(sigma1_hat > 0.0) || !(h > 0.0)) throw OutOfRange("infer_kappa: sigma1 and h must be positive");
  if (!(abar_hat > 0.0 && abar_hat < 1.0)) throw OutOfRange("infer_kappa: abar must lie in (0, 1)");
  const double z = norm_quantile(1.0 - 0.5 * abar_hat);
  return (sigma1_hat / h) * std::pow(2.0, 1.75) * std::sqrt(z);
}

SpdMatrix sample_covariance(const std::vector<std::vector<double>>& samples, bool center) {
  if (samples.size() < 2) throw InvalidConfig("sample_covariance: need at least two samples");
  const int s_count = static_cast<int>(samples.size());
  const int n = static_cast<int>(samples.front().size());
  Matrix x(s_count, n);
  for (int i = 0; i < s_count; ++i) {
    if (static_cast<int>(samples[i].size()) != n)
      throw InvalidConfig("sample_covariance: inconsistent sample lengths");
    for (int j = 0; j < n; ++j) x(i, j) = samples[i][j];
  }
  if (center) {
    std::vector<double> mu(n, 0.0);
    for (int i = 0; i < s_count; ++i)
      for (int j = 0; j < n; ++j) mu[j] += x(i, j);
    for (double& v : mu) v /= s_count;
    for (int i = 0; i < s_count; ++i)
      for (int j = 0; j < n; ++j) x(i, j) -= mu[j];
  }
  const double scale = center ? 1.0 / (s_count - 1) : 1.0 / s_count;
  return SpdMatrix(kernels::syrk_scaled(x, scale));
}

double plug_in_kappa(const std::vector<std::vector<double>>& samples) {
  const int n = samples.empty() ? 0 : static_cast<int>(samples.front().size());
  if (static_cast<int>(samples.size()) < n)
    throw RankDeficient("plug_in_kappa: fewer samples than dimensions");
  const SpdMatrix c = sample_covariance(samples);
  try {
    return spectra::kappa_spd(c);
  } catch (const NotPositiveDefinite&) {
    throw RankDeficient("plug_in_kappa: sample covariance numerically singular");
  }
}

}  // namespace hmccond::sampler
