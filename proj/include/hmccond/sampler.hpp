#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hmccond/integrator.hpp"
#include "hmccond/kernels.hpp"
#include "hmccond/spectra.hpp"

namespace hmccond::sampler {

// alpha = 4 (Phi^{-1}(1 - abar/2))^2, the energy-error scale that yields
// average acceptance abar in the Gaussian limit.
double alpha_for_acceptance(double abar);

// abar = 2 Phi(-sqrt(alpha) / 2); strictly decreasing in alpha.
double acceptance_for_alpha(double alpha);

// h_bar = ((1/alpha) sum (2 sigma_n)^{-4} / 2)^{-1/4} = (32 alpha)^{1/4} / nu.
double step_size_simple(const spectra::Spectrum& s, double alpha);

// h with the sin^2 averages of the integration-time law in place of 1/2.
// The law's lo/hi shape is used; sigma1 is taken from the spectrum.
double step_size_exact(const spectra::Spectrum& s, double alpha, const integrator::IntegrationTimeLaw& law);

struct StepSizePlan {
  double alpha = 0.0;
  double h_exact = 0.0;
  double h_simple = 0.0;
  double target_accept = 0.0;
};

StepSizePlan make_step_size_plan(const spectra::Spectrum& s, double abar,
                                 const integrator::IntegrationTimeLaw& law);

struct ChainOptions {
  bool store_samples = true;
  int store_every = 1;                     // keep every k-th post-proposal state
  kernels::Exec exec = kernels::Exec::automatic;  // mode-sweep execution policy
};

struct ChainResult {
  std::vector<std::vector<double>> samples;
  double accept_rate = 0.0;
  std::vector<double> delta_samples;      // H(end) - H(start), one per proposal
  std::vector<std::uint8_t> accept_flags;  // 1 when the proposal was taken
  std::uint64_t seed = 0;
  std::string rng_name;
  long long leapfrog_steps_total = 0;
};

// Metropolis-corrected HMC for a Gaussian target: momentum refresh N(0, I),
// ell = ceil(sigma1 T / h) with T drawn from the law per proposal, chain
// started in equilibrium.  Throws Unstable when h >= 2 sigma_min.
ChainResult run_chain(const spectra::CovarianceModel& c, double h, const integrator::IntegrationTimeLaw& law,
                      long long n_samples, std::uint64_t seed, const ChainOptions& opt = {});

// Same chain law on the diagonal target, computed with the per-mode closed
// form: O(N) per proposal regardless of ell.  Consumes randomness in the
// same order as run_chain, so runs agree step for step at matching seeds.
ChainResult run_chain_exact_gaussian(const spectra::Spectrum& s, double h,
                                     const integrator::IntegrationTimeLaw& law, long long n_samples,
                                     std::uint64_t seed, const ChainOptions& opt = {});

struct TuneBudget {
  int max_iters = 30;
  long long pilot_proposals = 1500;
  double tolerance = 0.01;
};

struct TuneResult {
  double h = 0.0;
  double achieved_accept = 0.0;
  bool converged = false;
  int pilots_run = 0;
};

// Bisection on log h against empirical acceptance from pilot chains, inside
// the bracket [h_bar/8, 8 h_bar] clipped to the stability region.  Returns
// the best h found with a convergence flag when the budget runs out.
TuneResult tune_step_size(const spectra::CovarianceModel& c, double target_abar,
                          const integrator::IntegrationTimeLaw& law, const TuneBudget& budget,
                          std::uint64_t seed);

// kappa_hat = (sigma1_hat / h) * 2^{7/4} * sqrt(Phi^{-1}(1 - abar_hat / 2)).
double infer_kappa(double sigma1_hat, double h, double abar_hat);

// C_hat = (1/S) sum x x^T over the rows of `samples`.  Targets are centered,
// so no mean subtraction by default; `center` switches to the mean-removed
// estimator with S-1 normalization.
spectra::SpdMatrix sample_covariance(const std::vector<std::vector<double>>& samples, bool center = false);

// kappa_spd of the sample covariance; RankDeficient when S < N or the
// estimate is numerically singular.
double plug_in_kappa(const std::vector<std::vector<double>>& samples);

}  // namespace hmccond::sampler
