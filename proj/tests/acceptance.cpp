// Acceptance gate: runs every headline claim end to end and prints one
// PASS/FAIL line per criterion.  Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "hmccond/common.hpp"
#include "hmccond/integrator.hpp"
#include "hmccond/lab.hpp"
#include "hmccond/precond.hpp"
#include "hmccond/randmat.hpp"
#include "hmccond/sampler.hpp"
#include "hmccond/spectra.hpp"
#include "hmccond/stats.hpp"
#include "support.hpp"

using namespace hmccond;
using integrator::IntegrationTimeLaw;
using spectra::GeneratorParams;
using spectra::SpdMatrix;
using spectra::Spectrum;

namespace {

int failures = 0;

class Criterion {
 public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {
    start_ = std::chrono::steady_clock::now();
  }

  void check(bool ok, const std::string& detail) {
    if (!ok) local_failures_.push_back(detail);
    details_.push_back((ok ? "" : "!! ") + detail);
  }

  ~Criterion() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const bool ok = local_failures_.empty();
    if (!ok) ++failures;
    std::printf("[%s] C%d %s (%.1fs)\n", ok ? "PASS" : "FAIL", id_, title_.c_str(), secs);
    for (const auto& d : details_) std::printf("        %s\n", d.c_str());
    std::fflush(stdout);
  }

 private:
  int id_;
  std::string title_;
  std::vector<std::string> details_;
  std::vector<std::string> local_failures_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

// Generator spectrum in the sharp-limit regime: a few large scales and many
// near the minimum, so trajectories are long while per-mode steps stay small.
Spectrum theorem_spectrum(int n, std::uint64_t seed) {
  Rng rng(seed);
  return spectra::generate_spectrum(spectra::random_points(n, rng),
                                    GeneratorParams{1.0, 20.0, 0.05, 6.0});
}

void criterion1_acceptance_targeting() {
  Criterion c(1, "step-size rule hits the target acceptance rate");
  const auto spec = theorem_spectrum(256, 7001);
  const IntegrationTimeLaw law(0.5, 1.5);
  const double decay = spectra::decay_assumption_ratio(spec);
  c.check(true, fmt("decay diagnostic %.4f (flat-spectrum floor at N=256 is 256^-1/2 = 0.0625)", decay));
  for (double target : {0.8, 0.95}) {
    const auto plan = sampler::make_step_size_plan(spec, target, law);
    sampler::ChainOptions opt;
    opt.store_samples = false;
    const auto res = sampler::run_chain_exact_gaussian(spec, plan.h_exact, law, 20000, 9001, opt);
    c.check(std::abs(res.accept_rate - target) <= 0.02,
            fmt("target %.2f: empirical acceptance %.4f (tolerance 0.02)", target, res.accept_rate));
  }
}

void criterion2_energy_error_limit() {
  Criterion c(2, "energy errors match the normal limit N(alpha/2, alpha)");
  const auto spec = theorem_spectrum(256, 7001);
  const IntegrationTimeLaw law(0.5, 1.5);
  const double target = 0.95;
  const auto plan = sampler::make_step_size_plan(spec, target, law);
  sampler::ChainOptions opt;
  opt.store_samples = false;
  const auto res = sampler::run_chain_exact_gaussian(spec, plan.h_exact, law, 1000000, 9002, opt);
  const auto m = compute_moments(res.delta_samples);
  const double half_alpha = 0.5 * plan.alpha;
  c.check(std::abs(m.mean - half_alpha) <= 0.05 * half_alpha,
          fmt("mean %.6f vs alpha/2 = %.6f (tolerance 5%%)", m.mean, half_alpha));
  c.check(std::abs(m.variance - plan.alpha) <= 0.10 * plan.alpha,
          fmt("variance %.6f vs alpha = %.6f (tolerance 10%%)", m.variance, plan.alpha));
  c.check(std::abs(m.skewness) < 0.1, fmt("skewness %.4f (bound 0.1)", m.skewness));
}

void criterion3_kappa_inference() {
  Criterion c(3, "kappa inferred from acceptance tracks the truth");
  lab::KappaInferenceConfig cfg;
  cfg.dims = {256};
  cfg.spectra_per_dim = 100;
  cfg.targets = {0.8};
  cfg.oversamples = {4};
  cfg.measure_proposals = 6400;
  cfg.seed = 30303;
  const auto rec = lab::experiment_kappa_inference(cfg);
  c.check(rec.trial_errors.empty(),
          fmt("%.0f of 100 trials completed", 100.0 - double(rec.trial_errors.size())));
  const double r2 = rec.summary.at("r2_known_n256");
  c.check(r2 >= 0.95, fmt("R^2 (known sigma1) = %.4f (floor 0.95)", r2));
  const double bias = rec.summary.at("plugin_mean_bias_n256");
  c.check(bias > 0.0, fmt("plug-in mean bias = %.3f (must overestimate)", bias));
}

void criterion4_inverse_wishart() {
  Criterion c(4, "inverse-Wishart kappa matches the asymptotic formula");
  const auto ks = randmat::inverse_wishart_kappa_samples(64, 256, 200, 40404);
  const double mean = mean_of(ks);
  const double want = randmat::asymptotic_kappa(64, 4.0);
  c.check(std::abs(mean / want - 1.0) <= 0.05,
          fmt("mean kappa %.4f vs asymptotic %.4f (tolerance 5%%)", mean, want));
  for (double omega : {2.0, 4.0, 16.0}) {
    const double a = randmat::mp_edge_lower(omega), b = randmat::mp_edge_upper(omega);
    const double mass = testsupport::quad_endpoint_sqrt(
        [&](double x) { return randmat::mp_density(x, omega); }, a, b, 1e-10);
    const double second = testsupport::quad_endpoint_sqrt(
        [&](double x) { return x * x * randmat::mp_density(x, omega); }, a, b, 1e-10);
    c.check(std::abs(mass - 1.0) < 1e-6, fmt("omega %.0f: density mass %.8f", omega, mass));
    c.check(std::abs(second - (1.0 + 1.0 / omega)) < 1e-6,
            fmt("omega %.0f: second moment %.8f vs %.8f", omega, second, 1.0 + 1.0 / omega));
  }
}

void criterion5_preconditioned_law() {
  Criterion c(5, "sample-covariance preconditioning follows the inverse-Wishart law");
  Rng rng(50505);
  const auto c_true = testsupport::random_spd(16, rng);
  const auto [set_a, set_b] = randmat::preconditioned_kappa_law_check(c_true, 128, 200, 50506);
  const double mean_a = mean_of(set_a);
  const double mean_b = mean_of(set_b);
  c.check(std::abs(mean_a / mean_b - 1.0) <= 0.05,
          fmt("preconditioned mean %.4f vs inverse-Wishart mean %.4f (tolerance 5%%)", mean_a, mean_b));
}

void criterion6_burn_in_planner() {
  Criterion c(6, "burn-in planner reproduces the worked guideline");
  const int n = 50;
  const auto plan = randmat::burn_in_plan(10.0 * std::pow(n, 0.25), n, 2000.0);
  c.check(plan.omega_star >= 3.5 && plan.omega_star <= 4.5,
          fmt("recommended S/N = %.3f (window [3.5, 4.5])", plan.omega_star));
  c.check(plan.speedup >= 2.8 && plan.speedup <= 3.5,
          fmt("predicted speedup = %.3f (window [2.8, 3.5])", plan.speedup));
}

void criterion7_block_closed_forms() {
  Criterion c(7, "correlated-block kappas: closed forms vs brute force");
  Rng rng(70707);
  double worst = 0.0;
  bool ordered = true;
  for (int t = 0; t < 1000; ++t) {
    const int nb = 1 + int(rng.uniform() * 7);
    precond::BlockModel model;
    for (int b = 0; b < nb; ++b) model.rhos.push_back(0.02 + 0.96 * rng.uniform());
    const auto k = precond::block_kappas(model);
    const auto cov = precond::block_covariance(model);
    auto brute = [&](auto dfun) {
      std::vector<double> d;
      for (double r : model.rhos) {
        const double v = dfun(r);
        d.push_back(v);
        d.push_back(v);
      }
      return spectra::kappa_spd(
          precond::precondition_covariance(cov, precond::PreconditionerSpec::diagonal(d)));
    };
    worst = std::max(worst, testsupport::rel_err(k.fwd, brute([](double) { return 1.0; })));
    worst = std::max(worst, testsupport::rel_err(k.rev, brute([](double r) { return std::sqrt(1.0 - r * r); })));
    worst = std::max(worst, testsupport::rel_err(k.opt, brute([](double r) { return std::sqrt(1.0 + r); })));
    ordered = ordered && k.opt <= k.fwd + 1e-12 && k.fwd <= k.rev + 1e-12;
  }
  c.check(worst < 1e-9, fmt("worst closed-form vs brute-force relative error %.2e (bound 1e-9)", worst));
  c.check(ordered, "ordering kappa_opt <= kappa_fwd <= kappa_rev holds on every trial");
}

void criterion8_table1_winners() {
  Criterion c(8, "preconditioner winners per random-matrix ensemble");
  lab::Table1Config cfg;
  cfg.dim = 100;
  cfg.trials = 200;
  cfg.seed = 80808;
  const auto rec = lab::experiment_table1(cfg);
  const std::vector<std::pair<std::string, std::string>> expected = {
      {"wishart", "fwd"}, {"inv_wishart", "fwd"}, {"rs5", "fwd"}, {"rs10", "rev"}, {"rs20", "nothing"}};
  for (const auto& [ens, want] : expected) {
    const double wn = rec.summary.at("win_nothing_" + ens);
    const double wf = rec.summary.at("win_fwd_" + ens);
    const double wr = rec.summary.at("win_rev_" + ens);
    std::string winner = "nothing";
    if (wf > wn && wf >= wr) winner = "fwd";
    else if (wr > wn && wr > wf) winner = "rev";
    c.check(winner == want, fmt(("ensemble " + ens + ": nothing/fwd/rev = %.0f%%/%.0f%%/%.0f%% -> " +
                                 winner + " (want " + want + ")").c_str(),
                                wn, wf, wr));
  }
}

void criterion9_lowrank_training() {
  Criterion c(9, "low-rank updates fix few-large-scale targets and not broad ones");
  precond::TrainOptions opt;
  {
    const auto target = precond::circulant_covariance(128, 10, 1.0, 8.0, 6.0);
    const double before = spectra::kappa_spd(target);
    const auto trained = precond::train_diag_lowrank(target, 20, opt, 90909);
    const double after = spectra::kappa_spd(precond::precondition_covariance(target, trained.spec));
    c.check(before / after >= 2.0,
            fmt("10 large scales, rank 20: kappa %.2f -> %.2f (reduction %.2fx, need >= 2x)", before,
                after, before / after));
    c.check(trained.final_objective <= trained.initial_objective, "objective decreased");
  }
  {
    const auto target = precond::circulant_covariance(128, 40, 1.0, 8.0, 6.0);
    const double before = spectra::kappa_spd(target);
    const auto trained = precond::train_diag_lowrank(target, 20, opt, 90910);
    const double after = spectra::kappa_spd(precond::precondition_covariance(target, trained.spec));
    c.check(before / after < 1.3,
            fmt("40 large scales, rank 20: kappa %.2f -> %.2f (reduction %.2fx, need < 1.3x)", before,
                after, before / after));
  }
}

void criterion10_oracle_equivalences() {
  Criterion c(10, "oracle equivalences across independent routes");
  Rng rng(1010101);

  // Leapfrog trajectories vs closed-form mode dynamics, 1000 cases at 1e-8.
  double worst_traj = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double sigma = rng.uniform(0.3, 3.0);
    const double h = rng.uniform(0.02, 1.8) * sigma;
    const long long ell = 1 + (long long)(rng.uniform() * 10000);
    const double x0 = sigma * rng.normal();
    const double xi0 = rng.normal();
    const double inv = 1.0 / (sigma * sigma);
    integrator::PhasePoint p{{x0}, {xi0}};
    const auto end = integrator::leapfrog_trajectory(p, h, ell, [inv](const std::vector<double>& x) {
      return std::vector<double>{-x[0] * inv};
    });
    const auto [x1, xi1] = integrator::mode_propagate(sigma, h, ell, x0, xi0);
    worst_traj = std::max({worst_traj, std::abs(end.x[0] - x1), std::abs(end.xi[0] - xi1)});
  }
  c.check(worst_traj < 1e-8, fmt("leapfrog vs closed form, worst deviation %.2e (bound 1e-8)", worst_traj));

  // Energy-error formula vs Hamiltonian difference at 1e-10.
  double worst_delta = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double sigma = rng.uniform(0.2, 4.0);
    const double h = rng.uniform(0.05, 1.9) * sigma;
    const long long ell = 1 + (long long)(rng.uniform() * 1000);
    const double x0 = sigma * rng.normal();
    const double xi0 = rng.normal();
    const auto [x1, xi1] = integrator::mode_propagate(sigma, h, ell, x0, xi0);
    const double dh = 0.5 * (x1 * x1 - x0 * x0) / (sigma * sigma) + 0.5 * (xi1 * xi1 - xi0 * xi0);
    worst_delta = std::max(worst_delta,
                           std::abs(integrator::mode_energy_error(sigma, h, ell, x0, xi0) - dh));
  }
  c.check(worst_delta < 1e-10, fmt("energy-error formula, worst deviation %.2e (bound 1e-10)", worst_delta));

  // kappa invariance under orthogonal conjugation at 1e-9.
  double worst_kappa = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = 4 + int(rng.uniform() * 29);
    const auto cov = testsupport::random_spd(n, rng);
    const Matrix u = precond::haar_orthogonal(n, rng);
    Matrix rot = kernels::matmul(kernels::matmul(u, cov.matrix()), transpose(u));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) rot(i, j) = rot(j, i) = 0.5 * (rot(i, j) + rot(j, i));
    worst_kappa = std::max(worst_kappa,
                           testsupport::rel_err(spectra::kappa_spd(SpdMatrix(rot)), spectra::kappa_spd(cov)));
  }
  c.check(worst_kappa < 1e-9, fmt("kappa under rotation, worst relative error %.2e (bound 1e-9)", worst_kappa));

  // Training gradient vs central finite differences at 1e-5 relative.
  double worst_grad = 0.0;
  for (int t = 0; t < 3; ++t) {
    const int n = 6, k = 2;
    const auto cov = testsupport::random_spd(n, rng);
    std::vector<double> log_d(n);
    for (double& v : log_d) v = rng.uniform(-0.4, 0.4);
    Matrix u(n, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) u(i, j) = 0.4 * rng.normal();
    std::vector<double> gd;
    Matrix gu;
    precond::lowrank_gradient(cov, log_d, u, gd, gu);
    const double eps = 1e-6;
    for (int i = 0; i < n; ++i) {
      auto hi = log_d, lo = log_d;
      hi[i] += eps;
      lo[i] -= eps;
      const double fd =
          (precond::lowrank_objective(cov, hi, u) - precond::lowrank_objective(cov, lo, u)) / (2 * eps);
      worst_grad = std::max(worst_grad, std::abs(gd[i] - fd) / std::max(1.0, std::abs(fd)));
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) {
        Matrix hi = u, lo = u;
        hi(i, j) += eps;
        lo(i, j) -= eps;
        const double fd = (precond::lowrank_objective(cov, log_d, hi) -
                           precond::lowrank_objective(cov, log_d, lo)) /
                          (2 * eps);
        worst_grad = std::max(worst_grad, std::abs(gu(i, j) - fd) / std::max(1.0, std::abs(fd)));
      }
  }
  c.check(worst_grad < 1e-5, fmt("analytic vs finite-difference gradient, worst %.2e (bound 1e-5)", worst_grad));
}

}  // namespace

int main() {
  std::printf("acceptance gate, version %s, %d thread(s)\n", kVersion, kernels::max_threads());
  criterion1_acceptance_targeting();
  criterion2_energy_error_limit();
  criterion3_kappa_inference();
  criterion4_inverse_wishart();
  criterion5_preconditioned_law();
  criterion6_burn_in_planner();
  criterion7_block_closed_forms();
  criterion8_table1_winners();
  criterion9_lowrank_training();
  criterion10_oracle_equivalences();
  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "OK" : "GATE FAILED", failures);
  return failures;
}
