// Command-line front end: condition numbers, spectrum generation, HMC runs,
// kappa inference, random-matrix studies, burn-in planning, preconditioner
// comparisons, and low-rank preconditioner training.  Every run writes CSV
// results plus a JSON manifest carrying the config and seed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hmccond/common.hpp"
#include "hmccond/lab.hpp"
#include "hmccond/precond.hpp"
#include "hmccond/randmat.hpp"
#include "hmccond/sampler.hpp"
#include "hmccond/spectra.hpp"
#include "hmccond/stats.hpp"

namespace {

using nlohmann::json;
using namespace hmccond;

std::string output_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("HMCCOND_OUTDIR")) return env;
  return ".";
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

spectra::Spectrum load_spectrum(const std::string& sigmas_csv, const std::string& file,
                                int flat_n) {
  if (!sigmas_csv.empty()) return spectra::Spectrum(parse_doubles(sigmas_csv));
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw InvalidConfig("cannot open spectrum file " + file);
    std::stringstream buf;
    buf << in.rdbuf();
    return lab::spectrum_from_json(buf.str());
  }
  if (flat_n > 0) return spectra::Spectrum::flat(flat_n);
  throw InvalidConfig("no spectrum given: use --sigmas, --spectrum-file, or --flat");
}

void emit_manifest(const std::string& id, std::uint64_t seed, const json& config,
                   const std::string& dir) {
  lab::ExperimentRecord rec;
  rec.id = id;
  rec.seed = seed;
  rec.config_json = config.dump();
  lab::write_manifest(rec, join_path(dir, id + "_manifest.json"));
}

int cmd_kappa(const std::string& sigmas_csv, const std::string& file, int flat_n,
              const std::string& matrix_file) {
  if (!matrix_file.empty()) {
    std::ifstream in(matrix_file);
    if (!in) throw InvalidConfig("cannot open matrix file " + matrix_file);
    json j = json::parse(in);
    const int n = static_cast<int>(j.size());
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) m(i, k) = j[i][k].get<double>();
    const spectra::SpdMatrix c{std::move(m)};
    std::cout << "kappa=" << lab::format_cell(spectra::kappa_spd(c)) << "\n";
    std::cout << "nu=" << lab::format_cell(spectra::nu(spectra::spectrum_of(c))) << "\n";
    return 0;
  }
  const auto s = load_spectrum(sigmas_csv, file, flat_n);
  std::cout << "kappa=" << lab::format_cell(spectra::kappa(s)) << "\n";
  std::cout << "nu=" << lab::format_cell(spectra::nu(s)) << "\n";
  std::cout << "decay_ratio=" << lab::format_cell(spectra::decay_assumption_ratio(s)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Condition numbers and preconditioning for Gaussian HMC"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::string outdir_flag;
  app.add_option("-o,--outdir", outdir_flag, "output directory (default $HMCCOND_OUTDIR or .)");

  // kappa
  auto* kappa_cmd = app.add_subcommand("kappa", "condition number of a spectrum or SPD matrix");
  kappa_cmd->require_subcommand(0, 1);
  std::string sigmas_csv, spectrum_file, matrix_file;
  int flat_n = 0;
  kappa_cmd->add_option("--sigmas", sigmas_csv, "comma-separated scale lengths");
  kappa_cmd->add_option("--spectrum-file", spectrum_file, "JSON array of scale lengths");
  kappa_cmd->add_option("--matrix-file", matrix_file, "JSON nested array, SPD");
  kappa_cmd->add_option("--flat", flat_n, "flat spectrum of this dimension");

  // spectrum gen
  auto* spec_cmd = app.add_subcommand("spectrum", "spectrum utilities");
  auto* spec_gen = spec_cmd->add_subcommand("gen", "draw a random spectrum from the generator");
  int gen_n = 64;
  double gen_m = 1.0, gen_M = 5.0, gen_c = 0.25, gen_beta = 2.0;
  std::uint64_t gen_seed = 1;
  bool gen_grid = false;
  spec_gen->add_option("--n", gen_n, "spectrum size");
  spec_gen->add_option("--minval", gen_m, "smallest scale m");
  spec_gen->add_option("--maxval", gen_M, "largest scale M");
  spec_gen->add_option("--cutoff", gen_c, "profile cutoff c");
  spec_gen->add_option("--power", gen_beta, "profile power beta");
  spec_gen->add_option("--seed", gen_seed, "seed for the point set");
  spec_gen->add_flag("--grid-points", gen_grid, "use the uniform i/n grid instead of random points");

  // hmc run
  auto* hmc_cmd = app.add_subcommand("hmc", "HMC chains on Gaussian targets");
  auto* hmc_run = hmc_cmd->add_subcommand("run", "run a chain and record energy errors");
  std::string hmc_sigmas, hmc_file;
  int hmc_flat = 0;
  double hmc_h = 0.0, hmc_target = 0.8, law_lo = 0.5, law_hi = 1.5;
  long long hmc_n = 10000;
  std::uint64_t hmc_seed = 1;
  bool hmc_leapfrog = false;
  hmc_run->add_option("--sigmas", hmc_sigmas, "comma-separated scale lengths");
  hmc_run->add_option("--spectrum-file", hmc_file, "JSON array of scale lengths");
  hmc_run->add_option("--flat", hmc_flat, "flat spectrum of this dimension");
  hmc_run->add_option("--step-size", hmc_h, "step size (0 = tune to --target-accept)");
  hmc_run->add_option("--target-accept", hmc_target, "acceptance target used when tuning");
  hmc_run->add_option("--proposals", hmc_n, "number of proposals");
  hmc_run->add_option("--seed", hmc_seed, "chain seed");
  hmc_run->add_option("--law-lo", law_lo, "integration-time law lower endpoint");
  hmc_run->add_option("--law-hi", law_hi, "integration-time law upper endpoint");
  hmc_run->add_flag("--leapfrog", hmc_leapfrog, "integrate with explicit leapfrog instead of the closed form");

  // kappa infer
  auto* infer_cmd = kappa_cmd->add_subcommand("infer", "kappa estimation study over random spectra");
  lab::KappaInferenceConfig infer_cfg;
  std::string infer_dims = "32,64,128,256";
  infer_cmd->add_option("--dims", infer_dims, "comma-separated dimensions");
  infer_cmd->add_option("--spectra-per-dim", infer_cfg.spectra_per_dim, "spectra per dimension");
  std::string infer_targets = "0.8", infer_oversamples = "4";
  infer_cmd->add_option("--targets", infer_targets, "tuned acceptance targets, cycled per trial");
  infer_cmd->add_option("--oversamples", infer_oversamples, "plug-in samples per dimension, cycled per trial");
  infer_cmd->add_option("--proposals", infer_cfg.measure_proposals, "measurement proposals per spectrum");
  infer_cmd->add_option("--seed", infer_cfg.seed, "experiment seed");
  bool infer_full = false;
  infer_cmd->add_flag("--full-grid", infer_full, "use the full published grid sizes (slow)");

  // wishart kappa
  auto* wish_parent = app.add_subcommand("wishart", "random-matrix ensembles");
  auto* wish_cmd = wish_parent->add_subcommand("kappa", "kappa draws for inverse-Wishart matrices");
  int wish_n = 64, wish_s = 256, wish_draws = 200;
  std::uint64_t wish_seed = 1;
  wish_cmd->add_option("--dim", wish_n, "dimension N");
  wish_cmd->add_option("--samples", wish_s, "sample count S");
  wish_cmd->add_option("--draws", wish_draws, "number of draws");
  wish_cmd->add_option("--seed", wish_seed, "seed");

  // burnin plan
  auto* burn_parent = app.add_subcommand("burnin", "sample-covariance burn-in planning");
  auto* burn_cmd = burn_parent->add_subcommand("plan", "optimal burn-in size for sample-covariance preconditioning");
  double burn_kappa0 = 0.0, burn_kappa0_ratio = 0.0, burn_final = 0.0, burn_final_ratio = 0.0;
  int burn_dim = 0;
  burn_cmd->add_option("--dim", burn_dim, "dimension N")->required();
  burn_cmd->add_option("--kappa0", burn_kappa0, "initial condition number");
  burn_cmd->add_option("--kappa0-ratio", burn_kappa0_ratio, "initial kappa over N^{1/4}");
  burn_cmd->add_option("--final-samples", burn_final, "final sample goal S_f");
  burn_cmd->add_option("--final-ratio", burn_final_ratio, "final oversampling ratio S_f / N");

  // precond compare
  auto* precond_parent = app.add_subcommand("precond", "preconditioner studies");
  auto* cmp_cmd = precond_parent->add_subcommand("compare", "preconditioner winners on random ensembles");
  lab::Table1Config cmp_cfg;
  cmp_cmd->add_option("--dim", cmp_cfg.dim, "dimension");
  cmp_cmd->add_option("--trials", cmp_cfg.trials, "trials per ensemble");
  cmp_cmd->add_option("--seed", cmp_cfg.seed, "seed");

  // precond blocks
  auto* blk_cmd = precond_parent->add_subcommand("blocks", "closed-form kappas for 2x2 correlated blocks");
  std::string blk_rhos, blk_gammas;
  int blk_random = 0;
  std::uint64_t blk_seed = 1;
  blk_cmd->add_option("--rhos", blk_rhos, "comma-separated correlations in (0,1)");
  blk_cmd->add_option("--gammas", blk_gammas, "optional per-block scales");
  blk_cmd->add_option("--random-trials", blk_random, "emit this many random rho vectors instead");
  blk_cmd->add_option("--seed", blk_seed, "seed for random trials");

  // lowrank train
  auto* low_parent = app.add_subcommand("lowrank", "diagonal-plus-low-rank preconditioning");
  auto* low_cmd = low_parent->add_subcommand("train", "train a diagonal-plus-low-rank preconditioner");
  int low_n = 128, low_large = 10, low_rank = 20;
  double low_m = 1.0, low_M = 8.0, low_power = 6.0;
  std::uint64_t low_seed = 1;
  low_cmd->add_option("--dim", low_n, "dimension");
  low_cmd->add_option("--n-large", low_large, "number of large scales in the circulant target");
  low_cmd->add_option("--rank", low_rank, "rank of the low-rank update");
  low_cmd->add_option("--minval", low_m, "smallest scale");
  low_cmd->add_option("--maxval", low_M, "largest scale");
  low_cmd->add_option("--power", low_power, "profile power");
  low_cmd->add_option("--seed", low_seed, "training seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help / --version
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 2;
  }

  try {
    const std::string outdir = output_dir(outdir_flag);

    if (*kappa_cmd && !*infer_cmd) return cmd_kappa(sigmas_csv, spectrum_file, flat_n, matrix_file);

    if (*spec_gen) {
      ensure_dir(outdir);
      Rng rng(gen_seed);
      const spectra::GeneratorParams params{gen_m, gen_M, gen_c, gen_beta};
      const auto points = gen_grid ? spectra::uniform_points(gen_n) : spectra::random_points(gen_n, rng);
      const auto s = spectra::generate_spectrum(points, params);
      const std::string path = join_path(outdir, "spectrum.json");
      std::ofstream out(path);
      out << lab::spectrum_to_json(s) << "\n";
      json cfg{{"n", gen_n}, {"minval", gen_m}, {"maxval", gen_M}, {"cutoff", gen_c},
               {"power", gen_beta}, {"grid_points", gen_grid}};
      emit_manifest("spectrum_gen", gen_seed, cfg, outdir);
      std::cout << "wrote " << path << " kappa=" << lab::format_cell(spectra::kappa(s)) << "\n";
      return 0;
    }

    if (*hmc_run) {
      ensure_dir(outdir);
      const auto s = load_spectrum(hmc_sigmas, hmc_file, hmc_flat);
      const integrator::IntegrationTimeLaw law(law_lo, law_hi);
      double h = hmc_h;
      if (h <= 0.0) {
        const auto model = spectra::CovarianceModel::diagonal(s);
        h = sampler::tune_step_size(model, hmc_target, law, {}, splitmix64(hmc_seed)).h;
      }
      sampler::ChainOptions opt;
      opt.store_samples = false;
      const auto result = hmc_leapfrog
                              ? sampler::run_chain(spectra::CovarianceModel::diagonal(s), h, law,
                                                   hmc_n, hmc_seed, opt)
                              : sampler::run_chain_exact_gaussian(s, h, law, hmc_n, hmc_seed, opt);
      const std::string path = join_path(outdir, "hmc_deltas.csv");
      lab::write_delta_csv(result, path);
      json cfg{{"h", h}, {"proposals", hmc_n}, {"law_lo", law_lo}, {"law_hi", law_hi},
               {"leapfrog", hmc_leapfrog}, {"dim", s.dim()}};
      emit_manifest("hmc_run", hmc_seed, cfg, outdir);
      std::cout << "accept_rate=" << lab::format_cell(result.accept_rate)
                << " leapfrog_steps_total=" << result.leapfrog_steps_total << "\n";
      std::cout << "wrote " << path << "\n";
      return 0;
    }

    if (*infer_cmd) {
      ensure_dir(outdir);
      infer_cfg.dims.clear();
      for (double d : parse_doubles(infer_dims)) infer_cfg.dims.push_back(static_cast<int>(d));
      infer_cfg.targets = parse_doubles(infer_targets);
      infer_cfg.oversamples.clear();
      for (double d : parse_doubles(infer_oversamples)) infer_cfg.oversamples.push_back(static_cast<int>(d));
      if (infer_full) {
        infer_cfg.dims = {32, 64, 128, 256, 512};
        infer_cfg.spectra_per_dim = 120;
        infer_cfg.targets = {0.8, 0.95};
        infer_cfg.oversamples = {4, 6, 8, 12, 16, 32};
      }
      const auto rec = lab::experiment_kappa_inference(infer_cfg);
      lab::write_csv(rec.table, join_path(outdir, "kappa_inference.csv"));
      lab::write_manifest(rec, join_path(outdir, "kappa_inference_manifest.json"));
      for (const auto& [k, v] : rec.summary) std::cout << k << "=" << lab::format_cell(v) << "\n";
      return 0;
    }

    if (*wish_cmd) {
      ensure_dir(outdir);
      const auto ks = randmat::inverse_wishart_kappa_samples(wish_n, wish_s, wish_draws, wish_seed);
      lab::Table t;
      t.columns = {"trial_index", "kappa"};
      for (std::size_t i = 0; i < ks.size(); ++i)
        t.rows.push_back({static_cast<long long>(i), ks[i]});
      const std::string path = join_path(outdir, "wishart_kappa.csv");
      lab::write_csv(t, path);
      double mean = 0.0;
      for (double k : ks) mean += k;
      mean /= static_cast<double>(ks.size());
      json cfg{{"dim", wish_n}, {"samples", wish_s}, {"draws", wish_draws}};
      emit_manifest("wishart_kappa", wish_seed, cfg, outdir);
      std::cout << "mean_kappa=" << lab::format_cell(mean)
                << " asymptotic=" << lab::format_cell(randmat::asymptotic_kappa(wish_n, double(wish_s) / wish_n))
                << "\n"
                << "wrote " << path << "\n";
      return 0;
    }

    if (*burn_cmd) {
      const double n4 = std::pow(burn_dim, 0.25);
      const double kappa0 = burn_kappa0 > 0.0 ? burn_kappa0 : burn_kappa0_ratio * n4;
      const double s_final = burn_final > 0.0 ? burn_final : burn_final_ratio * burn_dim;
      const auto plan = randmat::burn_in_plan(kappa0, burn_dim, s_final);
      json out{{"kappa0", plan.kappa0},
               {"dim", plan.dim},
               {"final_samples", plan.final_samples},
               {"omega_star", plan.omega_star},
               {"s_star", plan.s_star},
               {"speedup", plan.speedup}};
      std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (*cmp_cmd) {
      ensure_dir(outdir);
      const auto rec = lab::experiment_table1(cmp_cfg);
      lab::write_csv(rec.table, join_path(outdir, "precond_compare.csv"));
      lab::write_manifest(rec, join_path(outdir, "precond_compare_manifest.json"));
      for (const auto& [k, v] : rec.summary) std::cout << k << "=" << lab::format_cell(v) << "\n";
      return 0;
    }

    if (*blk_cmd) {
      ensure_dir(outdir);
      lab::Table t;
      t.columns = {"trial", "rhos", "kappa_fwd", "kappa_rev", "kappa_opt", "kappa_nothing"};
      Rng rng(blk_seed);
      const int trials = blk_random > 0 ? blk_random : 1;
      for (int trial = 0; trial < trials; ++trial) {
        precond::BlockModel model;
        if (blk_random > 0) {
          const int nb = 2 + static_cast<int>(rng.uniform() * 7);
          for (int b = 0; b < nb; ++b) model.rhos.push_back(0.01 + 0.98 * rng.uniform());
        } else {
          model.rhos = parse_doubles(blk_rhos);
          if (!blk_gammas.empty()) model.gammas = parse_doubles(blk_gammas);
        }
        const auto k = precond::block_kappas(model);
        std::string rho_text;
        for (std::size_t i = 0; i < model.rhos.size(); ++i)
          rho_text += (i ? ";" : "") + lab::format_cell(model.rhos[i]);
        t.rows.push_back({static_cast<long long>(trial), rho_text, k.fwd, k.rev, k.opt, k.nothing});
      }
      const std::string path = join_path(outdir, "precond_blocks.csv");
      lab::write_csv(t, path);
      json cfg{{"random_trials", blk_random}};
      emit_manifest("precond_blocks", blk_seed, cfg, outdir);
      if (blk_random == 0) {
        const auto& r = t.rows.front();
        std::cout << "kappa_fwd=" << lab::format_cell(r[2]) << " kappa_rev=" << lab::format_cell(r[3])
                  << " kappa_opt=" << lab::format_cell(r[4])
                  << " kappa_nothing=" << lab::format_cell(r[5]) << "\n";
      }
      std::cout << "wrote " << path << "\n";
      return 0;
    }

    if (*low_cmd) {
      ensure_dir(outdir);
      const auto target = precond::circulant_covariance(low_n, low_large, low_m, low_M, low_power);
      const double kappa_before = spectra::kappa_spd(target);
      precond::TrainOptions opt;
      const auto trained = precond::train_diag_lowrank(target, low_rank, opt, low_seed);
      const auto pre = precond::precondition_covariance(target, trained.spec);
      const double kappa_after = spectra::kappa_spd(pre);

      lab::Table t;
      t.columns = {"index", "target_eigenvalue", "model_eigenvalue", "preconditioned_eigenvalue"};
      const auto& target_ev = target.eigen().values;
      const auto model_cov = spectra::SpdMatrix(
          kernels::matmul(trained.spec.dense(), transpose(trained.spec.dense())));
      const auto& model_ev = model_cov.eigen().values;
      const auto& pre_ev = pre.eigen().values;
      for (int i = 0; i < low_n; ++i)
        t.rows.push_back({static_cast<long long>(i), target_ev[i], model_ev[i], pre_ev[i]});
      const std::string path = join_path(outdir, "lowrank_train.csv");
      lab::write_csv(t, path);
      json cfg{{"dim", low_n},       {"n_large", low_large}, {"rank", low_rank},
               {"minval", low_m},    {"maxval", low_M},      {"power", low_power},
               {"iterations", trained.iterations}};
      emit_manifest("lowrank_train", low_seed, cfg, outdir);
      std::cout << "kappa_before=" << lab::format_cell(kappa_before)
                << " kappa_after=" << lab::format_cell(kappa_after)
                << " iterations=" << trained.iterations
                << " objective=" << lab::format_cell(trained.final_objective) << "\n";
      std::cout << "wrote " << path << "\n";
      return 0;
    }

    std::cerr << "error: no subcommand handled\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
