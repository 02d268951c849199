#include "hmccond/lab.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "hmccond/common.hpp"
#include "hmccond/kernels.hpp"
#include "hmccond/precond.hpp"
#include "hmccond/sampler.hpp"

namespace hmccond::lab {

using nlohmann::json;

double r_squared(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() < 2)
    throw InvalidConfig("r_squared: need matching lengths >= 2");
  double mean = 0.0;
  for (double v : y_true) mean += v;
  mean /= static_cast<double>(y_true.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
  }
  if (ss_tot == 0.0) throw ZeroVariance("r_squared: y_true has zero variance");
  return 1.0 - ss_res / ss_tot;
}

double r_squared_best_fit(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() < 2)
    throw InvalidConfig("r_squared_best_fit: need matching lengths >= 2");
  const std::size_t n = y_true.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += y_true[i];
    my += y_pred[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (y_true[i] - mx) * (y_true[i] - mx);
    syy += (y_pred[i] - my) * (y_pred[i] - my);
    sxy += (y_true[i] - mx) * (y_pred[i] - my);
  }
  if (sxx == 0.0) throw ZeroVariance("r_squared_best_fit: y_true has zero variance");
  if (syy == 0.0) return 0.0;
  return (sxy * sxy) / (sxx * syy);
}

std::string format_cell(const Cell& c) {
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  if (std::holds_alternative<long long>(c)) return std::to_string(std::get<long long>(c));
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(c));
  return buf;
}

void write_csv(const Table& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidConfig("write_csv: cannot open " + path);
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out << ',';
    out << t.columns[i];
  }
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_cell(row[i]);
    }
    out << '\n';
  }
}

std::uint64_t config_hash(const std::string& config_json) {
  // FNV-1a over the serialized config.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : config_json) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

void write_manifest(const ExperimentRecord& rec, const std::string& path) {
  json m;
  m["experiment"] = rec.id;
  m["version"] = kVersion;
  m["seed"] = rec.seed;
  m["rng"] = Rng::name();
  m["config"] = rec.config_json.empty() ? json::object() : json::parse(rec.config_json);
  m["config_hash"] = config_hash(rec.config_json);
  json summary = json::object();
  for (const auto& [k, v] : rec.summary) summary[k] = v;
  m["summary"] = summary;
  m["trial_errors"] = rec.trial_errors;
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  m["timestamp_unix_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
  std::ofstream out(path);
  if (!out) throw InvalidConfig("write_manifest: cannot open " + path);
  out << m.dump(2) << '\n';
}

std::string spectrum_to_json(const spectra::Spectrum& s) {
  json arr = json::array();
  for (double v : s.sigmas()) arr.push_back(v);
  return arr.dump();
}

spectra::Spectrum spectrum_from_json(const std::string& text) {
  const json arr = json::parse(text);
  if (!arr.is_array()) throw InvalidConfig("spectrum_from_json: expected a JSON array");
  std::vector<double> sig;
  for (const auto& v : arr) sig.push_back(v.get<double>());
  return spectra::Spectrum(std::move(sig));
}

void write_delta_csv(const sampler::ChainResult& r, const std::string& path) {
  Table t;
  t.columns = {"proposal_index", "delta", "accepted"};
  for (std::size_t i = 0; i < r.delta_samples.size(); ++i) {
    const long long flag = i < r.accept_flags.size() ? r.accept_flags[i] : 0;
    t.rows.push_back({static_cast<long long>(i), r.delta_samples[i], flag});
  }
  write_csv(t, path);
}

std::string chain_result_to_json(const sampler::ChainResult& r, bool include_samples) {
  json j;
  j["accept_rate"] = r.accept_rate;
  j["seed"] = r.seed;
  j["rng"] = r.rng_name;
  j["leapfrog_steps_total"] = r.leapfrog_steps_total;
  j["delta_samples"] = r.delta_samples;
  j["accept_flags"] = r.accept_flags;
  if (include_samples) j["samples"] = r.samples;
  return j.dump();
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows ? static_cast<int>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

}  // namespace

std::string preconditioner_to_json(const precond::PreconditionerSpec& f) {
  json j;
  j["kind"] = f.kind_name();
  j["dim"] = f.dim();
  switch (f.kind()) {
    case precond::PreconditionerSpec::Kind::identity:
      break;
    case precond::PreconditionerSpec::Kind::diagonal:
      j["diag"] = f.diag();
      break;
    case precond::PreconditionerSpec::Kind::cholesky:
      j["factor"] = matrix_to_json(f.factor());
      break;
    case precond::PreconditionerSpec::Kind::diag_plus_lowrank:
      j["diag"] = f.diag();
      j["u"] = matrix_to_json(f.lowrank());
      break;
  }
  return j.dump();
}

precond::PreconditionerSpec preconditioner_from_json(const std::string& text) {
  const json j = json::parse(text);
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return precond::PreconditionerSpec::identity(j.at("dim").get<int>());
  if (kind == "diagonal")
    return precond::PreconditionerSpec::diagonal(j.at("diag").get<std::vector<double>>());
  if (kind == "cholesky")
    return precond::PreconditionerSpec::cholesky(matrix_from_json(j.at("factor")));
  if (kind == "diag_plus_lowrank")
    return precond::PreconditionerSpec::diag_plus_lowrank(j.at("diag").get<std::vector<double>>(),
                                                          matrix_from_json(j.at("u")));
  throw InvalidConfig("preconditioner_from_json: unknown kind " + kind);
}

namespace {

struct InferenceRow {
  int dim = 0;
  int trial = 0;
  double maxval = 0, cutoff = 0, power = 0;
  double target = 0.8;
  int oversample = 4;
  double true_kappa = 0;
  double h = 0;
  double accept = 0;
  double kappa_known = 0;
  double kappa_est = 0;
  double kappa_plugin = 0;
  bool failed = false;
  std::string error;
};

}  // namespace

ExperimentRecord experiment_kappa_inference(const KappaInferenceConfig& cfg) {
  if (cfg.spectra_per_dim < 1) throw InvalidConfig("experiment_kappa_inference: need trials >= 1");
  if (cfg.targets.empty() || cfg.oversamples.empty())
    throw InvalidConfig("experiment_kappa_inference: need at least one target and oversampling ratio");
  ExperimentRecord rec;
  rec.id = "kappa_inference";
  rec.seed = cfg.seed;
  {
    json c;
    c["dims"] = cfg.dims;
    c["spectra_per_dim"] = cfg.spectra_per_dim;
    c["targets"] = cfg.targets;
    c["oversamples"] = cfg.oversamples;
    c["measure_proposals"] = cfg.measure_proposals;
    c["law"] = {{"lo", cfg.law.lo}, {"hi", cfg.law.hi}};
    c["maxvals"] = cfg.maxvals;
    c["cutoffs"] = cfg.cutoffs;
    c["powers"] = cfg.powers;
    rec.config_json = c.dump();
  }

  const int grid = static_cast<int>(cfg.maxvals.size() * cfg.cutoffs.size() * cfg.powers.size());
  std::vector<InferenceRow> rows;
  for (std::size_t di = 0; di < cfg.dims.size(); ++di) {
    for (int t = 0; t < cfg.spectra_per_dim; ++t) {
      InferenceRow r;
      r.dim = cfg.dims[di];
      r.trial = t;
      const int g = t % grid;
      r.maxval = cfg.maxvals[g % cfg.maxvals.size()];
      r.cutoff = cfg.cutoffs[(g / cfg.maxvals.size()) % cfg.cutoffs.size()];
      r.power = cfg.powers[(g / (cfg.maxvals.size() * cfg.cutoffs.size())) % cfg.powers.size()];
      r.target = cfg.targets[t % cfg.targets.size()];
      r.oversample = cfg.oversamples[t % cfg.oversamples.size()];
      rows.push_back(r);
    }
  }

  kernels::parallel_trials(static_cast<int>(rows.size()), [&](int i) {
    InferenceRow& r = rows[i];
    try {
      const std::uint64_t trial_seed = child_seed(cfg.seed, i);
      Rng rng(trial_seed);
      const spectra::GeneratorParams params{1.0, r.maxval, r.cutoff, r.power};
      const spectra::Spectrum spec =
          spectra::generate_spectrum(spectra::random_points(r.dim, rng), params);
      r.true_kappa = spectra::kappa(spec);

      const auto model = spectra::CovarianceModel::diagonal(spec);
      const auto tune = sampler::tune_step_size(model, r.target, cfg.law, {}, child_seed(trial_seed, 1));
      r.h = tune.h;

      sampler::ChainOptions opt;
      const long long want = static_cast<long long>(r.oversample) * r.dim;
      opt.store_every = std::max<long long>(1, cfg.measure_proposals / want);
      auto chain = sampler::run_chain_exact_gaussian(spec, r.h, cfg.law, cfg.measure_proposals,
                                                     child_seed(trial_seed, 2), opt);
      r.accept = chain.accept_rate;
      r.kappa_known = sampler::infer_kappa(spec.sigma1(), r.h, chain.accept_rate);

      // Keep the most recent `want` stored states for the covariance plug-in.
      auto& kept = chain.samples;
      if (static_cast<long long>(kept.size()) > want)
        kept.erase(kept.begin(), kept.end() - want);
      const auto c_hat = sampler::sample_covariance(kept);
      const double sigma1_hat = std::sqrt(c_hat.max_eigenvalue());
      r.kappa_est = sampler::infer_kappa(sigma1_hat, r.h, chain.accept_rate);
      r.kappa_plugin = spectra::kappa_spd(c_hat);
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
    }
  });

  rec.table.columns = {"dim",    "trial",      "maxval",      "cutoff",    "power",
                       "target", "oversample", "true_kappa",  "h",         "accept",
                       "kappa_known", "kappa_est", "kappa_plugin", "error"};
  for (const auto& r : rows) {
    rec.table.rows.push_back({static_cast<long long>(r.dim), static_cast<long long>(r.trial), r.maxval,
                              r.cutoff, r.power, r.target, static_cast<long long>(r.oversample),
                              r.true_kappa, r.h, r.accept, r.kappa_known, r.kappa_est,
                              r.kappa_plugin, r.error});
    if (r.failed) rec.trial_errors.push_back("dim=" + std::to_string(r.dim) + " trial=" +
                                             std::to_string(r.trial) + ": " + r.error);
  }

  for (int dim : cfg.dims) {
    std::vector<double> truth, known, est, plugin;
    for (const auto& r : rows) {
      if (r.dim != dim || r.failed) continue;
      truth.push_back(r.true_kappa);
      known.push_back(r.kappa_known);
      est.push_back(r.kappa_est);
      plugin.push_back(r.kappa_plugin);
    }
    if (truth.size() < 2) continue;
    const std::string tag = "n" + std::to_string(dim);
    rec.summary["r2_known_" + tag] = r_squared(truth, known);
    rec.summary["r2_est_" + tag] = r_squared(truth, est);
    rec.summary["r2_plugin_" + tag] = r_squared(truth, plugin);
    auto log_of = [](std::vector<double> v) {
      for (double& x : v) x = std::log(x);
      return v;
    };
    rec.summary["r2_log_known_" + tag] = r_squared(log_of(truth), log_of(known));
    rec.summary["r2_line_known_" + tag] = r_squared_best_fit(truth, known);
    double bias = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) bias += plugin[i] - truth[i];
    rec.summary["plugin_mean_bias_" + tag] = bias / static_cast<double>(truth.size());
  }
  return rec;
}

ExperimentRecord experiment_table1(const Table1Config& cfg) {
  if (cfg.trials < 1) throw InvalidConfig("experiment_table1: need trials >= 1");
  ExperimentRecord rec;
  rec.id = "table1";
  rec.seed = cfg.seed;
  {
    json c;
    c["dim"] = cfg.dim;
    c["trials"] = cfg.trials;
    rec.config_json = c.dump();
  }

  struct Ensemble {
    std::string name;
    precond::EnsembleKind kind;
    int pct;
  };
  const std::vector<Ensemble> ensembles = {
      {"wishart", precond::EnsembleKind::wishart, 0},
      {"inv_wishart", precond::EnsembleKind::inv_wishart, 0},
      {"rs5", precond::EnsembleKind::rotated_scale, 5},
      {"rs10", precond::EnsembleKind::rotated_scale, 10},
      {"rs20", precond::EnsembleKind::rotated_scale, 20},
  };

  rec.table.columns = {"trial", "kind", "kappa_nothing", "kappa_fwd", "kappa_rev", "winner"};
  for (std::size_t e = 0; e < ensembles.size(); ++e) {
    const auto& ens = ensembles[e];
    std::vector<precond::CompareResult> results(cfg.trials);
    std::vector<std::string> errors(cfg.trials);
    kernels::parallel_trials(cfg.trials, [&](int t) {
      try {
        const std::uint64_t s = child_seed(cfg.seed, e * 1000003ull + t);
        const auto c = precond::ensemble_covariance(ens.kind, cfg.dim, s, ens.pct);
        results[t] = precond::compare_preconditioners(c);
      } catch (const std::exception& ex) {
        errors[t] = ex.what();
      }
    });
    int wins_nothing = 0, wins_fwd = 0, wins_rev = 0, failed = 0;
    for (int t = 0; t < cfg.trials; ++t) {
      if (!errors[t].empty()) {
        ++failed;
        rec.trial_errors.push_back(ens.name + " trial " + std::to_string(t) + ": " + errors[t]);
        continue;
      }
      const auto& r = results[t];
      rec.table.rows.push_back({static_cast<long long>(t), ens.name, r.kappa_nothing, r.kappa_fwd,
                                r.kappa_rev, r.winner});
      if (r.winner == "nothing") ++wins_nothing;
      else if (r.winner == "fwd_kl") ++wins_fwd;
      else ++wins_rev;
    }
    const double denom = std::max(1, cfg.trials - failed);
    rec.summary["win_nothing_" + ens.name] = 100.0 * wins_nothing / denom;
    rec.summary["win_fwd_" + ens.name] = 100.0 * wins_fwd / denom;
    rec.summary["win_rev_" + ens.name] = 100.0 * wins_rev / denom;
  }
  return rec;
}

}  // namespace hmccond::lab
