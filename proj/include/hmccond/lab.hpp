#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "hmccond/integrator.hpp"
#include "hmccond/precond.hpp"
#include "hmccond/sampler.hpp"
#include "hmccond/spectra.hpp"

namespace hmccond::lab {

// 1 - SS_res / SS_tot.  Throws ZeroVariance when y_true is constant.
double r_squared(const std::vector<double>& y_true, const std::vector<double>& y_pred);

// R^2 of the best-fit line of pred on true (the squared correlation).
double r_squared_best_fit(const std::vector<double>& y_true, const std::vector<double>& y_pred);

using Cell = std::variant<double, long long, std::string>;

// Tabular experiment output: one header, rows of cells, plus free-form
// summary scalars.  Floats print with 17 significant digits so CSV output
// round-trips losslessly.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct ExperimentRecord {
  std::string id;
  Table table;
  std::map<std::string, double> summary;
  std::vector<std::string> trial_errors;  // per-trial failures, batch keeps going
  std::uint64_t seed = 0;
  std::string config_json;
};

std::string format_cell(const Cell& c);
void write_csv(const Table& t, const std::string& path);

// Sidecar run manifest: config echo, seed, version, and the only timestamp
// in any output file.
void write_manifest(const ExperimentRecord& rec, const std::string& path);

// Spectra serialize as a JSON array of descending positive floats.
std::string spectrum_to_json(const spectra::Spectrum& s);
spectra::Spectrum spectrum_from_json(const std::string& text);

// Energy-error stream with columns (proposal_index, delta, accepted).
void write_delta_csv(const sampler::ChainResult& r, const std::string& path);

// ChainResult as JSON: arrays of floats plus seed/RNG metadata.
std::string chain_result_to_json(const sampler::ChainResult& r, bool include_samples = true);

// Preconditioner specs as JSON: the kind plus dense factors as nested arrays.
std::string preconditioner_to_json(const precond::PreconditionerSpec& f);
precond::PreconditionerSpec preconditioner_from_json(const std::string& text);

// Stable 64-bit hash of a config string, recorded with every experiment.
std::uint64_t config_hash(const std::string& config_json);

struct KappaInferenceConfig {
  std::vector<int> dims{32, 64, 128, 256};
  int spectra_per_dim = 25;
  std::vector<double> targets{0.8};     // tuned acceptance targets, cycled per trial
  std::vector<int> oversamples{4};      // S / N for the plug-in estimator, cycled per trial
  long long measure_proposals = 6000;
  integrator::IntegrationTimeLaw law{};
  std::uint64_t seed = 1;
  // Generator grid; trials cycle through the cartesian product.
  std::vector<double> maxvals{5.0, 20.0};
  std::vector<double> cutoffs{0.25, 0.75};
  std::vector<double> powers{2.0, 6.0};
};

// For each generated spectrum: tune h to the target acceptance, run a chain,
// and record the plug-in kappa, the inferred kappa with estimated sigma1,
// and the inferred kappa with known sigma1.  Summary holds R^2 per estimator
// (raw and log scale) per dimension.
ExperimentRecord experiment_kappa_inference(const KappaInferenceConfig& cfg);

struct Table1Config {
  int dim = 100;
  int trials = 200;
  std::uint64_t seed = 1;
};

// Win percentages of {nothing, fwd KL, rev KL} per random-matrix ensemble.
ExperimentRecord experiment_table1(const Table1Config& cfg);

}  // namespace hmccond::lab
