#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hmccond/matrix.hpp"

namespace hmccond::kernels {

// Execution policy for the data-parallel kernels.  Every kernel computes each
// output entry with a fixed serial inner loop, so serial and parallel runs
// produce bitwise-identical results for any thread count.
enum class Exec { serial, parallel, automatic };

int max_threads();

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b, Exec exec = Exec::automatic);

// C = scale * X^T X, with the S x N matrix X holding one sample per row.
Matrix syrk_scaled(const Matrix& x, double scale, Exec exec = Exec::automatic);

// Per-mode closed-form leapfrog state for a diagonal Gaussian target.
// q[n] = (h / 2 sigma_n)^2; all arrays have length n_modes.
struct ModeTables {
  std::vector<double> sigma;
  std::vector<double> theta;
  std::vector<double> inv_gamma;
  std::vector<double> gamma;
  std::vector<double> chi;
  std::vector<double> sqrt_chi;
  std::vector<double> q;
  int n_modes = 0;
};

// Builds the tables; requires h < 2 min(sigma).
ModeTables make_mode_tables(const std::vector<double>& sigmas, double h);

// Advances every mode ell steps from (x, xi), writing the proposed state and
// the per-mode energy error.  delta_out is a plain buffer; callers sum it
// serially so results do not depend on the thread count.
void mode_sweep(const ModeTables& t, long long ell, const double* x, const double* xi,
                double* x_out, double* xi_out, double* delta_out, Exec exec = Exec::automatic);

// Runs fn(i) for i in [0, n).  Each index must derive its own RNG state and
// write only to index-addressed slots; results are then deterministic
// regardless of scheduling.
void parallel_trials(int n, const std::function<void(int)>& fn, Exec exec = Exec::automatic);

}  // namespace hmccond::kernels
