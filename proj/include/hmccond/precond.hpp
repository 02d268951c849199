#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hmccond/matrix.hpp"
#include "hmccond/rng.hpp"
#include "hmccond/spectra.hpp"

namespace hmccond::precond {

// Linear preconditioner F: one of identity, positive diagonal, lower
// Cholesky factor, or symmetric diagonal-plus-low-rank D + U U^T.
class PreconditionerSpec {
 public:
  enum class Kind { identity, diagonal, cholesky, diag_plus_lowrank };

  static PreconditionerSpec identity(int n);
  static PreconditionerSpec diagonal(std::vector<double> d);
  static PreconditionerSpec cholesky(Matrix l);
  static PreconditionerSpec diag_plus_lowrank(std::vector<double> d, Matrix u);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::vector<double>& diag() const { return diag_; }
  const Matrix& factor() const { return factor_; }    // cholesky kind
  const Matrix& lowrank() const { return lowrank_; }  // diag_plus_lowrank kind

  Matrix dense() const;  // materialize F
  std::string kind_name() const;

 private:
  Kind kind_ = Kind::identity;
  int dim_ = 0;
  std::vector<double> diag_;
  Matrix factor_;
  Matrix lowrank_;
};

// F^{-1} C F^{-T}.  Throws SingularPreconditioner when F is not invertible.
spectra::SpdMatrix precondition_covariance(const spectra::SpdMatrix& c, const PreconditionerSpec& f);

// Forward-KL diagonal minimizer: D_ii = sqrt(C_ii) (component-wise scales).
std::vector<double> forward_kl_diagonal(const spectra::SpdMatrix& c);

// Reverse-KL diagonal minimizer: D_ii = 1 / sqrt((C^{-1})_ii).
std::vector<double> reverse_kl_diagonal(const spectra::SpdMatrix& c);

// Forward/reverse KL of a Gaussian against the unit Gaussian, as functions
// of the preconditioned-covariance spectrum lambda^2: forward is
// sum(l^2 - log l^2), reverse is sum(l^{-2} - log l^{-2}); both are
// minimized at the flat unit spectrum with value N.
std::pair<double, double> kl_gaussian(const std::vector<double>& lambdas);

// Covariance made of 2x2 correlated blocks gamma_n^2 [[1, rho_n], [rho_n, 1]].
struct BlockModel {
  std::vector<double> rhos;    // each in (0, 1)
  std::vector<double> gammas;  // optional per-block scales, default 1
};

struct BlockKappas {
  double fwd = 0.0;
  double rev = 0.0;
  double opt = 0.0;
  double nothing = 0.0;
};

// Closed-form kappa after forward-KL, reverse-KL, and kappa-optimal diagonal
// preconditioning of the block model, plus the unpreconditioned baseline.
BlockKappas block_kappas(const BlockModel& model);

// Dense covariance of the block model (for brute-force checks).
spectra::SpdMatrix block_covariance(const BlockModel& model);

// Haar-random orthogonal matrix: QR of an i.i.d. normal matrix with the sign
// of R's diagonal absorbed into Q.
Matrix haar_orthogonal(int n, Rng& rng);

enum class EnsembleKind { wishart, inv_wishart, rotated_scale };

// Random covariance ensembles used for the preconditioner comparison:
// Wishart A A^T with A of shape N x 2N, its inverse, and rotated scale
// matrices U diag(sigma^2) U^T whose sigma profile puts roughly pct% of the
// scales near the maximum.
spectra::SpdMatrix ensemble_covariance(EnsembleKind kind, int n, std::uint64_t seed, int rs_pct = 10);

struct CompareResult {
  std::string winner;  // "nothing" | "fwd_kl" | "rev_kl"
  double kappa_nothing = 0.0;
  double kappa_fwd = 0.0;
  double kappa_rev = 0.0;
};

// kappa for identity, forward-KL-diagonal, and reverse-KL-diagonal
// preconditioning; ties break in the order nothing < fwd < rev.
CompareResult compare_preconditioners(const spectra::SpdMatrix& c);

// Reverse-KL objective for F = diag(exp(log_d)) + U U^T against the Gaussian
// target with covariance C, with its exact gradient in the (log_d, U)
// parameters.  The value is the true KL divergence (nonnegative).
double lowrank_objective(const spectra::SpdMatrix& c, const std::vector<double>& log_d, const Matrix& u);
void lowrank_gradient(const spectra::SpdMatrix& c, const std::vector<double>& log_d, const Matrix& u,
                      std::vector<double>& grad_log_d, Matrix& grad_u);

// Monte Carlo estimator of the same objective from k standard-normal draws.
double lowrank_objective_mc(const spectra::SpdMatrix& c, const std::vector<double>& log_d,
                            const Matrix& u, int k_draws, std::uint64_t seed);

struct TrainOptions {
  int max_iters = 5000;
  double rel_tol = 1e-8;      // stop when the relative objective decrease falls below this
  bool monte_carlo = false;   // use the sampled objective instead of the closed form
  int mc_draws = 256;
  double init_u_scale = 0.1;  // scale of the random U start
};

struct TrainResult {
  PreconditionerSpec spec;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Minimizes the reverse KL over (D, U) by gradient descent with backtracking
// line search; D is parameterized through its logarithm so F stays positive
// definite.  Throws NonFinite when the objective stops being finite.
TrainResult train_diag_lowrank(const spectra::SpdMatrix& c_target, int rank, const TrainOptions& opt,
                               std::uint64_t seed);

// Symmetric circulant covariance whose scale profile comes from the spectrum
// generator as a low-pass shape with about n_large large scales; eigenvalues
// follow the discrete Fourier formula for circulants.
spectra::SpdMatrix circulant_covariance(int n, int n_large, double minval, double maxval, double power);

}  // namespace hmccond::precond
