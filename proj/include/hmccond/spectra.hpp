#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "hmccond/matrix.hpp"
#include "hmccond/rng.hpp"

namespace hmccond::spectra {

// Ordered positive scale lengths sigma_1 >= ... >= sigma_N.
class Spectrum {
 public:
  // Sorts descending (stable, so ties keep input order) and validates that
  // every entry is positive and finite.
  explicit Spectrum(std::vector<double> sigmas);

  static Spectrum flat(int n, double sigma = 1.0);

  int dim() const { return static_cast<int>(sigmas_.size()); }
  const std::vector<double>& sigmas() const { return sigmas_; }
  double sigma1() const { return sigmas_.front(); }
  double sigma_min() const { return sigmas_.back(); }
  Spectrum scaled(double c) const;

 private:
  std::vector<double> sigmas_;
};

// kappa = (sum_n (sigma_1 / sigma_n)^4)^{1/4}; scale-invariant.
double kappa(const Spectrum& s);

// nu = (sum_n sigma_n^{-4})^{1/4}; kappa = sigma_1 * nu.
double nu(const Spectrum& s);

// sigma_1 * (sum sigma_n^{-7}) * (sum sigma_n^{-4})^{-3/2}.  Finite-N
// diagnostic of the spectral-decay hypothesis; smaller is better, with
// minimum N^{-1/2} attained by the flat spectrum.
double decay_assumption_ratio(const Spectrum& s);

struct GeneratorParams {
  double minval;   // m > 0
  double maxval;   // M > m
  double cutoff;   // c > 0
  double power;    // beta > 0
};

// sigma values are g(y) = 1 / (1 + |y/c|^beta) affinely rescaled onto
// [m, M] over the given point set.  Throws DegenerateRange when the rescale
// is undefined (fewer than two points, or all g(y) equal).
Spectrum generate_spectrum(const std::vector<double>& points, const GeneratorParams& p);

// Point-set helpers for the generator: i/n grid and U(0,1) draws.
std::vector<double> uniform_points(int n);
std::vector<double> random_points(int n, Rng& rng);

struct EigenDecomp {
  std::vector<double> values;  // descending
  Matrix vectors;              // columns are eigenvectors; empty if not requested
};

// Cyclic Jacobi eigensolver for symmetric matrices.  Converges when the
// off-diagonal Frobenius norm falls below 1e-12 * ||A||_F, capped at 100
// sweeps (NoConvergence beyond that).
EigenDecomp symmetric_eigen(const Matrix& a, bool want_vectors = true);

// Lower Cholesky factor; throws NotPositiveDefinite on a nonpositive pivot.
Matrix cholesky_factor(const Matrix& a);

// Symmetric positive definite matrix with lazily cached eigen and Cholesky
// decompositions.  Entries are immutable after construction; copies share
// the caches, and cache fills are guarded so concurrent readers are safe.
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix m);

  static SpdMatrix identity(int n);
  static SpdMatrix from_diagonal(const std::vector<double>& diag);

  int dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  const EigenDecomp& eigen() const;      // with eigenvectors
  const Matrix& cholesky() const;        // lower triangular

  double max_eigenvalue() const { return eigen().values.front(); }
  double min_eigenvalue() const { return eigen().values.back(); }

 private:
  struct Caches {
    std::once_flag eigen_once;
    std::once_flag chol_once;
    std::optional<EigenDecomp> eigen;
    std::optional<Matrix> chol;
  };
  Matrix m_;
  std::shared_ptr<Caches> caches_;
};

// kappa as a function of covariance: sqrt(||C||_2 ||C^{-1}||_{S^2}), equal to
// kappa of the square roots of C's eigenvalues.  Throws NotPositiveDefinite
// when any eigenvalue falls at or below 1e-12 * lambda_max.
double kappa_spd(const SpdMatrix& c);

// Schatten r-norm (vector r-norm of the singular values); r may be infinity.
// Throws InvalidOrder for r < 1.
double schatten_norm(const SpdMatrix& c, double r);

// Spectrum made of the square roots of C's eigenvalues.
Spectrum spectrum_of(const SpdMatrix& c);

// Inverse via the eigen decomposition; throws NotPositiveDefinite when the
// matrix is numerically singular.
Matrix spd_inverse(const SpdMatrix& c);

// Inverse of a symmetric positive definite matrix through its Cholesky
// factor; cheaper than the eigen route when no spectrum is needed.
Matrix spd_inverse_via_cholesky(const Matrix& a);

// Triangular solves against a lower factor L: returns L^{-1} B and L^{-T} B.
Matrix solve_lower(const Matrix& l, const Matrix& b);
Matrix solve_lower_transposed(const Matrix& l, const Matrix& b);

// SPD covariance given as a diagonal spectrum, a dense matrix, or a scale
// factor; carries eigen/Cholesky access through SpdMatrix where needed.
class CovarianceModel {
 public:
  enum class Kind { diagonal, dense, scaled_identity };

  static CovarianceModel diagonal(Spectrum s);
  static CovarianceModel dense(SpdMatrix c);
  static CovarianceModel scaled_identity(int dim, double sigma);

  Kind kind() const { return kind_; }
  int dim() const;
  double sigma1() const;
  double sigma_min() const;

  // Scale lengths sigma_n (square roots of the covariance eigenvalues).
  const std::vector<double>& mode_sigmas() const { return mode_sigmas_; }

  std::vector<double> grad_log_density(const std::vector<double>& x) const;  // -C^{-1} x
  double inv_quad(const std::vector<double>& x) const;                       // x^T C^{-1} x
  std::vector<double> sample(Rng& rng) const;                                // x ~ N(0, C)

  const SpdMatrix* dense_matrix() const { return dense_ ? &*dense_ : nullptr; }

 private:
  CovarianceModel() = default;
  Kind kind_ = Kind::scaled_identity;
  int dim_ = 0;
  double scale_ = 1.0;
  std::optional<Spectrum> spec_;
  std::optional<SpdMatrix> dense_;
  std::optional<Matrix> precision_;  // C^{-1} for the dense case
  std::vector<double> mode_sigmas_;
};

}  // namespace hmccond::spectra
