#include "hmccond/precond.hpp"

#include <algorithm>
#include <cmath>

#include "hmccond/common.hpp"
#include "hmccond/kernels.hpp"

namespace hmccond::precond {

using spectra::SpdMatrix;

PreconditionerSpec PreconditionerSpec::identity(int n) {
  PreconditionerSpec f;
  f.kind_ = Kind::identity;
  f.dim_ = n;
  return f;
}

PreconditionerSpec PreconditionerSpec::diagonal(std::vector<double> d) {
  for (double v : d)
    if (!(v > 0.0)) throw SingularPreconditioner("diagonal preconditioner needs positive entries");
  PreconditionerSpec f;
  f.kind_ = Kind::diagonal;
  f.dim_ = static_cast<int>(d.size());
  f.diag_ = std::move(d);
  return f;
}

PreconditionerSpec PreconditionerSpec::cholesky(Matrix l) {
  if (l.rows() != l.cols()) throw InvalidConfig("cholesky preconditioner must be square");
  for (int i = 0; i < l.rows(); ++i)
    if (!(l(i, i) > 0.0)) throw SingularPreconditioner("cholesky preconditioner needs a positive diagonal");
  PreconditionerSpec f;
  f.kind_ = Kind::cholesky;
  f.dim_ = l.rows();
  f.factor_ = std::move(l);
  return f;
}

PreconditionerSpec PreconditionerSpec::diag_plus_lowrank(std::vector<double> d, Matrix u) {
  if (static_cast<int>(d.size()) != u.rows())
    throw InvalidConfig("diag_plus_lowrank: diagonal and U row counts differ");
  for (double v : d)
    if (!(v > 0.0)) throw SingularPreconditioner("diag_plus_lowrank needs a positive diagonal");
  PreconditionerSpec f;
  f.kind_ = Kind::diag_plus_lowrank;
  f.dim_ = static_cast<int>(d.size());
  f.diag_ = std::move(d);
  f.lowrank_ = std::move(u);
  return f;
}

Matrix PreconditionerSpec::dense() const {
  switch (kind_) {
    case Kind::identity:
      return Matrix::identity(dim_);
    case Kind::diagonal: {
      Matrix m(dim_, dim_);
      for (int i = 0; i < dim_; ++i) m(i, i) = diag_[i];
      return m;
    }
    case Kind::cholesky:
      return factor_;
    case Kind::diag_plus_lowrank: {
      Matrix m = kernels::matmul(lowrank_, transpose(lowrank_));
      for (int i = 0; i < dim_; ++i) m(i, i) += diag_[i];
      return m;
    }
  }
  return Matrix();
}

std::string PreconditionerSpec::kind_name() const {
  switch (kind_) {
    case Kind::identity: return "identity";
    case Kind::diagonal: return "diagonal";
    case Kind::cholesky: return "cholesky";
    case Kind::diag_plus_lowrank: return "diag_plus_lowrank";
  }
  return "?";
}

namespace {

Matrix symmetrized(Matrix m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

}  // namespace

SpdMatrix precondition_covariance(const SpdMatrix& c, const PreconditionerSpec& f) {
  if (f.dim() != c.dim()) throw InvalidConfig("precondition_covariance: dimension mismatch");
  switch (f.kind()) {
    case PreconditionerSpec::Kind::identity:
      return c;
    case PreconditionerSpec::Kind::diagonal: {
      const auto& d = f.diag();
      Matrix m(c.dim(), c.dim());
      for (int i = 0; i < c.dim(); ++i)
        for (int j = 0; j < c.dim(); ++j) m(i, j) = c(i, j) / (d[i] * d[j]);
      return SpdMatrix(std::move(m));
    }
    case PreconditionerSpec::Kind::cholesky: {
      Matrix m = spectra::solve_lower(f.factor(), c.matrix());
      m = transpose(spectra::solve_lower(f.factor(), transpose(m)));
      return SpdMatrix(symmetrized(std::move(m)));
    }
    case PreconditionerSpec::Kind::diag_plus_lowrank: {
      const Matrix fd = f.dense();
      Matrix l;
      try {
        l = spectra::cholesky_factor(fd);
      } catch (const NotPositiveDefinite&) {
        throw SingularPreconditioner("diag_plus_lowrank preconditioner not positive definite");
      }
      // F = L L^T, so F^{-1} C F^{-1} = L^{-T} (L^{-1} C L^{-T}) L^{-1}.
      Matrix inner = spectra::solve_lower(l, c.matrix());
      inner = transpose(spectra::solve_lower(l, transpose(inner)));
      Matrix m = spectra::solve_lower_transposed(l, inner);
      m = transpose(spectra::solve_lower_transposed(l, transpose(m)));
      return SpdMatrix(symmetrized(std::move(m)));
    }
  }
  throw InvalidConfig("precondition_covariance: unknown kind");
}

std::vector<double> forward_kl_diagonal(const SpdMatrix& c) {
  std::vector<double> d(c.dim());
  for (int i = 0; i < c.dim(); ++i) {
    const double v = c(i, i);
    if (!(v > 0.0)) throw NotPositiveDefinite("forward_kl_diagonal: nonpositive variance");
    d[i] = std::sqrt(v);
  }
  return d;
}

std::vector<double> reverse_kl_diagonal(const SpdMatrix& c) {
  const Matrix inv = spectra::spd_inverse(c);
  std::vector<double> d(c.dim());
  for (int i = 0; i < c.dim(); ++i) {
    const double v = inv(i, i);
    if (!(v > 0.0)) throw NotPositiveDefinite("reverse_kl_diagonal: nonpositive precision diagonal");
    d[i] = 1.0 / std::sqrt(v);
  }
  return d;
}

std::pair<double, double> kl_gaussian(const std::vector<double>& lambdas) {
  double fwd = 0.0, rev = 0.0;
  for (double l : lambdas) {
    if (!(l > 0.0)) throw InvalidConfig("kl_gaussian: lambdas must be positive");
    const double l2 = l * l;
    fwd += l2 - std::log(l2);
    rev += 1.0 / l2 + std::log(l2);
  }
  return {fwd, rev};
}

BlockKappas block_kappas(const BlockModel& model) {
  if (model.rhos.empty()) throw InvalidConfig("block_kappas: need at least one block");
  for (double r : model.rhos)
    if (!(r > 0.0 && r < 1.0)) throw InvalidConfig("block_kappas: rho must lie in (0, 1)");
  if (!model.gammas.empty() && model.gammas.size() != model.rhos.size())
    throw InvalidConfig("block_kappas: gamma count must match rho count");

  std::vector<double> rhos = model.rhos;
  std::sort(rhos.begin(), rhos.end(), std::greater<double>());
  const double r1 = rhos.front();

  double fwd4 = 0.0, rev4 = 0.0, opt4 = 0.0;
  for (double r : rhos) {
    const double top = (1.0 + r1) / (1.0 + r);
    const double bottom = (1.0 + r1) / (1.0 - r);
    const double pair_sum = top * top + bottom * bottom;
    fwd4 += pair_sum;
    const double w = (1.0 - r * r) / (1.0 - r1 * r1);
    rev4 += w * w * pair_sum;
    const double ratio = (1.0 + r) / (1.0 - r);
    opt4 += 1.0 + ratio * ratio;
  }

  // Baseline spectrum {gamma_n^2 (1 +- rho_n)} without preconditioning.
  std::vector<double> raw;
  raw.reserve(2 * model.rhos.size());
  for (std::size_t i = 0; i < model.rhos.size(); ++i) {
    const double g2 = model.gammas.empty() ? 1.0 : model.gammas[i] * model.gammas[i];
    raw.push_back(g2 * (1.0 + model.rhos[i]));
    raw.push_back(g2 * (1.0 - model.rhos[i]));
  }
  const double top = *std::max_element(raw.begin(), raw.end());
  double nothing4 = 0.0;
  for (double v : raw) {
    const double q = top / v;
    nothing4 += q * q;
  }

  BlockKappas k;
  k.fwd = std::pow(fwd4, 0.25);
  k.rev = std::pow(rev4, 0.25);
  k.opt = std::pow(opt4, 0.25);
  k.nothing = std::pow(nothing4, 0.25);
  return k;
}

SpdMatrix block_covariance(const BlockModel& model) {
  const int nb = static_cast<int>(model.rhos.size());
  Matrix m(2 * nb, 2 * nb);
  for (int b = 0; b < nb; ++b) {
    const double g2 =
        model.gammas.empty() ? 1.0 : model.gammas[b] * model.gammas[b];
    m(2 * b, 2 * b) = g2;
    m(2 * b + 1, 2 * b + 1) = g2;
    m(2 * b, 2 * b + 1) = g2 * model.rhos[b];
    m(2 * b + 1, 2 * b) = g2 * model.rhos[b];
  }
  return SpdMatrix(std::move(m));
}

Matrix haar_orthogonal(int n, Rng& rng) {
  Matrix a(n, n);
  rng.fill_normal(a.data(), static_cast<std::size_t>(n) * n);
  // Householder QR; Q assembled explicitly, then R's diagonal signs folded in.
  Matrix q = Matrix::identity(n);
  std::vector<double> v(n);
  for (int k = 0; k < n; ++k) {
    double norm = 0.0;
    for (int i = k; i < n; ++i) norm += a(i, k) * a(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    const double alpha = a(k, k) >= 0.0 ? -norm : norm;
    double vnorm2 = 0.0;
    for (int i = k; i < n; ++i) {
      v[i] = a(i, k) - (i == k ? alpha : 0.0);
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 == 0.0) continue;
    // Apply H = I - 2 v v^T / (v^T v) to A (columns k..) and to Q (all columns).
    for (int j = k; j < n; ++j) {
      double dot = 0.0;
      for (int i = k; i < n; ++i) dot += v[i] * a(i, j);
      const double f = 2.0 * dot / vnorm2;
      for (int i = k; i < n; ++i) a(i, j) -= f * v[i];
    }
    for (int j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int i = k; i < n; ++i) dot += v[i] * q(i, j);
      const double f = 2.0 * dot / vnorm2;
      for (int i = k; i < n; ++i) q(i, j) -= f * v[i];
    }
  }
  // Now a holds R and q holds Q^T (product of reflectors).  Fold signs so the
  // implied R diagonal is positive, giving the Haar distribution.
  Matrix out(n, n);
  for (int i = 0; i < n; ++i) {
    const double s = a(i, i) >= 0.0 ? 1.0 : -1.0;
    for (int j = 0; j < n; ++j) out(j, i) = s * q(i, j);
  }
  return out;
}

SpdMatrix ensemble_covariance(EnsembleKind kind, int n, std::uint64_t seed, int rs_pct) {
  Rng rng(seed);
  switch (kind) {
    case EnsembleKind::wishart: {
      Matrix x(2 * n, n);
      rng.fill_normal(x.data(), static_cast<std::size_t>(2 * n) * n);
      return SpdMatrix(kernels::syrk_scaled(x, 1.0, kernels::Exec::serial));
    }
    case EnsembleKind::inv_wishart: {
      Matrix x(2 * n, n);
      rng.fill_normal(x.data(), static_cast<std::size_t>(2 * n) * n);
      const SpdMatrix w(kernels::syrk_scaled(x, 1.0, kernels::Exec::serial));
      return SpdMatrix(symmetrized(spectra::spd_inverse(w)));
    }
    case EnsembleKind::rotated_scale: {
      if (rs_pct <= 0 || rs_pct >= 100) throw InvalidConfig("rotated_scale: pct must lie in (0, 100)");
      const spectra::GeneratorParams params{1.0, 5.0, rs_pct / 100.0, 4.0};
      const spectra::Spectrum s = spectra::generate_spectrum(spectra::uniform_points(n), params);
      const Matrix u = haar_orthogonal(n, rng);
      Matrix scaled(n, n);  // U * diag(sigma^2)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scaled(i, j) = u(i, j) * s.sigmas()[j] * s.sigmas()[j];
      return SpdMatrix(symmetrized(kernels::matmul(scaled, transpose(u))));
    }
  }
  throw InvalidConfig("ensemble_covariance: unknown kind");
}

CompareResult compare_preconditioners(const SpdMatrix& c) {
  CompareResult r;
  r.kappa_nothing = spectra::kappa_spd(c);
  r.kappa_fwd = spectra::kappa_spd(
      precondition_covariance(c, PreconditionerSpec::diagonal(forward_kl_diagonal(c))));
  r.kappa_rev = spectra::kappa_spd(
      precondition_covariance(c, PreconditionerSpec::diagonal(reverse_kl_diagonal(c))));
  if (r.kappa_nothing <= r.kappa_fwd && r.kappa_nothing <= r.kappa_rev)
    r.winner = "nothing";
  else if (r.kappa_fwd <= r.kappa_rev)
    r.winner = "fwd_kl";
  else
    r.winner = "rev_kl";
  return r;
}

namespace {

Matrix build_f(const std::vector<double>& log_d, const Matrix& u) {
  Matrix f = kernels::matmul(u, transpose(u));
  for (std::size_t i = 0; i < log_d.size(); ++i) f(static_cast<int>(i), static_cast<int>(i)) += std::exp(log_d[i]);
  return f;
}

// 2 log|det F| via the Cholesky factor; throws NotPositiveDefinite if F is not SPD.
double logdet_spd(const Matrix& f) {
  const Matrix l = spectra::cholesky_factor(f);
  double s = 0.0;
  for (int i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

struct ObjectiveContext {
  const Matrix* c_inv;
  double logdet_c;
  int n;
};

// KL(q || p) = (tr(C^{-1} F F^T) - N + log det C - 2 log|det F|) / 2.
double objective_value(const ObjectiveContext& ctx, const Matrix& f) {
  const Matrix cf = kernels::matmul(*ctx.c_inv, f);
  double tr = 0.0;
  for (int i = 0; i < ctx.n; ++i)
    for (int j = 0; j < ctx.n; ++j) tr += cf(i, j) * f(i, j);
  return 0.5 * (tr - ctx.n + ctx.logdet_c) - logdet_spd(f);
}

}  // namespace

double lowrank_objective(const SpdMatrix& c, const std::vector<double>& log_d, const Matrix& u) {
  if (static_cast<int>(log_d.size()) != c.dim() || u.rows() != c.dim())
    throw InvalidConfig("lowrank_objective: dimension mismatch");
  const Matrix c_inv = spectra::spd_inverse(c);
  double logdet_c = 0.0;
  for (double v : c.eigen().values) logdet_c += std::log(v);
  const ObjectiveContext ctx{&c_inv, logdet_c, c.dim()};
  return objective_value(ctx, build_f(log_d, u));
}

namespace {

void gradient_with_inverse(const Matrix& c_inv, const std::vector<double>& log_d, const Matrix& u,
                           std::vector<double>& grad_log_d, Matrix& grad_u) {
  const int n = c_inv.rows();
  const Matrix f = build_f(log_d, u);
  Matrix f_inv;
  try {
    f_inv = spectra::spd_inverse_via_cholesky(f);
  } catch (const NotPositiveDefinite&) {
    throw NonFinite("lowrank_gradient: F not positive definite");
  }
  // dKL/dF = C^{-1} F - F^{-1} for symmetric F.
  Matrix g = kernels::matmul(c_inv, f);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) -= f_inv(i, j);
  grad_log_d.assign(n, 0.0);
  for (int i = 0; i < n; ++i) grad_log_d[i] = g(i, i) * std::exp(log_d[i]);
  const Matrix g_sym = symmetrized(g);  // (G + G^T) / 2
  grad_u = kernels::matmul(g_sym, u);
  for (int i = 0; i < grad_u.rows(); ++i)
    for (int j = 0; j < grad_u.cols(); ++j) grad_u(i, j) *= 2.0;
}

}  // namespace

void lowrank_gradient(const SpdMatrix& c, const std::vector<double>& log_d, const Matrix& u,
                      std::vector<double>& grad_log_d, Matrix& grad_u) {
  gradient_with_inverse(spectra::spd_inverse(c), log_d, u, grad_log_d, grad_u);
}

double lowrank_objective_mc(const SpdMatrix& c, const std::vector<double>& log_d, const Matrix& u,
                            int k_draws, std::uint64_t seed) {
  if (k_draws < 1) throw InvalidConfig("lowrank_objective_mc: need k_draws >= 1");
  const int n = c.dim();
  const Matrix c_inv = spectra::spd_inverse(c);
  double logdet_c = 0.0;
  for (double v : c.eigen().values) logdet_c += std::log(v);
  const Matrix f = build_f(log_d, u);
  const double ld_f = logdet_spd(f);
  Rng rng(seed);
  std::vector<double> z(n), x(n);
  double acc = 0.0;
  for (int k = 0; k < k_draws; ++k) {
    rng.fill_normal(z.data(), z.size());
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      const double* row = f.row(i);
      for (int j = 0; j < n; ++j) s += row[j] * z[j];
      x[i] = s;
    }
    const auto y = matvec(c_inv, x);
    double quad = 0.0, z2 = 0.0;
    for (int i = 0; i < n; ++i) {
      quad += x[i] * y[i];
      z2 += z[i] * z[i];
    }
    acc += 0.5 * (quad - z2);
  }
  return acc / k_draws - ld_f + 0.5 * logdet_c;
}

TrainResult train_diag_lowrank(const SpdMatrix& c_target, int rank, const TrainOptions& opt,
                               std::uint64_t seed) {
  const int n = c_target.dim();
  if (rank < 0 || rank > n) throw InvalidConfig("train_diag_lowrank: rank must lie in [0, N]");

  const Matrix c_inv = spectra::spd_inverse(c_target);
  double logdet_c = 0.0;
  for (double v : c_target.eigen().values) logdet_c += std::log(v);
  const ObjectiveContext ctx{&c_inv, logdet_c, n};

  Rng rng(seed);
  std::vector<double> log_d(n, 0.0);
  Matrix u(n, std::max(rank, 1));
  if (rank > 0) {
    const double scale = opt.init_u_scale / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < rank; ++j) u(i, j) = scale * rng.normal();
  } else {
    u = Matrix(n, 0);
  }

  const std::uint64_t mc_seed = splitmix64(seed ^ 0x9e3779b9u);
  auto value_of = [&](const std::vector<double>& d, const Matrix& uu) -> double {
    const Matrix f = build_f(d, uu);
    try {
      if (opt.monte_carlo)
        return lowrank_objective_mc(c_target, d, uu, opt.mc_draws, mc_seed);
      return objective_value(ctx, f);
    } catch (const NotPositiveDefinite&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  double obj = value_of(log_d, u);
  if (!std::isfinite(obj)) throw NonFinite("train_diag_lowrank: initial objective not finite");

  TrainResult result;
  result.initial_objective = obj;

  std::vector<double> gd;
  Matrix gu;
  double step = 1.0;
  int it = 0;
  for (; it < opt.max_iters; ++it) {
    gradient_with_inverse(c_inv, log_d, u, gd, gu);
    double gnorm2 = 0.0;
    for (double v : gd) gnorm2 += v * v;
    for (int i = 0; i < gu.rows(); ++i)
      for (int j = 0; j < gu.cols(); ++j) gnorm2 += gu(i, j) * gu(i, j);
    if (!std::isfinite(gnorm2))
      throw NonFinite("train_diag_lowrank: gradient not finite at iteration " + std::to_string(it));
    if (gnorm2 == 0.0) {
      result.converged = true;
      break;
    }

    step = std::min(step * 2.0, 1e6);
    bool moved = false;
    std::vector<double> d_try(n);
    Matrix u_try(u.rows(), u.cols());
    double obj_try = 0.0;
    while (step >= 1e-18) {
      for (int i = 0; i < n; ++i) d_try[i] = log_d[i] - step * gd[i];
      for (int i = 0; i < u.rows(); ++i)
        for (int j = 0; j < u.cols(); ++j) u_try(i, j) = u(i, j) - step * gu(i, j);
      obj_try = value_of(d_try, u_try);
      if (obj_try <= obj - 1e-4 * step * gnorm2) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // no descent direction progress at the smallest step

    const double decrease = (obj - obj_try) / std::max(1.0, std::abs(obj));
    log_d.swap(d_try);
    u = std::move(u_try);
    obj = obj_try;
    if (decrease < opt.rel_tol) {
      result.converged = true;
      ++it;
      break;
    }
  }
  if (!std::isfinite(obj)) throw NonFinite("train_diag_lowrank: objective diverged");

  std::vector<double> d_final(n);
  for (int i = 0; i < n; ++i) d_final[i] = std::exp(log_d[i]);
  result.spec = PreconditionerSpec::diag_plus_lowrank(std::move(d_final), std::move(u));
  result.final_objective = obj;
  result.iterations = it;
  return result;
}

SpdMatrix circulant_covariance(int n, int n_large, double minval, double maxval, double power) {
  if (n < 4 || n_large < 1 || n_large >= n)
    throw InvalidConfig("circulant_covariance: need 4 <= n and 1 <= n_large < n");
  // Normalized frequency magnitude per Fourier index, profile from the
  // spectrum generator with cutoff n_large / n.
  std::vector<double> y(n);
  for (int k = 0; k < n; ++k) y[k] = static_cast<double>(std::min(k, n - k)) / (n / 2.0);
  std::vector<double> g(n);
  const double c = static_cast<double>(n_large) / n;
  for (int k = 0; k < n; ++k) g[k] = 1.0 / (1.0 + std::pow(std::abs(y[k] / c), power));
  const auto [lo_it, hi_it] = std::minmax_element(g.begin(), g.end());
  std::vector<double> mu(n);  // scale profile in [minval, maxval]
  for (int k = 0; k < n; ++k)
    mu[k] = (g[k] - *lo_it) / (*hi_it - *lo_it) * (maxval - minval) + minval;

  // C has circulant eigenvalues mu_k^2 on the Fourier basis; first row by
  // the inverse transform, other rows by circular shifts.
  const double two_pi = 2.0 * 3.14159265358979323846;
  std::vector<double> first(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += mu[k] * mu[k] * std::cos(two_pi * j * k / n);
    first[j] = s / n;
  }
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = first[(j - i + n) % n];
  return SpdMatrix(symmetrized(std::move(m)));
}

}  // namespace hmccond::precond
