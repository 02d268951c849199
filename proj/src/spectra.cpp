#include "hmccond/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmccond/common.hpp"
#include "hmccond/kernels.hpp"

namespace hmccond::spectra {

Spectrum::Spectrum(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
  if (sigmas_.empty()) throw InvalidConfig("Spectrum: need at least one scale");
  for (double s : sigmas_) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidConfig("Spectrum: scales must be positive and finite");
  }
  std::stable_sort(sigmas_.begin(), sigmas_.end(), [](double a, double b) { return a > b; });
}

Spectrum Spectrum::flat(int n, double sigma) { return Spectrum(std::vector<double>(n, sigma)); }

Spectrum Spectrum::scaled(double c) const {
  if (!(c > 0.0)) throw InvalidConfig("Spectrum::scaled: factor must be positive");
  std::vector<double> s = sigmas_;
  for (double& v : s) v *= c;
  return Spectrum(std::move(s));
}

double kappa(const Spectrum& s) {
  const double s1 = s.sigma1();
  double sum = 0.0;
  for (double sn : s.sigmas()) {
    const double r = s1 / sn;
    const double r2 = r * r;
    sum += r2 * r2;
  }
  return std::pow(sum, 0.25);
}

double nu(const Spectrum& s) {
  double sum = 0.0;
  for (double sn : s.sigmas()) {
    const double r = 1.0 / sn;
    const double r2 = r * r;
    sum += r2 * r2;
  }
  return std::pow(sum, 0.25);
}

double decay_assumption_ratio(const Spectrum& s) {
  double s7 = 0.0, s4 = 0.0;
  for (double sn : s.sigmas()) {
    const double r = 1.0 / sn;
    const double r2 = r * r;
    const double r4 = r2 * r2;
    s4 += r4;
    s7 += r4 * r2 * r;
  }
  return s.sigma1() * s7 * std::pow(s4, -1.5);
}

Spectrum generate_spectrum(const std::vector<double>& points, const GeneratorParams& p) {
  if (!(p.minval > 0.0) || !(p.maxval > p.minval) || !(p.cutoff > 0.0) || !(p.power > 0.0))
    throw InvalidConfig("generate_spectrum: require 0 < m < M, c > 0, beta > 0");
  if (points.size() < 2) throw DegenerateRange("generate_spectrum: need at least two points");
  std::vector<double> g(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    g[i] = 1.0 / (1.0 + std::pow(std::abs(points[i] / p.cutoff), p.power));
  const auto [lo_it, hi_it] = std::minmax_element(g.begin(), g.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw DegenerateRange("generate_spectrum: all g(y) equal, rescale undefined");
  std::vector<double> sig(points.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    sig[i] = (g[i] - lo) / (hi - lo) * (p.maxval - p.minval) + p.minval;
  return Spectrum(std::move(sig));
}

std::vector<double> uniform_points(int n) {
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) y[i] = static_cast<double>(i + 1) / n;
  return y;
}

std::vector<double> random_points(int n, Rng& rng) {
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.uniform();
  return y;
}

EigenDecomp symmetric_eigen(const Matrix& a_in, bool want_vectors) {
  if (a_in.rows() != a_in.cols()) throw InvalidConfig("symmetric_eigen: matrix must be square");
  if (!is_symmetric(a_in, 1e-12)) throw InvalidConfig("symmetric_eigen: matrix not symmetric within 1e-12");
  const int n = a_in.rows();
  Matrix a = a_in;
  // Enforce exact symmetry so the rotations below stay consistent.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
  // Rotations touch the upper triangle only; eigenvectors accumulate in
  // rows of vt so every inner loop runs over contiguous memory.
  Matrix vt;
  if (want_vectors) vt = Matrix::identity(n);
  std::vector<double> d(n), b(n), z(n, 0.0);
  for (int i = 0; i < n; ++i) d[i] = b[i] = a(i, i);

  const double norm = frobenius_norm(a);
  const double tol_sq = 0.5 * (1e-12 * norm) * (1e-12 * norm);  // upper-triangle share

  auto rotate = [](double& g, double& h, double s, double tau) {
    const double g0 = g, h0 = h;
    g = g0 - s * (h0 + tau * g0);
    h = h0 + s * (g0 - tau * h0);
  };

  bool converged = false;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    double off_sq = 0.0, sm = 0.0;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        off_sq += a(p, q) * a(p, q);
        sm += std::abs(a(p, q));
      }
    if (norm == 0.0 || off_sq <= tol_sq) {
      converged = true;
      break;
    }
    // Coarse threshold on the first sweeps skips rotations that cannot move
    // the off-diagonal mass; afterwards every nonzero pair rotates.
    const double thresh = sweep < 3 ? 0.2 * sm / (static_cast<double>(n) * n) : 0.0;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        const double g100 = 100.0 * std::abs(apq);
        // Annihilate entries already at roundoff relative to the diagonal.
        if (sweep > 3 && std::abs(d[p]) + g100 == std::abs(d[p]) &&
            std::abs(d[q]) + g100 == std::abs(d[q])) {
          a(p, q) = 0.0;
          continue;
        }
        if (apq == 0.0 || std::abs(apq) <= thresh) continue;
        double h = d[q] - d[p];
        double t;
        if (std::abs(h) + g100 == std::abs(h)) {
          t = apq / h;
        } else {
          const double theta = 0.5 * h / apq;
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        h = t * apq;
        z[p] -= h;
        z[q] += h;
        d[p] -= h;
        d[q] += h;
        a(p, q) = 0.0;
        double* rp = a.row(p);
        double* rq = a.row(q);
        for (int k = 0; k < p; ++k) rotate(a(k, p), a(k, q), s, tau);
        for (int k = p + 1; k < q; ++k) rotate(rp[k], a(k, q), s, tau);
        for (int k = q + 1; k < n; ++k) rotate(rp[k], rq[k], s, tau);
        if (want_vectors) {
          double* vp = vt.row(p);
          double* vq = vt.row(q);
          for (int k = 0; k < n; ++k) rotate(vp[k], vq[k], s, tau);
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      b[i] += z[i];
      d[i] = b[i];
      z[i] = 0.0;
    }
  }
  if (!converged) throw NoConvergence("symmetric_eigen: Jacobi did not converge in 100 sweeps");
  for (int i = 0; i < n; ++i) a(i, i) = d[i];

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });

  EigenDecomp e;
  e.values.resize(n);
  for (int i = 0; i < n; ++i) e.values[i] = a(order[i], order[i]);
  if (want_vectors) {
    e.vectors = Matrix(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) e.vectors(i, j) = vt(order[j], i);
  }
  return e;
}

Matrix cholesky_factor(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidConfig("cholesky_factor: matrix must be square");
  const int n = a.rows();
  Matrix l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw NotPositiveDefinite("cholesky_factor: nonpositive pivot");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

SpdMatrix::SpdMatrix(Matrix m) : m_(std::move(m)), caches_(std::make_shared<Caches>()) {
  if (m_.rows() != m_.cols() || m_.rows() < 1) throw InvalidConfig("SpdMatrix: matrix must be square and nonempty");
  if (!is_symmetric(m_, 1e-12)) throw InvalidConfig("SpdMatrix: matrix not symmetric within 1e-12 relative");
}

SpdMatrix SpdMatrix::identity(int n) { return SpdMatrix(Matrix::identity(n)); }

SpdMatrix SpdMatrix::from_diagonal(const std::vector<double>& diag) {
  Matrix m(static_cast<int>(diag.size()), static_cast<int>(diag.size()));
  for (std::size_t i = 0; i < diag.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = diag[i];
  return SpdMatrix(std::move(m));
}

const EigenDecomp& SpdMatrix::eigen() const {
  std::call_once(caches_->eigen_once, [&] { caches_->eigen = symmetric_eigen(m_, true); });
  return *caches_->eigen;
}

const Matrix& SpdMatrix::cholesky() const {
  std::call_once(caches_->chol_once, [&] { caches_->chol = cholesky_factor(m_); });
  return *caches_->chol;
}

double kappa_spd(const SpdMatrix& c) {
  const auto& ev = c.eigen().values;
  const double top = ev.front();
  if (!(top > 0.0) || ev.back() <= 1e-12 * top)
    throw NotPositiveDefinite("kappa_spd: eigenvalue at or below 1e-12 * lambda_max");
  double sum = 0.0;
  for (double v : ev) {
    const double r = top / v;
    sum += r * r;
  }
  return std::pow(sum, 0.25);
}

double schatten_norm(const SpdMatrix& c, double r) {
  const auto& ev = c.eigen().values;
  if (std::isinf(r)) return std::abs(ev.front());
  if (!(r >= 1.0)) throw InvalidOrder("schatten_norm: order must satisfy r >= 1");
  double sum = 0.0;
  for (double v : ev) sum += std::pow(std::abs(v), r);
  return std::pow(sum, 1.0 / r);
}

Spectrum spectrum_of(const SpdMatrix& c) {
  const auto& ev = c.eigen().values;
  const double top = ev.front();
  if (!(top > 0.0) || ev.back() <= 1e-12 * top)
    throw NotPositiveDefinite("spectrum_of: matrix numerically singular");
  std::vector<double> sig(ev.size());
  for (std::size_t i = 0; i < ev.size(); ++i) sig[i] = std::sqrt(ev[i]);
  return Spectrum(std::move(sig));
}

Matrix spd_inverse(const SpdMatrix& c) {
  const auto& e = c.eigen();
  const double top = e.values.front();
  if (!(top > 0.0) || e.values.back() <= 1e-12 * top)
    throw NotPositiveDefinite("spd_inverse: matrix numerically singular");
  const int n = c.dim();
  Matrix scaled(n, n);  // V * Lambda^{-1}
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scaled(i, j) = e.vectors(i, j) / e.values[j];
  return kernels::matmul(scaled, transpose(e.vectors));
}

Matrix spd_inverse_via_cholesky(const Matrix& a) {
  const Matrix l = cholesky_factor(a);
  const int n = a.rows();
  Matrix inv = solve_lower(l, Matrix::identity(n));   // L^{-1}
  inv = solve_lower_transposed(l, inv);               // L^{-T} L^{-1}
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = v;
      inv(j, i) = v;
    }
  return inv;
}

Matrix solve_lower(const Matrix& l, const Matrix& b) {
  const int n = l.rows();
  Matrix x = b;
  for (int col = 0; col < b.cols(); ++col) {
    for (int i = 0; i < n; ++i) {
      double s = x(i, col);
      for (int k = 0; k < i; ++k) s -= l(i, k) * x(k, col);
      x(i, col) = s / l(i, i);
    }
  }
  return x;
}

Matrix solve_lower_transposed(const Matrix& l, const Matrix& b) {
  const int n = l.rows();
  Matrix x = b;
  for (int col = 0; col < b.cols(); ++col) {
    for (int i = n - 1; i >= 0; --i) {
      double s = x(i, col);
      for (int k = i + 1; k < n; ++k) s -= l(k, i) * x(k, col);
      x(i, col) = s / l(i, i);
    }
  }
  return x;
}

CovarianceModel CovarianceModel::diagonal(Spectrum s) {
  CovarianceModel m;
  m.kind_ = Kind::diagonal;
  m.dim_ = s.dim();
  m.mode_sigmas_ = s.sigmas();
  m.spec_ = std::move(s);
  return m;
}

CovarianceModel CovarianceModel::dense(SpdMatrix c) {
  CovarianceModel m;
  m.kind_ = Kind::dense;
  m.dim_ = c.dim();
  const auto& ev = c.eigen().values;
  if (ev.back() <= 1e-12 * ev.front())
    throw NotPositiveDefinite("CovarianceModel: covariance numerically singular");
  m.mode_sigmas_.resize(ev.size());
  for (std::size_t i = 0; i < ev.size(); ++i) m.mode_sigmas_[i] = std::sqrt(ev[i]);
  m.precision_ = spd_inverse(c);
  m.dense_ = std::move(c);
  return m;
}

CovarianceModel CovarianceModel::scaled_identity(int dim, double sigma) {
  if (dim < 1 || !(sigma > 0.0)) throw InvalidConfig("CovarianceModel: bad scaled identity");
  CovarianceModel m;
  m.kind_ = Kind::scaled_identity;
  m.dim_ = dim;
  m.scale_ = sigma;
  m.mode_sigmas_.assign(dim, sigma);
  return m;
}

int CovarianceModel::dim() const { return dim_; }

double CovarianceModel::sigma1() const { return mode_sigmas_.front(); }

double CovarianceModel::sigma_min() const { return mode_sigmas_.back(); }

std::vector<double> CovarianceModel::grad_log_density(const std::vector<double>& x) const {
  std::vector<double> g(x.size());
  switch (kind_) {
    case Kind::diagonal: {
      const auto& s = spec_->sigmas();
      for (std::size_t i = 0; i < x.size(); ++i) g[i] = -x[i] / (s[i] * s[i]);
      break;
    }
    case Kind::scaled_identity: {
      const double inv = 1.0 / (scale_ * scale_);
      for (std::size_t i = 0; i < x.size(); ++i) g[i] = -x[i] * inv;
      break;
    }
    case Kind::dense: {
      g = matvec(*precision_, x);
      for (double& v : g) v = -v;
      break;
    }
  }
  return g;
}

double CovarianceModel::inv_quad(const std::vector<double>& x) const {
  switch (kind_) {
    case Kind::diagonal: {
      const auto& s = spec_->sigmas();
      double sum = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = x[i] / s[i];
        sum += r * r;
      }
      return sum;
    }
    case Kind::scaled_identity: {
      double sum = 0.0;
      for (double v : x) sum += v * v;
      return sum / (scale_ * scale_);
    }
    case Kind::dense: {
      const auto y = matvec(*precision_, x);
      double sum = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) sum += x[i] * y[i];
      return sum;
    }
  }
  return 0.0;
}

std::vector<double> CovarianceModel::sample(Rng& rng) const {
  std::vector<double> z(dim_);
  rng.fill_normal(z.data(), z.size());
  switch (kind_) {
    case Kind::diagonal: {
      const auto& s = spec_->sigmas();
      for (int i = 0; i < dim_; ++i) z[i] *= s[i];
      return z;
    }
    case Kind::scaled_identity: {
      for (double& v : z) v *= scale_;
      return z;
    }
    case Kind::dense: {
      const Matrix& l = dense_->cholesky();
      std::vector<double> x(dim_, 0.0);
      for (int i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += l(i, j) * z[j];
        x[i] = s;
      }
      return x;
    }
  }
  return z;
}

}  // namespace hmccond::spectra
