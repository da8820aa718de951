#include "qrm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <unsupported/Eigen/MatrixFunctions>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace qrm {

namespace {

constexpr Index kKronCap = Index(1) << 22;

void check_finite(const CMat& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + ": non-finite entries");
}

// First entry above half the max magnitude is rotated to the positive real axis.
void phase_fix(Eigen::Ref<CVec> v) {
  const double mx = v.cwiseAbs().maxCoeff();
  if (mx <= 0) return;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 0.5 * mx) {
      v *= std::conj(v(i)) / std::abs(v(i));
      return;
    }
  }
}

struct Svd {
  RVec sigma;  // descending
  CMat u, vh;  // optional, empty unless wanted
};

Svd svd(const CMat& m, bool want_vectors) {
  const Index rows = m.rows(), cols = m.cols();
  CMat a = m;
  Svd out;
  out.sigma.resize(std::min(rows, cols));
  int info = 0;
  if (want_vectors) {
    out.u.resize(rows, rows);
    out.vh.resize(cols, cols);
    info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'A', rows, cols, a.data(), rows,
                          out.sigma.data(), out.u.data(), rows, out.vh.data(), cols);
  } else {
    info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', rows, cols, a.data(), rows,
                          out.sigma.data(), nullptr, 1, nullptr, 1);
  }
  if (info != 0) throw NumericError("zgesdd failed, info=" + std::to_string(info));
  return out;
}

}  // namespace

CMat kron(const CMat& a, const CMat& b) {
  check_finite(a, "kron");
  check_finite(b, "kron");
  const Index ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
  if (ra * rb > kKronCap || ca * cb > kKronCap)
    throw ModelError("kron: result dimension exceeds cap");
  CMat out(ra * rb, ca * cb);
  for (Index i = 0; i < ra; ++i)
    for (Index j = 0; j < ca; ++j) out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
  return out;
}

CMat partial_trace(const CMat& rho, const HilbertDims& dims, Part over) {
  const Index na = dims.n_a, nc = dims.n_c, nb = dims.n_b, n = dims.total();
  if (rho.rows() != n || rho.cols() != n)
    throw ModelError("partial_trace: operator size does not match dims");
  auto idx = [nc, nb](Index a, Index c, Index b) { return (a * nc + c) * nb + b; };
  switch (over) {
    case Part::A: {
      CMat out = CMat::Zero(nc * nb, nc * nb);
      for (Index c = 0; c < nc; ++c)
        for (Index b = 0; b < nb; ++b)
          for (Index c2 = 0; c2 < nc; ++c2)
            for (Index b2 = 0; b2 < nb; ++b2) {
              Complex s = 0;
              for (Index a = 0; a < na; ++a) s += rho(idx(a, c, b), idx(a, c2, b2));
              out(c * nb + b, c2 * nb + b2) = s;
            }
      return out;
    }
    case Part::B: {
      CMat out = CMat::Zero(na * nc, na * nc);
      for (Index a = 0; a < na; ++a)
        for (Index c = 0; c < nc; ++c)
          for (Index a2 = 0; a2 < na; ++a2)
            for (Index c2 = 0; c2 < nc; ++c2) {
              Complex s = 0;
              for (Index b = 0; b < nb; ++b) s += rho(idx(a, c, b), idx(a2, c2, b));
              out(a * nc + c, a2 * nc + c2) = s;
            }
      return out;
    }
    case Part::AB: {
      CMat out = CMat::Zero(nc, nc);
      for (Index c = 0; c < nc; ++c)
        for (Index c2 = 0; c2 < nc; ++c2) {
          Complex s = 0;
          for (Index a = 0; a < na; ++a)
            for (Index b = 0; b < nb; ++b) s += rho(idx(a, c, b), idx(a, c2, b));
          out(c, c2) = s;
        }
      return out;
    }
  }
  throw ModelError("partial_trace: bad Part");
}

CMat lift_a(const CMat& x, const HilbertDims& dims) {
  return kron(x, CMat::Identity(dims.n_c * dims.n_b, dims.n_c * dims.n_b));
}
CMat lift_c(const CMat& x, const HilbertDims& dims) {
  return kron(CMat::Identity(dims.n_a, dims.n_a), kron(x, CMat::Identity(dims.n_b, dims.n_b)));
}
CMat lift_b(const CMat& x, const HilbertDims& dims) {
  return kron(CMat::Identity(dims.n_a * dims.n_c, dims.n_a * dims.n_c), x);
}
CMat lift_ac(const CMat& x, const HilbertDims& dims) {
  return kron(x, CMat::Identity(dims.n_b, dims.n_b));
}
CMat lift_cb(const CMat& x, const HilbertDims& dims) {
  return kron(CMat::Identity(dims.n_a, dims.n_a), x);
}

CVec vectorize(const CMat& rho) {
  return Eigen::Map<const CVec>(rho.data(), rho.size());
}

CMat devectorize(const CVec& v, Index n) {
  if (v.size() != n * n) throw ModelError("devectorize: length is not n^2");
  return Eigen::Map<const CMat>(v.data(), n, n);
}

CMat devectorize(const CVec& v) {
  const auto n = static_cast<Index>(std::llround(std::sqrt(double(v.size()))));
  if (n * n != v.size()) throw ModelError("devectorize: length is not a perfect square");
  return devectorize(v, n);
}

SuperOp::SuperOp(Index n, CMat mat) : dim(n), m(std::move(mat)) {
  if (m.rows() != n * n || m.cols() != n * n)
    throw ModelError("SuperOp: matrix must be n^2 x n^2");
}

CMat SuperOp::apply(const CMat& rho) const {
  if (rho.rows() != dim || rho.cols() != dim) throw ModelError("SuperOp::apply: size mismatch");
  return devectorize(CVec(m * vectorize(rho)), dim);
}

SuperOp SuperOp::identity(Index n) { return SuperOp(n, CMat::Identity(n * n, n * n)); }
SuperOp SuperOp::zero(Index n) { return SuperOp(n, CMat::Zero(n * n, n * n)); }

SuperOp SuperOp::from_map(Index n, const std::function<CMat(const CMat&)>& f) {
  CMat m(n * n, n * n);
  CMat e = CMat::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      e(i, j) = 1.0;
      m.col(j * n + i) = vectorize(f(e));
      e(i, j) = 0.0;
    }
  return SuperOp(n, std::move(m));
}

SuperOp SuperOp::left_mult(const CMat& a) {
  return SuperOp(a.rows(), kron(CMat::Identity(a.rows(), a.rows()), a));
}
SuperOp SuperOp::right_mult(const CMat& b) {
  return SuperOp(b.rows(), kron(b.transpose(), CMat::Identity(b.rows(), b.rows())));
}
SuperOp SuperOp::commutator(const CMat& h) {
  const Index n = h.rows();
  const CMat id = CMat::Identity(n, n);
  return SuperOp(n, kron(id, h) - kron(h.transpose(), id));
}

SuperOp SuperOp::operator+(const SuperOp& o) const { return SuperOp(dim, m + o.m); }
SuperOp SuperOp::operator-(const SuperOp& o) const { return SuperOp(dim, m - o.m); }
SuperOp SuperOp::operator*(const SuperOp& o) const { return SuperOp(dim, m * o.m); }
SuperOp operator*(Complex c, const SuperOp& s) { return SuperOp(s.dim, c * s.m); }

namespace {

std::vector<Index> sort_perm(const CVec& w) {
  std::vector<Index> p(w.size());
  std::iota(p.begin(), p.end(), Index(0));
  std::sort(p.begin(), p.end(), [&](Index i, Index j) {
    if (w(i).real() != w(j).real()) return w(i).real() < w(j).real();
    return w(i).imag() < w(j).imag();
  });
  return p;
}

}  // namespace

CVec eigvals(const CMat& m) {
  if (m.rows() != m.cols()) throw ModelError("eigvals: matrix must be square");
  check_finite(m, "eigvals");
  const Index n = m.rows();
  CMat a = m;
  CVec w(n);
  int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, w.data(), nullptr, 1,
                           nullptr, 1);
  if (info != 0) throw NumericError("zgeev failed to converge, info=" + std::to_string(info));
  const auto p = sort_perm(w);
  CVec out(n);
  for (Index i = 0; i < n; ++i) out(i) = w(p[i]);
  return out;
}

EigResult eig(const CMat& m) {
  if (m.rows() != m.cols()) throw ModelError("eig: matrix must be square");
  check_finite(m, "eig");
  const Index n = m.rows();
  CMat a = m;
  CVec w(n);
  CMat vr(n, n);
  int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n, a.data(), n, w.data(), nullptr, 1,
                           vr.data(), n);
  if (info != 0) throw NumericError("zgeev failed to converge, info=" + std::to_string(info));

  EigResult r;
  const auto p = sort_perm(w);
  r.values.resize(n);
  r.vectors.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    r.values(i) = w(p[i]);
    r.vectors.col(i) = vr.col(p[i]);
    r.vectors.col(i).normalize();
    phase_fix(r.vectors.col(i));
  }
  const double scale = std::max(m.norm(), 1e-300);
  r.residuals.resize(n);
  for (Index i = 0; i < n; ++i)
    r.residuals(i) = (m * r.vectors.col(i) - r.values(i) * r.vectors.col(i)).norm() / scale;
  r.max_residual = r.residuals.maxCoeff();
  const RVec sv = svd(r.vectors, false).sigma;
  r.vector_condition = sv(0) / std::max(sv(sv.size() - 1), 1e-300);
  r.defective = sv(sv.size() - 1) <= 1e-8 * sv(0);
  return r;
}

HermEig herm_eig(const CMat& m) {
  if (!is_hermitian(m, 1e-10 * std::max(1.0, m.norm())))
    throw ModelError("herm_eig: matrix is not Hermitian");
  const Index n = m.rows();
  CMat a = m;
  RVec w(n);
  int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data());
  if (info != 0) throw NumericError("zheevd failed, info=" + std::to_string(info));
  for (Index i = 0; i < n; ++i) phase_fix(a.col(i));
  return {std::move(w), std::move(a)};
}

CMat expm(const CMat& m) {
  if (m.rows() != m.cols()) throw ModelError("expm: matrix must be square");
  check_finite(m, "expm");
  CMat out = m.exp();
  check_finite(out, "expm result");
  return out;
}

NullSpace null_space(const CMat& m, double rel_tol) {
  const Svd s = svd(m, true);
  const Index k = std::min(m.rows(), m.cols());
  const double smax = k > 0 ? s.sigma(0) : 0.0;
  const double cut = rel_tol * smax;
  Index nullity = m.cols() - k;  // columns beyond min(rows, cols) are always null
  for (Index i = 0; i < k; ++i)
    if (s.sigma(i) <= cut) ++nullity;
  NullSpace out;
  out.singular_values = s.sigma;
  out.basis = s.vh.bottomRows(nullity).adjoint();
  return out;
}

Index numeric_rank(const CMat& m, double rel_tol) {
  const Svd s = svd(m, false);
  const Index k = s.sigma.size();
  if (k == 0) return 0;
  const double cut = rel_tol * s.sigma(0);
  Index r = 0;
  for (Index i = 0; i < k; ++i)
    if (s.sigma(i) > cut) ++r;
  return r;
}

RVec singular_values(const CMat& m) { return svd(m, false).sigma; }

CMat pinv(const CMat& m, double rel_tol) {
  const Svd s = svd(m, true);
  const Index k = s.sigma.size();
  const double cut = k > 0 ? rel_tol * s.sigma(0) : 0.0;
  RVec inv = RVec::Zero(k);
  for (Index i = 0; i < k; ++i)
    if (s.sigma(i) > cut) inv(i) = 1.0 / s.sigma(i);
  return s.vh.adjoint().leftCols(k) * inv.asDiagonal() * s.u.leftCols(k).adjoint();
}

LinearFit fit_linear(std::span<const double> x, std::span<const double> y) {
  const size_t n = x.size();
  if (n != y.size() || n < 2) throw ModelError("fit_linear: need >= 2 matching points");
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) throw ModelError("fit_linear: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.slope_stderr = n > 2 ? std::sqrt(ss / double(n - 2) / sxx) : 0.0;
  return f;
}

LinearFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw ModelError("fit_loglog: data must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_linear(lx, ly);
}

std::vector<double> geometric_grid(double a, double b, int n) {
  if (n < 1 || a <= 0 || b <= 0) throw ModelError("geometric_grid: bad parameters");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  const double r = std::pow(b / a, 1.0 / double(n - 1));
  double v = a;
  for (int i = 0; i < n; ++i, v *= r) out[i] = v;
  out.back() = b;
  return out;
}

std::vector<double> linear_grid(double a, double b, int n) {
  if (n < 1) throw ModelError("linear_grid: bad parameters");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * double(i) / double(n - 1);
  return out;
}

double spectral_radius_arnoldi(const std::function<CVec(const CVec&)>& op, Index dim, int krylov,
                               int restarts, std::uint64_t seed) {
  if (dim <= 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double best = 0.0;
  const int m = int(std::min<Index>(krylov, dim));
  for (int r = 0; r < restarts; ++r) {
    CMat v(dim, m + 1);
    CMat h = CMat::Zero(m + 1, m);
    CVec v0(dim);
    for (Index i = 0; i < dim; ++i) v0(i) = Complex(nd(rng), nd(rng));
    v0.normalize();
    v.col(0) = v0;
    int steps = 0;
    for (int j = 0; j < m; ++j) {
      CVec w = op(v.col(j));
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) {
          const Complex c = v.col(i).dot(w);
          h(i, j) += c;
          w -= c * v.col(i);
        }
      const double nw = w.norm();
      h(j + 1, j) = nw;
      steps = j + 1;
      if (nw < 1e-13) break;
      v.col(j + 1) = w / nw;
    }
    if (steps == 0) continue;
    const CVec ritz = eigvals(h.topLeftCorner(steps, steps));
    best = std::max(best, ritz.cwiseAbs().maxCoeff());
  }
  return best;
}

}  // namespace qrm
