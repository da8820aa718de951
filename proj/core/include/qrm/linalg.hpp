#pragma once

#include <functional>
#include <random>
#include <span>
#include <vector>

#include "qrm/types.hpp"

namespace qrm {

// ---------------------------------------------------------------------------
// Tensor algebra on the ordered factorization A (x) C (x) B.
//
// Composite index of |a> (x) |c> (x) |b> is (a*n_c + c)*n_b + b, i.e. the
// usual Kronecker convention with A as the slowest factor.
// ---------------------------------------------------------------------------

CMat kron(const CMat& a, const CMat& b);

enum class Part { A, B, AB };

/// Partial trace of an operator on H_A (x) H_C (x) H_B over the given factor(s).
CMat partial_trace(const CMat& rho, const HilbertDims& dims, Part over);

// Embeddings of factor operators into B(H_A (x) H_C (x) H_B).
CMat lift_a(const CMat& x, const HilbertDims& dims);
CMat lift_c(const CMat& x, const HilbertDims& dims);
CMat lift_b(const CMat& x, const HilbertDims& dims);
CMat lift_ac(const CMat& x, const HilbertDims& dims);  // x on H_A (x) H_C
CMat lift_cb(const CMat& x, const HilbertDims& dims);  // x on H_C (x) H_B

// ---------------------------------------------------------------------------
// Vectorization. Column-stacking: vec(rho)[j*n + i] = rho(i, j), so that
// vec(A X B) = (B^T (x) A) vec(X). This convention is fixed project-wide and
// asserted by a canonical test.
// ---------------------------------------------------------------------------

CVec vectorize(const CMat& rho);
CMat devectorize(const CVec& v);           // side length inferred, must be square
CMat devectorize(const CVec& v, Index n);  // explicit side length

/// A linear map on B(H) stored densely on column-vectorized operators.
struct SuperOp {
  Index dim = 0;  // underlying Hilbert dimension n; matrix is n^2 x n^2
  CMat m;

  SuperOp() = default;
  SuperOp(Index n, CMat mat);

  CMat apply(const CMat& rho) const;

  static SuperOp identity(Index n);
  static SuperOp zero(Index n);
  static SuperOp from_map(Index n, const std::function<CMat(const CMat&)>& f);
  static SuperOp left_mult(const CMat& a);   // rho -> a rho
  static SuperOp right_mult(const CMat& b);  // rho -> rho b
  static SuperOp commutator(const CMat& h);  // rho -> [h, rho]

  SuperOp operator+(const SuperOp& o) const;
  SuperOp operator-(const SuperOp& o) const;
  SuperOp operator*(const SuperOp& o) const;  // composition
  friend SuperOp operator*(Complex c, const SuperOp& s);

  double norm() const { return m.norm(); }
};

// ---------------------------------------------------------------------------
// Dense decompositions (LAPACK-backed).
// ---------------------------------------------------------------------------

/// Eigenvalues only, sorted by (Re, Im) lexicographically.
CVec eigvals(const CMat& m);

struct EigResult {
  CVec values;      // sorted by (Re, Im)
  CMat vectors;     // matching columns, unit norm, phase-fixed
  RVec residuals;   // ||m v - lambda v|| / ||m||_F per pair
  double max_residual = 0.0;
  double vector_condition = 0.0;  // sigma_max/sigma_min of the eigenvector matrix
  bool defective = false;
};

/// Full nonsymmetric eigendecomposition with diagnostics.
EigResult eig(const CMat& m);

struct HermEig {
  RVec values;   // ascending
  CMat vectors;  // orthonormal columns, phase-fixed
};

HermEig herm_eig(const CMat& m);

/// Matrix exponential (scaling-and-squaring).
CMat expm(const CMat& m);

struct NullSpace {
  CMat basis;           // orthonormal columns spanning the numeric kernel
  RVec singular_values; // all singular values, descending
};

NullSpace null_space(const CMat& m, double rel_tol = 1e-9);
Index numeric_rank(const CMat& m, double rel_tol = 1e-9);
CMat pinv(const CMat& m, double rel_tol = 1e-12);
RVec singular_values(const CMat& m);  // descending

// ---------------------------------------------------------------------------
// Small numerics helpers.
// ---------------------------------------------------------------------------

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

LinearFit fit_linear(std::span<const double> x, std::span<const double> y);
LinearFit fit_loglog(std::span<const double> x, std::span<const double> y);

std::vector<double> geometric_grid(double a, double b, int n);
std::vector<double> linear_grid(double a, double b, int n);

/// Largest |eigenvalue| estimate of a linear operator given only its action,
/// via Arnoldi iteration with a seeded random start.
double spectral_radius_arnoldi(const std::function<CVec(const CVec&)>& op, Index dim,
                               int krylov = 60, int restarts = 2, std::uint64_t seed = 7);

}  // namespace qrm
