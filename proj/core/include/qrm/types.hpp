#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace qrm {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

/// Model construction or invariant violation (CLI exit code 2).
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A generic assumption (Spec/Coup) fails for the given model (CLI exit code 3).
struct AssumptionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numeric residual or convergence check fails (CLI exit code 4).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double hermiticity = 1e-12;    // absolute, on matrix entries
  double rank_cutoff = 1e-9;     // relative to largest singular value
  double spectral_match = 1e-8;  // eigenvalue comparisons
  double eigen_residual = 1e-10; // relative eigenpair residuals
  double zero_split = 1e-12;     // relative cutoff separating exact-zero eigenvalues
};

/// Ordered tensor factorization H_A (x) H_C (x) H_B.
struct HilbertDims {
  Index n_a = 1;
  Index n_c = 1;
  Index n_b = 1;

  Index total() const { return n_a * n_c * n_b; }

  void validate(Index dim_cap = 64) const {
    if (n_a < 1 || n_c < 1 || n_b < 1)
      throw ModelError("HilbertDims: all factor dimensions must be >= 1");
    if (total() > dim_cap)
      throw ModelError("HilbertDims: total dimension " + std::to_string(total()) +
                       " exceeds cap " + std::to_string(dim_cap));
  }

  bool operator==(const HilbertDims&) const = default;
};

inline double herm_deviation(const CMat& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const CMat& m, double tol = 1e-12) {
  return m.rows() == m.cols() && herm_deviation(m) <= tol;
}

}  // namespace qrm
