#include "qrm/markov.hpp"

#include <cmath>

namespace qrm {

RateMatrix rate_matrix_from_phi(const PhiMaps& phi, const Tolerances& tol) {
  if (phi.branch != DriveBranch::NoDrive)
    throw ModelError("rate_matrix_from_phi: model has a Hamiltonian drive (L_0 != D)");
  const Index n = phi.phi_d.rows();
  const double scale = std::max(1.0, phi.phi_d.cwiseAbs().maxCoeff());
  RateMatrix rm;
  rm.basis_u = phi.diag_u;
  rm.q = phi.phi_d.transpose();
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (rm.q(i, j) < -1e-10 * scale)
        throw NumericError("rate_matrix_from_phi: negative off-diagonal rate " +
                           std::to_string(rm.q(i, j)) + " (Phi_D sign structure violated)");
      if (rm.q(i, j) < 0) {
        rm.clamped_magnitude = std::max(rm.clamped_magnitude, -rm.q(i, j));
        rm.q(i, j) = 0.0;
      }
    }
  // Re-anchor the diagonal so row sums vanish exactly after clamping.
  for (Index i = 0; i < n; ++i) {
    rm.q(i, i) = 0.0;
    rm.q(i, i) = -rm.q.row(i).sum();
  }
  (void)tol;
  return rm;
}

TransitionKernel transition_probabilities(const RateMatrix& rm, double s, double clamp_tol) {
  if (s < 0) throw ModelError("transition_probabilities: s must be >= 0");
  const Index n = rm.q.rows();
  TransitionKernel k;
  k.s = s;
  const CMat e = expm(CMat((s * rm.q).cast<Complex>()));
  k.p = e.real();
  k.min_entry_preclamp = k.p.minCoeff();
  const double imag_leak = e.imag().cwiseAbs().maxCoeff();
  if (imag_leak > 1e-12)
    throw NumericError("transition_probabilities: complex leakage in exp(sQ)");
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (k.p(i, j) < -clamp_tol)
        throw NumericError("transition_probabilities: entry below clamp tolerance");
      if (k.p(i, j) < 0) k.p(i, j) = 0.0;
    }
    const double row = k.p.row(i).sum();
    k.max_row_sum_error = std::max(k.max_row_sum_error, std::abs(row - 1.0));
    k.p.row(i) /= row;
  }
  return k;
}

RVec stationary_distribution(const RateMatrix& rm, const Tolerances& tol) {
  // pi Q = 0  <=>  Q^T pi^T = 0.
  const NullSpace ns = null_space(rm.q.transpose().cast<Complex>(), tol.rank_cutoff);
  if (ns.basis.cols() < 1)
    throw AssumptionError("stationary_distribution: Q^T has no numeric kernel");
  if (ns.basis.cols() > 1)
    throw AssumptionError("stationary_distribution: kernel of Q^T is degenerate (Coup fails)");
  CVec v = ns.basis.col(0);
  const Complex s = v.sum();
  if (std::abs(s) < 1e-12)
    throw NumericError("stationary_distribution: kernel vector has vanishing sum");
  v /= s;
  RVec pi(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    pi(i) = v(i).real();
    if (pi(i) < 0 && pi(i) > -1e-12) pi(i) = 0.0;  // clamp float noise, keep zeros visible
  }
  return pi;
}

}  // namespace qrm
