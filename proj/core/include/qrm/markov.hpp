#pragma once

#include "qrm/perturbation.hpp"

namespace qrm {

/// Transition rate matrix (Q-matrix) of the classical chain emerging from
/// Phi_D: q_ii <= 0, q_ij >= 0 for i != j, zero row sums. States are indexed
/// by the eigenvectors of h_bar_tau (columns of basis_u).
struct RateMatrix {
  RMat q;
  CMat basis_u;
  double clamped_magnitude = 0.0;  // largest negative off-diagonal clamped away
};

/// Q = Phi_D^T in the Diag basis. Refuses models with Hamiltonian drive, since
/// the Markov identification is made for L_g = D - ig[H, .].
RateMatrix rate_matrix_from_phi(const PhiMaps& phi, const Tolerances& tol = {});

struct TransitionKernel {
  double s = 0.0;  // rescaled time, s = g^2 t semantics
  RMat p;          // row-stochastic
  double min_entry_preclamp = 0.0;
  double max_row_sum_error = 0.0;
};

/// P(s) = exp(s Q), i.e. the transpose of exp(s Phi_D); entries with magnitude
/// below the clamp tolerance are zeroed and rows renormalized.
TransitionKernel transition_probabilities(const RateMatrix& rm, double s,
                                          double clamp_tol = 1e-12);

/// Stationary distribution: pi Q = 0, pi >= 0, sum pi = 1; equals the
/// normalized kernel of Phi_D. Zero (or slightly negative) components are
/// reported via the returned vector rather than treated as errors.
RVec stationary_distribution(const RateMatrix& rm, const Tolerances& tol = {});

}  // namespace qrm
