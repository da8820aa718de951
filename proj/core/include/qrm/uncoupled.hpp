#pragma once

#include <string>
#include <vector>

#include "qrm/model.hpp"

namespace qrm {

/// Common eigenbasis of a factor Hamiltonian and its reset state.
/// Columns of u are ordered by ascending h eigenvalue, ties broken by
/// descending tau eigenvalue; when h is absent the tau eigenbasis is used.
struct FactorBasis {
  CMat u;         // orthonormal columns
  RVec h_eigs;    // eigenvalues of h in that order (zero when h absent)
  RVec tau_eigs;  // eigenvalues of tau in that order
};

FactorBasis simultaneous_eigenbasis(const CMat& h, const CMat& tau, double tol = 1e-10);

/// Spectral projectors of the reset dissipator (eigenvalues 0, -gamma_A,
/// -gamma_B, -(gamma_A + gamma_B)).
struct DissipatorProjectors {
  SuperOp q0, qa, qb, qab;
};

DissipatorProjectors dissipator_projectors(const QrmModel& model);

CMat apply_q0(const QrmModel& model, const CMat& rho);  // tau_A (x) tr_AB rho (x) tau_B

enum class PieceKind { Tau, Delta, Offdiag };

struct EigenTableEntry {
  Complex eigenvalue;
  CMat vec;            // eigenvector of L_0, as an operator on H
  CMat dual;           // tr(dual^adj vec') = delta on the table
  std::string family;  // one of the nine analytic families
  PieceKind kind_a = PieceKind::Tau;
  PieceKind kind_b = PieceKind::Tau;
  double residual = -1.0;  // ||L0 v - lambda v|| / ||v||, filled by verify_residuals
};

/// Thin rank-one spectral projector on a single factor: op(rho) = vec tr(dual^adj rho).
struct RankOneProjector {
  CMat vec;
  CMat dual;
  SuperOp op;
};

/// Complete rank-one projector family onto the basis {P_jk (j != k), Delta_j, tau}
/// of B(H), for tau diagonal in the supplied orthonormal basis (columns).
std::vector<RankOneProjector> rank_one_projectors(const CMat& tau, const CMat& basis);

/// Closed-form inverse of the dissipator on ran(I - Q0), i.e. on operators with
/// vanishing tr_AB.
CMat dissipator_inverse(const QrmModel& model, const CMat& rho_tilde, double rel_tol = 1e-9);

/// Analytic spectral data of the uncoupled generator L_0: the full eigenvector
/// table, its biorthogonal duals, the reduced resolvent and the kernel projector.
class UncoupledOperator {
 public:
  explicit UncoupledOperator(const QrmModel& model, const Tolerances& tol = {});

  const QrmModel& model() const { return model_; }
  const std::vector<EigenTableEntry>& table() const { return table_; }
  const FactorBasis& basis_a() const { return fa_; }
  const FactorBasis& basis_b() const { return fb_; }
  const FactorBasis& basis_c() const { return fc_; }

  CMat apply(const CMat& rho) const;  // L_0 rho, direct map
  CMat s0(const CMat& rho) const;     // reduced resolvent L_0^{-1}(I - Q0)
  CMat q0(const CMat& rho) const;     // spectral projector onto ker L_0
  Index kernel_dim() const { return kernel_dim_; }

  SuperOp s0_matrix() const;
  SuperOp q0_matrix() const;

  /// Condition number of the vectorized eigenvector matrix (completeness metric).
  double basis_condition() const;
  /// Fills per-entry residuals and returns their maximum.
  double verify_residuals();

 private:
  QrmModel model_;
  Tolerances tol_;
  FactorBasis fa_, fc_, fb_;
  std::vector<EigenTableEntry> table_;
  CMat vmat_, wmat_;  // columns vec(V_k), vec(W_k); wmat^adj vmat = I analytically
  CVec evals_;
  CVec inv_evals_;    // 1/lambda_k on the nonzero part, 0 on the kernel
  Index kernel_dim_ = 0;
};

}  // namespace qrm
