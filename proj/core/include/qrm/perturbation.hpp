#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "qrm/uncoupled.hpp"

namespace qrm {

enum class DriveBranch { NoDrive, HcZero, HcNonzero };

const char* to_string(DriveBranch b);

DriveBranch classify_drive(const QrmModel& model);

/// Simplicity / distinct-Bohr-frequency diagnostics of a Hermitian spectrum.
struct SpecCheck {
  bool simple = false;
  bool bohr_distinct = false;
  double min_gap = 0.0;
  double min_bohr_gap = 0.0;
  bool ok() const { return simple && bohr_distinct; }
};

SpecCheck spec_check(const RVec& eigs, double rel_tol = 1e-8);

/// Effective Hamiltonians obtained by contracting the coupling with the reset
/// states: h_bar_tau = tr_AB(H tau_A (x) I_C (x) tau_B) on H_C, and the
/// single-contraction variants on H_C (x) H_B and H_A (x) H_C.
struct EffectiveHamiltonian {
  CMat h_bar_tau;
  CMat h_bar_tau_a;  // tr_A(H (tau_A (x) I (x) I)), acts on H_C (x) H_B
  CMat h_bar_tau_b;  // tr_B(H (I (x) I (x) tau_B)), acts on H_A (x) H_C
  HermEig tau_basis;  // eigensystem of h_bar_tau
  SpecCheck spec;     // Spec(h_bar_tau)
};

EffectiveHamiltonian effective_hamiltonians(const QrmModel& model);

/// Precomputed spectral context shared by the perturbative constructions:
/// the analytic L_0 data and the relevant Diag basis (eigenbasis of H_C when
/// H_C != 0, of h_bar_tau otherwise).
class PerturbationContext {
 public:
  explicit PerturbationContext(const QrmModel& model, const Tolerances& tol = {});

  const QrmModel& model() const { return model_; }
  const Tolerances& tolerances() const { return tol_; }
  DriveBranch branch() const { return branch_; }
  const UncoupledOperator& l0() const { return *l0_; }
  const EffectiveHamiltonian& eff() const { return eff_; }
  const SpecCheck& spec() const { return spec_; }  // for the branch-relevant operator
  const CMat& diag_u() const { return diag_u_; }
  const RVec& diag_e() const { return diag_e_; }

  void require_spec() const;  // throws AssumptionError when Spec fails

  CMat embed_c(const CMat& rho_c) const;  // tau_A (x) rho_c (x) tau_B
  CMat diag_part(const CMat& rho_c) const;
  CMat offdiag_part(const CMat& rho_c) const;
  /// Inverse of rho_c -> [h_bar_tau, rho_c] on off-diagonal matrices.
  /// ref_scale anchors the off-range check when y itself vanishes.
  CMat inv_comm_hbar(const CMat& y, double ref_scale = 0.0) const;

 private:
  QrmModel model_;
  Tolerances tol_;
  DriveBranch branch_;
  std::shared_ptr<UncoupledOperator> l0_;
  EffectiveHamiltonian eff_;
  SpecCheck spec_;
  CMat diag_u_;
  RVec diag_e_;
};

/// The first-order reduced map on the kernel: zero when H_C != 0, and
/// rho -> -i tau_A (x) [h_bar_tau, tr_AB rho] (x) tau_B when H_C = 0.
SuperOp q0_l1_q0(const PerturbationContext& ctx);

/// The second-order reduced map Phi (on B(H_C)) and its diagonal restriction.
struct PhiMaps {
  SuperOp phi;  // on B(H_C), computational basis
  RMat phi_d;   // n_C x n_C on diagonal matrices, indexed in the Diag basis
  CMat diag_u;
  RVec diag_e;
  DriveBranch branch;
  double column_sum_max = 0.0;  // |column sums| of phi_d (should vanish)
  double offdiag_min = 0.0;     // min off-diagonal entry (should be >= 0)
  double imag_max = 0.0;        // imaginary residue dropped when realifying
  std::optional<RMat> phi_d_h_route;  // h(k)-based construction, NoDrive only
};

PhiMaps build_phi(const PerturbationContext& ctx);

/// The non-negative operators h(k) on H_C entering the no-drive matrix form
/// of Phi_D.
std::vector<CMat> h_operators(const PerturbationContext& ctx);

struct CoupReport {
  bool holds = false;
  Index rank = 0;
  RVec kernel;  // trace-normalized kernel coordinates in the Diag basis
  double kernel_min = 0.0;
  bool combinatorial_available = false;
  bool combinatorial_holds = false;
  int witness_row = -1;
};

CoupReport check_coup(const PhiMaps& phi, const Tolerances& tol = {});

// Matrix-level helpers for the rate-matrix rank criterion.
RMat h_matrix_from_offdiag(const RMat& offdiag);  // fills diagonal with column sums
bool coup_row_criterion(const RMat& h_matrix, int* witness = nullptr);

/// Steady-state power series rho_0 + g rho_1 + ... with the per-order pieces.
struct SteadySeries {
  DriveBranch branch;
  std::vector<CMat> rho;   // rho_0 ... rho_K
  std::vector<CMat> big_r; // R_1 ... R_K (index shifted by one)
  std::vector<CMat> r_c;   // r_C^(1) ... r_C^(K), operators on H_C
  std::vector<double> hierarchy_residual;  // ||L0 rho_j + L1 rho_{j-1}|| per j
  double g0_estimate = 0.0;
  RVec kernel;

  CMat partial_sum(double g) const;
  CMat partial_sum(double g, int upto) const;
};

struct ResolventSteadyState {
  CMat rho;
  double residual = 0.0;  // ||L_g rho|| / ||rho||
  double g0_estimate = 0.0;
  int iterations = 0;
  bool converged = false;
  bool beyond_radius = false;
};

struct EigenvalueCorrection {
  Index j, k;
  double bohr;            // e_j^tau - e_k^tau
  Complex lambda_tilde;   // second-order coefficient
};

/// Drives the steady-state constructions of a fixed model: the series, the
/// resolvent form (I - g R)^{-1}(rho_0), and the eigenvalue corrections.
class SteadyStateSolver {
 public:
  explicit SteadyStateSolver(const PerturbationContext& ctx);

  const PhiMaps& phi() const { return phi_; }
  const CoupReport& coup() const { return coup_; }
  void require_coup() const;

  CMat rho0() const;                        // leading term tau_A (x) rho_C^(0) (x) tau_B
  CMat apply_map(const CMat& rho_prev) const;  // the map R with rho_j = R(rho_{j-1})
  SteadySeries series(int order) const;
  ResolventSteadyState resolvent(double g, int max_terms = 400, double rel_tol = 1e-14) const;
  double radius_estimate() const;           // g_0 = 1 / spectral radius of R

 private:
  struct Step {
    CMat big_r;
    CMat r_c;
    CMat rho;
  };
  Step advance(const CMat& rho_prev) const;
  // Traceless solution of Phi_D x = rhs; ref_scale anchors the residual checks
  // when rhs itself vanishes.
  RVec solve_phi_d(const RVec& rhs, double ref_scale) const;

  const PerturbationContext& ctx_;
  PhiMaps phi_;
  CoupReport coup_;
  RMat phi_d_pinv_;
  mutable double radius_ = -1.0;
};

std::vector<EigenvalueCorrection> second_order_eigenvalues(const PerturbationContext& ctx);

/// (gamma_A^2 + gamma_A gamma_B + gamma_B^2) / (gamma_A gamma_B (gamma_A + gamma_B))
double eigenvalue_bound_coefficient(double gamma_a, double gamma_b);

}  // namespace qrm
