#pragma once

#include "qrm/perturbation.hpp"

namespace qrm {

// ---------------------------------------------------------------------------
// Qubit - N-level - qubit chain with no Hamiltonian drive. Factor bases:
// A = {|g>, |e>}, C = {phi_1..phi_N}, B = {|down>, |up>}; reset states
// tau_A = diag(t_A, 1-t_A), tau_B = diag(t_B, 1-t_B).
// ---------------------------------------------------------------------------

struct QubitNQubitParams {
  Index n = 2;                 // dimension of the central factor
  RVec a_g, a_e;               // diagonal energies of the A-side coupling block
  RVec b_down, b_up;           // diagonal energies of the B-side coupling block
  CVec alpha, beta;            // transition amplitudes (alpha to phi_1, beta to phi_N)
  double t_a = 0.5, t_b = 0.5; // reset ground populations, in (0,1)
  double gamma_a = 1.0, gamma_b = 1.0;
  double g = 0.0;

  void validate() const;
};

/// The explicit sufficient condition for Coup: interior alpha (or beta)
/// amplitudes all nonzero together with |beta_1|^2 + |alpha_N|^2 != 0.
bool qubit_n_qubit_coup_hypothesis(const QubitNQubitParams& p);

QrmModel build_qubit_n_qubit(const QubitNQubitParams& p);

/// Closed-form matrix of Phi_D for this family (computational C basis).
RMat qubit_n_qubit_phi_d(const QubitNQubitParams& p);

struct KernelClosedForm {
  RVec x_recursive;  // x_j via the recursive display
  RVec x_explicit;   // x_j via the explicit y(N) display
  double z = 0.0;    // normalization sum
  CMat rho0;         // (1/Z) tau_A (x) sum_j x_j P_j (x) tau_B
};

KernelClosedForm closed_form_kernel_xj(const QubitNQubitParams& p);

// ---------------------------------------------------------------------------
// Three-qubit chain. Computational bases {|0>, |1>} per factor; coupling
//   H = U (n_A n_C + n_C n_B) + (J_alpha |01><10|_AC + J_beta |01><10|_CB + h.c.)
// with thermal reset states diag(t_#, 1 - t_#).
// ---------------------------------------------------------------------------

struct ThreeQubitParams {
  double e_a = 0.0, e_b = 0.0, e_c = 0.0;  // bare energies (zero: no drive)
  double u = 1.0;
  double j_alpha = 0.5, j_beta = 0.5;
  double t_a = 0.7, t_b = 0.4;
  double gamma_a = 1.0, gamma_b = 1.0;
  double g = 0.01;

  void validate() const;
  static double thermal_population(double beta, double e) { return 1.0 / (1.0 + std::exp(-beta * e)); }
};

QrmModel build_three_qubit(const ThreeQubitParams& p);

/// Same model expressed through the N=2 chain parameters (basis relabeling on
/// the C and B factors, including the t_B -> 1 - t_B substitution).
QubitNQubitParams three_qubit_as_n2(const ThreeQubitParams& p);

/// Permutation conjugation mapping the N=2-chain model onto the direct
/// three-qubit one: P = I (x) X (x) X.
CMat three_qubit_relabeling();

struct ThreeQubitClosedForms {
  double phi_plus = 0.0, phi_minus = 0.0;
  double s_tilde_factor = 0.0;  // s_tilde = s_tilde_factor * s
  CMat rho_c0;              // 2x2 diagonal on H_C
  RMat phi_d;               // in the {|0><0|, |1><1|} basis
  double phi_d_nonzero_eig = 0.0;
  CMat h_bar_tau;           // U (2 - t_A - t_B) |1><1|
  CMat r1;                  // first-order correction (rho_1 = R_1)
  CMat r2;                  // second-order R_2
  double x2 = 0.0;          // Diag r_C^(2) = diag(X2, -X2)
  RMat transition(double s) const;  // row-stochastic kernel on {0, 1}
};

ThreeQubitClosedForms three_qubit_closed_forms(const ThreeQubitParams& p);

/// Index permutation taking the machinery Diag-basis order to computational
/// labels: perm[machine_index] = computational label (by overlap).
std::vector<Index> diag_basis_labels(const CMat& diag_u);

struct ThreeQubitRegression {
  double dev_rho_c0 = 0.0;
  double dev_phi_d = 0.0;
  double dev_sigma_phi_d = 0.0;
  double dev_h_bar_tau = 0.0;
  double dev_r1 = 0.0;
  double dev_rc1 = 0.0;     // ||r_C^(1)|| (should vanish)
  double dev_r2 = 0.0;
  double dev_x2 = 0.0;
  double dev_rc2_offdiag = 0.0;
  double dev_markov = 0.0;  // kernels at several s values
  double max() const;
};

/// Compares every closed form against the generic machinery; throws
/// NumericError with a diff report when a deviation exceeds tol.
ThreeQubitRegression three_qubit_regression(const ThreeQubitParams& p, double tol = 1e-9);

}  // namespace qrm
