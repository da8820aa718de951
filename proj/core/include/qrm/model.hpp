#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qrm/linalg.hpp"
#include "qrm/types.hpp"

namespace qrm {

/// A reset channel: the state tau the subsystem is replaced with, at rate gamma.
struct ResetSpec {
  CMat tau;
  double gamma = 1.0;

  void validate(Index expected_dim, const Tolerances& tol = {}) const;
};

/// Tri-partite quantum reset model on H_A (x) H_C (x) H_B.
///
/// Generator: L_g(rho) = -i[H_A + H_C + H_B + g H, rho] + D(rho) with the
/// reset dissipator D(rho) = gamma_A (tau_A (x) tr_A rho - rho)
///                         + gamma_B (tr_B rho (x) tau_B - rho).
/// Empty (0x0) Hamiltonians are treated as zero on their factor.
struct QrmModel {
  HilbertDims dims;
  ResetSpec reset_a;
  ResetSpec reset_b;
  CMat h_a;         // on H_A, must commute with tau_A
  CMat h_b;         // on H_B, must commute with tau_B
  CMat h_c;         // on H_C, arbitrary Hermitian
  CMat h_coupling;  // on the full space
  double g = 0.0;

  void validate(const Tolerances& tol = {}, Index dim_cap = 64) const;

  bool has_ha() const { return h_a.size() > 0 && !h_a.isZero(0); }
  bool has_hb() const { return h_b.size() > 0 && !h_b.isZero(0); }
  bool has_hc() const { return h_c.size() > 0 && !h_c.isZero(0); }
  bool has_drive() const { return has_ha() || has_hb() || has_hc(); }

  CMat ha_or_zero() const;
  CMat hb_or_zero() const;
  CMat hc_or_zero() const;
  /// H_A + H_C + H_B lifted to the full space.
  CMat h0_full() const;
};

/// Single-system QRM: L(rho) = -i[H, rho] + sum_l gamma_l (tau_l tr(rho) - rho).
struct SimpleQrm {
  CMat hamiltonian;
  std::vector<ResetSpec> resets;

  void validate(const Tolerances& tol = {}) const;
  /// Combined rate Gamma = sum gamma_l and state T = (1/Gamma) sum gamma_l tau_l.
  std::pair<double, CMat> combined() const;
};

// ---------------------------------------------------------------------------
// Generator builders.
// ---------------------------------------------------------------------------

SuperOp build_dissipator(const QrmModel& model);
CMat apply_dissipator(const QrmModel& model, const CMat& rho);

SuperOp build_uncoupled(const QrmModel& model);              // L_0 (g = 0)
SuperOp build_lindbladian(const QrmModel& model);            // L_g at model.g
SuperOp build_lindbladian(const QrmModel& model, double g);  // L_g at explicit g
CMat apply_uncoupled(const QrmModel& model, const CMat& rho);
CMat apply_lindbladian(const QrmModel& model, const CMat& rho, double g);

/// Kraus operators sqrt(t_j) |phi_j><phi_k| (x) I realizing the reset map
/// tau (x) tr_1(rho) - rho on a bipartite space (reset factor first when
/// reset_on_left, second otherwise).
struct KrausSet {
  std::vector<CMat> ops;
  SuperOp assembled;  // sum_j A rho A* - (1/2){A*A, rho}
};

KrausSet build_kraus_dissipator(const CMat& tau, Index other_dim, bool reset_on_left = true);

/// Full Kraus family of the model dissipator (both resets, sqrt(gamma)-weighted).
KrausSet build_kraus_set(const QrmModel& model);

// ---------------------------------------------------------------------------
// Simple QRM closed-form solution (eigenbasis of H; Gen assumption checked).
// ---------------------------------------------------------------------------

struct GenCheck {
  bool simple = false;
  bool bohr_distinct = false;
  double min_gap = 0.0;
  double min_bohr_gap = 0.0;
  bool ok() const { return simple && bohr_distinct; }
};

GenCheck simple_qrm_gen_check(const SimpleQrm& q, double rel_tol = 1e-10);

struct SimpleQrmSolution {
  CMat state;
  bool gen_ok = true;        // closed form used; false -> expm fallback
  std::string warning;
};

SimpleQrmSolution simple_qrm_solve(const SimpleQrm& q, const CMat& rho0, double t);
CMat simple_qrm_steady_state(const SimpleQrm& q);

}  // namespace qrm
