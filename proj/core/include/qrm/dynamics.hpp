#pragma once

#include <span>
#include <vector>

#include "qrm/perturbation.hpp"

namespace qrm {

struct PropagationResult {
  std::vector<double> times;
  std::vector<CMat> states;
  std::string method;  // "exact" or "reduced"
  double max_trace_drift = 0.0;
  double max_herm_deviation = 0.0;
  double min_eigenvalue = 0.0;  // most negative state eigenvalue seen
};

/// Exact propagation rho(t) = e^{t L_g} rho_0 via the dense superoperator.
PropagationResult propagate_exact(const QrmModel& model, const CMat& rho0,
                                  std::span<const double> times, double g);

/// Reduced propagation tau_A (x) e^{t g^2 Phi_D} Diag tr_AB(rho_0) (x) tau_B.
PropagationResult propagate_reduced(const PerturbationContext& ctx, const CMat& rho0,
                                    std::span<const double> times, double g);

enum class ErrorNorm { Frobenius, Operator, Trace };

double state_distance(const CMat& a, const CMat& b, ErrorNorm norm);

struct ErrorScalingReport {
  std::vector<double> g_values;
  std::vector<std::vector<double>> times;   // per g
  std::vector<std::vector<double>> errors;  // ||exact - reduced|| per time
  std::vector<double> max_error;            // per g
  LinearFit exponent;                       // log max_error vs log g
  ErrorNorm norm = ErrorNorm::Frobenius;
};

/// Exact-vs-reduced error sweep on the window [t_lo/g^2, t_hi/g^2].
ErrorScalingReport error_scaling_sweep(const PerturbationContext& ctx, const CMat& rho0,
                                       std::span<const double> g_values, double t_lo = 1.0,
                                       double t_hi = 5.0, int points = 24,
                                       ErrorNorm norm = ErrorNorm::Frobenius);

/// Smallest t with ||rho(t) - steady||_F <= eps, bisected on a geometric grid.
double time_to_reach_steady(const QrmModel& model, const CMat& rho0, double g, double eps,
                            const CMat& steady, double t_max);

struct TrackedEigenvalue {
  Index j, k;
  Complex predicted;  // -i g (e_j - e_k) + g^2 lambda_tilde
  Complex numeric;    // nearest eigenvalue of L_g
  bool ambiguous = false;
};

struct GapDiagnostics {
  double gamma_gap = 0.0;  // distance of the non-0-group spectrum to the imaginary axis
  double eta = 0.0;        // min |Re lambda_tilde_jk|
  double f_phi = 0.0;      // max |Re sigma(Phi_D)|
  double max_re_eigenvalue = 0.0;
  std::vector<TrackedEigenvalue> lambda_table;
};

GapDiagnostics spectral_gap_diagnostics(const PerturbationContext& ctx, double g);

}  // namespace qrm
