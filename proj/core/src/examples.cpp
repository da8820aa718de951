#include "qrm/examples.hpp"

#include <cmath>
#include <sstream>

#include "qrm/markov.hpp"

namespace qrm {

namespace {

CMat dyad(const CVec& a, const CVec& b) { return a * b.adjoint(); }

CVec basis_vec(Index n, Index i) {
  CVec v = CVec::Zero(n);
  v(i) = 1.0;
  return v;
}

}  // namespace

void QubitNQubitParams::validate() const {
  if (n < 2) throw ModelError("qubit-n-qubit: central dimension must be >= 2");
  auto want = [&](const RVec& v, const char* name) {
    if (v.size() != n) throw ModelError(std::string("qubit-n-qubit: ") + name + " must have length n");
  };
  want(a_g, "a_g");
  want(a_e, "a_e");
  want(b_down, "b_down");
  want(b_up, "b_up");
  if (alpha.size() != n || beta.size() != n)
    throw ModelError("qubit-n-qubit: alpha and beta must have length n");
  if (!(t_a > 0 && t_a < 1 && t_b > 0 && t_b < 1))
    throw ModelError("qubit-n-qubit: t_a, t_b must lie in (0,1)");
  if (!(gamma_a > 0 && gamma_b > 0)) throw ModelError("qubit-n-qubit: rates must be positive");
}

bool qubit_n_qubit_coup_hypothesis(const QubitNQubitParams& p) {
  const double tail = std::norm(p.beta(0)) + std::norm(p.alpha(p.n - 1));
  if (tail <= 0) return false;
  bool alphas = true, betas = true;
  for (Index k = 1; k + 1 < p.n; ++k) {
    alphas = alphas && std::abs(p.alpha(k)) > 0;
    betas = betas && std::abs(p.beta(k)) > 0;
  }
  return alphas || betas;
}

QrmModel build_qubit_n_qubit(const QubitNQubitParams& p) {
  p.validate();
  const Index n = p.n;
  // H_alpha on H_A (x) H_C.
  CMat h_alpha = CMat::Zero(2 * n, 2 * n);
  for (Index j = 0; j < n; ++j) {
    h_alpha(0 * n + j, 0 * n + j) = p.a_g(j);
    h_alpha(1 * n + j, 1 * n + j) = p.a_e(j);
  }
  for (Index k = 0; k < n; ++k) {
    h_alpha(0 * n + 0, 1 * n + k) += p.alpha(k);
    h_alpha(1 * n + k, 0 * n + 0) += std::conj(p.alpha(k));
  }
  // H_beta on H_C (x) H_B, B basis {|down>, |up>}.
  CMat h_beta = CMat::Zero(2 * n, 2 * n);
  for (Index j = 0; j < n; ++j) {
    h_beta(j * 2 + 0, j * 2 + 0) = p.b_down(j);
    h_beta(j * 2 + 1, j * 2 + 1) = p.b_up(j);
  }
  for (Index k = 0; k < n; ++k) {
    h_beta((n - 1) * 2 + 0, k * 2 + 1) += p.beta(k);
    h_beta(k * 2 + 1, (n - 1) * 2 + 0) += std::conj(p.beta(k));
  }

  QrmModel m;
  m.dims = {2, n, 2};
  m.reset_a.tau = Eigen::Vector2cd(p.t_a, 1 - p.t_a).asDiagonal();
  m.reset_a.gamma = p.gamma_a;
  m.reset_b.tau = Eigen::Vector2cd(p.t_b, 1 - p.t_b).asDiagonal();
  m.reset_b.gamma = p.gamma_b;
  m.h_coupling = lift_ac(h_alpha, m.dims) + lift_cb(h_beta, m.dims);
  m.g = p.g;
  m.validate();
  return m;
}

RMat qubit_n_qubit_phi_d(const QubitNQubitParams& p) {
  p.validate();
  const Index n = p.n;
  auto nrm = [](Complex c) { return std::norm(c); };
  RVec s(n), u(n), t(n), v(n);
  for (Index k = 0; k < n; ++k) {
    s(k) = p.gamma_b * (1 - p.t_a) * nrm(p.alpha(k));
    u(k) = p.gamma_b * p.t_a * nrm(p.alpha(k));
    t(k) = p.gamma_a * (1 - p.t_b) * nrm(p.beta(k));
    v(k) = p.gamma_a * p.t_b * nrm(p.beta(k));
  }
  RMat off = RMat::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k) {
      if (j == k) continue;
      double e = 0;
      if (j == 0) e += s(k);
      if (k == 0) e += u(j);
      if (k == n - 1) e += v(j);
      if (j == n - 1) e += t(k);
      off(j, k) = e;
    }
  RMat phi_d = (2.0 / (p.gamma_a * p.gamma_b)) * off;
  for (Index k = 0; k < n; ++k) phi_d(k, k) = -phi_d.col(k).sum();
  return phi_d;
}

KernelClosedForm closed_form_kernel_xj(const QubitNQubitParams& p) {
  p.validate();
  if (!qubit_n_qubit_coup_hypothesis(p))
    throw AssumptionError("closed_form_kernel_xj: Coup hypothesis fails for these parameters");
  const Index n = p.n;
  RVec s(n), u(n), t(n), v(n);
  for (Index k = 0; k < n; ++k) {
    s(k) = p.gamma_b * (1 - p.t_a) * std::norm(p.alpha(k));
    u(k) = p.gamma_b * p.t_a * std::norm(p.alpha(k));
    t(k) = p.gamma_a * (1 - p.t_b) * std::norm(p.beta(k));
    v(k) = p.gamma_a * p.t_b * std::norm(p.beta(k));
  }
  for (Index j = 1; j + 1 < n; ++j)
    if (s(j) + t(j) <= 0)
      throw AssumptionError("closed_form_kernel_xj: S_j + T_j = 0 for an interior level");

  KernelClosedForm out;
  out.x_recursive.resize(n);
  double x1 = s(n - 1) + v(0), xn = u(n - 1) + t(0);
  for (Index j = 1; j + 1 < n; ++j) {
    x1 += v(j) * s(j) / (s(j) + t(j));
    xn += u(j) * t(j) / (s(j) + t(j));
  }
  out.x_recursive(0) = x1;
  out.x_recursive(n - 1) = xn;
  for (Index j = 1; j + 1 < n; ++j)
    out.x_recursive(j) = (u(j) * x1 + v(j) * xn) / (s(j) + t(j));

  // Explicit form through y(N).
  const double ga = p.gamma_a, gb = p.gamma_b, ta = p.t_a, tb = p.t_b;
  const double a_n = std::norm(p.alpha(n - 1)), b_1 = std::norm(p.beta(0));
  double y = 0;
  for (Index j = 1; j + 1 < n; ++j)
    y += ga * gb * std::norm(p.alpha(j)) * std::norm(p.beta(j)) / (s(j) + t(j));
  out.x_explicit.resize(n);
  out.x_explicit(0) = (1 - ta) * a_n * gb + y * tb * (1 - ta) + tb * b_1 * ga;
  out.x_explicit(n - 1) = ta * a_n * gb + y * ta * (1 - tb) + (1 - tb) * b_1 * ga;
  for (Index j = 1; j + 1 < n; ++j) {
    out.x_explicit(j) = ta * a_n * gb + tb * b_1 * ga + y * ta * tb +
                        ga * gb *
                            (a_n * ta * (2 * tb - 1) * std::norm(p.beta(j)) +
                             b_1 * tb * (2 * ta - 1) * std::norm(p.alpha(j))) /
                            (s(j) + t(j));
  }

  const double dev = (out.x_recursive - out.x_explicit).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, out.x_recursive.cwiseAbs().maxCoeff());
  if (dev > 1e-12 * scale)
    throw NumericError("closed_form_kernel_xj: recursive and explicit kernels disagree by " +
                       std::to_string(dev));

  out.z = out.x_recursive.sum();
  CMat rc = CMat::Zero(n, n);
  for (Index j = 0; j < n; ++j) rc(j, j) = out.x_recursive(j) / out.z;
  const CMat tau_a = Eigen::Vector2cd(p.t_a, 1 - p.t_a).asDiagonal();
  const CMat tau_b = Eigen::Vector2cd(p.t_b, 1 - p.t_b).asDiagonal();
  out.rho0 = kron(tau_a, kron(rc, tau_b));
  return out;
}

void ThreeQubitParams::validate() const {
  if (!(t_a > 0 && t_a < 1 && t_b > 0 && t_b < 1))
    throw ModelError("three-qubit: t_a, t_b must lie in (0,1)");
  if (!(gamma_a > 0 && gamma_b > 0)) throw ModelError("three-qubit: rates must be positive");
}

QrmModel build_three_qubit(const ThreeQubitParams& p) {
  p.validate();
  QrmModel m;
  m.dims = {2, 2, 2};
  m.reset_a.tau = Eigen::Vector2cd(p.t_a, 1 - p.t_a).asDiagonal();
  m.reset_a.gamma = p.gamma_a;
  m.reset_b.tau = Eigen::Vector2cd(p.t_b, 1 - p.t_b).asDiagonal();
  m.reset_b.gamma = p.gamma_b;
  const CMat n1 = Eigen::Vector2cd(0, 1).asDiagonal();           // |1><1|
  const CMat flip = dyad(basis_vec(4, 1), basis_vec(4, 2));      // |01><10| on two qubits
  const CMat ff = flip + flip.adjoint();
  CMat h = p.u * (lift_ac(kron(n1, n1), m.dims) + lift_cb(kron(n1, n1), m.dims));
  h += p.j_alpha * lift_ac(ff, m.dims) + p.j_beta * lift_cb(ff, m.dims);
  m.h_coupling = h;
  if (p.e_a != 0) m.h_a = p.e_a * n1;
  if (p.e_b != 0) m.h_b = p.e_b * n1;
  if (p.e_c != 0) m.h_c = p.e_c * n1;
  m.g = p.g;
  m.validate();
  return m;
}

QubitNQubitParams three_qubit_as_n2(const ThreeQubitParams& p) {
  QubitNQubitParams q;
  q.n = 2;
  q.a_g = RVec::Zero(2);
  q.a_e = RVec::Zero(2);
  q.b_down = RVec::Zero(2);
  q.b_up = RVec::Zero(2);
  q.alpha = CVec::Zero(2);
  q.beta = CVec::Zero(2);
  q.a_e(0) = p.u;
  q.b_down(0) = p.u;
  q.alpha(1) = p.j_alpha;
  q.beta(0) = p.j_beta;
  q.t_a = p.t_a;
  q.t_b = 1 - p.t_b;  // C and B ground states are relabeled
  q.gamma_a = p.gamma_a;
  q.gamma_b = p.gamma_b;
  q.g = p.g;
  return q;
}

CMat three_qubit_relabeling() {
  CMat x = CMat::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  const CMat id = CMat::Identity(2, 2);
  return kron(id, kron(x, x));
}

RMat ThreeQubitClosedForms::transition(double s) const {
  const double tot = phi_plus + phi_minus;
  const double st = std::exp(-s_tilde_factor * s);
  RMat p(2, 2);
  p(0, 0) = (phi_plus + st * phi_minus) / tot;
  p(0, 1) = phi_minus * (1 - st) / tot;
  p(1, 0) = phi_plus * (1 - st) / tot;
  p(1, 1) = (phi_minus + st * phi_plus) / tot;
  return p;
}

ThreeQubitClosedForms three_qubit_closed_forms(const ThreeQubitParams& p) {
  p.validate();
  const double ga = p.gamma_a, gb = p.gamma_b, ta = p.t_a, tb = p.t_b;
  const double ja2 = p.j_alpha * p.j_alpha, jb2 = p.j_beta * p.j_beta;
  ThreeQubitClosedForms f;
  f.phi_plus = ga * jb2 * tb + gb * ja2 * ta;
  f.phi_minus = ga * jb2 * (1 - tb) + gb * ja2 * (1 - ta);
  f.s_tilde_factor = 2.0 * (f.phi_plus + f.phi_minus) / (ga * gb);

  f.rho_c0 = CMat::Zero(2, 2);
  const double tot = ga * jb2 + gb * ja2;
  f.rho_c0(0, 0) = f.phi_plus / tot;
  f.rho_c0(1, 1) = f.phi_minus / tot;

  f.phi_d.resize(2, 2);
  f.phi_d << f.phi_minus, -f.phi_plus, -f.phi_minus, f.phi_plus;
  f.phi_d *= -2.0 / (ga * gb);
  f.phi_d_nonzero_eig = -2.0 * tot / (ga * gb);

  f.h_bar_tau = CMat::Zero(2, 2);
  f.h_bar_tau(1, 1) = p.u * (2.0 - ta - tb);

  // R_1 = c (J_beta F (x) tau_B + J_alpha tau_A (x) F), F = i(|01><10| - |10><01|).
  const CMat flip = dyad(basis_vec(4, 1), basis_vec(4, 2));
  const CMat fmat = Complex(0, 1) * (flip - flip.adjoint());
  const CMat tau_a = Eigen::Vector2cd(ta, 1 - ta).asDiagonal();
  const CMat tau_b = Eigen::Vector2cd(tb, 1 - tb).asDiagonal();
  const double c1 = (ta - tb) * p.j_alpha * p.j_beta / tot;
  f.r1 = c1 * (p.j_beta * kron(fmat, tau_b) + p.j_alpha * kron(tau_a, fmat));

  // R_2: diagonal list plus the U-dependent off-diagonal structure.
  const double pref = 2.0 * p.j_alpha * p.j_beta * (ta - tb) / tot;
  RVec diag_list(8);
  diag_list << ta * tb * (ga - gb),
      -ta * (tb * ga + gb * (1 - tb)),
      ta * ga * (1 - tb) - tb * gb * (1 - ta),
      -(1 - tb) * (ta * ga + gb * (1 - ta)),
      tb * (gb * ta + ga * (1 - ta)),
      gb * ta * (1 - tb) - ga * tb * (1 - ta),
      (1 - ta) * (gb * tb + ga * (1 - tb)),
      (1 - ta) * (1 - tb) * (gb - ga);
  CMat r2 = CMat::Zero(8, 8);
  r2.diagonal() = (p.j_alpha * p.j_beta / (ga * gb)) * diag_list.cast<Complex>();
  const CMat f2 = flip + flip.adjoint();
  CMat gamma_cap_a = CMat::Zero(2, 2);
  gamma_cap_a(0, 0) = ga;
  gamma_cap_a(1, 1) = ga + gb / (1 - ta);
  CMat gamma_cap_b = CMat::Zero(2, 2);
  gamma_cap_b(0, 0) = gb;
  gamma_cap_b(1, 1) = gb + ga / (1 - tb);
  CMat off = (-p.j_alpha * p.u * (1 - ta) / (2 * gb)) * kron(CMat(tau_a * gamma_cap_a), f2) +
             (p.j_beta * p.u * (1 - tb) / (2 * ga)) * kron(f2, CMat(tau_b * gamma_cap_b));
  CMat d14 = dyad(basis_vec(8, 1), basis_vec(8, 4));
  CMat d63 = dyad(basis_vec(8, 6), basis_vec(8, 3));
  off += -0.5 * (ja2 * ta - jb2 * tb) * (d14 + d14.adjoint());
  off += 0.5 * (ja2 * (1 - ta) - jb2 * (1 - tb)) * (d63 + d63.adjoint());
  r2 += off / (ga + gb);
  f.r2 = pref * r2;

  // Diag r_C^(2) = diag(X2, -X2).
  const double brace =
      (ga + gb) * (jb2 * ga * (2 * ga - gb) - ja2 * gb * (2 * gb - ga)) +
      p.u * p.u *
          ((1 - ta) * ga * ga * (gb + (1 - ta) * ga) - (1 - tb) * gb * gb * (ga + (1 - tb) * gb));
  f.x2 = ja2 * jb2 * (ta - tb) / (ga * gb * (ga + gb) * tot * tot) * brace;
  return f;
}

std::vector<Index> diag_basis_labels(const CMat& diag_u) {
  std::vector<Index> labels(diag_u.cols());
  for (Index j = 0; j < diag_u.cols(); ++j) {
    Index best = 0;
    diag_u.col(j).cwiseAbs().maxCoeff(&best);
    labels[size_t(j)] = best;
  }
  return labels;
}

double ThreeQubitRegression::max() const {
  return std::max({dev_rho_c0, dev_phi_d, dev_sigma_phi_d, dev_h_bar_tau, dev_r1, dev_rc1, dev_r2,
                   dev_x2, dev_rc2_offdiag, dev_markov});
}

ThreeQubitRegression three_qubit_regression(const ThreeQubitParams& p, double tol) {
  ThreeQubitParams nodrive = p;
  nodrive.e_a = nodrive.e_b = nodrive.e_c = 0;  // the closed forms assume no drive
  const QrmModel model = build_three_qubit(nodrive);
  const auto forms = three_qubit_closed_forms(nodrive);
  PerturbationContext ctx(model);
  SteadyStateSolver solver(ctx);
  const auto series = solver.series(2);
  const auto labels = diag_basis_labels(solver.phi().diag_u);

  ThreeQubitRegression r;
  r.dev_h_bar_tau = (ctx.eff().h_bar_tau - forms.h_bar_tau).cwiseAbs().maxCoeff();

  // rho_C^(0): compare as operators on H_C.
  CMat rc0 = CMat::Zero(2, 2);
  for (Index j = 0; j < 2; ++j)
    rc0 += solver.coup().kernel(j) *
           (solver.phi().diag_u.col(j) * solver.phi().diag_u.col(j).adjoint());
  r.dev_rho_c0 = (rc0 - forms.rho_c0).cwiseAbs().maxCoeff();

  // Phi_D: permute machinery rows/columns into the computational labels.
  RMat phi_d_perm(2, 2);
  for (Index j = 0; j < 2; ++j)
    for (Index k = 0; k < 2; ++k)
      phi_d_perm(labels[size_t(j)], labels[size_t(k)]) = solver.phi().phi_d(j, k);
  r.dev_phi_d = (phi_d_perm - forms.phi_d).cwiseAbs().maxCoeff();

  const CVec sig = eigvals(solver.phi().phi_d.cast<Complex>());
  const double nz = sig.real().minCoeff();
  r.dev_sigma_phi_d = std::abs(nz - forms.phi_d_nonzero_eig);

  r.dev_r1 = (series.big_r.at(0) - forms.r1).cwiseAbs().maxCoeff();
  r.dev_rc1 = series.r_c.at(0).norm();
  r.dev_r2 = (series.big_r.at(1) - forms.r2).cwiseAbs().maxCoeff();

  // r_C^(2): diagonal (X2, -X2) in computational labels, off-diagonal zero.
  const CMat rc2 = series.r_c.at(1);
  r.dev_rc2_offdiag = ctx.offdiag_part(rc2).norm();
  const double x2_machine = (solver.phi().diag_u.col(0).adjoint() * rc2 *
                             solver.phi().diag_u.col(0))(0, 0).real();
  const double x2_expected = labels[0] == 0 ? forms.x2 : -forms.x2;
  r.dev_x2 = std::abs(x2_machine - x2_expected);

  // Markov kernel at several rescaled times.
  const RateMatrix rm = rate_matrix_from_phi(solver.phi());
  for (double s : {0.05, 0.3, 1.0, 3.0, 10.0}) {
    const RMat pk = transition_probabilities(rm, s).p;
    RMat perm(2, 2);
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j) perm(labels[size_t(i)], labels[size_t(j)]) = pk(i, j);
    r.dev_markov = std::max(r.dev_markov, (perm - forms.transition(s)).cwiseAbs().maxCoeff());
  }

  if (r.max() > tol) {
    std::ostringstream os;
    os << "three_qubit_regression: closed forms deviate from machinery beyond " << tol
       << " (rho_c0 " << r.dev_rho_c0 << ", phi_d " << r.dev_phi_d << ", sigma " << r.dev_sigma_phi_d
       << ", h_bar " << r.dev_h_bar_tau << ", r1 " << r.dev_r1 << ", rc1 " << r.dev_rc1 << ", r2 "
       << r.dev_r2 << ", x2 " << r.dev_x2 << ", rc2-offdiag " << r.dev_rc2_offdiag << ", markov "
       << r.dev_markov << ")";
    throw NumericError(os.str());
  }
  return r;
}

}  // namespace qrm
