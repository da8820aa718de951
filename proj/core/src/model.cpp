#include "qrm/model.hpp"

#include <cmath>

namespace qrm {

namespace {

void check_density(const CMat& tau, Index dim, const char* what, const Tolerances& tol) {
  if (tau.rows() != dim || tau.cols() != dim)
    throw ModelError(std::string(what) + ": wrong dimension");
  if (!tau.allFinite()) throw ModelError(std::string(what) + ": non-finite entries");
  if (herm_deviation(tau) > tol.hermiticity)
    throw ModelError(std::string(what) + ": not Hermitian");
  if (std::abs(tau.trace() - Complex(1.0)) > 1e-10)
    throw ModelError(std::string(what) + ": trace != 1");
  const RVec ev = herm_eig((tau + tau.adjoint()) / 2.0).values;
  if (ev.minCoeff() < -1e-10)
    throw ModelError(std::string(what) + ": not positive semidefinite");
}

void check_hamiltonian(const CMat& h, Index dim, const char* what, const Tolerances& tol) {
  if (h.size() == 0) return;
  if (h.rows() != dim || h.cols() != dim)
    throw ModelError(std::string(what) + ": wrong dimension");
  if (!h.allFinite()) throw ModelError(std::string(what) + ": non-finite entries");
  if (herm_deviation(h) > tol.hermiticity) throw ModelError(std::string(what) + ": not Hermitian");
}

double comm_deviation(const CMat& a, const CMat& b) {
  return (a * b - b * a).cwiseAbs().maxCoeff();
}

}  // namespace

void ResetSpec::validate(Index expected_dim, const Tolerances& tol) const {
  check_density(tau, expected_dim, "reset state", tol);
  if (!(gamma > 0)) throw ModelError("reset rate must be positive");
}

void QrmModel::validate(const Tolerances& tol, Index dim_cap) const {
  dims.validate(dim_cap);
  reset_a.validate(dims.n_a, tol);
  reset_b.validate(dims.n_b, tol);
  check_hamiltonian(h_a, dims.n_a, "h_a", tol);
  check_hamiltonian(h_b, dims.n_b, "h_b", tol);
  check_hamiltonian(h_c, dims.n_c, "h_c", tol);
  check_hamiltonian(h_coupling, dims.total(), "h_coupling", tol);
  if (h_a.size() > 0 && comm_deviation(h_a, reset_a.tau) > tol.hermiticity)
    throw ModelError("[h_a, tau_a] != 0");
  if (h_b.size() > 0 && comm_deviation(h_b, reset_b.tau) > tol.hermiticity)
    throw ModelError("[h_b, tau_b] != 0");
  if (!std::isfinite(g)) throw ModelError("coupling constant g must be finite");
}

CMat QrmModel::ha_or_zero() const {
  return h_a.size() > 0 ? h_a : CMat::Zero(dims.n_a, dims.n_a);
}
CMat QrmModel::hb_or_zero() const {
  return h_b.size() > 0 ? h_b : CMat::Zero(dims.n_b, dims.n_b);
}
CMat QrmModel::hc_or_zero() const {
  return h_c.size() > 0 ? h_c : CMat::Zero(dims.n_c, dims.n_c);
}

CMat QrmModel::h0_full() const {
  CMat h0 = CMat::Zero(dims.total(), dims.total());
  if (has_ha()) h0 += lift_a(h_a, dims);
  if (has_hc()) h0 += lift_c(h_c, dims);
  if (has_hb()) h0 += lift_b(h_b, dims);
  return h0;
}

void SimpleQrm::validate(const Tolerances& tol) const {
  const Index n = hamiltonian.rows();
  check_hamiltonian(hamiltonian, n, "simple QRM hamiltonian", tol);
  if (resets.empty()) throw ModelError("simple QRM needs at least one reset channel");
  for (const auto& r : resets) r.validate(n, tol);
}

std::pair<double, CMat> SimpleQrm::combined() const {
  double gamma = 0;
  CMat t = CMat::Zero(hamiltonian.rows(), hamiltonian.cols());
  for (const auto& r : resets) {
    gamma += r.gamma;
    t += r.gamma * r.tau;
  }
  t /= gamma;
  return {gamma, t};
}

CMat apply_dissipator(const QrmModel& model, const CMat& rho) {
  const auto& d = model.dims;
  const CMat tra = partial_trace(rho, d, Part::A);
  const CMat trb = partial_trace(rho, d, Part::B);
  return model.reset_a.gamma * (kron(model.reset_a.tau, tra) - rho) +
         model.reset_b.gamma * (kron(trb, model.reset_b.tau) - rho);
}

SuperOp build_dissipator(const QrmModel& model) {
  return SuperOp::from_map(model.dims.total(),
                           [&](const CMat& rho) -> CMat { return apply_dissipator(model, rho); });
}

CMat apply_uncoupled(const QrmModel& model, const CMat& rho) {
  const CMat h0 = model.h0_full();
  return Complex(0, -1) * (h0 * rho - rho * h0) + apply_dissipator(model, rho);
}

CMat apply_lindbladian(const QrmModel& model, const CMat& rho, double g) {
  const CMat h = model.h0_full() + g * model.h_coupling;
  return Complex(0, -1) * (h * rho - rho * h) + apply_dissipator(model, rho);
}

SuperOp build_uncoupled(const QrmModel& model) {
  SuperOp d = build_dissipator(model);
  if (model.has_drive())
    d = d - Complex(0, 1) * SuperOp::commutator(model.h0_full());
  return d;
}

SuperOp build_lindbladian(const QrmModel& model, double g) {
  SuperOp l = build_uncoupled(model);
  if (g != 0.0 && model.h_coupling.size() > 0)
    l = l - Complex(0, g) * SuperOp::commutator(model.h_coupling);
  return l;
}

SuperOp build_lindbladian(const QrmModel& model) { return build_lindbladian(model, model.g); }

KrausSet build_kraus_dissipator(const CMat& tau, Index other_dim, bool reset_on_left) {
  const Index n = tau.rows();
  const HermEig etau = herm_eig(tau);
  if (etau.values.minCoeff() < -1e-10)
    throw ModelError("build_kraus_dissipator: tau not positive semidefinite");
  const CMat id = CMat::Identity(other_dim, other_dim);
  KrausSet set;
  set.ops.reserve(n * n);
  for (Index j = 0; j < n; ++j) {
    const double tj = std::max(etau.values(j), 0.0);
    const double sq = std::sqrt(tj);
    for (Index k = 0; k < n; ++k) {
      const CMat jk = sq * etau.vectors.col(j) * etau.vectors.col(k).adjoint();
      set.ops.push_back(reset_on_left ? kron(jk, id) : kron(id, jk));
    }
  }
  const Index full = n * other_dim;
  set.assembled = SuperOp::from_map(full, [&](const CMat& rho) -> CMat {
    CMat out = CMat::Zero(full, full);
    for (const auto& a : set.ops) {
      const CMat aa = a.adjoint() * a;
      out += a * rho * a.adjoint() - 0.5 * (aa * rho + rho * aa);
    }
    return out;
  });
  return set;
}

KrausSet build_kraus_set(const QrmModel& model) {
  const auto& d = model.dims;
  KrausSet a = build_kraus_dissipator(model.reset_a.tau, d.n_c * d.n_b, true);
  KrausSet b = build_kraus_dissipator(model.reset_b.tau, d.n_a * d.n_c, false);
  KrausSet out;
  const double sa = std::sqrt(model.reset_a.gamma), sb = std::sqrt(model.reset_b.gamma);
  for (const auto& op : a.ops) out.ops.push_back(sa * op);
  for (const auto& op : b.ops) out.ops.push_back(sb * op);
  out.assembled = SuperOp(d.total(), model.reset_a.gamma * a.assembled.m +
                                         model.reset_b.gamma * b.assembled.m);
  return out;
}

GenCheck simple_qrm_gen_check(const SimpleQrm& q, double rel_tol) {
  const HermEig eh = herm_eig(q.hamiltonian);
  const Index n = eh.values.size();
  const double scale = std::max(1.0, eh.values.cwiseAbs().maxCoeff());
  GenCheck c;
  c.min_gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i + 1 < n; ++i)
    c.min_gap = std::min(c.min_gap, eh.values(i + 1) - eh.values(i));
  if (n == 1) c.min_gap = std::numeric_limits<double>::infinity();
  c.simple = c.min_gap > rel_tol * scale;
  std::vector<double> bohr;
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k)
      if (j != k) bohr.push_back(eh.values(j) - eh.values(k));
  std::sort(bohr.begin(), bohr.end());
  c.min_bohr_gap = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < bohr.size(); ++i)
    c.min_bohr_gap = std::min(c.min_bohr_gap, bohr[i + 1] - bohr[i]);
  c.bohr_distinct = c.simple && c.min_bohr_gap > rel_tol * scale;
  return c;
}

SimpleQrmSolution simple_qrm_solve(const SimpleQrm& q, const CMat& rho0, double t) {
  q.validate();
  const auto [gamma, bigT] = q.combined();
  const GenCheck gen = simple_qrm_gen_check(q);
  SimpleQrmSolution sol;
  if (!gen.ok()) {
    // Degenerate spectrum or Bohr frequencies: flag and fall back on the
    // propagator.
    sol.gen_ok = false;
    sol.warning = gen.simple ? "degenerate Bohr frequencies; using expm fallback"
                             : "degenerate spectrum; using expm fallback";
    const Index n = q.hamiltonian.rows();
    SuperOp l = SuperOp::from_map(n, [&](const CMat& rho) -> CMat {
      return Complex(0, -1) * (q.hamiltonian * rho - rho * q.hamiltonian) +
             gamma * (bigT * rho.trace() - rho);
    });
    sol.state = devectorize(CVec(expm(CMat(t * l.m)) * vectorize(rho0)), n);
    return sol;
  }
  const HermEig eh = herm_eig(q.hamiltonian);
  const Index n = eh.values.size();
  const CMat r0 = eh.vectors.adjoint() * rho0 * eh.vectors;
  const CMat tt = eh.vectors.adjoint() * bigT * eh.vectors;
  const Complex tr0 = rho0.trace();
  CMat out(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k) {
      const Complex lam(gamma, eh.values(j) - eh.values(k));
      const Complex decay = std::exp(-t * lam);
      out(j, k) = decay * r0(j, k) + tr0 * gamma * tt(j, k) / lam * (1.0 - decay);
    }
  sol.state = eh.vectors * out * eh.vectors.adjoint();
  return sol;
}

CMat simple_qrm_steady_state(const SimpleQrm& q) {
  q.validate();
  const auto [gamma, bigT] = q.combined();
  const HermEig eh = herm_eig(q.hamiltonian);
  const Index n = eh.values.size();
  const CMat tt = eh.vectors.adjoint() * bigT * eh.vectors;
  CMat out(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k)
      out(j, k) = gamma * tt(j, k) / Complex(gamma, eh.values(j) - eh.values(k));
  return eh.vectors * out * eh.vectors.adjoint();
}

}  // namespace qrm
