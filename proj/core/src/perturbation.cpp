#include "qrm/perturbation.hpp"

#include <algorithm>
#include <cmath>

namespace qrm {

const char* to_string(DriveBranch b) {
  switch (b) {
    case DriveBranch::NoDrive: return "no-drive";
    case DriveBranch::HcZero: return "hc-zero";
    case DriveBranch::HcNonzero: return "hc-nonzero";
  }
  return "?";
}

DriveBranch classify_drive(const QrmModel& model) {
  if (model.has_hc()) return DriveBranch::HcNonzero;
  if (model.has_ha() || model.has_hb()) return DriveBranch::HcZero;
  return DriveBranch::NoDrive;
}

SpecCheck spec_check(const RVec& eigs, double rel_tol) {
  SpecCheck c;
  const Index n = eigs.size();
  const double scale = std::max(1.0, eigs.cwiseAbs().maxCoeff());
  RVec s = eigs;
  std::sort(s.data(), s.data() + n);
  c.min_gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i + 1 < n; ++i) c.min_gap = std::min(c.min_gap, s(i + 1) - s(i));
  c.simple = c.min_gap > rel_tol * scale;
  std::vector<double> bohr;
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k)
      if (j != k) bohr.push_back(s(j) - s(k));
  std::sort(bohr.begin(), bohr.end());
  c.min_bohr_gap = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < bohr.size(); ++i)
    c.min_bohr_gap = std::min(c.min_bohr_gap, bohr[i + 1] - bohr[i]);
  c.bohr_distinct = c.simple && c.min_bohr_gap > rel_tol * scale;
  return c;
}

EffectiveHamiltonian effective_hamiltonians(const QrmModel& model) {
  const auto& d = model.dims;
  const CMat& h = model.h_coupling;
  if (h.size() == 0) throw ModelError("effective_hamiltonians: model has no coupling");
  EffectiveHamiltonian e;
  const CMat weights = kron(model.reset_a.tau, kron(CMat::Identity(d.n_c, d.n_c), model.reset_b.tau));
  CMat hb = partial_trace(CMat(h * weights), d, Part::AB);
  e.h_bar_tau = (hb + hb.adjoint()) / 2.0;
  CMat hba = partial_trace(CMat(h * lift_a(model.reset_a.tau, d)), d, Part::A);
  e.h_bar_tau_a = (hba + hba.adjoint()) / 2.0;
  CMat hbb = partial_trace(CMat(h * lift_b(model.reset_b.tau, d)), d, Part::B);
  e.h_bar_tau_b = (hbb + hbb.adjoint()) / 2.0;
  e.tau_basis = herm_eig(e.h_bar_tau);
  e.spec = spec_check(e.tau_basis.values);
  return e;
}

PerturbationContext::PerturbationContext(const QrmModel& model, const Tolerances& tol)
    : model_(model), tol_(tol) {
  model_.validate(tol_);
  if (model_.h_coupling.size() == 0)
    throw ModelError("PerturbationContext: model has no coupling Hamiltonian");
  branch_ = classify_drive(model_);
  l0_ = std::make_shared<UncoupledOperator>(model_, tol_);
  eff_ = effective_hamiltonians(model_);
  if (branch_ == DriveBranch::HcNonzero) {
    const HermEig ec = herm_eig(model_.h_c);
    diag_u_ = ec.vectors;
    diag_e_ = ec.values;
    spec_ = spec_check(ec.values);
  } else {
    diag_u_ = eff_.tau_basis.vectors;
    diag_e_ = eff_.tau_basis.values;
    spec_ = eff_.spec;
  }
}

void PerturbationContext::require_spec() const {
  if (spec_.ok()) return;
  const char* which = branch_ == DriveBranch::HcNonzero ? "Spec(H_C)" : "Spec(H_bar_tau)";
  throw AssumptionError(std::string(which) + " fails: min gap " + std::to_string(spec_.min_gap) +
                        ", min Bohr gap " + std::to_string(spec_.min_bohr_gap));
}

CMat PerturbationContext::embed_c(const CMat& rho_c) const {
  return kron(model_.reset_a.tau, kron(rho_c, model_.reset_b.tau));
}

CMat PerturbationContext::diag_part(const CMat& rho_c) const {
  const CMat in_basis = diag_u_.adjoint() * rho_c * diag_u_;
  return diag_u_ * in_basis.diagonal().asDiagonal() * diag_u_.adjoint();
}

CMat PerturbationContext::offdiag_part(const CMat& rho_c) const {
  return rho_c - diag_part(rho_c);
}

CMat PerturbationContext::inv_comm_hbar(const CMat& y, double ref_scale) const {
  const Index n = diag_e_.size();
  const double scale = std::max(1.0, diag_e_.cwiseAbs().maxCoeff());
  CMat yb = diag_u_.adjoint() * y * diag_u_;
  const double diag_norm = yb.diagonal().norm();
  if (diag_norm > 1e-8 * std::max({yb.norm(), ref_scale, 1e-300}))
    throw NumericError("inv_comm_hbar: argument has a diagonal component (off range)");
  CMat out = CMat::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k) {
      if (j == k) continue;
      const double gap = diag_e_(j) - diag_e_(k);
      if (std::abs(gap) < 1e-8 * scale)
        throw AssumptionError("inv_comm_hbar: near-degenerate Bohr gap (Spec violation)");
      out(j, k) = yb(j, k) / gap;
    }
  return diag_u_ * out * diag_u_.adjoint();
}

SuperOp q0_l1_q0(const PerturbationContext& ctx) {
  const auto& model = ctx.model();
  const Index n = model.dims.total();
  if (ctx.branch() == DriveBranch::HcNonzero) {
    ctx.require_spec();
    // Generic case: the first-order reduced map vanishes identically.
    SuperOp direct = SuperOp::from_map(n, [&](const CMat& rho) -> CMat {
      const CMat mid = Complex(0, -1) * (model.h_coupling * ctx.l0().q0(rho) -
                                         ctx.l0().q0(rho) * model.h_coupling);
      return ctx.l0().q0(mid);
    });
    if (direct.norm() > 1e-10 * std::max(1.0, model.h_coupling.norm()))
      throw NumericError("q0_l1_q0: expected zero map for H_C != 0");
    return SuperOp::zero(n);
  }
  const CMat hbar = ctx.eff().h_bar_tau;
  return SuperOp::from_map(n, [&](const CMat& rho) -> CMat {
    const CMat rc = partial_trace(rho, model.dims, Part::AB);
    return ctx.embed_c(CMat(Complex(0, -1) * (hbar * rc - rc * hbar)));
  });
}

std::vector<CMat> h_operators(const PerturbationContext& ctx) {
  if (ctx.branch() != DriveBranch::NoDrive)
    throw ModelError("h_operators: defined for models without Hamiltonian drive");
  const auto& model = ctx.model();
  const auto& d = model.dims;
  const double ga = model.reset_a.gamma, gb = model.reset_b.gamma;
  const CMat& h = model.h_coupling;
  const CMat& hta = ctx.eff().h_bar_tau_a;  // on H_C (x) H_B
  const CMat& htb = ctx.eff().h_bar_tau_b;  // on H_A (x) H_C
  const HilbertDims cb{1, d.n_c, d.n_b};
  const HilbertDims ac{d.n_a, d.n_c, 1};
  std::vector<CMat> out;
  out.reserve(d.n_c);
  for (Index k = 0; k < d.n_c; ++k) {
    const CMat pk = ctx.diag_u().col(k) * ctx.diag_u().col(k).adjoint();
    const CMat xk = ctx.embed_c(pk);
    CMat hk = (2.0 / (ga + gb)) * partial_trace(CMat(h * xk * h), d, Part::AB);
    hk += (2.0 * (ga / gb) / (ga + gb)) *
          partial_trace(CMat(hta * kron(pk, model.reset_b.tau) * hta), cb, Part::B);
    hk += (2.0 * (gb / ga) / (ga + gb)) *
          partial_trace(CMat(htb * kron(model.reset_a.tau, pk) * htb), ac, Part::A);
    out.push_back(std::move(hk));
  }
  return out;
}

PhiMaps build_phi(const PerturbationContext& ctx) {
  ctx.require_spec();
  const auto& model = ctx.model();
  const Index nc = model.dims.n_c;
  const CMat& h = model.h_coupling;
  auto comm = [&](const CMat& x) { return CMat(h * x - x * h); };
  auto phi_apply = [&](const CMat& e) {
    const CMat xd = ctx.diag_part(e);
    return partial_trace(comm(ctx.l0().s0(comm(ctx.embed_c(xd)))), model.dims, Part::AB);
  };

  PhiMaps maps;
  maps.branch = ctx.branch();
  maps.diag_u = ctx.diag_u();
  maps.diag_e = ctx.diag_e();
  maps.phi = SuperOp::from_map(nc, phi_apply);
  maps.phi_d.resize(nc, nc);
  for (Index k = 0; k < nc; ++k) {
    const CMat pk = ctx.diag_u().col(k) * ctx.diag_u().col(k).adjoint();
    const CMat col = phi_apply(pk);
    for (Index j = 0; j < nc; ++j) {
      const Complex v = ctx.diag_u().col(j).dot(col * ctx.diag_u().col(j));
      maps.phi_d(j, k) = v.real();
      maps.imag_max = std::max(maps.imag_max, std::abs(v.imag()));
    }
  }
  maps.column_sum_max = maps.phi_d.colwise().sum().cwiseAbs().maxCoeff();
  maps.offdiag_min = 0.0;
  for (Index j = 0; j < nc; ++j)
    for (Index k = 0; k < nc; ++k)
      if (j != k) maps.offdiag_min = std::min(maps.offdiag_min, maps.phi_d(j, k));

  if (ctx.branch() == DriveBranch::NoDrive) {
    const auto hops = h_operators(ctx);
    RMat hr = RMat::Zero(nc, nc);
    for (Index k = 0; k < nc; ++k) {
      double colsum = 0;
      for (Index j = 0; j < nc; ++j) {
        if (j == k) continue;
        const double hjk = ctx.diag_u().col(j).dot(hops[k] * ctx.diag_u().col(j)).real();
        hr(j, k) = hjk;
        colsum += hjk;
      }
      hr(k, k) = -colsum;
    }
    const double dev = (hr - maps.phi_d).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, maps.phi_d.cwiseAbs().maxCoeff());
    if (dev > 1e-10 * scale)
      throw NumericError("build_phi: definitional and h(k) routes disagree by " +
                         std::to_string(dev));
    maps.phi_d_h_route = std::move(hr);
  }
  return maps;
}

RMat h_matrix_from_offdiag(const RMat& offdiag) {
  const Index n = offdiag.rows();
  RMat h = RMat::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k)
      if (j != k) h(j, k) = -offdiag(j, k);
  for (Index j = 0; j < n; ++j) h(j, j) = -h.col(j).sum();
  return h;
}

bool coup_row_criterion(const RMat& h_matrix, int* witness) {
  const Index n = h_matrix.rows();
  const double thresh = 1e-12 * std::max(1.0, h_matrix.cwiseAbs().maxCoeff());
  for (Index j = 0; j < n; ++j) {
    bool all_positive = true;
    for (Index k = 0; k < n; ++k) {
      if (k == j) continue;
      if (-h_matrix(j, k) <= thresh) {
        all_positive = false;
        break;
      }
    }
    if (all_positive) {
      if (witness) *witness = int(j);
      return true;
    }
  }
  if (witness) *witness = -1;
  return false;
}

CoupReport check_coup(const PhiMaps& phi, const Tolerances& tol) {
  const Index nc = phi.phi_d.rows();
  CoupReport rep;
  rep.rank = numeric_rank(phi.phi_d.cast<Complex>(), tol.rank_cutoff);
  rep.holds = rep.rank == nc - 1;
  const NullSpace ns = null_space(phi.phi_d.cast<Complex>(), tol.rank_cutoff);
  if (ns.basis.cols() >= 1) {
    CVec v = ns.basis.col(0);
    const Complex s = v.sum();
    if (std::abs(s) > 1e-10) {
      v /= s;
    } else {
      v /= v.norm();  // reported unnormalizable kernel (sum ~ 0)
    }
    rep.kernel.resize(nc);
    for (Index i = 0; i < nc; ++i) rep.kernel(i) = v(i).real();
    rep.kernel_min = rep.kernel.minCoeff();
  }
  if (phi.phi_d_h_route) {
    rep.combinatorial_available = true;
    const RMat h = -(*phi.phi_d_h_route);
    rep.combinatorial_holds = coup_row_criterion(h, &rep.witness_row);
  }
  return rep;
}

SteadyStateSolver::SteadyStateSolver(const PerturbationContext& ctx)
    : ctx_(ctx), phi_(build_phi(ctx)), coup_(check_coup(phi_, ctx.tolerances())) {
  phi_d_pinv_ = pinv(phi_.phi_d.cast<Complex>(), ctx.tolerances().rank_cutoff).real();
}

void SteadyStateSolver::require_coup() const {
  if (!coup_.holds)
    throw AssumptionError("Coup fails: rank(Phi_D) = " + std::to_string(coup_.rank) +
                          " < n_C - 1 = " + std::to_string(phi_.phi_d.rows() - 1));
}

CMat SteadyStateSolver::rho0() const {
  require_coup();
  const Index nc = phi_.phi_d.rows();
  CMat rc = CMat::Zero(nc, nc);
  for (Index j = 0; j < nc; ++j)
    rc += coup_.kernel(j) * (phi_.diag_u.col(j) * phi_.diag_u.col(j).adjoint());
  return ctx_.embed_c(rc);
}

RVec SteadyStateSolver::solve_phi_d(const RVec& rhs, double ref_scale) const {
  const double scale = std::max({rhs.norm(), ref_scale, 1e-300});
  if (std::abs(rhs.sum()) > 1e-8 * scale)
    throw NumericError("solve_phi_d: right-hand side is not traceless");
  RVec x = phi_d_pinv_ * rhs;
  x -= x.sum() * coup_.kernel;  // unique traceless representative
  if ((phi_.phi_d * x - rhs).norm() > 1e-8 * scale)
    throw NumericError("solve_phi_d: residual too large (rhs off range)");
  return x;
}

SteadyStateSolver::Step SteadyStateSolver::advance(const CMat& rho_prev) const {
  const auto& model = ctx_.model();
  const CMat& h = model.h_coupling;
  const Index nc = model.dims.n_c;
  auto comm = [&](const CMat& x) { return CMat(h * x - x * h); };
  auto diag_coords = [&](const CMat& rc) {
    RVec d(nc);
    for (Index j = 0; j < nc; ++j)
      d(j) = phi_.diag_u.col(j).dot(rc * phi_.diag_u.col(j)).real();
    return d;
  };
  auto from_coords = [&](const RVec& d) {
    CMat rc = CMat::Zero(nc, nc);
    for (Index j = 0; j < nc; ++j)
      rc += d(j) * (phi_.diag_u.col(j) * phi_.diag_u.col(j).adjoint());
    return rc;
  };

  Step st;
  const CMat z1 = ctx_.l0().s0(comm(rho_prev));
  st.big_r = Complex(0, 1) * z1;
  if (ctx_.branch() == DriveBranch::HcNonzero) {
    // r_C^(j) is purely diagonal; fixed by solvability one order up.
    const CMat t2full = comm(ctx_.l0().s0(comm(st.big_r)));
    const CMat t2 = partial_trace(t2full, model.dims, Part::AB);
    const RVec d = solve_phi_d(RVec(-diag_coords(t2)), t2full.norm());
    st.r_c = from_coords(d);
  } else {
    const CMat t1 = partial_trace(comm(z1), model.dims, Part::AB);
    const CMat od = Complex(0, -1) * ctx_.inv_comm_hbar(ctx_.offdiag_part(t1), t1.norm());
    const CMat x2 = st.big_r + ctx_.embed_c(od);
    const CMat t2full = comm(ctx_.l0().s0(comm(x2)));
    const CMat t2 = partial_trace(t2full, model.dims, Part::AB);
    const RVec d = solve_phi_d(RVec(-diag_coords(t2)), t2full.norm());
    st.r_c = od + from_coords(d);
  }
  st.rho = st.big_r + ctx_.embed_c(st.r_c);
  return st;
}

CMat SteadyStateSolver::apply_map(const CMat& rho_prev) const { return advance(rho_prev).rho; }

SteadySeries SteadyStateSolver::series(int order) const {
  require_coup();
  ctx_.require_spec();
  const auto& model = ctx_.model();
  SteadySeries s;
  s.branch = ctx_.branch();
  s.kernel = coup_.kernel;
  s.rho.push_back(rho0());
  for (int j = 1; j <= order; ++j) {
    Step st = advance(s.rho.back());
    const CMat lhs = apply_uncoupled(model, st.rho) +
                     Complex(0, -1) * (model.h_coupling * s.rho.back() -
                                       s.rho.back() * model.h_coupling);
    s.hierarchy_residual.push_back(lhs.norm());
    s.big_r.push_back(st.big_r);
    s.r_c.push_back(st.r_c);
    s.rho.push_back(st.rho);
  }
  s.g0_estimate = radius_estimate();
  return s;
}

CMat SteadySeries::partial_sum(double g) const { return partial_sum(g, int(rho.size()) - 1); }

CMat SteadySeries::partial_sum(double g, int upto) const {
  CMat out = rho.at(0);
  double gk = 1.0;
  for (int j = 1; j <= upto; ++j) {
    gk *= g;
    out += gk * rho.at(size_t(j));
  }
  return out;
}

double SteadyStateSolver::radius_estimate() const {
  if (radius_ >= 0) return 1.0 / std::max(radius_, 1e-300);
  const Index n = ctx_.model().dims.total();
  const Index dim = n * n;
  if (dim <= 400) {
    // Cheap enough to assemble the map on the operator basis and solve exactly.
    CMat rmat(dim, dim);
    CMat e = CMat::Zero(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) {
        e(i, j) = 1;
        rmat.col(j * n + i) = vectorize(apply_map(e));
        e(i, j) = 0;
      }
    radius_ = eigvals(rmat).cwiseAbs().maxCoeff();
  } else {
    const auto op = [&](const CVec& v) { return vectorize(apply_map(devectorize(v, n))); };
    radius_ = spectral_radius_arnoldi(op, dim, 90, 3);
  }
  return 1.0 / std::max(radius_, 1e-300);
}

ResolventSteadyState SteadyStateSolver::resolvent(double g, int max_terms, double rel_tol) const {
  require_coup();
  ResolventSteadyState out;
  out.g0_estimate = radius_estimate();
  out.beyond_radius = std::abs(g) >= out.g0_estimate;
  CMat sum = rho0();
  CMat term = sum;
  const double base = sum.norm();
  int small_streak = 0;
  for (int k = 1; k <= max_terms; ++k) {
    term = g * apply_map(term);
    sum += term;
    out.iterations = k;
    const double t = term.norm();
    if (t <= rel_tol * std::max(base, sum.norm())) {
      if (++small_streak >= 2) {
        out.converged = true;
        break;
      }
    } else {
      small_streak = 0;
    }
    if (t > 1e9 * base) break;  // diverging Neumann series
  }
  const Complex tr = sum.trace();
  if (std::abs(tr) > 1e-12) sum /= tr;
  out.rho = sum;
  out.residual =
      apply_lindbladian(ctx_.model(), sum, g).norm() / std::max(sum.norm(), 1e-300);
  return out;
}

std::vector<EigenvalueCorrection> second_order_eigenvalues(const PerturbationContext& ctx) {
  if (ctx.branch() == DriveBranch::HcNonzero)
    throw AssumptionError("second_order_eigenvalues: requires H_C = 0");
  ctx.require_spec();
  const auto& model = ctx.model();
  const CMat& h = model.h_coupling;
  const Index nc = model.dims.n_c;
  auto comm = [&](const CMat& x) { return CMat(h * x - x * h); };
  std::vector<EigenvalueCorrection> out;
  out.reserve(nc * (nc - 1));
  for (Index j = 0; j < nc; ++j)
    for (Index k = 0; k < nc; ++k) {
      if (j == k) continue;
      const CMat pjk = ctx.diag_u().col(j) * ctx.diag_u().col(k).adjoint();
      const CMat pkj = ctx.diag_u().col(k) * ctx.diag_u().col(j).adjoint();
      const CMat x = comm(ctx.l0().s0(comm(ctx.embed_c(pjk))));
      EigenvalueCorrection c;
      c.j = j;
      c.k = k;
      c.bohr = ctx.diag_e()(j) - ctx.diag_e()(k);
      c.lambda_tilde = (lift_c(pkj, model.dims) * x).trace();
      out.push_back(c);
    }
  return out;
}

double eigenvalue_bound_coefficient(double gamma_a, double gamma_b) {
  return (gamma_a * gamma_a + gamma_a * gamma_b + gamma_b * gamma_b) /
         (gamma_a * gamma_b * (gamma_a + gamma_b));
}

}  // namespace qrm
