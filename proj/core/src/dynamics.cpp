#include "qrm/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace qrm {

namespace {

void record_state_checks(PropagationResult& r, const CMat& state) {
  r.max_trace_drift = std::max(r.max_trace_drift, std::abs(state.trace() - Complex(1.0)));
  r.max_herm_deviation = std::max(r.max_herm_deviation, herm_deviation(state));
  const CMat sym = (state + state.adjoint()) / 2.0;
  const RVec ev = herm_eig(sym).values;
  r.min_eigenvalue = std::min(r.min_eigenvalue, ev.minCoeff());
}

}  // namespace

PropagationResult propagate_exact(const QrmModel& model, const CMat& rho0,
                                  std::span<const double> times, double g) {
  const SuperOp l = build_lindbladian(model, g);
  const Index n = model.dims.total();
  PropagationResult r;
  r.method = "exact";
  r.min_eigenvalue = 1.0;
  const CVec v0 = vectorize(rho0);
  for (double t : times) {
    const CMat state = devectorize(CVec(expm(CMat(t * l.m)) * v0), n);
    record_state_checks(r, state);
    r.times.push_back(t);
    r.states.push_back(state);
  }
  return r;
}

PropagationResult propagate_reduced(const PerturbationContext& ctx, const CMat& rho0,
                                    std::span<const double> times, double g) {
  ctx.require_spec();
  SteadyStateSolver solver(ctx);
  solver.require_coup();
  const PhiMaps& phi = solver.phi();
  const Index nc = ctx.model().dims.n_c;
  const CMat rc0 = partial_trace(rho0, ctx.model().dims, Part::AB);
  RVec d0(nc);
  for (Index j = 0; j < nc; ++j) d0(j) = phi.diag_u.col(j).dot(rc0 * phi.diag_u.col(j)).real();
  PropagationResult r;
  r.method = "reduced";
  r.min_eigenvalue = 1.0;
  for (double t : times) {
    const CMat e = expm(CMat((t * g * g * phi.phi_d).cast<Complex>()));
    const RVec dt = (e * d0.cast<Complex>()).real();
    CMat rc = CMat::Zero(nc, nc);
    for (Index j = 0; j < nc; ++j)
      rc += dt(j) * (phi.diag_u.col(j) * phi.diag_u.col(j).adjoint());
    const CMat state = ctx.embed_c(rc);
    record_state_checks(r, state);
    r.times.push_back(t);
    r.states.push_back(state);
  }
  return r;
}

double state_distance(const CMat& a, const CMat& b, ErrorNorm norm) {
  const CMat d = a - b;
  switch (norm) {
    case ErrorNorm::Frobenius:
      return d.norm();
    case ErrorNorm::Operator:
    case ErrorNorm::Trace: {
      const RVec sv = singular_values(d);
      return norm == ErrorNorm::Operator ? sv(0) : sv.sum();
    }
  }
  return d.norm();
}

ErrorScalingReport error_scaling_sweep(const PerturbationContext& ctx, const CMat& rho0,
                                       std::span<const double> g_values, double t_lo, double t_hi,
                                       int points, ErrorNorm norm) {
  ErrorScalingReport rep;
  rep.norm = norm;
  for (double g : g_values) {
    const auto grid = geometric_grid(t_lo / (g * g), t_hi / (g * g), points);
    const auto exact = propagate_exact(ctx.model(), rho0, grid, g);
    const auto reduced = propagate_reduced(ctx, rho0, grid, g);
    std::vector<double> errs(grid.size());
    double mx = 0;
    for (size_t i = 0; i < grid.size(); ++i) {
      errs[i] = state_distance(exact.states[i], reduced.states[i], norm);
      mx = std::max(mx, errs[i]);
    }
    rep.g_values.push_back(g);
    rep.times.push_back(grid);
    rep.errors.push_back(std::move(errs));
    rep.max_error.push_back(mx);
  }
  if (rep.g_values.size() >= 2) rep.exponent = fit_loglog(rep.g_values, rep.max_error);
  return rep;
}

double time_to_reach_steady(const QrmModel& model, const CMat& rho0, double g, double eps,
                            const CMat& steady, double t_max) {
  const SuperOp l = build_lindbladian(model, g);
  const Index n = model.dims.total();
  const CVec v0 = vectorize(rho0);
  auto dist = [&](double t) {
    return (devectorize(CVec(expm(CMat(t * l.m)) * v0), n) - steady).norm();
  };
  if (dist(0.0) <= eps) return 0.0;
  // Bracket on a geometric grid, then bisect.
  const auto grid = geometric_grid(t_max * 1e-6, t_max, 60);
  double lo = 0.0, hi = -1.0;
  for (double t : grid) {
    if (dist(t) <= eps) {
      hi = t;
      break;
    }
    lo = t;
  }
  if (hi < 0) throw NumericError("time_to_reach_steady: threshold not reached by t_max");
  for (int it = 0; it < 40 && (hi - lo) > 1e-3 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dist(mid) <= eps ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

GapDiagnostics spectral_gap_diagnostics(const PerturbationContext& ctx, double g) {
  GapDiagnostics d;
  // When H_C != 0 the first-order reduced operator vanishes: there are no
  // oscillating 0-group eigenvalues to correct or track.
  const std::vector<EigenvalueCorrection> corrections =
      ctx.branch() == DriveBranch::HcNonzero ? std::vector<EigenvalueCorrection>{}
                                             : second_order_eigenvalues(ctx);
  d.eta = std::numeric_limits<double>::infinity();
  for (const auto& c : corrections) d.eta = std::min(d.eta, std::abs(c.lambda_tilde.real()));
  if (corrections.empty()) d.eta = 0.0;

  const PhiMaps phi = build_phi(ctx);
  const CVec phi_eigs = eigvals(phi.phi_d.cast<Complex>());
  d.f_phi = phi_eigs.real().cwiseAbs().maxCoeff();

  const CVec spec = eigvals(build_lindbladian(ctx.model(), g).m);
  d.max_re_eigenvalue = spec.real().maxCoeff();

  // The 0-group: the m eigenvalues of smallest magnitude, m set by the branch.
  const Index nc = ctx.model().dims.n_c;
  const Index m = ctx.branch() == DriveBranch::HcNonzero ? nc : nc * nc;
  std::vector<Index> idx(spec.size());
  std::iota(idx.begin(), idx.end(), Index(0));
  std::sort(idx.begin(), idx.end(),
            [&](Index a, Index b) { return std::abs(spec(a)) < std::abs(spec(b)); });
  d.gamma_gap = std::numeric_limits<double>::infinity();
  for (Index i = m; i < spec.size(); ++i)
    d.gamma_gap = std::min(d.gamma_gap, -spec(idx[i]).real());

  std::vector<bool> taken(size_t(spec.size()), false);
  std::vector<Index> zero_group(idx.begin(), idx.begin() + m);
  for (const auto& c : corrections) {
    TrackedEigenvalue t;
    t.j = c.j;
    t.k = c.k;
    t.predicted = Complex(0, -g * c.bohr) + g * g * c.lambda_tilde;
    Index best = -1;
    double best_d = std::numeric_limits<double>::infinity(), second = best_d;
    for (Index cand : zero_group) {
      const double dd = std::abs(spec(cand) - t.predicted);
      if (dd < best_d) {
        second = best_d;
        best_d = dd;
        best = cand;
      } else {
        second = std::min(second, dd);
      }
    }
    t.numeric = spec(best);
    t.ambiguous = taken[best] || best_d > 0.5 * second;
    taken[best] = true;
    d.lambda_table.push_back(t);
  }
  return d;
}

}  // namespace qrm
