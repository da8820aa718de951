// Acceptance suite: one check per criterion, each printing a PASS/FAIL line.
// Run with no argument for the full suite, or with a criterion number.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <vector>

#include "qrm/dynamics.hpp"
#include "qrm/markov.hpp"
#include "qrm/model_io.hpp"
#include "test_util.hpp"

using namespace qrm;
using testing::Rng;

namespace {

struct Check {
  int id;
  std::string description;
  std::function<bool(std::string&)> run;
};

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CMat normalized_kernel(const QrmModel& m, double g, double tol = 1e-9) {
  const NullSpace ns = null_space(build_lindbladian(m, g).m, tol);
  if (ns.basis.cols() != 1) throw NumericError("kernel is not one-dimensional");
  CMat rho = devectorize(ns.basis.col(0), m.dims.total());
  rho /= rho.trace();
  return rho;
}

// Greedy multiset match; returns the largest pairing distance.
double multiset_distance(const CVec& a, const CVec& b) {
  std::vector<bool> used(size_t(b.size()), false);
  double worst = 0;
  for (Index i = 0; i < a.size(); ++i) {
    double best = 1e300;
    Index arg = -1;
    for (Index j = 0; j < b.size(); ++j) {
      if (used[size_t(j)]) continue;
      const double d = std::abs(a(i) - b(j));
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    used[size_t(arg)] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

ThreeQubitParams random_three_qubit(Rng& rng) {
  ThreeQubitParams p;
  p.u = rng.uniform(0.3, 1.5);
  p.j_alpha = rng.uniform(0.2, 1.0);
  p.j_beta = rng.uniform(0.2, 1.0);
  p.t_a = rng.uniform(0.15, 0.85);
  p.t_b = rng.uniform(0.15, 0.85);
  p.gamma_a = rng.uniform(0.5, 2.0);
  p.gamma_b = rng.uniform(0.5, 2.0);
  return p;
}

// 1. Dissipator spectrum with multiplicities on 20 random models.
bool criterion_1(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0;
  for (int it = 0; it < 20; ++it) {
    const HilbertDims dims{rng.integer(1, 3), rng.integer(1, 4), rng.integer(1, 3)};
    const QrmModel m = testing::random_model(rng, dims);
    const double ga = m.reset_a.gamma, gb = m.reset_b.gamma;
    const Index na2 = dims.n_a * dims.n_a, nb2 = dims.n_b * dims.n_b,
                nc2 = dims.n_c * dims.n_c;
    CVec expected(dims.total() * dims.total());
    Index k = 0;
    for (Index i = 0; i < nc2; ++i) expected(k++) = 0.0;
    for (Index i = 0; i < (na2 - 1) * nc2; ++i) expected(k++) = -ga;
    for (Index i = 0; i < (nb2 - 1) * nc2; ++i) expected(k++) = -gb;
    for (Index i = 0; i < (na2 - 1) * (nb2 - 1) * nc2; ++i) expected(k++) = -(ga + gb);
    const CVec numeric = eigvals(build_dissipator(m).m);
    worst = std::max(worst, multiset_distance(expected, numeric));
  }
  const double secs = elapsed_s(t0);
  char buf[128];
  std::snprintf(buf, sizeof buf, "max eigenvalue deviation %.2e, %.1f s", worst, secs);
  detail = buf;
  return worst <= 1e-8 && secs < 10.0;
}

// 2. Kraus-assembled dissipator equals the reset dissipator.
bool criterion_2(std::string& detail) {
  Rng rng(102);
  double worst = 0;
  for (int it = 0; it < 20; ++it) {
    const Index na = rng.integer(2, 3), rest = rng.integer(2, 6);
    const CMat tau = testing::random_density(rng, na);
    const KrausSet set = build_kraus_dissipator(tau, rest, it % 2 == 0);
    const HilbertDims dims =
        it % 2 == 0 ? HilbertDims{na, rest, 1} : HilbertDims{rest, 1, na};
    const SuperOp direct = SuperOp::from_map(na * rest, [&](const CMat& rho) -> CMat {
      if (it % 2 == 0) return kron(tau, partial_trace(rho, dims, Part::A)) - rho;
      return kron(partial_trace(rho, dims, Part::B), tau) - rho;
    });
    worst = std::max(worst, (set.assembled.m - direct.m).cwiseAbs().maxCoeff());
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "max entrywise deviation %.2e", worst);
  detail = buf;
  return worst <= 1e-12;
}

// 3. Analytic eigentable: residuals and completeness.
bool criterion_3(std::string& detail) {
  Rng rng(103);
  double worst_res = 0, worst_cond = 0;
  bool complete = true;
  for (const HilbertDims dims : {HilbertDims{2, 3, 2}, HilbertDims{3, 2, 2}, HilbertDims{2, 2, 3}}) {
    const QrmModel m = testing::random_model(
        rng, dims, {.with_ha = true, .with_hb = true, .with_hc = true});
    UncoupledOperator l0(m);
    worst_res = std::max(worst_res, l0.verify_residuals());
    worst_cond = std::max(worst_cond, l0.basis_condition());
    CMat vmat(dims.total() * dims.total(), Index(l0.table().size()));
    for (size_t i = 0; i < l0.table().size(); ++i) vmat.col(Index(i)) = vectorize(l0.table()[i].vec);
    complete = complete && numeric_rank(vmat, 1e-9) == dims.total() * dims.total();
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "max residual %.2e, basis condition %.1f, complete %d", worst_res,
                worst_cond, int(complete));
  detail = buf;
  return worst_res <= 1e-10 && complete;
}

// 4. Unique steady state for small g.
bool criterion_4(std::string& detail) {
  Rng rng(104);
  std::vector<QrmModel> models;
  models.push_back(preset_model("three-qubit"));
  while (models.size() < 11) {
    const QrmModel m = testing::random_model(rng, {2, 2, 2});
    PerturbationContext ctx(m);
    if (!ctx.spec().ok()) continue;
    if (!check_coup(build_phi(ctx)).holds) continue;
    models.push_back(m);
  }
  int checked = 0;
  for (const auto& m : models)
    for (double g : {1e-1, 1e-2, 1e-3}) {
      if (null_space(build_lindbladian(m, g).m, 1e-9).basis.cols() != 1) {
        detail = "kernel dimension != 1 at g=" + std::to_string(g);
        return false;
      }
      ++checked;
    }
  detail = std::to_string(checked) + " kernels, all one-dimensional";
  return true;
}

// 5. Series convergence order in both branches.
bool criterion_5(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string slopes;
  for (int branch = 0; branch < 2; ++branch) {
    std::map<std::string, std::string> overrides;
    if (branch == 1) {
      // H_C != 0 branch; couplings scaled so the K=3 error at the smallest g
      // stays above the kernel-extraction floor.
      overrides = {{"e_c", "0.9"}, {"j_alpha", "1.12"}, {"j_beta", "0.64"}, {"u", "1.6"}};
    }
    const QrmModel m = preset_model("three-qubit", overrides);
    PerturbationContext ctx(m);
    SteadyStateSolver solver(ctx);
    const auto s = solver.series(3);
    for (int K = 0; K <= 3; ++K) {
      std::vector<double> gs, errs;
      for (double lg : {-1.0, -1.5, -2.0, -2.5}) {
        const double g = std::pow(10.0, lg);
        gs.push_back(g);
        errs.push_back((s.partial_sum(g, K) - normalized_kernel(m, g, 1e-11)).norm());
      }
      const double slope = fit_loglog(gs, errs).slope;
      char buf[48];
      std::snprintf(buf, sizeof buf, "%s%.2f", slopes.empty() ? "" : " ", slope);
      slopes += buf;
      ok = ok && std::abs(slope - (K + 1)) <= 0.2;
    }
  }
  const double secs = elapsed_s(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "slopes [hc-zero, hc-nonzero]: %s, %.1f s", slopes.c_str(), secs);
  detail = buf;
  return ok && secs < 60.0;
}

// 6. Resolvent form matches the numeric kernel at half the estimated radius.
bool criterion_6(std::string& detail) {
  Rng rng(106);
  double worst = 0;
  std::vector<QrmModel> models;
  models.push_back(preset_model("three-qubit"));
  models.push_back(preset_model("three-qubit", {{"e_c", "0.7"}}));
  models.push_back(testing::random_model(rng, {2, 2, 2}));
  for (const auto& m : models) {
    PerturbationContext ctx(m);
    SteadyStateSolver solver(ctx);
    const double g = solver.radius_estimate() / 2.0;
    const auto r = solver.resolvent(g);
    if (!r.converged) {
      detail = "resolvent series did not converge at g0/2";
      return false;
    }
    worst = std::max(worst, (r.rho - normalized_kernel(m, g, 1e-11)).norm());
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "max deviation vs null space %.2e", worst);
  detail = buf;
  return worst <= 1e-8;
}

// 7. Three-qubit closed forms across random draws, plus the equilibrium case.
bool criterion_7(std::string& detail) {
  Rng rng(107);
  double worst = 0;
  for (int it = 0; it < 10; ++it) {
    const ThreeQubitParams p = random_three_qubit(rng);
    const auto rep = three_qubit_regression(p, 1e-9);
    worst = std::max(worst, rep.max());
  }
  // Equilibrium draw: exact product steady state with vanishing corrections.
  ThreeQubitParams eq = random_three_qubit(rng);
  eq.t_b = eq.t_a;
  const QrmModel m = build_three_qubit(eq);
  PerturbationContext ctx(m);
  SteadyStateSolver solver(ctx);
  const auto s = solver.series(3);
  const CMat tau3 = kron(m.reset_a.tau, kron(m.reset_a.tau, m.reset_b.tau));
  double eq_dev = (s.rho[0] - tau3).cwiseAbs().maxCoeff();
  for (size_t j = 1; j < s.rho.size(); ++j)
    eq_dev = std::max(eq_dev, s.rho[j].cwiseAbs().maxCoeff());
  char buf[96];
  std::snprintf(buf, sizeof buf, "max regression dev %.2e, equilibrium dev %.2e", worst, eq_dev);
  detail = buf;
  return worst <= 1e-9 && eq_dev <= 1e-12;
}

// 8. Chain kernel closed forms for N in {2, 3, 5, 8}.
bool criterion_8(std::string& detail) {
  double worst_res = 0, worst_flat = 0;
  for (Index n : {2, 3, 5, 8}) {
    auto p = qubit_n_qubit_preset({{"n", std::to_string(n)}});
    const auto kf = closed_form_kernel_xj(p);  // asserts both displays agree to 1e-12
    const QrmModel m = build_qubit_n_qubit(p);
    PerturbationContext ctx(m);
    const PhiMaps phi = build_phi(ctx);
    const auto labels = diag_basis_labels(phi.diag_u);
    RMat pd(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k) pd(labels[size_t(j)], labels[size_t(k)]) = phi.phi_d(j, k);
    worst_res = std::max(
        worst_res, (pd * kf.x_recursive).norm() / (pd.norm() * kf.x_recursive.norm()));
  }
  {
    // Balance condition: interior populations become constant.
    auto p = qubit_n_qubit_preset({{"n", "6"}});
    p.t_a = 0.7;
    p.t_b = 0.65;
    const double lhs = (2 * p.t_a - 1) * p.t_b * p.gamma_a * std::norm(p.beta(0)) / (1 - p.t_a);
    p.alpha(5) = std::sqrt(lhs * (1 - p.t_b) / ((2 * p.t_b - 1) * p.t_a * p.gamma_b));
    const auto kf = closed_form_kernel_xj(p);
    for (Index j = 2; j + 1 < 6; ++j)
      worst_flat = std::max(worst_flat, std::abs(kf.x_recursive(j) - kf.x_recursive(1)));
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "max kernel residual %.2e, interior spread %.2e", worst_res,
                worst_flat);
  detail = buf;
  return worst_res <= 1e-10 && worst_flat <= 1e-12;
}

// 9. Markov extraction: stochastic kernels, stationary distribution.
bool criterion_9(std::string& detail) {
  Rng rng(109);
  double worst_row = 0, worst_entry = 0, worst_pi = 0;
  std::vector<QrmModel> models;
  models.push_back(preset_model("three-qubit"));
  models.push_back(testing::random_model(rng, {2, 3, 2}));
  models.push_back(testing::random_model(rng, {2, 2, 2}));
  for (const auto& m : models) {
    PerturbationContext ctx(m);
    SteadyStateSolver solver(ctx);
    if (!solver.coup().holds) continue;
    const RateMatrix rm = rate_matrix_from_phi(solver.phi());
    for (double s : {0.01, 0.1, 1.0, 10.0}) {
      const TransitionKernel k = transition_probabilities(rm, s);
      worst_row = std::max(worst_row, k.max_row_sum_error);
      worst_entry = std::max(worst_entry, std::max(0.0, -k.min_entry_preclamp));
    }
    const RVec pi = stationary_distribution(rm);
    worst_pi = std::max(worst_pi, (pi - solver.coup().kernel).cwiseAbs().maxCoeff());
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "row-sum err %.2e, entry floor %.2e, pi vs diag rho_C0 %.2e",
                worst_row, worst_entry, worst_pi);
  detail = buf;
  return worst_row <= 1e-10 && worst_entry <= 1e-12 && worst_pi <= 1e-10;
}

// 10. Eigenvalue bound of the second-order corrections (as stated).
bool criterion_10(std::string& detail) {
  Rng rng(110);
  int checked = 0, violations = 0;
  double worst_excess = -1e300;
  for (int it = 0; it < 10; ++it) {
    const QrmModel m = testing::random_model(rng, {2, 2, 2});
    PerturbationContext ctx(m);
    if (!ctx.spec().ok()) continue;
    const double coef = eigenvalue_bound_coefficient(m.reset_a.gamma, m.reset_b.gamma);
    for (const auto& c : second_order_eigenvalues(ctx)) {
      // Fit Re lambda_jk(g) = b g^2 + c g^3 from the tracked numeric eigenvalues.
      const std::vector<double> gs = {0.01, 0.005, 0.0025};
      Eigen::MatrixXd a(3, 2);
      Eigen::VectorXd y(3);
      for (size_t i = 0; i < gs.size(); ++i) {
        const double g = gs[i];
        const CVec spec = eigvals(build_lindbladian(m, g).m);
        const Complex pred = Complex(0, -g * c.bohr) + g * g * c.lambda_tilde;
        Index best = 0;
        double bd = 1e300;
        for (Index q = 0; q < spec.size(); ++q)
          if (std::abs(spec(q) - pred) < bd) {
            bd = std::abs(spec(q) - pred);
            best = q;
          }
        a(Index(i), 0) = g * g;
        a(Index(i), 1) = g * g * g;
        y(Index(i)) = spec(best).real();
      }
      const Eigen::VectorXd fit = a.colPivHouseholderQr().solve(y);
      const double excess = fit(0) + coef * c.bohr * c.bohr;  // must be <= margin
      worst_excess = std::max(worst_excess, excess);
      ++checked;
      if (excess > 1e-3) ++violations;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%d corrections checked, %d violate the bound, worst excess %.3f; "
                "the tracked rates satisfy only Re <= 0",
                checked, violations, worst_excess);
  detail = buf;
  return violations == 0;
}

// 11. Dynamics time scale and reduced-propagator error.
bool criterion_11(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const QrmModel m = preset_model("three-qubit");
  PerturbationContext ctx(m);
  SteadyStateSolver solver(ctx);
  CMat rho0 = CMat::Zero(8, 8);
  rho0(0, 0) = 1.0;
  const std::vector<double> gs = {0.04, 0.02, 0.01};
  std::vector<double> ts;
  for (double g : gs) {
    const auto steady = solver.resolvent(g);
    ts.push_back(time_to_reach_steady(m, rho0, g, 1e-3, steady.rho, 1e9));
  }
  const double approach_slope = fit_loglog(gs, ts).slope;
  const auto sweep = error_scaling_sweep(ctx, rho0, gs, 1.0, 5.0, 16);
  const double err_slope = sweep.exponent.slope;
  const double secs = elapsed_s(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "approach exponent %.3f, reduced-error exponent %.3f, %.1f s",
                approach_slope, err_slope, secs);
  detail = buf;
  return std::abs(approach_slope + 2.0) <= 0.2 && std::abs(err_slope - 1.0) <= 0.3 && secs < 120.0;
}

// 12. Combinatorial Coup criterion vs numeric rank on random sign patterns.
bool criterion_12(std::string& detail) {
  Rng rng(112);
  int agree = 0, total = 0;
  std::string mismatches;
  // The reducible 3x3 rate pattern: rank 2 with kernel (0, 1, 1).
  RMat example(3, 3);
  example << 1, 0, 0, -1, 1, -1, 0, -1, 1;
  {
    const bool rank_ok = numeric_rank(example.cast<Complex>(), 1e-9) == 2;
    const NullSpace ns = null_space(example.cast<Complex>(), 1e-9);
    CVec v = ns.basis.col(0);
    v /= v(1);
    const bool kernel_ok = std::abs(v(0)) <= 1e-12 && std::abs(v(2) - Complex(1)) <= 1e-12;
    const bool crit = coup_row_criterion(example);
    ++total;
    if (rank_ok && kernel_ok && crit)
      ++agree;
    else
      mismatches += " reducible-example";
  }
  for (int it = 0; it < 50; ++it) {
    const Index n = 2 + Index(it % 4);
    RMat off = RMat::Zero(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k)
        if (j != k) off(j, k) = rng.uniform(0, 1) < 1.0 / 3.0 ? 0.0 : rng.uniform(0.1, 2.0);
    const RMat h = h_matrix_from_offdiag(off);
    const bool crit = coup_row_criterion(h);
    const bool rank = numeric_rank(h.cast<Complex>(), 1e-9) == n - 1;
    ++total;
    if (crit == rank) {
      ++agree;
    } else {
      char buf[48];
      std::snprintf(buf, sizeof buf, " #%d(n=%lld,crit=%d,rank%s)", it,
                    static_cast<long long>(n), int(crit), rank ? "=n-1" : "<n-1");
      mismatches += buf;
    }
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d/%d patterns agree%s%s", agree, total,
                mismatches.empty() ? "" : "; mismatches:", mismatches.c_str());
  detail = buf;
  detail += mismatches.empty() ? "" : " (the row criterion is sufficient, not necessary)";
  return agree == total;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Check> checks = {
      {1, "dissipator spectrum with multiplicities (20 random models)", criterion_1},
      {2, "Kraus-assembled dissipator equals the reset dissipator", criterion_2},
      {3, "analytic eigentable residuals and completeness", criterion_3},
      {4, "unique steady state for g in {1e-1, 1e-2, 1e-3}", criterion_4},
      {5, "series convergence order K+1 in both branches", criterion_5},
      {6, "resolvent form matches the numeric kernel at g0/2", criterion_6},
      {7, "three-qubit closed-form regressions (10 draws + equilibrium)", criterion_7},
      {8, "chain kernel closed forms for N in {2,3,5,8}", criterion_8},
      {9, "Markov kernels stochastic; stationary = diag rho_C0", criterion_9},
      {10, "second-order eigenvalue decay-rate bound", criterion_10},
      {11, "1/g^2 approach time and O(g) reduced-propagator error", criterion_11},
      {12, "combinatorial Coup test vs numeric rank on 50 sign patterns", criterion_12},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int failures = 0;
  for (const auto& c : checks) {
    if (only != 0 && c.id != only) continue;
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    failures += ok ? 0 : 1;
    std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", c.id,
                c.description.c_str(), detail.c_str());
  }
  return failures == 0 ? 0 : 1;
}
