#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qrm/examples.hpp"
#include "qrm/markov.hpp"
#include "qrm/model_io.hpp"
#include "test_util.hpp"

using namespace qrm;
using testing::Rng;

TEST_CASE("chain model construction") {
  Rng rng(81);

  SUBCASE("coupling Hamiltonian is Hermitian for random parameters") {
    auto p = qubit_n_qubit_preset({{"n", "4"}});
    for (Index j = 0; j < 4; ++j) {
      p.alpha(j) = rng.cgauss();
      p.beta(j) = rng.cgauss();
    }
    const QrmModel m = build_qubit_n_qubit(p);
    CHECK(herm_deviation(m.h_coupling) <= 1e-14);
  }

  SUBCASE("all couplings zero: H block-diagonal, Coup fails") {
    auto p = qubit_n_qubit_preset({{"n", "3"}});
    p.alpha.setZero();
    p.beta.setZero();
    CHECK_FALSE(qubit_n_qubit_coup_hypothesis(p));
    const QrmModel m = build_qubit_n_qubit(p);
    PerturbationContext ctx(m);
    CHECK_FALSE(check_coup(build_phi(ctx)).holds);
  }

  SUBCASE("N = 2 substitution reproduces the three-qubit model") {
    const ThreeQubitParams p = three_qubit_preset({});
    const QrmModel direct = build_three_qubit(p);
    const QrmModel chain = build_qubit_n_qubit(three_qubit_as_n2(p));
    const CMat perm = three_qubit_relabeling();
    CHECK((direct.h_coupling - perm * chain.h_coupling * perm.adjoint()).cwiseAbs().maxCoeff() <=
          1e-13);
    // tau_B is relabeled along with the factor bases; tau_A is unchanged.
    CHECK((direct.reset_a.tau - chain.reset_a.tau).cwiseAbs().maxCoeff() <= 1e-14);
    CMat flip(2, 2);
    flip << 0, 1, 1, 0;
    CHECK((direct.reset_b.tau - flip * chain.reset_b.tau * flip).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("closed-form kernel of the chain") {
  Rng rng(82);

  SUBCASE("recursive and explicit kernels agree and span ker Phi_D") {
    for (Index n : {2, 3, 5, 8}) {
      auto p = qubit_n_qubit_preset({{"n", std::to_string(n)}});
      const auto kf = closed_form_kernel_xj(p);
      CHECK((kf.x_recursive - kf.x_explicit).cwiseAbs().maxCoeff() <=
            1e-12 * kf.x_recursive.cwiseAbs().maxCoeff());
      const RMat pd = qubit_n_qubit_phi_d(p);
      CHECK((pd * kf.x_recursive).norm() <= 1e-10 * pd.norm() * kf.x_recursive.norm());
    }
  }

  SUBCASE("closed-form Phi_D matches the machinery") {
    auto p = qubit_n_qubit_preset({{"n", "5"}});
    for (Index j = 0; j < 5; ++j) {
      p.alpha(j) = rng.cgauss();
      p.beta(j) = rng.cgauss();
    }
    const QrmModel m = build_qubit_n_qubit(p);
    PerturbationContext ctx(m);
    const PhiMaps phi = build_phi(ctx);
    const auto labels = diag_basis_labels(phi.diag_u);
    RMat pd_m(5, 5);
    for (Index j = 0; j < 5; ++j)
      for (Index k = 0; k < 5; ++k)
        pd_m(labels[size_t(j)], labels[size_t(k)]) = phi.phi_d(j, k);
    CHECK((pd_m - qubit_n_qubit_phi_d(p)).cwiseAbs().maxCoeff() <= 1e-10);
    // Kernel of the machinery Phi_D is spanned by the closed-form x.
    const auto kf = closed_form_kernel_xj(p);
    const CoupReport rep = check_coup(phi);
    RVec km(5);
    for (Index j = 0; j < 5; ++j) km(labels[size_t(j)]) = rep.kernel(j);
    CHECK((km - kf.x_recursive / kf.z).cwiseAbs().maxCoeff() <= 1e-10);
  }

  SUBCASE("interior populations constant under the balance condition") {
    auto p = qubit_n_qubit_preset({{"n", "6"}});
    p.t_a = 0.7;
    p.t_b = 0.65;
    const double lhs = (2 * p.t_a - 1) * p.t_b * p.gamma_a * std::norm(p.beta(0)) / (1 - p.t_a);
    const double an2 = lhs * (1 - p.t_b) / ((2 * p.t_b - 1) * p.t_a * p.gamma_b);
    p.alpha(5) = std::sqrt(an2);
    const auto kf = closed_form_kernel_xj(p);
    for (Index j = 2; j + 1 < 6; ++j)
      CHECK(std::abs(kf.x_recursive(j) - kf.x_recursive(1)) <= 1e-12);
  }

  SUBCASE("high temperature flattens the interior populations") {
    auto p = qubit_n_qubit_preset({{"n", "5"}});
    p.t_a = 0.5;
    p.t_b = 0.5;
    const auto kf = closed_form_kernel_xj(p);
    for (Index j = 2; j + 1 < 5; ++j)
      CHECK(std::abs(kf.x_recursive(j) - kf.x_recursive(1)) <= 1e-12);
  }

  SUBCASE("interior gap in the couplings breaks the hypothesis") {
    auto p = qubit_n_qubit_preset({{"n", "4"}});
    p.alpha(1) = 0;
    p.beta(1) = 0;
    CHECK_THROWS_AS(closed_form_kernel_xj(p), AssumptionError);
  }

  SUBCASE("leading order matches ker L_g as g -> 0") {
    auto p = qubit_n_qubit_preset({{"n", "3"}});
    const QrmModel m = build_qubit_n_qubit(p);
    const auto kf = closed_form_kernel_xj(p);
    auto dist = [&](double g) {
      const NullSpace ns = null_space(build_lindbladian(m, g).m, 1e-11);
      CMat rho = devectorize(ns.basis.col(0), m.dims.total());
      rho /= rho.trace();
      return (rho - kf.rho0).norm();
    };
    const double c = dist(1e-2) / 1e-2;
    CHECK(dist(1e-3) <= 1.5 * c * 1e-3);
  }
}

TEST_CASE("three-qubit closed forms vs machinery") {
  Rng rng(83);

  SUBCASE("preset and random draws") {
    CHECK_NOTHROW(three_qubit_regression(three_qubit_preset({}), 1e-9));
    for (int it = 0; it < 3; ++it) {
      ThreeQubitParams p;
      p.u = rng.uniform(0.3, 1.5);
      p.j_alpha = rng.uniform(0.2, 1.0);
      p.j_beta = rng.uniform(0.2, 1.0);
      p.t_a = rng.uniform(0.15, 0.85);
      p.t_b = rng.uniform(0.15, 0.85);
      p.gamma_a = rng.uniform(0.5, 2.0);
      p.gamma_b = rng.uniform(0.5, 2.0);
      CHECK_NOTHROW(three_qubit_regression(p, 1e-9));
    }
  }

  SUBCASE("equilibrium: all corrections vanish") {
    ThreeQubitParams p = three_qubit_preset({});
    p.t_a = p.t_b = 0.6;
    const auto f = three_qubit_closed_forms(p);
    CHECK(f.r1.cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(f.r2.cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(std::abs(f.x2) <= 1e-15);
    const QrmModel m = build_three_qubit(p);
    PerturbationContext ctx(m);
    SteadyStateSolver solver(ctx);
    const CMat tau3 = kron(m.reset_a.tau, kron(m.reset_a.tau, m.reset_b.tau));
    const auto r = solver.resolvent(0.3);
    CHECK((r.rho - tau3).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("U enters only at second order") {
    ThreeQubitParams p0 = three_qubit_preset({});
    ThreeQubitParams p1 = p0;
    p0.u = 0.5;
    p1.u = 1.5;
    auto run = [](const ThreeQubitParams& p) {
      const QrmModel m = build_three_qubit(p);
      PerturbationContext ctx(m);
      SteadyStateSolver solver(ctx);
      return solver.series(2);
    };
    const auto s0 = run(p0), s1 = run(p1);
    CHECK((s0.rho[0] - s1.rho[0]).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK((s0.rho[1] - s1.rho[1]).cwiseAbs().maxCoeff() <= 1e-13);
    // The second-order diagonal correction does depend on U.
    const double x2_0 = three_qubit_closed_forms(p0).x2;
    const double x2_1 = three_qubit_closed_forms(p1).x2;
    CHECK(std::abs(x2_0 - x2_1) > 1e-6);
  }

  SUBCASE("sigma(Phi_D) closed form") {
    const ThreeQubitParams p = three_qubit_preset({});
    const QrmModel m = build_three_qubit(p);
    PerturbationContext ctx(m);
    const PhiMaps phi = build_phi(ctx);
    const CVec w = eigvals(phi.phi_d.cast<Complex>());
    const auto f = three_qubit_closed_forms(p);
    CHECK(std::abs(w(0) - Complex(f.phi_d_nonzero_eig)) <= 1e-12);
    CHECK(std::abs(w(1)) <= 1e-12);
  }
}

TEST_CASE("thermal reset parameterization") {
  const double beta = 1.3, e = 0.8;
  const double t = ThreeQubitParams::thermal_population(beta, e);
  CHECK(t == doctest::Approx(1.0 / (1.0 + std::exp(-beta * e))));
  CHECK(t > 0.5);  // ground state favored at positive temperature
  CHECK(ThreeQubitParams::thermal_population(0.0, e) == doctest::Approx(0.5));
}
