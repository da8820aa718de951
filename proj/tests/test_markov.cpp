#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qrm/examples.hpp"
#include "qrm/markov.hpp"
#include "qrm/model_io.hpp"
#include "test_util.hpp"

using namespace qrm;
using testing::Rng;

namespace {

RateMatrix preset_rate_matrix() {
  const QrmModel m = preset_model("three-qubit");
  PerturbationContext ctx(m);
  return rate_matrix_from_phi(build_phi(ctx));
}

}  // namespace

TEST_CASE("rate matrix extraction") {
  Rng rng(61);

  SUBCASE("three-qubit rates are the phi_plus / phi_minus pair") {
    const ThreeQubitParams p = three_qubit_preset({});
    const QrmModel m = build_three_qubit(p);
    PerturbationContext ctx(m);
    const PhiMaps phi = build_phi(ctx);
    const RateMatrix rm = rate_matrix_from_phi(phi);
    const auto labels = diag_basis_labels(phi.diag_u);
    const auto f = three_qubit_closed_forms(p);
    RMat q(2, 2);
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j) q(labels[size_t(i)], labels[size_t(j)]) = rm.q(i, j);
    const double c = 2.0 / (p.gamma_a * p.gamma_b);
    CHECK(q(0, 1) == doctest::Approx(c * f.phi_minus).epsilon(1e-12));
    CHECK(q(1, 0) == doctest::Approx(c * f.phi_plus).epsilon(1e-12));
  }

  SUBCASE("rows sum to zero, off-diagonals nonnegative") {
    const QrmModel m = testing::random_model(rng, {2, 3, 2});
    PerturbationContext ctx(m);
    const RateMatrix rm = rate_matrix_from_phi(build_phi(ctx));
    for (Index i = 0; i < 3; ++i) {
      CHECK(std::abs(rm.q.row(i).sum()) <= 1e-10);
      CHECK(rm.q(i, i) <= 0);
      for (Index j = 0; j < 3; ++j)
        if (i != j) CHECK(rm.q(i, j) >= 0);
    }
  }

  SUBCASE("zero coupling gives the zero rate matrix") {
    ThreeQubitParams p = three_qubit_preset({});
    p.j_alpha = p.j_beta = 0;
    p.u = 1.0;
    const QrmModel m = build_three_qubit(p);
    PerturbationContext ctx(m);
    const RateMatrix rm = rate_matrix_from_phi(build_phi(ctx));
    CHECK(rm.q.cwiseAbs().maxCoeff() <= 1e-14);
  }

  SUBCASE("refuses models with a Hamiltonian drive") {
    const QrmModel m = testing::random_model(rng, {2, 2, 2}, {.with_hc = true});
    PerturbationContext ctx(m);
    CHECK_THROWS_AS(rate_matrix_from_phi(build_phi(ctx)), ModelError);
  }

  SUBCASE("spectrum of Q: zero simple, rest strictly stable") {
    const RateMatrix rm = preset_rate_matrix();
    const CVec w = eigvals(rm.q.cast<Complex>());
    Index zeros = 0;
    for (Index i = 0; i < w.size(); ++i) {
      if (std::abs(w(i)) <= 1e-10)
        ++zeros;
      else
        CHECK(w(i).real() < 0);
    }
    CHECK(zeros == 1);
  }
}

TEST_CASE("transition kernels") {
  Rng rng(62);

  SUBCASE("s = 0 is the identity kernel") {
    const RateMatrix rm = preset_rate_matrix();
    const auto k = transition_probabilities(rm, 0.0);
    CHECK((k.p - RMat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-14);
  }

  SUBCASE("three-qubit closed-form probabilities") {
    const ThreeQubitParams p = three_qubit_preset({});
    const QrmModel m = build_three_qubit(p);
    PerturbationContext ctx(m);
    const PhiMaps phi = build_phi(ctx);
    const RateMatrix rm = rate_matrix_from_phi(phi);
    const auto labels = diag_basis_labels(phi.diag_u);
    const auto f = three_qubit_closed_forms(p);
    for (double s : {0.05, 0.5, 2.0}) {
      const auto k = transition_probabilities(rm, s);
      RMat perm(2, 2);
      for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j) perm(labels[size_t(i)], labels[size_t(j)]) = k.p(i, j);
      CHECK((perm - f.transition(s)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  SUBCASE("stochasticity of the transpose of exp(s Phi_D)") {
    const QrmModel m = testing::random_model(rng, {2, 3, 2});
    PerturbationContext ctx(m);
    const PhiMaps phi = build_phi(ctx);
    const RateMatrix rm = rate_matrix_from_phi(phi);
    for (double s : {0.01, 0.1, 1.0, 10.0}) {
      const auto k = transition_probabilities(rm, s);
      CHECK(k.min_entry_preclamp >= -1e-12);
      CHECK(k.max_row_sum_error <= 1e-10);
      // exp(s Phi_D) itself is column-stochastic: P(s) is its transpose.
      const CMat e = expm(CMat((s * phi.phi_d).cast<Complex>()));
      CHECK((e.transpose().real() - k.p).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }

  SUBCASE("Chapman-Kolmogorov") {
    const RateMatrix rm = preset_rate_matrix();
    const auto a = transition_probabilities(rm, 0.6);
    const auto b = transition_probabilities(rm, 1.7);
    const auto c = transition_probabilities(rm, 2.3);
    CHECK((RMat(a.p * b.p) - c.p).cwiseAbs().maxCoeff() <= 1e-9);
  }

  SUBCASE("rows converge to the stationary distribution") {
    const QrmModel m = testing::random_model(rng, {2, 3, 2});
    PerturbationContext ctx(m);
    const RateMatrix rm = rate_matrix_from_phi(build_phi(ctx));
    const RVec pi = stationary_distribution(rm);
    const CVec w = eigvals(rm.q.cast<Complex>());
    double gap = 1e300;
    for (Index i = 0; i < w.size(); ++i)
      if (std::abs(w(i)) > 1e-10) gap = std::min(gap, -w(i).real());
    const auto k = transition_probabilities(rm, 50.0 / gap);
    for (Index i = 0; i < k.p.rows(); ++i)
      CHECK((k.p.row(i).transpose() - pi).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("stationary distribution") {
  Rng rng(63);

  SUBCASE("three-qubit closed form") {
    const ThreeQubitParams p = three_qubit_preset({});
    const QrmModel m = build_three_qubit(p);
    PerturbationContext ctx(m);
    const PhiMaps phi = build_phi(ctx);
    const RateMatrix rm = rate_matrix_from_phi(phi);
    const RVec pi = stationary_distribution(rm);
    const auto labels = diag_basis_labels(phi.diag_u);
    const auto f = three_qubit_closed_forms(p);
    RVec perm(2);
    for (Index i = 0; i < 2; ++i) perm(labels[size_t(i)]) = pi(i);
    CHECK(perm(0) == doctest::Approx(f.phi_plus / (f.phi_plus + f.phi_minus)).epsilon(1e-12));
    CHECK(perm(1) == doctest::Approx(f.phi_minus / (f.phi_plus + f.phi_minus)).epsilon(1e-12));
  }

  SUBCASE("symmetric couplings give the uniform distribution") {
    ThreeQubitParams p = three_qubit_preset({});
    p.j_alpha = p.j_beta = 0.6;
    p.gamma_a = p.gamma_b = 1.1;
    p.t_a = p.t_b = 0.5;
    const QrmModel m = build_three_qubit(p);
    PerturbationContext ctx(m);
    const RVec pi = stationary_distribution(rate_matrix_from_phi(build_phi(ctx)));
    CHECK(std::abs(pi(0) - 0.5) <= 1e-12);
    CHECK(std::abs(pi(1) - 0.5) <= 1e-12);
  }

  SUBCASE("global balance and agreement with the Coup kernel") {
    const QrmModel m = testing::random_model(rng, {2, 3, 2});
    PerturbationContext ctx(m);
    SteadyStateSolver solver(ctx);
    const RateMatrix rm = rate_matrix_from_phi(solver.phi());
    const RVec pi = stationary_distribution(rm);
    CHECK((pi.transpose() * rm.q).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(pi.sum() - 1.0) <= 1e-12);
    CHECK(pi.minCoeff() >= 0.0);
    CHECK((pi - solver.coup().kernel).cwiseAbs().maxCoeff() <= 1e-10);
  }
}
