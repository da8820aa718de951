#pragma once

#include <random>

#include "qrm/model.hpp"

namespace qrm::testing {

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}

  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(gen);
  }
  double gauss() { return std::normal_distribution<double>()(gen); }
  Complex cgauss() { return {gauss(), gauss()}; }
  Index integer(Index lo, Index hi) {
    return std::uniform_int_distribution<Index>(lo, hi)(gen);
  }
};

inline CMat random_matrix(Rng& rng, Index rows, Index cols) {
  CMat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.cgauss();
  return m;
}

inline CMat random_hermitian(Rng& rng, Index n, double scale = 1.0) {
  const CMat m = random_matrix(rng, n, n);
  return scale * 0.5 * (m + m.adjoint());
}

inline CMat random_density(Rng& rng, Index n) {
  const CMat m = random_matrix(rng, n, n);
  CMat rho = m * m.adjoint();
  rho /= rho.trace();
  return 0.5 * (rho + rho.adjoint());
}

inline CMat random_unitary(Rng& rng, Index n) {
  const CMat m = random_matrix(rng, n, n);
  Eigen::HouseholderQR<CMat> qr(m);
  CMat q = qr.householderQ();
  const CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
  return q;
}

/// Commuting pair (H, tau): common random eigenbasis, random spectra.
inline std::pair<CMat, CMat> random_commuting_pair(Rng& rng, Index n) {
  const CMat u = random_unitary(rng, n);
  RVec eh(n), et(n);
  for (Index i = 0; i < n; ++i) {
    eh(i) = rng.uniform(-1.5, 1.5);
    et(i) = rng.uniform(0.05, 1.0);
  }
  et /= et.sum();
  const CMat h = u * eh.cast<Complex>().asDiagonal() * u.adjoint();
  const CMat tau = u * et.cast<Complex>().asDiagonal() * u.adjoint();
  return {0.5 * (h + h.adjoint()), 0.5 * (tau + tau.adjoint())};
}

struct ModelOptions {
  bool with_ha = false;
  bool with_hb = false;
  bool with_hc = false;
  double coupling_scale = 1.0;
};

inline QrmModel random_model(Rng& rng, HilbertDims dims, ModelOptions opt = {}) {
  QrmModel m;
  m.dims = dims;
  m.reset_a.gamma = rng.uniform(0.5, 2.0);
  m.reset_b.gamma = rng.uniform(0.5, 2.0);
  if (opt.with_ha) {
    auto [h, tau] = random_commuting_pair(rng, dims.n_a);
    m.h_a = h;
    m.reset_a.tau = tau;
  } else {
    m.reset_a.tau = random_density(rng, dims.n_a);
  }
  if (opt.with_hb) {
    auto [h, tau] = random_commuting_pair(rng, dims.n_b);
    m.h_b = h;
    m.reset_b.tau = tau;
  } else {
    m.reset_b.tau = random_density(rng, dims.n_b);
  }
  if (opt.with_hc) m.h_c = random_hermitian(rng, dims.n_c);
  m.h_coupling = random_hermitian(rng, dims.total(), opt.coupling_scale);
  m.g = 0.01;
  return m;
}

}  // namespace qrm::testing
