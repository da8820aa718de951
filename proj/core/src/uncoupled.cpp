#include "qrm/uncoupled.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qrm {

FactorBasis simultaneous_eigenbasis(const CMat& h, const CMat& tau, double tol) {
  const Index n = tau.rows();
  FactorBasis fb;
  if (h.size() == 0 || h.isZero(0)) {
    HermEig et = herm_eig(tau);
    fb.u.resize(n, n);
    fb.tau_eigs.resize(n);
    for (Index i = 0; i < n; ++i) {  // descending tau populations
      fb.u.col(i) = et.vectors.col(n - 1 - i);
      fb.tau_eigs(i) = et.values(n - 1 - i);
    }
    fb.h_eigs = RVec::Zero(n);
    return fb;
  }
  const HermEig eh = herm_eig(h);
  const double scale = std::max(1.0, eh.values.cwiseAbs().maxCoeff());
  fb.u.resize(n, n);
  fb.h_eigs.resize(n);
  fb.tau_eigs.resize(n);
  Index start = 0;
  while (start < n) {
    Index stop = start + 1;
    while (stop < n && eh.values(stop) - eh.values(stop - 1) <= tol * scale) ++stop;
    const Index k = stop - start;
    const CMat block = eh.vectors.middleCols(start, k);
    // Diagonalize tau restricted to the degenerate h-eigenspace.
    HermEig et = herm_eig(CMat(block.adjoint() * tau * block));
    for (Index i = 0; i < k; ++i) {
      fb.u.col(start + i) = block * et.vectors.col(k - 1 - i);
      fb.tau_eigs(start + i) = et.values(k - 1 - i);
      fb.h_eigs(start + i) = eh.values(start + i);
    }
    start = stop;
  }
  return fb;
}

CMat apply_q0(const QrmModel& model, const CMat& rho) {
  return kron(model.reset_a.tau, kron(partial_trace(rho, model.dims, Part::AB), model.reset_b.tau));
}

DissipatorProjectors dissipator_projectors(const QrmModel& model) {
  const auto& d = model.dims;
  const Index n = d.total();
  const CMat& ta = model.reset_a.tau;
  const CMat& tb = model.reset_b.tau;
  DissipatorProjectors p;
  p.q0 = SuperOp::from_map(n, [&](const CMat& rho) -> CMat { return apply_q0(model, rho); });
  p.qa = SuperOp::from_map(n, [&](const CMat& rho) -> CMat {
    const CMat trb = partial_trace(rho, d, Part::B);
    const CMat trab = partial_trace(rho, d, Part::AB);
    return kron(CMat(trb - kron(ta, trab)), tb);
  });
  p.qb = SuperOp::from_map(n, [&](const CMat& rho) -> CMat {
    const CMat tra = partial_trace(rho, d, Part::A);
    const CMat trab = partial_trace(rho, d, Part::AB);
    return kron(ta, CMat(tra - kron(trab, tb)));
  });
  p.qab = SuperOp::from_map(n, [&](const CMat& rho) -> CMat {
    const CMat tra = partial_trace(rho, d, Part::A);
    const CMat trb = partial_trace(rho, d, Part::B);
    const CMat trab = partial_trace(rho, d, Part::AB);
    return rho - kron(trb, tb) - kron(ta, tra) + kron(ta, kron(trab, tb));
  });
  return p;
}

std::vector<RankOneProjector> rank_one_projectors(const CMat& tau, const CMat& basis) {
  const Index n = tau.rows();
  const CMat tau_in_basis = basis.adjoint() * tau * basis;
  if (!CMat(tau_in_basis - tau_in_basis.diagonal().asDiagonal().toDenseMatrix()).isZero(1e-10))
    throw ModelError("rank_one_projectors: tau is not diagonal in the supplied basis");
  std::vector<RankOneProjector> out;
  auto push = [&](CMat v, CMat w) {
    SuperOp op(n, vectorize(v) * vectorize(w).adjoint());
    out.push_back({std::move(v), std::move(w), std::move(op)});
  };
  // Q_0(.) = tau tr(.)
  push(tau, CMat::Identity(n, n));
  // Q_j(.) = Delta_j tr(sigma_j (. - tau tr .)), sigma_j = sum_{k<=j} P_kk
  CMat sigma = CMat::Zero(n, n);
  double tau_weight = 0;
  for (Index j = 0; j + 1 < n; ++j) {
    sigma += basis.col(j) * basis.col(j).adjoint();
    tau_weight += tau_in_basis(j, j).real();
    const CMat delta = basis.col(j) * basis.col(j).adjoint() -
                       basis.col(j + 1) * basis.col(j + 1).adjoint();
    push(delta, CMat(sigma - tau_weight * CMat::Identity(n, n)));
  }
  // Q_jk(.) = P_jk tr(P_jk^adj .)
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k)
      if (j != k) {
        const CMat pjk = basis.col(j) * basis.col(k).adjoint();
        push(pjk, pjk);
      }
  return out;
}

CMat dissipator_inverse(const QrmModel& model, const CMat& rho_tilde, double rel_tol) {
  const auto& d = model.dims;
  const double scale = std::max(rho_tilde.norm(), 1e-300);
  if (partial_trace(rho_tilde, d, Part::AB).norm() > rel_tol * scale)
    throw ModelError("dissipator_inverse: input not in ran(I - Q0) (tr_AB != 0)");
  const double ga = model.reset_a.gamma, gb = model.reset_b.gamma;
  const CMat tra = partial_trace(rho_tilde, d, Part::A);
  const CMat trb = partial_trace(rho_tilde, d, Part::B);
  return (-1.0 / (ga + gb)) *
         (rho_tilde + (ga / gb) * kron(model.reset_a.tau, tra) +
          (gb / ga) * kron(trb, model.reset_b.tau));
}

namespace {

struct Piece {
  CMat vec;
  CMat dual;
  double freq = 0.0;  // Hamiltonian Bohr frequency carried by this piece
  PieceKind kind = PieceKind::Tau;
};

// {tau, Delta_j, P_jk} pieces of one dissipative factor with their duals.
std::vector<Piece> factor_pieces(const FactorBasis& fb) {
  const Index n = fb.u.cols();
  std::vector<Piece> out;
  CMat tau = CMat::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    tau += fb.tau_eigs(j) * (fb.u.col(j) * fb.u.col(j).adjoint());
  out.push_back({tau, CMat::Identity(n, n), 0.0, PieceKind::Tau});
  CMat sigma = CMat::Zero(n, n);
  double weight = 0;
  for (Index j = 0; j + 1 < n; ++j) {
    sigma += fb.u.col(j) * fb.u.col(j).adjoint();
    weight += fb.tau_eigs(j);
    const CMat delta =
        fb.u.col(j) * fb.u.col(j).adjoint() - fb.u.col(j + 1) * fb.u.col(j + 1).adjoint();
    out.push_back({delta, CMat(sigma - weight * CMat::Identity(n, n)), 0.0, PieceKind::Delta});
  }
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k)
      if (j != k) {
        const CMat pjk = fb.u.col(j) * fb.u.col(k).adjoint();
        out.push_back({pjk, pjk, fb.h_eigs(j) - fb.h_eigs(k), PieceKind::Offdiag});
      }
  return out;
}

std::string family_name(PieceKind a, PieceKind b) {
  auto leg = [](PieceKind k) { return k == PieceKind::Delta ? "delta" : "offdiag"; };
  if (a == PieceKind::Tau && b == PieceKind::Tau) return "Q0";
  if (b == PieceKind::Tau) return std::string("A:") + leg(a);
  if (a == PieceKind::Tau) return std::string("B:") + leg(b);
  return std::string("AB:") + leg(a) + "-" + leg(b);
}

}  // namespace

UncoupledOperator::UncoupledOperator(const QrmModel& model, const Tolerances& tol)
    : model_(model), tol_(tol) {
  model_.validate(tol);
  const auto& d = model_.dims;
  fa_ = simultaneous_eigenbasis(model_.h_a, model_.reset_a.tau);
  fb_ = simultaneous_eigenbasis(model_.h_b, model_.reset_b.tau);
  // The C factor has no reset: any orthonormal eigenbasis of H_C works, and
  // all n_C^2 dyads P_jk enter the table.
  const CMat hc = model_.hc_or_zero();
  const HermEig ec = herm_eig(hc);
  fc_.u = ec.vectors;
  fc_.h_eigs = ec.values;
  fc_.tau_eigs = RVec::Zero(d.n_c);

  const double ga = model_.reset_a.gamma, gb = model_.reset_b.gamma;
  const auto pa = factor_pieces(fa_);
  const auto pb = factor_pieces(fb_);

  const Index n = d.total();
  const Index nn = n * n;
  table_.reserve(nn);
  vmat_.resize(nn, nn);
  wmat_.resize(nn, nn);
  evals_.resize(nn);

  Index col = 0;
  for (const auto& a : pa)
    for (Index jc = 0; jc < d.n_c; ++jc)
      for (Index kc = 0; kc < d.n_c; ++kc) {
        const CMat pc = fc_.u.col(jc) * fc_.u.col(kc).adjoint();
        const double cfreq = fc_.h_eigs(jc) - fc_.h_eigs(kc);
        for (const auto& b : pb) {
          EigenTableEntry e;
          e.kind_a = a.kind;
          e.kind_b = b.kind;
          e.family = family_name(a.kind, b.kind);
          const double re = (a.kind == PieceKind::Tau ? 0.0 : -ga) +
                            (b.kind == PieceKind::Tau ? 0.0 : -gb);
          e.eigenvalue = Complex(re, -(a.freq + cfreq + b.freq));
          e.vec = kron(a.vec, kron(pc, b.vec));
          e.dual = kron(a.dual, kron(pc, b.dual));
          vmat_.col(col) = vectorize(e.vec);
          wmat_.col(col) = vectorize(e.dual);
          evals_(col) = e.eigenvalue;
          table_.push_back(std::move(e));
          ++col;
        }
      }

  const double scale = ga + gb + evals_.cwiseAbs().maxCoeff();
  inv_evals_.resize(nn);
  for (Index i = 0; i < nn; ++i) {
    if (std::abs(evals_(i)) <= tol_.zero_split * scale) {
      inv_evals_(i) = 0.0;
      ++kernel_dim_;
    } else {
      inv_evals_(i) = 1.0 / evals_(i);
    }
  }
}

CMat UncoupledOperator::apply(const CMat& rho) const { return apply_uncoupled(model_, rho); }

CMat UncoupledOperator::s0(const CMat& rho) const {
  CVec c = wmat_.adjoint() * vectorize(rho);
  c.array() *= inv_evals_.array();
  return devectorize(CVec(vmat_ * c), model_.dims.total());
}

CMat UncoupledOperator::q0(const CMat& rho) const {
  CVec c = wmat_.adjoint() * vectorize(rho);
  for (Index i = 0; i < c.size(); ++i)
    if (inv_evals_(i) != Complex(0.0)) c(i) = 0.0;
  return devectorize(CVec(vmat_ * c), model_.dims.total());
}

SuperOp UncoupledOperator::s0_matrix() const {
  CMat scaled = vmat_;
  for (Index i = 0; i < scaled.cols(); ++i) scaled.col(i) *= inv_evals_(i);
  return SuperOp(model_.dims.total(), scaled * wmat_.adjoint());
}

SuperOp UncoupledOperator::q0_matrix() const {
  CMat scaled = vmat_;
  for (Index i = 0; i < scaled.cols(); ++i)
    if (inv_evals_(i) != Complex(0.0)) scaled.col(i).setZero();
  return SuperOp(model_.dims.total(), scaled * wmat_.adjoint());
}

double UncoupledOperator::basis_condition() const {
  const NullSpace ns = null_space(vmat_, 0.0);
  const RVec& s = ns.singular_values;
  return s(0) / std::max(s(s.size() - 1), 1e-300);
}

double UncoupledOperator::verify_residuals() {
  double worst = 0;
  for (auto& e : table_) {
    e.residual = (apply(e.vec) - e.eigenvalue * e.vec).norm() / e.vec.norm();
    worst = std::max(worst, e.residual);
  }
  return worst;
}

}  // namespace qrm
