#include "tmx/linsolve.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace tmx {

namespace {

[[noreturn]] void throw_singular(double lambda) {
  char buf[96];
  std::snprintf(buf, sizeof buf,
                "shifted solve: alpha coincides with untreated eigenvalue %.12g", lambda);
  throw std::runtime_error(buf);
}

}  // namespace

ShiftedSolver::ShiftedSolver(const QuadForm& forms, double alpha, const EigenBasis* basis,
                             int ell, double eigenvalue_guard)
    : forms_(forms), basis_(basis), alpha_(alpha), ell_(ell) {
  if (ell_ > 0 && (basis_ == nullptr || basis_->n_distinct() < ell_))
    throw std::invalid_argument("shifted solve: ell > 0 requires an eigenbasis covering ell groups");

  if (forms_.torus) {
    const TorusGrid& grid = as_grid(*forms_.geom);
    const int n = grid.n;
    torus_diag_inv_ = Eigen::VectorXd::Zero(n * n);
    // Modes belonging to the first `ell` distinct eigenvalues are removed.
    double lambda_cut = 0.0;
    if (ell_ > 0) lambda_cut = basis_->lambdas[ell_ - 1];
    for (int id = 1; id < n * n; ++id) {
      const double l = grid.mode_eigenvalue(id / n, id % n);
      if (ell_ > 0 && l <= lambda_cut * (1.0 + basis_->grouping_tol)) continue;
      const double d = l - alpha_;
      if (std::abs(d) <= eigenvalue_guard * std::max(l, 1.0)) throw_singular(l);
      torus_diag_inv_[id] = 1.0 / d;
    }
    return;
  }

  // Guard: alpha sitting on an eigenvalue that was not projected out.
  if (basis_ != nullptr) {
    for (int g = ell_; g < basis_->n_distinct(); ++g)
      if (std::abs(basis_->lambdas[g] - alpha_) <=
          eigenvalue_guard * std::max(basis_->lambdas[g], 1.0))
        throw_singular(basis_->lambdas[g]);
  }

  const int n = static_cast<int>(forms_.constrained.size());
  SparseMat A = forms_.K_c - alpha_ * forms_.M_c;
  if (ell_ == 0) {
    const bool spd = basis_ != nullptr ? alpha_ < basis_->lambda1() : alpha_ == 0.0;
    if (spd) {
      use_cholesky_ = true;
      chol_.compute(A);
      if (chol_.info() != Eigen::Success)
        throw std::runtime_error("shifted solve: Cholesky factorization failed");
      return;
    }
    lu_.compute(A);
    if (lu_.info() != Eigen::Success)
      throw std::runtime_error("shifted solve: LU factorization failed (alpha at an eigenvalue?)");
    return;
  }

  // Bordered system pinning the treated eigen-components.
  n_lagrange_ = 0;
  for (int g = 0; g < ell_; ++g) n_lagrange_ += basis_->multiplicities[g];
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(A.nonZeros() + 2 * static_cast<std::size_t>(n_lagrange_) * n);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMat::InnerIterator it(A, k); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  int col = n;
  for (int g = 0; g < ell_; ++g) {
    for (int j = 0; j < basis_->multiplicities[g]; ++j, ++col) {
      const Eigen::VectorXd me = forms_.M * basis_->function(g, j).coeffs;
      for (int i = 0; i < n; ++i) {
        const double v = me[forms_.constrained[i]];
        if (v != 0.0) {
          trip.emplace_back(i, col, v);
          trip.emplace_back(col, i, v);
        }
      }
    }
  }
  SparseMat B(n + n_lagrange_, n + n_lagrange_);
  B.setFromTriplets(trip.begin(), trip.end());
  lu_.compute(B);
  if (lu_.info() != Eigen::Success)
    throw std::runtime_error("shifted solve: bordered factorization failed");
}

Eigen::VectorXd ShiftedSolver::solve(const Eigen::VectorXd& b_full) const {
  if (forms_.torus) {
    return torus_diag_inv_.cwiseProduct(b_full);
  }
  const int n = static_cast<int>(forms_.constrained.size());
  Eigen::VectorXd b = forms_.restrict_full(b_full);
  if (n_lagrange_ == 0) {
    Eigen::VectorXd x = use_cholesky_ ? chol_.solve(b).eval() : lu_.solve(b).eval();
    return forms_.extend_constrained(x);
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + n_lagrange_);
  rhs.head(n) = b;
  const Eigen::VectorXd xl = lu_.solve(rhs);
  return forms_.extend_constrained(xl.head(n));
}

}  // namespace tmx
