#pragma once

#include <Eigen/Sparse>
#include <memory>

#include "tmx/assemble.hpp"
#include "tmx/spectrum.hpp"

namespace tmx {

// Solver for (K - alpha M) x = b restricted to the constrained dofs and,
// when ell > 0, to the M-orthogonal complement of the first ell eigen-groups.
//
// Planar ell = 0 with alpha below lambda_1 is solved by sparse Cholesky;
// otherwise a bordered system [[K - aM, C]; [C^T, 0]] with C = M e_ij pins the
// eigen-components, which stays nonsingular even when alpha hits an
// eigenvalue whose eigenspace was projected out. Torus solves are diagonal in
// mode space. An untreated eigenvalue within the relative guard band of alpha
// is an error.
class ShiftedSolver {
 public:
  ShiftedSolver(const QuadForm& forms, double alpha, const EigenBasis* basis, int ell,
                double eigenvalue_guard = 1e-9);

  // b and the result are full-length vectors.
  Eigen::VectorXd solve(const Eigen::VectorXd& b_full) const;

  double alpha() const { return alpha_; }
  int ell() const { return ell_; }

 private:
  const QuadForm& forms_;
  const EigenBasis* basis_;
  double alpha_;
  int ell_;
  int n_lagrange_ = 0;
  bool use_cholesky_ = false;
  Eigen::SimplicialLDLT<SparseMat> chol_;
  Eigen::SparseLU<SparseMat> lu_;
  Eigen::VectorXd torus_diag_inv_;  // 1/(lambda_mode - alpha); 0 on removed modes
};

}  // namespace tmx
