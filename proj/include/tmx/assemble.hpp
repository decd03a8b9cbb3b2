#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "tmx/field.hpp"
#include "tmx/geometry.hpp"

namespace tmx {

using SparseMat = Eigen::SparseMatrix<double>;

// Discrete quadratic forms of the geometry. K realizes the Dirichlet energy
// integral of |grad u|^2, M the L2 mass. On a TriMesh both are P1 matrices
// over all vertices; the `constrained` index set lists interior vertices and
// K_c/M_c are the submatrices with Dirichlet rows and columns eliminated. On
// a TorusGrid the forms are diagonal in mode space: K = diag((2pi/L)^2
// (m^2+k^2)), M = identity, and the constrained set drops the constant mode.
struct QuadForm {
  GeometryPtr geom;
  SparseMat K, M;
  SparseMat K_c, M_c;
  std::vector<int> constrained;
  std::vector<int> full_to_constrained;  // -1 for eliminated dofs
  double volume = 0.0;
  bool torus = false;

  // Torus only: 1D synthesis matrix S with S(i,a) = t_a(x_i) and the inverse
  // scaling diag(S^T S), cached for the collocation transforms.
  Eigen::MatrixXd synth;
  Eigen::VectorXd synth_scale_inv;

  double energy(const Eigen::VectorXd& u) const { return u.dot(K * u); }
  double l2_sq(const Eigen::VectorXd& u) const { return u.dot(M * u); }
  double quad_1alpha(const Eigen::VectorXd& u, double alpha) const {
    return energy(u) - alpha * l2_sq(u);
  }

  Eigen::VectorXd restrict_full(const Eigen::VectorXd& full) const;
  Eigen::VectorXd extend_constrained(const Eigen::VectorXd& reduced) const;
};

QuadForm assemble(GeometryPtr geom);

// Torus collocation transforms (exact inverses of each other).
Eigen::MatrixXd torus_synthesize(const QuadForm& forms, const Eigen::VectorXd& coeffs);
Eigen::VectorXd torus_analyze(const QuadForm& forms, const Eigen::MatrixXd& grid_values);

}  // namespace tmx
