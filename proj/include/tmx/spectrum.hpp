#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tmx/assemble.hpp"
#include "tmx/field.hpp"

namespace tmx {

// Distinct eigenvalues of the (positive) Laplacian with multiplicities and an
// M-orthonormal eigenfunction basis. Planar: Dirichlet eigenpairs of
// K v = lambda M v on interior dofs. Torus: Laplace-Beltrami modes with the
// constant excluded, so every basis function has zero mean.
struct EigenBasis {
  std::vector<double> lambdas;        // distinct, ascending
  std::vector<int> multiplicities;
  std::vector<int> group_offset;      // into `functions`
  std::vector<Field> functions;
  std::vector<double> raw_lambdas;    // per function, before grouping
  double grouping_tol = 1e-6;

  int n_distinct() const { return static_cast<int>(lambdas.size()); }
  int total() const { return static_cast<int>(functions.size()); }
  const Field& function(int group, int j) const {
    return functions[group_offset[group] + j];
  }
  double lambda1() const { return lambdas.at(0); }
};

struct EigOptions {
  double tol = 1e-10;
  int max_iter = 400;
  int oversample = 8;
  std::uint64_t seed = 12345;
  double grouping_tol = 1e-6;  // relative gap for multiplicity detection
};

// k smallest eigenpairs. Planar solves use shift-invert subspace iteration
// with a sparse factorization and deterministic seeded start vectors; torus
// eigenpairs are enumerated from the Fourier symbol.
EigenBasis eigenpairs(GeometryPtr geom, const QuadForm& forms, int k,
                      const EigOptions& opts = {});

// u minus its M-projection onto the first `ell` distinct eigenspaces.
// ell = 0 returns u unchanged.
Field project_perp(const Field& u, const EigenBasis& basis, int ell, const QuadForm& forms);

// lambda_{ell+1}, the supremum of admissible alpha for E_ell^perp problems.
double admissible_alpha_max(const EigenBasis& basis, int ell);

// JSON header (eigenvalues, multiplicities, tolerance) plus a CSV coefficient
// block, one function per column.
void save_eigenbasis(const EigenBasis& basis, const std::string& json_path,
                     const std::string& csv_path);

}  // namespace tmx
