#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tmx/assemble.hpp"
#include "tmx/field.hpp"
#include "tmx/functional.hpp"
#include "tmx/spectrum.hpp"

namespace tmx {

struct MaximizerConfig {
  double epsilon = 1.0;    // in (0, 4*pi)
  double alpha = 0.0;
  int ell = 0;             // planar: constrain to E_ell^perp
  double damping = 0.5;    // theta in (0, 1]
  double tol = 1e-11;      // H1-seminorm of iterate difference
  int max_iter = 20000;
  int multistarts = 3;
  std::uint64_t seed = 42;

  void validate() const;
};

// Subcritical maximizer of the exponential functional at exponent 4*pi -
// epsilon under unit modified norm, found as a damped fixed point of the
// Euler-Lagrange solve. Multistart winner by functional value; ties by start
// index.
struct MaximizerResult {
  Field u;
  double value = 0.0;       // functional value (degree-5 / trapezoid quadrature)
  double log_value = 0.0;
  bool overflow = false;
  double lambda_eps = 0.0;      // u^T M w with w = u e^{(4pi-eps)u^2} nodal
  double log_lambda_eps = 0.0;  // always finite
  double mu_eps = 0.0;          // torus mean multiplier, 0 on meshes
  double c_eps = 0.0;           // max |u| over dofs (after sign convention)
  Point x_eps{};
  int x_eps_node = -1;
  int iterations = 0;
  double residual = 0.0;    // Euler-Lagrange residual in the discrete dual norm
  bool converged = false;
  int winning_start = -1;
  double init_value = 0.0;  // functional value of the winning start's seed
  bool positive = false;    // min nodal value > -1e-10 * c_eps (planar report)
  std::vector<double> start_values;  // converged value per start (diagnostics)
};

MaximizerResult maximize_subcritical(GeometryPtr geom, const QuadForm& forms,
                                     const EigenBasis* basis, const MaximizerConfig& cfg);

// Dual-norm Euler-Lagrange residual of a result, with the mean multiplier on
// the torus and the E_ell^perp projection applied when ell > 0.
double el_residual(const MaximizerResult& result, const QuadForm& forms, double alpha,
                   double epsilon, const EigenBasis* basis, int ell);

struct UnboundednessRow {
  double t;
  double norm_1alpha_sq;   // t^2 (lambda - alpha): never binds when alpha >= lambda
  double log_functional;   // log of the exponential integral, always finite
  bool overflow;
};

// Functional values along t * e (first admissible eigenfunction), showing
// divergence when alpha >= lambda. Also reports t_max when the constraint
// still binds (alpha < lambda).
struct UnboundednessReport {
  std::vector<UnboundednessRow> rows;
  double lambda = 0.0;
  double t_max = -1.0;  // 1/sqrt(lambda - alpha) when alpha < lambda, else -1
};

UnboundednessReport demonstrate_unboundedness(GeometryPtr geom, const QuadForm& forms,
                                              const EigenBasis& basis, double alpha,
                                              const std::vector<double>& t_values,
                                              int ell = 0);

void save_run_record(const MaximizerResult& result, const MaximizerConfig& cfg,
                     const std::string& json_path, const std::string& field_path);

}  // namespace tmx
