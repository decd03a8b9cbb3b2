#pragma once

#include <functional>
#include <vector>

#include "tmx/assemble.hpp"
#include "tmx/field.hpp"

namespace tmx {

// Modified norm sqrt(u^T K u - alpha u^T M u). Small numerical negativity
// (down to -1e-12 * u^T K u) is clamped to zero; anything worse throws
// "alpha above admissible threshold for this subspace".
double norm_1alpha(const Field& u, double alpha, const QuadForm& forms);

struct ExpIntegral {
  double value = 0.0;      // exp(log_value); +inf when not representable
  double log_value = 0.0;  // always finite, the log-domain encoding
  bool overflow_regime = false;
};

enum class QuadMode {
  consistent,  // symmetric 7-point degree-5 rule on the P1 interpolant
  lumped       // nodal values with lumped mass weights (cross-checking only)
};

// Integral of e^{beta u^2}. TriMesh: per-triangle quadrature of the P1
// interpolant; TorusGrid: trapezoidal rule on the n x n collocation grid.
// When beta * max(u)^2 > 700 the sum is accumulated in log domain and the
// result is flagged.
ExpIntegral exp_functional(const Field& u, double beta, const QuadForm& forms,
                           QuadMode mode = QuadMode::consistent);

// Integral of e^{4 pi u^2 (1 + alpha ||u||_2^2)}.
ExpIntegral adimurthi_druet_functional(const Field& u, double alpha, const QuadForm& forms);

// Degree-5 quadrature of an arbitrary integrand over a mesh, and the
// trapezoidal analogue on a torus grid.
double integrate(const TriMesh& mesh, const std::function<double(Point)>& f);
double integrate(const TorusGrid& grid, const std::function<double(Point)>& f);

struct QuadSample {
  Point x;
  double weight;
  double u;  // interpolated field value
};

// Quadrature nodes with interpolated field values (the points exp_functional
// sees). Used by property tests that compare integrands pointwise.
std::vector<QuadSample> quadrature_samples(const Field& u);

// Serial reference implementations (identical results by construction; kept
// for the kernel-equivalence tests and the benchmark).
ExpIntegral exp_functional_serial(const Field& u, double beta, const QuadForm& forms,
                                  QuadMode mode = QuadMode::consistent);

}  // namespace tmx
