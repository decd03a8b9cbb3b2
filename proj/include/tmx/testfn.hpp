#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tmx/assemble.hpp"
#include "tmx/field.hpp"
#include "tmx/green.hpp"
#include "tmx/spectrum.hpp"

namespace tmx {

// Constants of the concentrating test-function family. c2 and B are the
// leading asymptotic terms; B_continuity is the exact value that makes the
// cap and tail branches agree at r = R*eps given c2, and continuity_defect is
// the branch mismatch left when the leading-term B is used instead.
struct TestFnConstants {
  double R = 0.0;  // -log eps
  double c2 = 0.0;
  double B = 0.0;
  double B_continuity = 0.0;
  double continuity_defect = 0.0;
};

// Requires eps < e^{-3} (otherwise the asymptotic regime is not reached).
// alpha enters the norm bookkeeping downstream, not these leading terms.
TestFnConstants compute_constants(double epsilon, double A, double alpha);

// Branch id per dof: 0 cap, 1 blend band, 2 tail.
using BranchMap = std::vector<std::int8_t>;

// Nodal three-branch field: Moser cap of scale eps inside B_{R eps}, the
// discrete Green function (with the smooth remainder faded out by a quintic
// ramp) in the band, G/c outside. Throws when R*eps violates the scale
// relations (too large for the geometry or finer than the mesh resolves).
Field build_test_function(GeometryPtr geom, const GreenResult& green, double epsilon,
                          BranchMap* branch_map = nullptr);

struct LowerBoundParts {
  double cap = 0.0, band = 0.0, tail = 0.0;
  double total = 0.0;
  double margin = 0.0;     // total - threshold
  double margin_c2 = 0.0;  // margin * c^2
};

struct LowerBoundReport {
  double epsilon = 0.0, R = 0.0, c2 = 0.0, B = 0.0, A = 0.0, alpha = 0.0;
  double volume = 0.0;
  double threshold = 0.0;    // volume + pi e^{1 + 4 pi A}
  double obre_coeff = 0.0;   // 4 pi ||G||_2^2 (discrete)
  double s2_mesh = 0.0;      // discrete norm^2 of the built field
  double s2_radial = 0.0;    // semi-analytic norm^2 of the construction

  // Field-quadrature route: degree-5 / trapezoid quadrature of the
  // renormalized nodal field, split by radius.
  LowerBoundParts mesh;

  // Radial-construction route: 1D quadrature of the closed-form branches
  // (smooth Green remainder dropped in the band) with the tail expanded to
  // first order around 1, using the discrete ||G||_2.
  LowerBoundParts radial;

  // Certified lower-bound pieces: the cap integrand without its quadratic
  // boost and the linearized tail. Its margin scaled by c^2 is the quantity
  // the 4 pi ||G||_2^2 coefficient describes.
  double bound_cap = 0.0, bound_tail = 0.0, bound_total = 0.0;
  double bound_margin = 0.0, bound_margin_c2 = 0.0;

  double agreement_ratio = 0.0;  // bound_margin_c2 / obre_coeff
  bool agreement_flag = false;   // within 20 percent
  bool verdict = false;          // mesh-route margin > 0
};

// The threshold-exceedance report. The field is renormalized to unit modified
// norm before integrating.
LowerBoundReport lower_bound_report(const Field& phi, const GreenResult& green,
                                    const QuadForm& forms, double epsilon);

// Radial/bound pieces only, computed from the construction without a nodal
// field. Usable at epsilon finer than any affordable mesh.
LowerBoundReport radial_lower_bound(const GreenResult& green, const QuadForm& forms,
                                    double epsilon);

// Mean subtraction (torus), projection onto E_ell^perp, then exact
// renormalization. Correction coefficients are written to coeffs_out.
Field project_and_renormalize(const Field& phi, const EigenBasis* basis, int ell,
                              const QuadForm& forms, double alpha,
                              std::vector<double>* coeffs_out = nullptr);

void save_lower_bound_report(const LowerBoundReport& rep, const std::string& json_path);

}  // namespace tmx
