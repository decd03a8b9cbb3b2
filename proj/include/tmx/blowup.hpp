#pragma once

#include <string>
#include <vector>

#include "tmx/assemble.hpp"
#include "tmx/green.hpp"
#include "tmx/maximizer.hpp"

namespace tmx {

// Limit profile of rescaled maximizers: -log(1 + pi |x|^2) / (4 pi).
double bubble_radial(double r);
double bubble(Point x);

struct ProfileSample {
  double s = 0.0;       // radius in units of r_eps
  double radius = 0.0;  // physical distance to the peak
  double u = 0.0;       // field value at the sampled node
  double phi = 0.0;     // c_eps (u - c_eps)
  double bubble = 0.0;  // reference profile at s
  double deviation = 0.0;
  bool resolved = false;  // radius >= 2 * local h
};

struct BlowupDiagnostics {
  double c_eps = 0.0;
  double lambda_eps = 0.0;
  double log_r_eps = 0.0;  // always finite; r_eps underflows quickly
  double r_eps = 0.0;
  Point x_eps{};
  std::vector<ProfileSample> profile;
  double bubble_rms = 0.0;  // over resolved samples
  int resolved_count = 0;
  bool unresolved_core = false;
  double psi_at_unit_scale = 0.0;  // mean u/c_eps near s = 1
  std::vector<std::pair<double, double>> energy_fractions;  // (delta, fraction)
};

// Samples the maximizer at mesh nodes nearest to 16 rays times radius
// multipliers {0.5, 1, 2, 4, 8} r_eps and compares against the bubble.
// r_eps is computed in log domain from (lambda_eps, c_eps, epsilon).
BlowupDiagnostics rescale_and_compare(const MaximizerResult& result, double epsilon);

struct EnergySplitReport {
  double delta = 0.0;
  double lhs = 0.0;      // Dirichlet energy outside B_delta(x_eps)
  double rhs = 0.0;      // (log(1/delta)/(2 pi) + A + alpha ||G||_2^2) / c_eps^2
  double rel_gap = 0.0;
  double total_energy_gap = 0.0;  // |u^T K u - 1 - alpha u^T M u|
};

EnergySplitReport energy_split_check(const MaximizerResult& result, const GreenResult& green,
                                     double delta, const QuadForm& forms);

// volume + pi e^{1 + 4 pi A}.
double upper_bound_certificate(double volume, const GreenResult& green);

void save_blowup(const BlowupDiagnostics& d, const std::string& json_path,
                 const std::string& profile_csv_path);

}  // namespace tmx
