#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tmx/config.hpp"

namespace tmx {

struct RunRecord {
  double alpha = 0.0;
  double epsilon = 0.0;
  int alpha_index = 0;
  int epsilon_index = 0;
  bool failed = false;
  std::string error;
  nlohmann::json content;  // eigen/green/maximizer/testfn/blowup summaries
  std::string path;        // file this record was written to
};

struct SweepResult {
  std::vector<RunRecord> records;  // grid order: alpha outer, epsilon inner
  std::string summary_csv_path;
  int failures = 0;
};

// Full pipeline per (alpha, epsilon) grid point; eigenbasis and Green
// artifacts are computed once per alpha and reused. Failing points record
// their error and the sweep continues.
SweepResult run_experiment(const ExperimentConfig& cfg);

// Static SVG plots from a sweep's records: functional value vs epsilon with
// the certificate line, radial profile vs bubble, and A vs alpha.
std::vector<std::string> emit_plots(const std::vector<RunRecord>& records,
                                    const std::string& out_dir);

std::vector<RunRecord> load_records(const std::string& out_dir);

}  // namespace tmx
