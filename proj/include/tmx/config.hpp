#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tmx/geometry.hpp"

namespace tmx {

// Structured-text configuration: [section] headers with key = value rows,
// '#' comments, comma-separated lists. Keys are stored as "section.key".
// Every key can be overridden by an environment variable with the TMX_
// prefix: geometry.kind -> TMX_GEOMETRY_KIND.
struct KVConfig {
  std::map<std::string, std::string> values;

  static KVConfig parse(std::istream& in);
  static KVConfig parse_file(const std::string& path);
  void apply_env_overrides(const std::string& prefix = "TMX_");

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key, double dflt) const;
  int get_int(const std::string& key, int dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  std::vector<double> get_list(const std::string& key, std::vector<double> dflt) const;

  // Sorted key=value lines; the byte string the config hash is taken over.
  std::string canonical_bytes() const;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

struct ExperimentConfig {
  // geometry
  std::string kind = "disc";  // disc | square | polygon | torus
  double radius = 1.0;
  std::vector<Point> polygon;
  double torus_L = 1.0;
  int torus_n = 64;
  int refinement = 3;
  double grading = 1.0;

  // problem grid
  std::vector<double> alphas{0.0};
  bool alphas_relative = false;  // interpret alphas as fractions of lambda_{ell+1}
  std::vector<double> epsilons{2.0 * 3.14159265358979323846, 3.14159265358979323846};
  int ell = 0;

  // solver knobs
  double damping = 0.5;
  double tol = 1e-11;
  int max_iter = 20000;
  int multistarts = 3;
  std::uint64_t seed = 42;
  int eigen_k = 8;

  // test function
  double testfn_epsilon = 1e-4;

  // blow-up diagnostics
  double split_delta_fraction = 0.25;  // of the pole clearance

  // output
  std::string out_dir = "out";
  int threads = 0;  // 0 keeps the runtime default

  std::string config_hash;  // filled by from_kv

  static ExperimentConfig from_kv(const KVConfig& kv);
  void validate() const;
  GeometryPtr build_geometry() const;
  Point default_pole() const;
};

}  // namespace tmx
