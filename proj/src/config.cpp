#include "tmx/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace tmx {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

KVConfig KVConfig::parse(std::istream& in) {
  KVConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = strip_quotes(trim(line.substr(eq + 1)));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    cfg.values[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

KVConfig KVConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return parse(in);
}

void KVConfig::apply_env_overrides(const std::string& prefix) {
  // Every known key maps to PREFIX + SECTION_KEY (uppercased, '.' -> '_').
  for (auto& [key, value] : values) {
    std::string env = prefix;
    for (char c : key) env += c == '.' ? '_' : static_cast<char>(std::toupper(c));
    if (const char* v = std::getenv(env.c_str())) value = v;
  }
}

std::string KVConfig::get_string(const std::string& key, const std::string& dflt) const {
  auto it = values.find(key);
  return it == values.end() ? dflt : it->second;
}

double KVConfig::get_double(const std::string& key, double dflt) const {
  auto it = values.find(key);
  if (it == values.end()) return dflt;
  try {
    return std::stod(it->second);
  } catch (...) {
    throw std::runtime_error("config key " + key + ": not a number: " + it->second);
  }
}

int KVConfig::get_int(const std::string& key, int dflt) const {
  auto it = values.find(key);
  if (it == values.end()) return dflt;
  try {
    return std::stoi(it->second);
  } catch (...) {
    throw std::runtime_error("config key " + key + ": not an integer: " + it->second);
  }
}

bool KVConfig::get_bool(const std::string& key, bool dflt) const {
  auto it = values.find(key);
  if (it == values.end()) return dflt;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config key " + key + ": not a boolean: " + it->second);
}

std::vector<double> KVConfig::get_list(const std::string& key, std::vector<double> dflt) const {
  auto it = values.find(key);
  if (it == values.end()) return dflt;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty())
    throw std::runtime_error("config key " + key + ": empty list");
  return out;
}

std::string KVConfig::canonical_bytes() const {
  std::string out;
  for (const auto& [k, v] : values) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig ExperimentConfig::from_kv(const KVConfig& kv) {
  ExperimentConfig c;
  c.kind = kv.get_string("geometry.kind", c.kind);
  c.radius = kv.get_double("geometry.radius", c.radius);
  c.torus_L = kv.get_double("geometry.L", c.torus_L);
  c.torus_n = kv.get_int("geometry.n", c.torus_n);
  c.refinement = kv.get_int("geometry.refinement", c.refinement);
  c.grading = kv.get_double("geometry.grading", c.grading);
  if (kv.has("geometry.polygon")) {
    const std::vector<double> flat = kv.get_list("geometry.polygon", {});
    if (flat.size() < 6 || flat.size() % 2 != 0)
      throw std::runtime_error("geometry.polygon: need an even list of >= 6 coordinates");
    for (std::size_t i = 0; i < flat.size(); i += 2)
      c.polygon.push_back({flat[i], flat[i + 1]});
  }
  c.alphas = kv.get_list("problem.alpha", c.alphas);
  c.alphas_relative = kv.get_bool("problem.alpha_relative", c.alphas_relative);
  c.epsilons = kv.get_list("problem.epsilon", c.epsilons);
  c.ell = kv.get_int("problem.ell", c.ell);
  c.damping = kv.get_double("solver.damping", c.damping);
  c.tol = kv.get_double("solver.tol", c.tol);
  c.max_iter = kv.get_int("solver.max_iter", c.max_iter);
  c.multistarts = kv.get_int("solver.multistarts", c.multistarts);
  c.seed = static_cast<std::uint64_t>(kv.get_double("solver.seed", static_cast<double>(c.seed)));
  c.eigen_k = kv.get_int("solver.eigen_k", c.eigen_k);
  c.testfn_epsilon = kv.get_double("testfn.epsilon", c.testfn_epsilon);
  c.split_delta_fraction = kv.get_double("blowup.delta_fraction", c.split_delta_fraction);
  c.out_dir = kv.get_string("output.dir", c.out_dir);
  c.threads = kv.get_int("output.threads", c.threads);
  c.config_hash = hash_hex(fnv1a64(kv.canonical_bytes()));
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (kind != "disc" && kind != "square" && kind != "polygon" && kind != "torus")
    throw std::runtime_error("geometry.kind must be disc, square, polygon, or torus");
  if (kind == "polygon" && polygon.size() < 3)
    throw std::runtime_error("geometry.polygon required for kind = polygon");
  if (refinement < 0 || refinement > 8)
    throw std::runtime_error("geometry.refinement out of range [0, 8]");
  if (grading < 1.0 || grading > 6.0)
    throw std::runtime_error("geometry.grading out of range [1, 6]");
  for (std::size_t i = 1; i < epsilons.size(); ++i)
    if (!(epsilons[i] < epsilons[i - 1]))
      throw std::runtime_error("problem.epsilon must be strictly decreasing");
  for (double e : epsilons)
    if (!(e > 0.0 && e < 4.0 * M_PI))
      throw std::runtime_error("problem.epsilon entries must lie in (0, 4*pi)");
  if (ell < 0 || ell > 8) throw std::runtime_error("problem.ell out of range [0, 8]");
  if (!(damping > 0.0 && damping <= 1.0))
    throw std::runtime_error("solver.damping out of range (0, 1]");
  if (tol <= 0.0 || max_iter < 1 || multistarts < 1 || eigen_k < 1)
    throw std::runtime_error("solver knobs out of range");
  if (!(testfn_epsilon > 0.0 && testfn_epsilon < std::exp(-3.0)))
    throw std::runtime_error("testfn.epsilon must lie in (0, e^-3)");
  if (!(split_delta_fraction > 0.0 && split_delta_fraction < 1.0))
    throw std::runtime_error("blowup.delta_fraction out of range (0, 1)");
}

GeometryPtr ExperimentConfig::build_geometry() const {
  if (kind == "disc")
    return std::make_shared<Geometry>(build_disc_mesh(radius, refinement, {grading}));
  if (kind == "square")
    return std::make_shared<Geometry>(unit_square_mesh(refinement));
  if (kind == "polygon")
    return std::make_shared<Geometry>(build_polygon_mesh(polygon, refinement));
  return std::make_shared<Geometry>(make_torus(torus_L, torus_n));
}

Point ExperimentConfig::default_pole() const {
  if (kind == "disc") return {0.0, 0.0};
  if (kind == "square") return {0.5, 0.5};
  if (kind == "torus") return {0.0, 0.0};
  Point c{0.0, 0.0};
  for (const Point& p : polygon) c = c + p;
  return (1.0 / polygon.size()) * c;
}

}  // namespace tmx
