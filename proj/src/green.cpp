#include "tmx/green.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "tmx/linsolve.hpp"

#include <json.hpp>

namespace tmx {

namespace {

struct Sample {
  double r;
  double h;
  double dx, dy;
  double value;
};

// Displacement from the pole (shortest image on the torus) and local element
// sizes per dof location.
std::vector<Sample> collect_samples(const Field& G, Point x0) {
  std::vector<Sample> out;
  if (G.on_mesh()) {
    const TriMesh& mesh = G.mesh();
    std::vector<double> h(mesh.n_vertices(), 0.0);
    for (const auto& tr : mesh.triangles) {
      for (int e = 0; e < 3; ++e) {
        const double len = dist(mesh.vertices[tr[e]], mesh.vertices[tr[(e + 1) % 3]]);
        h[tr[e]] = std::max(h[tr[e]], len);
        h[tr[(e + 1) % 3]] = std::max(h[tr[(e + 1) % 3]], len);
      }
    }
    out.reserve(mesh.n_vertices());
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      const double dx = mesh.vertices[v].x - x0.x;
      const double dy = mesh.vertices[v].y - x0.y;
      out.push_back({std::hypot(dx, dy), h[v], dx, dy, G.coeffs[v]});
    }
    return out;
  }
  const TorusGrid& grid = G.grid();
  QuadForm forms = assemble(G.geom);
  const Eigen::MatrixXd g = torus_synthesize(forms, G.coeffs);
  const double h = grid.L / grid.n;
  auto wrap = [&](double d) {
    d = std::fmod(d, grid.L);
    if (d < 0) d += grid.L;
    if (d > grid.L / 2) d -= grid.L;
    return d;
  };
  out.reserve(static_cast<std::size_t>(grid.n) * grid.n);
  for (int i = 0; i < grid.n; ++i) {
    for (int j = 0; j < grid.n; ++j) {
      const double dx = wrap(grid.L * i / grid.n - x0.x);
      const double dy = wrap(grid.L * j / grid.n - x0.y);
      out.push_back({std::hypot(dx, dy), h, dx, dy, g(i, j)});
    }
  }
  return out;
}

double boundary_distance(const TriMesh& mesh, Point p) {
  // Distance to the boundary edge set.
  double best = std::numeric_limits<double>::max();
  std::map<std::pair<int, int>, int> counts;
  for (const auto& tr : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      const int a = tr[e], b = tr[(e + 1) % 3];
      counts[{std::min(a, b), std::max(a, b)}]++;
    }
  for (const auto& [edge, count] : counts) {
    if (count != 1) continue;
    const Point a = mesh.vertices[edge.first], b = mesh.vertices[edge.second];
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, std::hypot(p.x - a.x - t * vx, p.y - a.y - t * vy));
  }
  return best;
}

void check_admissible(double alpha, const EigenBasis* basis, int ell) {
  if (basis == nullptr) return;
  if (basis->n_distinct() < ell + 1) return;  // threshold unknown, solver guard still applies
  const double cap = (1.0 - 1e-3) * basis->lambdas[ell];
  if (alpha > cap)
    throw std::runtime_error("green: alpha above admissible threshold for this subspace");
}

}  // namespace

std::pair<double, GreenFit> extract_regular_part(const Field& G, Point x0,
                                                 const GreenOptions& opts) {
  std::vector<Sample> samples = collect_samples(G, x0);
  std::sort(samples.begin(), samples.end(),
            [](const Sample& a, const Sample& b) { return a.r < b.r; });

  // Smallest radius whose ball is fully resolved: every dof within it has
  // local size <= radius / outer_factor.
  GreenFit fit;
  fit.threshold = opts.fit_residual_threshold;
  double running_h = 0.0;
  double r_out = -1.0;
  for (const auto& s : samples) {
    if (s.r < 1e-14) continue;
    running_h = std::max(running_h, s.h);
    if (s.r >= opts.outer_factor * running_h) {
      r_out = s.r;
      fit.h_loc = running_h;
      break;
    }
  }
  if (r_out < 0)
    throw std::runtime_error(
        "extract_regular_part: mesh not resolved around pole; refine near x0");
  fit.r_in = opts.inner_factor * fit.h_loc;
  fit.r_out = opts.outer_factor * fit.h_loc;

  std::vector<const Sample*> win;
  for (const auto& s : samples)
    if (s.r >= fit.r_in && s.r <= fit.r_out) win.push_back(&s);
  fit.n_samples = static_cast<int>(win.size());
  if (fit.n_samples < opts.min_samples)
    throw std::runtime_error(
        "extract_regular_part: fewer than " + std::to_string(opts.min_samples) +
        " annulus nodes; refine near x0");

  Eigen::MatrixXd X(fit.n_samples, 3);
  Eigen::VectorXd y(fit.n_samples);
  for (int i = 0; i < fit.n_samples; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = win[i]->dx;
    X(i, 2) = win[i]->dy;
    y[i] = win[i]->value + std::log(win[i]->r) / (2.0 * M_PI);
  }
  const Eigen::Vector3d beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  const Eigen::VectorXd res = y - X * beta;
  fit.rms = std::sqrt(res.squaredNorm() / fit.n_samples);
  fit.ok = fit.rms <= fit.threshold;
  return {beta[0], fit};
}

GreenResult solve_green_planar(GeometryPtr geom, Point x0, double alpha,
                               const EigenBasis* basis, int ell, const QuadForm& forms,
                               const GreenOptions& opts) {
  const TriMesh& mesh = as_mesh(*geom);
  std::array<double, 3> bary{};
  const int t = mesh.locate(x0, bary);
  if (t < 0) throw std::runtime_error("green: x0 outside mesh");
  double h_here = 0.0;
  for (int e = 0; e < 3; ++e) {
    const auto& tr = mesh.triangles[t];
    h_here = std::max(h_here, dist(mesh.vertices[tr[e]], mesh.vertices[tr[(e + 1) % 3]]));
  }
  if (boundary_distance(mesh, x0) <= 2.0 * h_here)
    throw std::runtime_error("green: x0 too close to the boundary");
  check_admissible(alpha, basis, ell);

  Eigen::VectorXd b = Eigen::VectorXd::Zero(mesh.n_vertices());
  for (int e = 0; e < 3; ++e) b[mesh.triangles[t][e]] = bary[e];

  ShiftedSolver solver(forms, alpha, basis, ell);
  GreenResult res;
  res.geom = geom;
  res.pole = x0;
  res.alpha = alpha;
  res.ell = ell;
  res.projected = ell > 0;
  res.G = make_field(geom, solver.solve(b));
  auto [A, fit] = extract_regular_part(res.G, x0, opts);
  res.A = A;
  res.fit = fit;
  res.G_l2_sq = forms.l2_sq(res.G.coeffs);
  return res;
}

GreenResult solve_green_torus(GeometryPtr geom, Point p, double alpha,
                              const EigenBasis* basis, int ell, const QuadForm& forms,
                              const GreenOptions& opts) {
  const TorusGrid& grid = as_grid(*geom);
  check_admissible(alpha, basis, ell);

  Eigen::VectorXd b(grid.n_modes());
  for (int a = 0; a < grid.n; ++a) {
    const double ta = grid.basis1d(a, p.x);
    for (int bb = 0; bb < grid.n; ++bb)
      b[a * grid.n + bb] = ta * grid.basis1d(bb, p.y);
  }

  ShiftedSolver solver(forms, alpha, basis, ell);
  GreenResult res;
  res.geom = geom;
  res.pole = p;
  res.alpha = alpha;
  res.ell = ell;
  res.projected = ell > 0;
  res.G = make_field(geom, solver.solve(b));
  auto [A, fit] = extract_regular_part(res.G, p, opts);
  res.A = A;
  res.fit = fit;
  res.G_l2_sq = forms.l2_sq(res.G.coeffs);
  return res;
}

void save_field_file(const Field& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "field " << (f.on_mesh() ? "mesh" : "torus") << " " << f.size() << "\n";
  char buf[40];
  for (int i = 0; i < f.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", f.coeffs[i]);
    out << buf;
  }
}

void save_green(const GreenResult& res, const std::string& json_path,
                const std::string& field_path) {
  nlohmann::json j;
  j["pole"] = {res.pole.x, res.pole.y};
  j["alpha"] = res.alpha;
  j["ell"] = res.ell;
  j["projected"] = res.projected;
  j["A"] = res.A;
  j["G_l2_sq"] = res.G_l2_sq;
  j["fit"] = {{"h_loc", res.fit.h_loc},   {"r_in", res.fit.r_in},
              {"r_out", res.fit.r_out},   {"n_samples", res.fit.n_samples},
              {"rms", res.fit.rms},       {"threshold", res.fit.threshold},
              {"ok", res.fit.ok}};
  j["field_file"] = field_path;
  std::ofstream out(json_path);
  if (!out) throw std::runtime_error("cannot open " + json_path);
  out << j.dump(2) << "\n";
  save_field_file(res.G, field_path);
}

}  // namespace tmx
