#include "tmx/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace tmx {

double bubble_radial(double r) { return -std::log1p(M_PI * r * r) / (4.0 * M_PI); }
double bubble(Point x) { return bubble_radial(std::hypot(x.x, x.y)); }

namespace {

constexpr int kRays = 16;
constexpr double kRadii[5] = {0.5, 1.0, 2.0, 4.0, 8.0};

struct NodeView {
  // Node positions, values, and local sizes, geometry-agnostic.
  std::vector<Point> pos;
  std::vector<double> value;
  std::vector<double> h;
  bool torus = false;
  double L = 0.0;

  double distance(Point a, Point b) const {
    if (!torus) return dist(a, b);
    auto wrap = [this](double d) {
      d = std::fmod(d, L);
      if (d < 0) d += L;
      return std::min(d, L - d);
    };
    return std::hypot(wrap(a.x - b.x), wrap(a.y - b.y));
  }
};

NodeView node_view(const MaximizerResult& result) {
  NodeView view;
  if (result.u.on_mesh()) {
    const TriMesh& mesh = result.u.mesh();
    view.pos = mesh.vertices;
    view.value.assign(result.u.coeffs.data(), result.u.coeffs.data() + result.u.size());
    view.h.assign(mesh.n_vertices(), 0.0);
    for (const auto& tr : mesh.triangles)
      for (int e = 0; e < 3; ++e) {
        const double len = dist(mesh.vertices[tr[e]], mesh.vertices[tr[(e + 1) % 3]]);
        view.h[tr[e]] = std::max(view.h[tr[e]], len);
        view.h[tr[(e + 1) % 3]] = std::max(view.h[tr[(e + 1) % 3]], len);
      }
    return view;
  }
  const TorusGrid& grid = result.u.grid();
  view.torus = true;
  view.L = grid.L;
  QuadForm forms = assemble(result.u.geom);
  const Eigen::MatrixXd g = torus_synthesize(forms, result.u.coeffs);
  view.pos.reserve(static_cast<std::size_t>(grid.n) * grid.n);
  view.value.reserve(view.pos.capacity());
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j) {
      view.pos.push_back({grid.L * i / grid.n, grid.L * j / grid.n});
      view.value.push_back(g(i, j));
    }
  view.h.assign(view.pos.size(), grid.L / grid.n);
  return view;
}

int nearest_node(const NodeView& view, Point target) {
  int best = 0;
  double bd = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < view.pos.size(); ++i) {
    const double d = view.distance(view.pos[i], target);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

BlowupDiagnostics rescale_and_compare(const MaximizerResult& result, double epsilon) {
  if (!result.converged)
    throw std::runtime_error("rescale_and_compare: needs a converged maximizer");
  BlowupDiagnostics d;
  d.c_eps = result.c_eps;
  d.lambda_eps = result.lambda_eps;
  d.x_eps = result.x_eps;
  d.log_r_eps = 0.5 * result.log_lambda_eps - std::log(result.c_eps) -
                (2.0 * M_PI - epsilon / 2.0) * result.c_eps * result.c_eps;
  d.r_eps = d.log_r_eps > -700.0 ? std::exp(d.log_r_eps) : 0.0;
  if (!(d.r_eps > 0.0))
    throw std::runtime_error("rescale_and_compare: r_eps underflows at this c_eps");

  const NodeView view = node_view(result);
  std::set<int> seen;
  for (double mult : kRadii) {
    for (int ray = 0; ray < kRays; ++ray) {
      const double th = 2.0 * M_PI * ray / kRays;
      const double rad = d.r_eps * mult;
      Point target{d.x_eps.x + rad * std::cos(th), d.x_eps.y + rad * std::sin(th)};
      if (view.torus) {
        target.x = std::fmod(target.x + view.L, view.L);
        target.y = std::fmod(target.y + view.L, view.L);
      }
      const int node = nearest_node(view, target);
      if (!seen.insert(node).second) continue;
      ProfileSample s;
      s.radius = view.distance(view.pos[node], d.x_eps);
      s.s = s.radius / d.r_eps;
      s.u = view.value[node];
      s.phi = d.c_eps * (s.u - d.c_eps);
      s.bubble = bubble_radial(s.s);
      s.deviation = s.phi - s.bubble;
      s.resolved = s.radius >= 2.0 * view.h[node];
      d.profile.push_back(s);
    }
  }
  std::sort(d.profile.begin(), d.profile.end(),
            [](const ProfileSample& a, const ProfileSample& b) { return a.s < b.s; });

  double sq = 0.0;
  double psi_num = 0.0, psi_den = 0.0;
  for (const auto& s : d.profile) {
    if (!s.resolved) continue;
    d.resolved_count++;
    sq += s.deviation * s.deviation;
    if (s.s >= 0.5 && s.s <= 2.0) {
      psi_num += s.u / d.c_eps;
      psi_den += 1.0;
    }
  }
  d.unresolved_core = d.resolved_count == 0;
  d.bubble_rms = d.resolved_count ? std::sqrt(sq / d.resolved_count) : 0.0;
  d.psi_at_unit_scale = psi_den > 0 ? psi_num / psi_den : 0.0;

  // Energy concentration over a fixed delta ladder.
  const QuadForm forms = assemble(result.u.geom);
  const double total = forms.energy(result.u.coeffs);
  const double scale = view.torus ? view.L / 2.0 : [&]() {
    const TriMesh& mesh = result.u.mesh();
    double b = std::numeric_limits<double>::max();
    for (int v = 0; v < mesh.n_vertices(); ++v)
      if (mesh.boundary_flag[v]) b = std::min(b, dist(mesh.vertices[v], d.x_eps));
    return b;
  }();
  for (double f : {0.125, 0.25, 0.5, 1.0}) {
    const double delta = f * scale;
    double inside = 0.0;
    if (!view.torus) {
      const TriMesh& mesh = result.u.mesh();
      const auto& c = result.u.coeffs;
      for (int t = 0; t < mesh.n_triangles(); ++t) {
        if (dist(mesh.centroid(t), d.x_eps) > delta) continue;
        const auto& tr = mesh.triangles[t];
        const Point p0 = mesh.vertices[tr[0]], p1 = mesh.vertices[tr[1]],
                    p2 = mesh.vertices[tr[2]];
        const double area = mesh.triangle_area(t);
        const double gx = ((p1.y - p2.y) * c[tr[0]] + (p2.y - p0.y) * c[tr[1]] +
                           (p0.y - p1.y) * c[tr[2]]) /
                          (2.0 * area);
        const double gy = ((p2.x - p1.x) * c[tr[0]] + (p0.x - p2.x) * c[tr[1]] +
                           (p1.x - p0.x) * c[tr[2]]) /
                          (2.0 * area);
        inside += area * (gx * gx + gy * gy);
      }
    } else {
      // Gradient energy density from the mode expansion; Nyquist sine
      // derivatives are not representable and are dropped (negligible for
      // smooth fields).
      const TorusGrid& grid = result.u.grid();
      const int n = grid.n;
      Eigen::VectorXd dx = Eigen::VectorXd::Zero(n * n), dy = dx;
      auto diff1d = [&](int a, double& factor, int& partner) {
        const int j = grid.freq(a);
        const double w = 2.0 * M_PI * j / grid.L;
        if (a == 0 || a == n - 1) {
          factor = 0.0;
          partner = a;
          return;
        }
        if (a % 2 == 1) {  // cos -> -w sin
          factor = -w;
          partner = a + 1;
        } else {  // sin -> w cos
          factor = w;
          partner = a - 1;
        }
      };
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double v = result.u.coeffs[a * n + b];
          if (v == 0.0) continue;
          double f1;
          int pa;
          diff1d(a, f1, pa);
          if (f1 != 0.0) dx[pa * n + b] += f1 * v;
          double f2;
          int pb;
          diff1d(b, f2, pb);
          if (f2 != 0.0) dy[a * n + pb] += f2 * v;
        }
      const Eigen::MatrixXd gx = torus_synthesize(forms, dx);
      const Eigen::MatrixXd gy = torus_synthesize(forms, dy);
      const double cell = (grid.L / n) * (grid.L / n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const Point p{grid.L * i / n, grid.L * j / n};
          if (view.distance(p, d.x_eps) > delta) continue;
          inside += cell * (gx(i, j) * gx(i, j) + gy(i, j) * gy(i, j));
        }
    }
    d.energy_fractions.emplace_back(delta, inside / total);
  }
  return d;
}

EnergySplitReport energy_split_check(const MaximizerResult& result, const GreenResult& green,
                                     double delta, const QuadForm& forms) {
  EnergySplitReport rep;
  rep.delta = delta;
  const Field& u = result.u;
  double hmax, clearance;
  if (u.on_mesh()) {
    const TriMesh& mesh = u.mesh();
    hmax = mesh.h_max;
    clearance = std::numeric_limits<double>::max();
    for (int v = 0; v < mesh.n_vertices(); ++v)
      if (mesh.boundary_flag[v])
        clearance = std::min(clearance, dist(mesh.vertices[v], result.x_eps));
    clearance /= 2.0;
  } else {
    hmax = u.grid().L / u.grid().n;
    clearance = u.grid().L / 4.0;
  }
  if (!(delta > 4.0 * hmax && delta < clearance))
    throw std::invalid_argument("energy_split_check: delta out of range (4h, clearance)");

  double outside = 0.0;
  if (u.on_mesh()) {
    const TriMesh& mesh = u.mesh();
    const auto& c = u.coeffs;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
      if (dist(mesh.centroid(t), result.x_eps) <= delta) continue;
      const auto& tr = mesh.triangles[t];
      const Point p0 = mesh.vertices[tr[0]], p1 = mesh.vertices[tr[1]], p2 = mesh.vertices[tr[2]];
      const double area = mesh.triangle_area(t);
      const double gx =
          ((p1.y - p2.y) * c[tr[0]] + (p2.y - p0.y) * c[tr[1]] + (p0.y - p1.y) * c[tr[2]]) /
          (2.0 * area);
      const double gy =
          ((p2.x - p1.x) * c[tr[0]] + (p0.x - p2.x) * c[tr[1]] + (p1.x - p0.x) * c[tr[2]]) /
          (2.0 * area);
      outside += area * (gx * gx + gy * gy);
    }
  } else {
    const double total = forms.energy(u.coeffs);
    // Integrate the gradient density on the grid and subtract the ball.
    const TorusGrid& grid = u.grid();
    const int n = grid.n;
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(n * n), dy = dx;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const double v = u.coeffs[a * n + b];
        if (v == 0.0) continue;
        const int ja = grid.freq(a), jb = grid.freq(b);
        const double wa = 2.0 * M_PI * ja / grid.L, wb = 2.0 * M_PI * jb / grid.L;
        if (a != 0 && a != n - 1)
          dx[(a % 2 == 1 ? a + 1 : a - 1) * n + b] += (a % 2 == 1 ? -wa : wa) * v;
        if (b != 0 && b != n - 1)
          dy[a * n + (b % 2 == 1 ? b + 1 : b - 1)] += (b % 2 == 1 ? -wb : wb) * v;
      }
    const Eigen::MatrixXd gx = torus_synthesize(forms, dx);
    const Eigen::MatrixXd gy = torus_synthesize(forms, dy);
    const double cell = (grid.L / n) * (grid.L / n);
    double inside = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Point p{grid.L * i / n, grid.L * j / n};
        if (grid.distance(p, result.x_eps) <= delta)
          inside += cell * (gx(i, j) * gx(i, j) + gy(i, j) * gy(i, j));
      }
    outside = total - inside;
  }
  rep.lhs = outside;
  rep.rhs = (std::log(1.0 / delta) / (2.0 * M_PI) + green.A + green.alpha * green.G_l2_sq) /
            (result.c_eps * result.c_eps);
  rep.rel_gap = std::abs(rep.lhs - rep.rhs) / std::max(std::abs(rep.rhs), 1e-300);
  rep.total_energy_gap =
      std::abs(forms.energy(u.coeffs) - 1.0 - green.alpha * forms.l2_sq(u.coeffs));
  return rep;
}

double upper_bound_certificate(double volume, const GreenResult& green) {
  return volume + M_PI * std::exp(1.0 + 4.0 * M_PI * green.A);
}

void save_blowup(const BlowupDiagnostics& d, const std::string& json_path,
                 const std::string& profile_csv_path) {
  nlohmann::json j;
  j["c_eps"] = d.c_eps;
  j["lambda_eps"] = std::isfinite(d.lambda_eps) ? d.lambda_eps : 0.0;
  j["log_r_eps"] = d.log_r_eps;
  j["r_eps"] = d.r_eps;
  j["x_eps"] = {d.x_eps.x, d.x_eps.y};
  j["bubble_rms"] = d.bubble_rms;
  j["resolved_count"] = d.resolved_count;
  j["unresolved_core"] = d.unresolved_core;
  j["psi_at_unit_scale"] = d.psi_at_unit_scale;
  j["energy_fractions"] = d.energy_fractions;
  j["profile_csv"] = profile_csv_path;
  std::ofstream out(json_path);
  if (!out) throw std::runtime_error("cannot open " + json_path);
  out << j.dump(2) << "\n";

  std::ofstream csv(profile_csv_path);
  if (!csv) throw std::runtime_error("cannot open " + profile_csv_path);
  csv << "radius,u,phi_eps,bubble,deviation,resolved\n";
  char buf[160];
  for (const auto& s : d.profile) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%d\n", s.radius, s.u, s.phi,
                  s.bubble, s.deviation, s.resolved ? 1 : 0);
    csv << buf;
  }
}

}  // namespace tmx
