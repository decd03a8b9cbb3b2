#include "tmx/testfn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "tmx/functional.hpp"
#include "tmx/parallel.hpp"
#include "tmx/quad1d.hpp"

#include <json.hpp>

namespace tmx {

namespace {

constexpr double kPi = M_PI;

double cap_profile(double r, double eps, double c, double B) {
  const double t = -std::log1p(kPi * r * r / (eps * eps)) / (4.0 * kPi) + B;
  return c + t / c;
}

// C^2 ramp: 1 on [0, R eps], 0 beyond 2 R eps.
double eta_ramp(double r, double re) {
  if (r <= re) return 1.0;
  if (r >= 2.0 * re) return 0.0;
  const double s = (r - re) / re;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

struct GeomView {
  bool torus = false;
  const TriMesh* mesh = nullptr;
  const TorusGrid* grid = nullptr;
  Point pole;

  double r(Point p) const {
    return torus ? grid->distance(p, pole) : dist(p, pole);
  }
};

double pole_clearance(const GeomView& view) {
  if (view.torus) return view.grid->L / 8.0;
  // Planar: a quarter of the distance to the boundary.
  double best = std::numeric_limits<double>::max();
  const TriMesh& mesh = *view.mesh;
  for (int v = 0; v < mesh.n_vertices(); ++v)
    if (mesh.boundary_flag[v]) best = std::min(best, dist(mesh.vertices[v], view.pole));
  return best / 4.0;
}

// Largest local element size among dofs inside the cap.
double cap_resolution(const GeomView& view, double re) {
  if (view.torus) return view.grid->L / view.grid->n;
  const TriMesh& mesh = *view.mesh;
  double h = 0.0;
  for (const auto& tr : mesh.triangles) {
    bool touches = false;
    double edge = 0.0;
    for (int e = 0; e < 3; ++e) {
      if (view.r(mesh.vertices[tr[e]]) <= re) touches = true;
      edge = std::max(edge, dist(mesh.vertices[tr[e]], mesh.vertices[tr[(e + 1) % 3]]));
    }
    if (touches) h = std::max(h, edge);
  }
  return h;
}

}  // namespace

TestFnConstants compute_constants(double epsilon, double A, double alpha) {
  (void)alpha;  // cancels between the gradient and L2 terms of the norm
  if (!(epsilon > 0.0) || epsilon >= std::exp(-3.0))
    throw std::invalid_argument("compute_constants: asymptotic regime not reached");
  TestFnConstants k;
  k.R = -std::log(epsilon);
  k.c2 = -std::log(epsilon) / (2.0 * kPi) + std::log(kPi) / (4.0 * kPi) - 1.0 / (4.0 * kPi) + A;
  if (!(k.c2 > 0.0))
    throw std::runtime_error("compute_constants: nonpositive c^2 (A too negative for this eps)");
  k.B = 1.0 / (4.0 * kPi);
  const double re = k.R * epsilon;
  // Exact branch matching at r = R eps given c2.
  k.B_continuity = A + std::log1p(kPi * k.R * k.R) / (4.0 * kPi) -
                   std::log(re) / (2.0 * kPi) - k.c2;
  const double c = std::sqrt(k.c2);
  k.continuity_defect = (k.B - k.B_continuity) / c;
  return k;
}

Field build_test_function(GeometryPtr geom, const GreenResult& green, double epsilon,
                          BranchMap* branch_map) {
  const TestFnConstants k = compute_constants(epsilon, green.A, green.alpha);
  const double c = std::sqrt(k.c2);
  const double re = k.R * epsilon;

  GeomView view;
  view.torus = !is_mesh(*geom);
  view.pole = green.pole;
  if (view.torus)
    view.grid = &as_grid(*geom);
  else
    view.mesh = &as_mesh(*geom);

  const double clearance = pole_clearance(view);
  if (!(re < clearance))
    throw std::runtime_error(
        "test function: R*eps exceeds the injectivity scale of the geometry "
        "(increase the domain clearance or decrease eps)");
  const double h_cap = cap_resolution(view, re);
  if (!(re > 4.0 * h_cap))
    throw std::runtime_error(
        "test function: R*eps below 4 local h; the mesh does not resolve the cap");

  auto value_at = [&](Point p, double g_value, std::int8_t& branch) {
    const double r = view.r(p);
    if (r <= re) {
      branch = 0;
      return cap_profile(r, epsilon, c, k.B_continuity);
    }
    if (r < 2.0 * re) {
      branch = 1;
      const double psi = g_value + std::log(r) / (2.0 * kPi) - green.A;
      return (g_value - eta_ramp(r, re) * psi) / c;
    }
    branch = 2;
    return g_value / c;
  };

  if (!view.torus) {
    const TriMesh& mesh = *view.mesh;
    Eigen::VectorXd values(mesh.n_vertices());
    if (branch_map) branch_map->assign(mesh.n_vertices(), 2);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      std::int8_t b = 2;
      values[v] = mesh.boundary_flag[v]
                      ? 0.0
                      : value_at(mesh.vertices[v], green.G.coeffs[v], b);
      if (branch_map) (*branch_map)[v] = b;
    }
    return make_field(geom, std::move(values));
  }

  const TorusGrid& grid = *view.grid;
  QuadForm forms = assemble(geom);
  const Eigen::MatrixXd gvals = torus_synthesize(forms, green.G.coeffs);
  Eigen::MatrixXd phi(grid.n, grid.n);
  if (branch_map) branch_map->assign(grid.n_modes(), 2);
  for (int i = 0; i < grid.n; ++i) {
    for (int j = 0; j < grid.n; ++j) {
      std::int8_t b = 2;
      phi(i, j) = value_at({grid.L * i / grid.n, grid.L * j / grid.n}, gvals(i, j), b);
      if (branch_map) (*branch_map)[i * grid.n + j] = b;
    }
  }
  return make_field(geom, torus_analyze(forms, phi));
}

namespace {

// Quadrature of e^{4 pi (phi/s)^2} split into cap / band / tail by radius.
void mesh_route(const Field& phi, const GeomView& view, double re, double s2,
                LowerBoundParts& parts) {
  const double inv = 4.0 * kPi / s2;
  if (!view.torus) {
    const TriMesh& mesh = *view.mesh;
    const auto& c = phi.coeffs;
    static constexpr double L0[7] = {1.0 / 3.0, 0.059715871789770, 0.470142064105115,
                                     0.470142064105115, 0.797426985353087,
                                     0.101286507323456, 0.101286507323456};
    static constexpr double L1[7] = {1.0 / 3.0, 0.470142064105115, 0.059715871789770,
                                     0.470142064105115, 0.101286507323456,
                                     0.797426985353087, 0.101286507323456};
    static constexpr double W[7] = {0.225,
                                    0.132394152788506,
                                    0.132394152788506,
                                    0.132394152788506,
                                    0.125939180544827,
                                    0.125939180544827,
                                    0.125939180544827};
    for (int region = 0; region < 3; ++region) {
      double* slot = region == 0 ? &parts.cap : region == 1 ? &parts.band : &parts.tail;
      *slot = par::chunked_sum(static_cast<std::size_t>(mesh.n_triangles()), [&](std::size_t t) {
        const auto& tr = mesh.triangles[t];
        const Point p0 = mesh.vertices[tr[0]], p1 = mesh.vertices[tr[1]],
                    p2 = mesh.vertices[tr[2]];
        const double area = mesh.triangle_area(static_cast<int>(t));
        double s = 0.0;
        for (int q = 0; q < 7; ++q) {
          const double l0 = L0[q], l1 = L1[q], l2 = 1.0 - l0 - l1;
          const Point x{l0 * p0.x + l1 * p1.x + l2 * p2.x,
                        l0 * p0.y + l1 * p1.y + l2 * p2.y};
          const double r = view.r(x);
          const int reg = r <= re ? 0 : (r < 2.0 * re ? 1 : 2);
          if (reg != region) continue;
          const double uq = l0 * c[tr[0]] + l1 * c[tr[1]] + l2 * c[tr[2]];
          s += W[q] * std::exp(inv * uq * uq);
        }
        return area * s;
      });
    }
  } else {
    const TorusGrid& grid = *view.grid;
    QuadForm forms = assemble(phi.geom);
    const Eigen::MatrixXd g = torus_synthesize(forms, phi.coeffs);
    const double cell = (grid.L / grid.n) * (grid.L / grid.n);
    for (int region = 0; region < 3; ++region) {
      double* slot = region == 0 ? &parts.cap : region == 1 ? &parts.band : &parts.tail;
      *slot = par::chunked_sum(static_cast<std::size_t>(grid.n) * grid.n, [&](std::size_t idx) {
        const int i = static_cast<int>(idx) / grid.n, j = static_cast<int>(idx) % grid.n;
        const double r = view.r({grid.L * i / grid.n, grid.L * j / grid.n});
        const int reg = r <= re ? 0 : (r < 2.0 * re ? 1 : 2);
        if (reg != region) return 0.0;
        const double v = g(i, j);
        return cell * std::exp(inv * v * v);
      });
    }
  }
  parts.total = parts.cap + parts.band + parts.tail;
}

LowerBoundReport assemble_report(const GreenResult& green, const QuadForm& forms,
                                 double epsilon, const Field* phi) {
  const TestFnConstants k = compute_constants(epsilon, green.A, green.alpha);
  const double c = std::sqrt(k.c2);
  const double re = k.R * epsilon;
  const double A = green.A;
  const double alpha = green.alpha;

  LowerBoundReport rep;
  rep.epsilon = epsilon;
  rep.R = k.R;
  rep.c2 = k.c2;
  rep.B = k.B_continuity;
  rep.A = A;
  rep.alpha = alpha;
  rep.volume = forms.volume;
  rep.threshold = forms.volume + kPi * std::exp(1.0 + 4.0 * kPi * A);
  rep.obre_coeff = 4.0 * kPi * green.G_l2_sq;

  // --- Radial construction route ---------------------------------------
  auto tail_model = [&](double r) { return (-std::log(r) / (2.0 * kPi) + A) / c; };
  const double e_cap =
      (std::log1p(kPi * k.R * k.R) - kPi * k.R * k.R / (1.0 + kPi * k.R * k.R)) /
      (4.0 * kPi * k.c2);
  const double e_band = std::log(2.0) / (2.0 * kPi * k.c2);
  const double e_tail =
      (std::log(1.0 / (2.0 * re)) / (2.0 * kPi) + A + alpha * green.G_l2_sq) / k.c2;
  auto sq = [](double x) { return x * x; };
  const double l2_cap = integrate_1d(
      [&](double r) { return 2.0 * kPi * r * sq(cap_profile(r, epsilon, c, k.B_continuity)); },
      0.0, re);
  const double l2_band =
      integrate_1d([&](double r) { return 2.0 * kPi * r * sq(tail_model(r)); }, re, 2.0 * re);
  const double l2_ball =
      integrate_1d([&](double r) { return 2.0 * kPi * r * sq(tail_model(r) * c); }, 1e-9, 2.0 * re);
  const double l2_total = l2_cap + l2_band + (green.G_l2_sq - l2_ball) / k.c2;
  rep.s2_radial = e_cap + e_band + e_tail - alpha * l2_total;

  const double s2r = rep.s2_radial;
  rep.radial.cap = integrate_1d(
      [&](double r) {
        return 2.0 * kPi * r *
               std::exp(4.0 * kPi * sq(cap_profile(r, epsilon, c, k.B_continuity)) / s2r);
      },
      0.0, re);
  rep.radial.band = integrate_1d(
      [&](double r) { return 2.0 * kPi * r * std::exp(4.0 * kPi * sq(tail_model(r)) / s2r); },
      re, 2.0 * re);
  const double ball_area = kPi * sq(2.0 * re);
  rep.radial.tail = (forms.volume - ball_area) +
                    (4.0 * kPi / (k.c2 * s2r)) * (green.G_l2_sq - l2_ball);
  rep.radial.total = rep.radial.cap + rep.radial.band + rep.radial.tail;
  rep.radial.margin = rep.radial.total - rep.threshold;
  rep.radial.margin_c2 = rep.radial.margin * k.c2;

  // Certified bound: cap integrand without the quadratic boost, band by its
  // area, tail linearized.
  rep.bound_cap = integrate_1d(
      [&](double r) {
        const double expo =
            4.0 * kPi * k.c2 - 2.0 * std::log1p(kPi * r * r / (epsilon * epsilon)) +
            8.0 * kPi * k.B_continuity;
        return 2.0 * kPi * r * std::exp(expo / s2r);
      },
      0.0, re);
  rep.bound_tail = rep.radial.tail;
  rep.bound_total = rep.bound_cap + (ball_area - kPi * re * re) + rep.bound_tail;
  rep.bound_margin = rep.bound_total - rep.threshold;
  rep.bound_margin_c2 = rep.bound_margin * k.c2;
  rep.agreement_ratio = rep.obre_coeff != 0.0 ? rep.bound_margin_c2 / rep.obre_coeff : 0.0;
  rep.agreement_flag = std::abs(rep.agreement_ratio - 1.0) <= 0.2;

  // --- Field quadrature route -------------------------------------------
  if (phi != nullptr) {
    GeomView view;
    view.torus = !is_mesh(*phi->geom);
    view.pole = green.pole;
    if (view.torus)
      view.grid = &as_grid(*phi->geom);
    else
      view.mesh = &as_mesh(*phi->geom);
    rep.s2_mesh = forms.quad_1alpha(phi->coeffs, alpha);
    if (!(rep.s2_mesh > 0.0))
      throw std::runtime_error("lower_bound_report: built field has nonpositive norm");
    mesh_route(*phi, view, re, rep.s2_mesh, rep.mesh);
    rep.mesh.margin = rep.mesh.total - rep.threshold;
    rep.mesh.margin_c2 = rep.mesh.margin * k.c2;
    rep.verdict = rep.mesh.margin > 0.0;
  } else {
    rep.verdict = rep.radial.margin > 0.0;
  }
  return rep;
}

}  // namespace

LowerBoundReport lower_bound_report(const Field& phi, const GreenResult& green,
                                    const QuadForm& forms, double epsilon) {
  return assemble_report(green, forms, epsilon, &phi);
}

LowerBoundReport radial_lower_bound(const GreenResult& green, const QuadForm& forms,
                                    double epsilon) {
  return assemble_report(green, forms, epsilon, nullptr);
}

Field project_and_renormalize(const Field& phi, const EigenBasis* basis, int ell,
                              const QuadForm& forms, double alpha,
                              std::vector<double>* coeffs_out) {
  Eigen::VectorXd v = phi.coeffs;
  if (forms.torus) v[0] = 0.0;  // mean subtraction
  if (coeffs_out) coeffs_out->clear();
  if (ell > 0) {
    if (basis == nullptr || basis->n_distinct() < ell)
      throw std::invalid_argument("project_and_renormalize: basis too small for ell");
    for (int g = 0; g < ell; ++g)
      for (int j = 0; j < basis->multiplicities[g]; ++j) {
        const Eigen::VectorXd& e = basis->function(g, j).coeffs;
        const double c = e.dot(forms.M * v);
        if (coeffs_out) coeffs_out->push_back(c);
        v -= c * e;
      }
  }
  const double q = forms.quad_1alpha(v, alpha);
  if (!(q > 0.0))
    throw std::runtime_error("project_and_renormalize: projected field has nonpositive norm");
  v /= std::sqrt(q);
  return make_field(phi.geom, std::move(v));
}

void save_lower_bound_report(const LowerBoundReport& rep, const std::string& json_path) {
  nlohmann::json j;
  j["epsilon"] = rep.epsilon;
  j["R"] = rep.R;
  j["c2"] = rep.c2;
  j["B"] = rep.B;
  j["A"] = rep.A;
  j["alpha"] = rep.alpha;
  j["volume"] = rep.volume;
  j["threshold"] = rep.threshold;
  j["obre_coeff"] = rep.obre_coeff;
  j["s2_mesh"] = rep.s2_mesh;
  j["s2_radial"] = rep.s2_radial;
  auto parts = [](const LowerBoundParts& p) {
    return nlohmann::json{{"cap_integral", p.cap}, {"band_integral", p.band},
                          {"tail_integral", p.tail}, {"total", p.total},
                          {"margin", p.margin},     {"margin_c2", p.margin_c2}};
  };
  j["mesh"] = parts(rep.mesh);
  j["radial"] = parts(rep.radial);
  j["bound"] = {{"cap_integral", rep.bound_cap},
                {"tail_integral", rep.bound_tail},
                {"total", rep.bound_total},
                {"margin", rep.bound_margin},
                {"margin_c2", rep.bound_margin_c2}};
  j["agreement_ratio"] = rep.agreement_ratio;
  j["agreement_flag"] = rep.agreement_flag;
  j["verdict"] = rep.verdict;
  std::ofstream out(json_path);
  if (!out) throw std::runtime_error("cannot open " + json_path);
  out << j.dump(2) << "\n";
}

}  // namespace tmx
