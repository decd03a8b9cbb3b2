#include "tmx/functional.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tmx/parallel.hpp"

namespace tmx {

namespace {

// Symmetric 7-point rule, exact to degree 5 (centroid + two orbits).
struct QuadRule {
  double l0, l1, l2, w;
};
constexpr double kA1 = 0.059715871789770;
constexpr double kB1 = 0.470142064105115;
constexpr double kW1 = 0.132394152788506;
constexpr double kA2 = 0.797426985353087;
constexpr double kB2 = 0.101286507323456;
constexpr double kW2 = 0.125939180544827;
constexpr QuadRule kRule[7] = {
    {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225},
    {kA1, kB1, kB1, kW1},
    {kB1, kA1, kB1, kW1},
    {kB1, kB1, kA1, kW1},
    {kA2, kB2, kB2, kW2},
    {kB2, kA2, kB2, kW2},
    {kB2, kB2, kA2, kW2},
};

double field_abs_max(const Field& u, const QuadForm& forms) {
  if (u.on_mesh()) return u.coeffs.cwiseAbs().maxCoeff();
  const Eigen::MatrixXd g = torus_synthesize(forms, u.coeffs);
  return g.cwiseAbs().maxCoeff();
}

ExpIntegral finish(double log_value, bool overflow) {
  ExpIntegral out;
  out.log_value = log_value;
  out.overflow_regime = overflow;
  out.value = log_value < 709.0 ? std::exp(log_value)
                                : std::numeric_limits<double>::infinity();
  return out;
}

template <bool Parallel>
ExpIntegral exp_mesh(const Field& u, double beta, QuadMode mode) {
  const TriMesh& mesh = u.mesh();
  const auto& c = u.coeffs;
  const std::size_t nt = static_cast<std::size_t>(mesh.n_triangles());

  const double peak = beta * u.coeffs.cwiseAbs().maxCoeff() * u.coeffs.cwiseAbs().maxCoeff();
  const bool log_domain = peak > 700.0;

  if (mode == QuadMode::lumped) {
    // Row sums of M as nodal weights.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(mesh.n_vertices());
    for (int t = 0; t < mesh.n_triangles(); ++t) {
      const double a3 = mesh.triangle_area(t) / 3.0;
      for (int v : mesh.triangles[t]) w[v] += a3;
    }
    const std::size_t nv = static_cast<std::size_t>(mesh.n_vertices());
    if (!log_domain) {
      auto term = [&](std::size_t i) { return w[i] * std::exp(beta * c[i] * c[i]); };
      const double v = Parallel ? par::chunked_sum(nv, term) : par::chunked_sum_serial(nv, term);
      return finish(std::log(v), false);
    }
    auto lterm = [&](std::size_t i) { return std::log(w[i]) + beta * c[i] * c[i]; };
    const double lv = Parallel ? par::chunked_log_sum_exp(nv, lterm)
                               : par::chunked_log_sum_exp_serial(nv, lterm);
    return finish(lv, true);
  }

  auto tri_sum = [&](std::size_t t) {
    const auto& tr = mesh.triangles[t];
    const double area = mesh.triangle_area(static_cast<int>(t));
    double s = 0.0;
    for (const auto& q : kRule) {
      const double uq = q.l0 * c[tr[0]] + q.l1 * c[tr[1]] + q.l2 * c[tr[2]];
      s += q.w * std::exp(beta * uq * uq);
    }
    return area * s;
  };
  if (!log_domain) {
    const double v = Parallel ? par::chunked_sum(nt, tri_sum) : par::chunked_sum_serial(nt, tri_sum);
    return finish(std::log(v), false);
  }
  auto lterm = [&](std::size_t i) {
    const std::size_t t = i / 7, q = i % 7;
    const auto& tr = mesh.triangles[t];
    const auto& r = kRule[q];
    const double uq = r.l0 * c[tr[0]] + r.l1 * c[tr[1]] + r.l2 * c[tr[2]];
    return std::log(r.w * mesh.triangle_area(static_cast<int>(t))) + beta * uq * uq;
  };
  const double lv = Parallel ? par::chunked_log_sum_exp(7 * nt, lterm)
                             : par::chunked_log_sum_exp_serial(7 * nt, lterm);
  return finish(lv, true);
}

template <bool Parallel>
ExpIntegral exp_torus(const Field& u, double beta, const QuadForm& forms) {
  const TorusGrid& grid = u.grid();
  const Eigen::MatrixXd g = torus_synthesize(forms, u.coeffs);
  const double cell = (grid.L / grid.n) * (grid.L / grid.n);
  const std::size_t n2 = static_cast<std::size_t>(grid.n) * grid.n;
  const double peak = beta * g.cwiseAbs().maxCoeff() * g.cwiseAbs().maxCoeff();
  if (peak <= 700.0) {
    auto term = [&](std::size_t i) {
      const double v = g.data()[i];
      return cell * std::exp(beta * v * v);
    };
    const double v = Parallel ? par::chunked_sum(n2, term) : par::chunked_sum_serial(n2, term);
    return finish(std::log(v), false);
  }
  auto lterm = [&](std::size_t i) {
    const double v = g.data()[i];
    return std::log(cell) + beta * v * v;
  };
  const double lv = Parallel ? par::chunked_log_sum_exp(n2, lterm)
                             : par::chunked_log_sum_exp_serial(n2, lterm);
  return finish(lv, true);
}

}  // namespace

double norm_1alpha(const Field& u, double alpha, const QuadForm& forms) {
  const double e = forms.energy(u.coeffs);
  const double q = e - alpha * forms.l2_sq(u.coeffs);
  if (q < -1e-12 * e)
    throw std::runtime_error("alpha above admissible threshold for this subspace");
  return std::sqrt(std::max(q, 0.0));
}

ExpIntegral exp_functional(const Field& u, double beta, const QuadForm& forms, QuadMode mode) {
  if (beta < 0.0) throw std::invalid_argument("exp_functional: beta must be >= 0");
  if (u.on_mesh()) return exp_mesh<true>(u, beta, mode);
  return exp_torus<true>(u, beta, forms);
}

ExpIntegral exp_functional_serial(const Field& u, double beta, const QuadForm& forms,
                                  QuadMode mode) {
  if (beta < 0.0) throw std::invalid_argument("exp_functional: beta must be >= 0");
  if (u.on_mesh()) return exp_mesh<false>(u, beta, mode);
  return exp_torus<false>(u, beta, forms);
}

ExpIntegral adimurthi_druet_functional(const Field& u, double alpha, const QuadForm& forms) {
  const double beta = 4.0 * M_PI * (1.0 + alpha * forms.l2_sq(u.coeffs));
  return exp_functional(u, beta, forms);
}

double integrate(const TriMesh& mesh, const std::function<double(Point)>& f) {
  return par::chunked_sum(static_cast<std::size_t>(mesh.n_triangles()), [&](std::size_t t) {
    const auto& tr = mesh.triangles[t];
    const Point p0 = mesh.vertices[tr[0]], p1 = mesh.vertices[tr[1]], p2 = mesh.vertices[tr[2]];
    const double area = mesh.triangle_area(static_cast<int>(t));
    double s = 0.0;
    for (const auto& q : kRule) {
      const Point x{q.l0 * p0.x + q.l1 * p1.x + q.l2 * p2.x,
                    q.l0 * p0.y + q.l1 * p1.y + q.l2 * p2.y};
      s += q.w * f(x);
    }
    return area * s;
  });
}

double integrate(const TorusGrid& grid, const std::function<double(Point)>& f) {
  const double cell = (grid.L / grid.n) * (grid.L / grid.n);
  return par::chunked_sum(static_cast<std::size_t>(grid.n) * grid.n, [&](std::size_t i) {
    const int ix = static_cast<int>(i) / grid.n, iy = static_cast<int>(i) % grid.n;
    return cell * f({grid.L * ix / grid.n, grid.L * iy / grid.n});
  });
}

std::vector<QuadSample> quadrature_samples(const Field& u) {
  std::vector<QuadSample> out;
  if (u.on_mesh()) {
    const TriMesh& mesh = u.mesh();
    out.reserve(7 * static_cast<std::size_t>(mesh.n_triangles()));
    for (int t = 0; t < mesh.n_triangles(); ++t) {
      const auto& tr = mesh.triangles[t];
      const Point p0 = mesh.vertices[tr[0]], p1 = mesh.vertices[tr[1]], p2 = mesh.vertices[tr[2]];
      const double area = mesh.triangle_area(t);
      for (const auto& q : kRule) {
        QuadSample s;
        s.x = {q.l0 * p0.x + q.l1 * p1.x + q.l2 * p2.x,
               q.l0 * p0.y + q.l1 * p1.y + q.l2 * p2.y};
        s.weight = q.w * area;
        s.u = q.l0 * u.coeffs[tr[0]] + q.l1 * u.coeffs[tr[1]] + q.l2 * u.coeffs[tr[2]];
        out.push_back(s);
      }
    }
    return out;
  }
  const TorusGrid& grid = u.grid();
  QuadForm forms;  // only the synthesis matrix is needed here
  forms.geom = u.geom;
  forms.synth.resize(grid.n, grid.n);
  for (int i = 0; i < grid.n; ++i)
    for (int a = 0; a < grid.n; ++a)
      forms.synth(i, a) = grid.basis1d(a, grid.L * i / grid.n);
  const Eigen::MatrixXd g = forms.synth *
                            Eigen::Map<const Eigen::MatrixXd>(u.coeffs.data(), grid.n, grid.n)
                                .transpose() *
                            forms.synth.transpose();
  const double cell = (grid.L / grid.n) * (grid.L / grid.n);
  out.reserve(static_cast<std::size_t>(grid.n) * grid.n);
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j)
      out.push_back({{grid.L * i / grid.n, grid.L * j / grid.n}, cell, g(i, j)});
  return out;
}

}  // namespace tmx
