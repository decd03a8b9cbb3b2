#include "tmx/field.hpp"

#include <stdexcept>

#include "tmx/assemble.hpp"

namespace tmx {

Field nodal_field(GeometryPtr geom, const std::function<double(Point)>& f, bool dirichlet) {
  if (is_mesh(*geom)) {
    const TriMesh& mesh = as_mesh(*geom);
    Eigen::VectorXd c(mesh.n_vertices());
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      c[v] = (dirichlet && mesh.boundary_flag[v]) ? 0.0 : f(mesh.vertices[v]);
    }
    return make_field(geom, std::move(c));
  }
  const TorusGrid& grid = as_grid(*geom);
  QuadForm forms = assemble(geom);
  Eigen::MatrixXd g(grid.n, grid.n);
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j)
      g(i, j) = f({grid.L * i / grid.n, grid.L * j / grid.n});
  return make_field(geom, torus_analyze(forms, g));
}

double evaluate(const Field& u, Point p) {
  if (u.on_mesh()) {
    std::array<double, 3> bary{};
    const int t = u.mesh().locate(p, bary, 1e-10);
    if (t < 0) throw std::runtime_error("evaluate: point outside mesh");
    const auto& tr = u.mesh().triangles[t];
    return bary[0] * u.coeffs[tr[0]] + bary[1] * u.coeffs[tr[1]] + bary[2] * u.coeffs[tr[2]];
  }
  const TorusGrid& grid = u.grid();
  double v = 0.0;
  for (int a = 0; a < grid.n; ++a) {
    const double ta = grid.basis1d(a, p.x);
    if (ta == 0.0) continue;
    for (int b = 0; b < grid.n; ++b)
      v += u.coeffs[a * grid.n + b] * ta * grid.basis1d(b, p.y);
  }
  return v;
}

}  // namespace tmx
