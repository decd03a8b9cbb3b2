#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <stdexcept>

#include "tmx/geometry.hpp"

namespace tmx {

// A function on a geometry: nodal P1 values on a TriMesh, real Fourier
// coefficients (mode (a,b) at index a*n+b) on a TorusGrid.
struct Field {
  GeometryPtr geom;
  Eigen::VectorXd coeffs;

  bool on_mesh() const { return geom && is_mesh(*geom); }
  const TriMesh& mesh() const { return as_mesh(*geom); }
  const TorusGrid& grid() const { return as_grid(*geom); }
  int size() const { return static_cast<int>(coeffs.size()); }
};

inline int expected_coeff_count(const Geometry& g) {
  return is_mesh(g) ? as_mesh(g).n_vertices() : as_grid(g).n_modes();
}

inline Field make_field(GeometryPtr geom, Eigen::VectorXd coeffs) {
  if (!geom) throw std::invalid_argument("field: null geometry");
  if (coeffs.size() != expected_coeff_count(*geom))
    throw std::invalid_argument("field: coefficient length does not match geometry");
  return Field{std::move(geom), std::move(coeffs)};
}

inline Field zero_field(GeometryPtr geom) {
  return make_field(geom, Eigen::VectorXd::Zero(expected_coeff_count(*geom)));
}

inline void check_same_geometry(const Field& a, const Field& b) {
  if (a.geom != b.geom)
    throw std::invalid_argument("fields live on different geometries");
}

// Planar: evaluates f at the vertices (boundary values zeroed when
// `dirichlet`). Torus: collocates f on the n x n grid and transforms to mode
// coefficients.
Field nodal_field(GeometryPtr geom, const std::function<double(Point)>& f,
                  bool dirichlet = true);

// Pointwise evaluation: P1 interpolation on a mesh, mode synthesis on a torus.
double evaluate(const Field& u, Point p);

}  // namespace tmx
