#pragma once

// Planar triangulations and the flat-torus mode grid. These carry every field
// in the library: nodal P1 values on a TriMesh, real Fourier coefficients on
// a TorusGrid.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <variant>
#include <vector>

namespace tmx {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
double dist(Point a, Point b);

struct TriMesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::uint8_t> boundary_flag;  // 1 iff vertex lies on the boundary
  double h_max = 0.0;                       // longest edge

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const;
  double volume() const;  // sum of triangle areas
  Point centroid(int t) const;

  // Longest edge among triangles incident to vertex v.
  double local_h(int v) const;

  // Containing triangle and barycentric coordinates; tolerates points within
  // `tol` outside an edge. Returns triangle index or -1.
  int locate(Point p, std::array<double, 3>& bary, double tol = 1e-12) const;

  // Recomputes h_max and boundary flags from edge incidence counts.
  void finalize();

  // Throws std::runtime_error when an invariant is violated: non-positive
  // triangle area, an edge shared by more than two triangles, or a boundary
  // flag inconsistent with edge incidence.
  void validate() const;
};

struct TorusGrid {
  double L = 1.0;  // side length
  int n = 4;       // modes (and collocation points) per axis, even, >= 4

  double area() const { return L * L; }
  int n_modes() const { return n * n; }

  // Frequency index of the 1D real basis function with index a in [0, n):
  // 0 for the constant, j for the cos/sin pair (a = 2j-1, 2j), n/2 at Nyquist.
  int freq(int a) const;
  // Laplacian eigenvalue of tensor mode (a, b): (2*pi/L)^2 (j_a^2 + j_b^2).
  double mode_eigenvalue(int a, int b) const;
  // Value of the L2-orthonormal basis function t_a at coordinate x.
  double basis1d(int a, double x) const;

  // Shortest-image distance on the torus.
  double distance(Point a, Point b) const;
};

using Geometry = std::variant<TriMesh, TorusGrid>;
using GeometryPtr = std::shared_ptr<const Geometry>;

inline bool is_mesh(const Geometry& g) { return std::holds_alternative<TriMesh>(g); }
inline const TriMesh& as_mesh(const Geometry& g) { return std::get<TriMesh>(g); }
inline const TorusGrid& as_grid(const Geometry& g) { return std::get<TorusGrid>(g); }
double geometry_volume(const Geometry& g);

struct DiscMeshOptions {
  // Ring radii follow radius * (j/n)^grading; 1 = quasi-uniform, larger
  // values concentrate rings at the center (used by the Green and
  // test-function paths, which need the core resolved).
  double grading = 1.0;
};

// Spiderweb disc mesh: 4 * 2^level concentric rings, ring j carrying 6j
// vertices. h_max halves per level; vertices scale linearly with radius.
TriMesh build_disc_mesh(double radius, int refinement_level,
                        const DiscMeshOptions& opts = {});

// Ear-clipping triangulation of a simple CCW polygon, then `level` rounds of
// uniform 1->4 refinement. Rejects self-intersecting or CW input.
TriMesh build_polygon_mesh(const std::vector<Point>& polygon, int refinement_level);

TriMesh unit_square_mesh(int refinement_level);

TorusGrid make_torus(double L, int n);

// Whitespace-delimited text format: a "vertices" section (index x y flag)
// followed by a "triangles" section (index v0 v1 v2). Round-trips exactly.
void save_mesh(const TriMesh& mesh, std::ostream& out);
TriMesh load_mesh(std::istream& in);
void save_mesh_file(const TriMesh& mesh, const std::string& path);
TriMesh load_mesh_file(const std::string& path);

}  // namespace tmx
