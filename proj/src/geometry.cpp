#include "tmx/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tmx {

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

static double signed_area(Point a, Point b, Point c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double TriMesh::triangle_area(int t) const {
  const auto& tr = triangles[t];
  return signed_area(vertices[tr[0]], vertices[tr[1]], vertices[tr[2]]);
}

double TriMesh::volume() const {
  double s = 0.0;
  for (int t = 0; t < n_triangles(); ++t) s += triangle_area(t);
  return s;
}

Point TriMesh::centroid(int t) const {
  const auto& tr = triangles[t];
  return {(vertices[tr[0]].x + vertices[tr[1]].x + vertices[tr[2]].x) / 3.0,
          (vertices[tr[0]].y + vertices[tr[1]].y + vertices[tr[2]].y) / 3.0};
}

double TriMesh::local_h(int v) const {
  double h = 0.0;
  for (const auto& tr : triangles) {
    if (tr[0] != v && tr[1] != v && tr[2] != v) continue;
    for (int e = 0; e < 3; ++e)
      h = std::max(h, dist(vertices[tr[e]], vertices[tr[(e + 1) % 3]]));
  }
  return h;
}

int TriMesh::locate(Point p, std::array<double, 3>& bary, double tol) const {
  for (int t = 0; t < n_triangles(); ++t) {
    const auto& tr = triangles[t];
    const double area = triangle_area(t);
    if (area <= 0.0) continue;
    const double l0 = signed_area(p, vertices[tr[1]], vertices[tr[2]]) / area;
    const double l1 = signed_area(vertices[tr[0]], p, vertices[tr[2]]) / area;
    const double l2 = 1.0 - l0 - l1;
    if (l0 >= -tol && l1 >= -tol && l2 >= -tol) {
      bary = {l0, l1, l2};
      return t;
    }
  }
  return -1;
}

namespace {

using Edge = std::pair<int, int>;
Edge make_edge(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

std::map<Edge, int> edge_counts(const TriMesh& mesh) {
  std::map<Edge, int> counts;
  for (const auto& tr : mesh.triangles)
    for (int e = 0; e < 3; ++e) counts[make_edge(tr[e], tr[(e + 1) % 3])]++;
  return counts;
}

}  // namespace

void TriMesh::finalize() {
  h_max = 0.0;
  for (const auto& tr : triangles)
    for (int e = 0; e < 3; ++e)
      h_max = std::max(h_max, dist(vertices[tr[e]], vertices[tr[(e + 1) % 3]]));
  boundary_flag.assign(vertices.size(), 0);
  for (const auto& [edge, count] : edge_counts(*this)) {
    if (count == 1) {
      boundary_flag[edge.first] = 1;
      boundary_flag[edge.second] = 1;
    }
  }
}

void TriMesh::validate() const {
  if (boundary_flag.size() != vertices.size())
    throw std::runtime_error("mesh: boundary_flag size mismatch");
  for (int t = 0; t < n_triangles(); ++t) {
    if (triangle_area(t) <= 0.0)
      throw std::runtime_error("mesh: non-positive area in triangle " + std::to_string(t));
    for (int v : triangles[t])
      if (v < 0 || v >= n_vertices())
        throw std::runtime_error("mesh: vertex index out of range in triangle " + std::to_string(t));
  }
  std::vector<std::uint8_t> derived(vertices.size(), 0);
  for (const auto& [edge, count] : edge_counts(*this)) {
    if (count > 2)
      throw std::runtime_error("mesh: edge shared by more than two triangles");
    if (count == 1) {
      derived[edge.first] = 1;
      derived[edge.second] = 1;
    }
  }
  for (int v = 0; v < n_vertices(); ++v)
    if (derived[v] != boundary_flag[v])
      throw std::runtime_error("mesh: boundary flag mismatch at vertex " + std::to_string(v));
}

int TorusGrid::freq(int a) const {
  if (a == 0) return 0;
  if (a == n - 1) return n / 2;
  return (a + 1) / 2;
}

double TorusGrid::mode_eigenvalue(int a, int b) const {
  const double w = 2.0 * M_PI / L;
  const double ja = freq(a), jb = freq(b);
  return w * w * (ja * ja + jb * jb);
}

double TorusGrid::basis1d(int a, double x) const {
  const double root = std::sqrt(2.0 / L);
  if (a == 0) return 1.0 / std::sqrt(L);
  const double ang = 2.0 * M_PI * freq(a) * x / L;
  if (a == n - 1) return root * std::cos(ang);
  return (a % 2 == 1) ? root * std::cos(ang) : root * std::sin(ang);
}

double TorusGrid::distance(Point a, Point b) const {
  auto wrap = [this](double d) {
    d = std::fmod(d, L);
    if (d < 0) d += L;
    return std::min(d, L - d);
  };
  const double dx = wrap(a.x - b.x);
  const double dy = wrap(a.y - b.y);
  return std::hypot(dx, dy);
}

double geometry_volume(const Geometry& g) {
  if (is_mesh(g)) return as_mesh(g).volume();
  return as_grid(g).area();
}

TriMesh build_disc_mesh(double radius, int refinement_level, const DiscMeshOptions& opts) {
  if (radius <= 0.0) throw std::invalid_argument("disc mesh: radius must be positive");
  if (refinement_level < 0) throw std::invalid_argument("disc mesh: negative refinement level");
  if (opts.grading < 1.0) throw std::invalid_argument("disc mesh: grading exponent must be >= 1");

  const int n = 4 << refinement_level;  // rings
  TriMesh mesh;
  mesh.vertices.push_back({0.0, 0.0});
  std::vector<int> ring_start(n + 1, 0);
  for (int j = 1; j <= n; ++j) {
    ring_start[j] = mesh.n_vertices();
    const double r = std::pow(static_cast<double>(j) / n, opts.grading);
    for (int i = 0; i < 6 * j; ++i) {
      const double th = 2.0 * M_PI * i / (6.0 * j);
      mesh.vertices.push_back({r * std::cos(th), r * std::sin(th)});
    }
  }
  auto ring_vertex = [&](int j, int i) {
    if (j == 0) return 0;
    const int m = 6 * j;
    return ring_start[j] + ((i % m) + m) % m;
  };
  for (int j = 1; j <= n; ++j) {
    // Zigzag strip between rings j-1 and j, sector by sector.
    for (int s = 0; s < 6; ++s) {
      for (int k = 0; k <= j - 1; ++k) {
        const int o0 = ring_vertex(j, s * j + k);
        const int o1 = ring_vertex(j, s * j + k + 1);
        const int i0 = ring_vertex(j - 1, s * (j - 1) + k);
        mesh.triangles.push_back({o0, o1, i0});
        if (k < j - 1) {
          const int i1 = ring_vertex(j - 1, s * (j - 1) + k + 1);
          mesh.triangles.push_back({o1, i1, i0});
        }
      }
    }
  }
  for (auto& p : mesh.vertices) p = radius * p;
  for (auto& tr : mesh.triangles) {
    if (signed_area(mesh.vertices[tr[0]], mesh.vertices[tr[1]], mesh.vertices[tr[2]]) < 0)
      std::swap(tr[1], tr[2]);
  }
  mesh.finalize();
  return mesh;
}

namespace {

bool segments_intersect(Point a, Point b, Point c, Point d) {
  auto orient = [](Point p, Point q, Point r) {
    const double v = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    return (v > 0) - (v < 0);
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4;
}

bool point_in_triangle(Point p, Point a, Point b, Point c) {
  const double area = signed_area(a, b, c);
  if (area == 0.0) return false;
  const double l0 = signed_area(p, b, c) / area;
  const double l1 = signed_area(a, p, c) / area;
  const double l2 = 1.0 - l0 - l1;
  const double eps = -1e-14;
  return l0 > eps && l1 > eps && l2 > eps;
}

std::vector<std::array<int, 3>> ear_clip(const std::vector<Point>& poly) {
  const int n = static_cast<int>(poly.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::vector<std::array<int, 3>> tris;
  int guard = 0;
  while (idx.size() > 3) {
    const int m = static_cast<int>(idx.size());
    bool clipped = false;
    for (int i = 0; i < m; ++i) {
      const int ia = idx[(i + m - 1) % m], ib = idx[i], ic = idx[(i + 1) % m];
      if (signed_area(poly[ia], poly[ib], poly[ic]) <= 0) continue;
      bool ear = true;
      for (int k : idx) {
        if (k == ia || k == ib || k == ic) continue;
        if (point_in_triangle(poly[k], poly[ia], poly[ib], poly[ic])) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      tris.push_back({ia, ib, ic});
      idx.erase(idx.begin() + i);
      clipped = true;
      break;
    }
    if (!clipped || ++guard > 4 * n)
      throw std::invalid_argument("polygon mesh: polygon rejected (self-intersecting or degenerate)");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

}  // namespace

TriMesh build_polygon_mesh(const std::vector<Point>& polygon, int refinement_level) {
  const int n = static_cast<int>(polygon.size());
  if (n < 3) throw std::invalid_argument("polygon mesh: need at least 3 vertices");
  double area2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Point a = polygon[i], b = polygon[(i + 1) % n];
    area2 += a.x * b.y - b.x * a.y;
  }
  if (area2 <= 0.0)
    throw std::invalid_argument("polygon mesh: vertices must be counterclockwise");
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n]))
        throw std::invalid_argument("polygon mesh: polygon rejected (self-intersecting)");
    }
  }

  TriMesh mesh;
  mesh.vertices = polygon;
  mesh.triangles = ear_clip(polygon);

  for (int level = 0; level < refinement_level; ++level) {
    std::map<Edge, int> midpoint;
    std::vector<std::array<int, 3>> refined;
    refined.reserve(mesh.triangles.size() * 4);
    auto mid = [&](int a, int b) {
      const Edge e = make_edge(a, b);
      auto it = midpoint.find(e);
      if (it != midpoint.end()) return it->second;
      const int id = mesh.n_vertices();
      mesh.vertices.push_back(
          {0.5 * (mesh.vertices[a].x + mesh.vertices[b].x),
           0.5 * (mesh.vertices[a].y + mesh.vertices[b].y)});
      midpoint.emplace(e, id);
      return id;
    };
    for (const auto& tr : mesh.triangles) {
      const int m01 = mid(tr[0], tr[1]), m12 = mid(tr[1], tr[2]), m20 = mid(tr[2], tr[0]);
      refined.push_back({tr[0], m01, m20});
      refined.push_back({tr[1], m12, m01});
      refined.push_back({tr[2], m20, m12});
      refined.push_back({m01, m12, m20});
    }
    mesh.triangles = std::move(refined);
  }
  mesh.finalize();
  return mesh;
}

TriMesh unit_square_mesh(int refinement_level) {
  return build_polygon_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, refinement_level);
}

TorusGrid make_torus(double L, int n) {
  if (L <= 0.0) throw std::invalid_argument("torus: side length must be positive");
  if (n < 4 || n % 2 != 0)
    throw std::invalid_argument("torus: n must be even and >= 4");
  return TorusGrid{L, n};
}

void save_mesh(const TriMesh& mesh, std::ostream& out) {
  char buf[96];
  out << "vertices " << mesh.n_vertices() << "\n";
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    std::snprintf(buf, sizeof buf, "%d %.17g %.17g %d\n", v, mesh.vertices[v].x,
                  mesh.vertices[v].y, static_cast<int>(mesh.boundary_flag[v]));
    out << buf;
  }
  out << "triangles " << mesh.n_triangles() << "\n";
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tr = mesh.triangles[t];
    out << t << " " << tr[0] << " " << tr[1] << " " << tr[2] << "\n";
  }
}

TriMesh load_mesh(std::istream& in) {
  std::string tag;
  int count = 0;
  TriMesh mesh;
  if (!(in >> tag >> count) || tag != "vertices")
    throw std::runtime_error("mesh file: expected 'vertices <count>'");
  mesh.vertices.resize(count);
  mesh.boundary_flag.resize(count);
  for (int i = 0; i < count; ++i) {
    int id, flag;
    double x, y;
    if (!(in >> id >> x >> y >> flag)) throw std::runtime_error("mesh file: bad vertex row");
    mesh.vertices[id] = {x, y};
    mesh.boundary_flag[id] = static_cast<std::uint8_t>(flag);
  }
  if (!(in >> tag >> count) || tag != "triangles")
    throw std::runtime_error("mesh file: expected 'triangles <count>'");
  mesh.triangles.resize(count);
  for (int i = 0; i < count; ++i) {
    int id, a, b, c;
    if (!(in >> id >> a >> b >> c)) throw std::runtime_error("mesh file: bad triangle row");
    mesh.triangles[id] = {a, b, c};
  }
  double h = 0.0;
  for (const auto& tr : mesh.triangles)
    for (int e = 0; e < 3; ++e)
      h = std::max(h, dist(mesh.vertices[tr[e]], mesh.vertices[tr[(e + 1) % 3]]));
  mesh.h_max = h;
  return mesh;
}

void save_mesh_file(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  save_mesh(mesh, out);
}

TriMesh load_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_mesh(in);
}

}  // namespace tmx
