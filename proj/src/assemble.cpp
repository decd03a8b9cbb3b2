#include "tmx/assemble.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tmx/parallel.hpp"

namespace tmx {

Eigen::VectorXd QuadForm::restrict_full(const Eigen::VectorXd& full) const {
  Eigen::VectorXd r(constrained.size());
  for (std::size_t i = 0; i < constrained.size(); ++i) r[i] = full[constrained[i]];
  return r;
}

Eigen::VectorXd QuadForm::extend_constrained(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(full_to_constrained.size());
  for (std::size_t i = 0; i < constrained.size(); ++i) full[constrained[i]] = reduced[i];
  return full;
}

namespace {

using Triplet = Eigen::Triplet<double>;

void assemble_mesh(const TriMesh& mesh, QuadForm& out) {
  const int nv = mesh.n_vertices();
  const int nt = mesh.n_triangles();
  const double degenerate_floor = 1e-14 * mesh.h_max * mesh.h_max;

  // Per-chunk triplet buffers concatenated in chunk order keep the assembly
  // bit-stable for any thread count.
  const std::size_t chunk = par::kChunk;
  const std::size_t nchunks = (static_cast<std::size_t>(nt) + chunk - 1) / chunk;
  std::vector<std::vector<Triplet>> kparts(nchunks), mparts(nchunks);
  std::vector<int> bad(nchunks, -1);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long c = 0; c < static_cast<long long>(nchunks); ++c) {
    auto& kt = kparts[static_cast<std::size_t>(c)];
    auto& mt = mparts[static_cast<std::size_t>(c)];
    const int t0 = static_cast<int>(c * static_cast<long long>(chunk));
    const int t1 = std::min(nt, t0 + static_cast<int>(chunk));
    kt.reserve(9 * static_cast<std::size_t>(t1 - t0));
    mt.reserve(9 * static_cast<std::size_t>(t1 - t0));
    for (int t = t0; t < t1; ++t) {
      const auto& tr = mesh.triangles[t];
      const Point p0 = mesh.vertices[tr[0]];
      const Point p1 = mesh.vertices[tr[1]];
      const Point p2 = mesh.vertices[tr[2]];
      const double area = mesh.triangle_area(t);
      if (area < degenerate_floor) {
        bad[static_cast<std::size_t>(c)] = t;
        continue;
      }
      // Barycentric gradients: grad l_i = perp(edge opposite i) / (2 area).
      const double gx[3] = {(p1.y - p2.y), (p2.y - p0.y), (p0.y - p1.y)};
      const double gy[3] = {(p2.x - p1.x), (p0.x - p2.x), (p1.x - p0.x)};
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double kij = (gx[i] * gx[j] + gy[i] * gy[j]) / (4.0 * area);
          const double mij = (i == j) ? area / 6.0 : area / 12.0;
          kt.emplace_back(tr[i], tr[j], kij);
          mt.emplace_back(tr[i], tr[j], mij);
        }
      }
    }
  }
  for (std::size_t c = 0; c < nchunks; ++c)
    if (bad[c] >= 0)
      throw std::runtime_error("assemble: degenerate triangle " + std::to_string(bad[c]));

  std::vector<Triplet> ktrip, mtrip;
  ktrip.reserve(9 * static_cast<std::size_t>(nt));
  mtrip.reserve(9 * static_cast<std::size_t>(nt));
  for (std::size_t c = 0; c < nchunks; ++c) {
    ktrip.insert(ktrip.end(), kparts[c].begin(), kparts[c].end());
    mtrip.insert(mtrip.end(), mparts[c].begin(), mparts[c].end());
  }

  out.K.resize(nv, nv);
  out.M.resize(nv, nv);
  out.K.setFromTriplets(ktrip.begin(), ktrip.end());
  out.M.setFromTriplets(mtrip.begin(), mtrip.end());

  out.full_to_constrained.assign(nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (!mesh.boundary_flag[v]) {
      out.full_to_constrained[v] = static_cast<int>(out.constrained.size());
      out.constrained.push_back(v);
    }
  }
  const int ni = static_cast<int>(out.constrained.size());
  std::vector<Triplet> kc, mc;
  kc.reserve(ktrip.size());
  mc.reserve(mtrip.size());
  for (const auto& t : ktrip) {
    const int r = out.full_to_constrained[t.row()], col = out.full_to_constrained[t.col()];
    if (r >= 0 && col >= 0) kc.emplace_back(r, col, t.value());
  }
  for (const auto& t : mtrip) {
    const int r = out.full_to_constrained[t.row()], col = out.full_to_constrained[t.col()];
    if (r >= 0 && col >= 0) mc.emplace_back(r, col, t.value());
  }
  out.K_c.resize(ni, ni);
  out.M_c.resize(ni, ni);
  out.K_c.setFromTriplets(kc.begin(), kc.end());
  out.M_c.setFromTriplets(mc.begin(), mc.end());
  out.volume = mesh.volume();
}

void assemble_torus(const TorusGrid& grid, QuadForm& out) {
  const int n = grid.n;
  const int nm = grid.n_modes();
  std::vector<Triplet> ktrip, mtrip;
  ktrip.reserve(nm);
  mtrip.reserve(nm);
  out.full_to_constrained.assign(nm, -1);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const int id = a * n + b;
      ktrip.emplace_back(id, id, grid.mode_eigenvalue(a, b));
      mtrip.emplace_back(id, id, 1.0);
      if (id != 0) {
        out.full_to_constrained[id] = static_cast<int>(out.constrained.size());
        out.constrained.push_back(id);
      }
    }
  }
  out.K.resize(nm, nm);
  out.M.resize(nm, nm);
  out.K.setFromTriplets(ktrip.begin(), ktrip.end());
  out.M.setFromTriplets(mtrip.begin(), mtrip.end());

  const int ni = nm - 1;
  std::vector<Triplet> kc, mc;
  for (int i = 0; i < ni; ++i) {
    const int id = out.constrained[i];
    kc.emplace_back(i, i, grid.mode_eigenvalue(id / n, id % n));
    mc.emplace_back(i, i, 1.0);
  }
  out.K_c.resize(ni, ni);
  out.M_c.resize(ni, ni);
  out.K_c.setFromTriplets(kc.begin(), kc.end());
  out.M_c.setFromTriplets(mc.begin(), mc.end());
  out.volume = grid.area();

  out.synth.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const double x = grid.L * i / n;
    for (int a = 0; a < n; ++a) out.synth(i, a) = grid.basis1d(a, x);
  }
  out.synth_scale_inv = (out.synth.transpose() * out.synth).diagonal().cwiseInverse();
}

}  // namespace

QuadForm assemble(GeometryPtr geom) {
  QuadForm out;
  out.geom = geom;
  if (is_mesh(*geom)) {
    assemble_mesh(as_mesh(*geom), out);
  } else {
    out.torus = true;
    assemble_torus(as_grid(*geom), out);
  }
  return out;
}

Eigen::MatrixXd torus_synthesize(const QuadForm& forms, const Eigen::VectorXd& coeffs) {
  const int n = as_grid(*forms.geom).n;
  const Eigen::MatrixXd C = Eigen::Map<const Eigen::MatrixXd>(coeffs.data(), n, n);
  // coeffs index a*n+b maps to C(b, a) under column-major Map; keep (a,b) as
  // (row, col) by transposing.
  return forms.synth * C.transpose() * forms.synth.transpose();
}

Eigen::VectorXd torus_analyze(const QuadForm& forms, const Eigen::MatrixXd& grid_values) {
  const int n = as_grid(*forms.geom).n;
  Eigen::MatrixXd C = forms.synth_scale_inv.asDiagonal() *
                      (forms.synth.transpose() * grid_values * forms.synth) *
                      forms.synth_scale_inv.asDiagonal();
  Eigen::MatrixXd Ct = C.transpose();
  return Eigen::Map<Eigen::VectorXd>(Ct.data(), n * n);
}

}  // namespace tmx
