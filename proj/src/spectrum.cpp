#include "tmx/spectrum.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "tmx/rng.hpp"

#include <json.hpp>

namespace tmx {

namespace {

// M-inner-product modified Gram-Schmidt, two passes.
void m_orthonormalize(Eigen::MatrixXd& X, const SparseMat& M) {
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < X.cols(); ++i) {
      Eigen::VectorXd mi = M * X.col(i);
      for (int j = 0; j < i; ++j) {
        const double c = X.col(j).dot(mi);
        X.col(i) -= c * X.col(j);
        mi = M * X.col(i);
      }
      const double nrm = std::sqrt(X.col(i).dot(mi));
      if (nrm < 1e-300) throw std::runtime_error("eigensolver: rank collapse in start block");
      X.col(i) /= nrm;
    }
  }
}

void fix_sign(Eigen::VectorXd& v) {
  int arg = 0;
  double best = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (v[arg] < 0) v = -v;
}

struct RawPairs {
  std::vector<double> lambdas;
  std::vector<Eigen::VectorXd> vectors;  // full-length
};

RawPairs solve_planar(const QuadForm& forms, int k, const EigOptions& opts) {
  const int n = static_cast<int>(forms.constrained.size());
  if (k < 1) throw std::invalid_argument("eigenpairs: k must be >= 1");
  if (k > n)
    throw std::invalid_argument("eigenpairs: k exceeds interior dof count (" +
                                std::to_string(n) + ")");
  const int m = std::min(n, k + opts.oversample);

  Eigen::SimplicialLDLT<SparseMat> solver(forms.K_c);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolver: stiffness factorization failed");

  Rng rng(opts.seed);
  Eigen::MatrixXd X(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = rng.normal();
  m_orthonormalize(X, forms.M_c);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
  double worst = 1.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    Eigen::MatrixXd Y(n, m);
    for (int j = 0; j < m; ++j) Y.col(j) = solver.solve(forms.M_c * X.col(j));
    m_orthonormalize(Y, forms.M_c);
    Eigen::MatrixXd T = Y.transpose() * (forms.K_c * Y).eval();
    T = 0.5 * (T + T.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    X = Y * es.eigenvectors();
    theta = es.eigenvalues();

    worst = 0.0;
    for (int j = 0; j < k; ++j) {
      const Eigen::VectorXd r = forms.K_c * X.col(j) - theta[j] * (forms.M_c * X.col(j));
      worst = std::max(worst, r.norm() / std::max(theta[j], 1.0));
    }
    if (worst < opts.tol) break;
  }
  if (worst >= opts.tol) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "eigensolver: no convergence after %d iterations (residual %.3e)",
                  opts.max_iter, worst);
    throw std::runtime_error(buf);
  }

  RawPairs out;
  for (int j = 0; j < k; ++j) {
    out.lambdas.push_back(theta[j]);
    Eigen::VectorXd full = forms.extend_constrained(X.col(j));
    fix_sign(full);
    out.vectors.push_back(std::move(full));
  }
  return out;
}

RawPairs solve_torus(const TorusGrid& grid, int k) {
  const int n = grid.n;
  if (k < 1) throw std::invalid_argument("eigenpairs: k must be >= 1");
  if (k > n * n - 1)
    throw std::invalid_argument("eigenpairs: k exceeds mode count minus constant");
  std::vector<int> ids;
  ids.reserve(n * n - 1);
  for (int id = 1; id < n * n; ++id) ids.push_back(id);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    const double la = grid.mode_eigenvalue(a / n, a % n);
    const double lb = grid.mode_eigenvalue(b / n, b % n);
    if (la != lb) return la < lb;
    return a < b;
  });
  RawPairs out;
  for (int j = 0; j < k; ++j) {
    const int id = ids[j];
    out.lambdas.push_back(grid.mode_eigenvalue(id / n, id % n));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n * n);
    v[id] = 1.0;
    out.vectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace

EigenBasis eigenpairs(GeometryPtr geom, const QuadForm& forms, int k, const EigOptions& opts) {
  RawPairs raw = is_mesh(*geom) ? solve_planar(forms, k, opts) : solve_torus(as_grid(*geom), k);

  EigenBasis basis;
  basis.grouping_tol = opts.grouping_tol;
  basis.raw_lambdas = raw.lambdas;
  for (int i = 0; i < static_cast<int>(raw.lambdas.size()); ++i) {
    const double l = raw.lambdas[i];
    if (basis.lambdas.empty() ||
        l - basis.lambdas.back() > opts.grouping_tol * std::max(basis.lambdas.back(), 1.0)) {
      basis.lambdas.push_back(l);
      basis.multiplicities.push_back(1);
      basis.group_offset.push_back(i);
    } else {
      basis.multiplicities.back()++;
    }
    basis.functions.push_back(make_field(geom, std::move(raw.vectors[i])));
  }
  // Report each distinct eigenvalue as its group mean.
  for (int g = 0; g < basis.n_distinct(); ++g) {
    double s = 0.0;
    for (int j = 0; j < basis.multiplicities[g]; ++j)
      s += raw.lambdas[basis.group_offset[g] + j];
    basis.lambdas[g] = s / basis.multiplicities[g];
  }
  return basis;
}

Field project_perp(const Field& u, const EigenBasis& basis, int ell, const QuadForm& forms) {
  if (ell < 0 || ell > basis.n_distinct())
    throw std::invalid_argument("project_perp: ell out of range");
  Eigen::VectorXd r = u.coeffs;
  for (int g = 0; g < ell; ++g) {
    for (int j = 0; j < basis.multiplicities[g]; ++j) {
      const Field& e = basis.function(g, j);
      check_same_geometry(u, e);
      const double c = e.coeffs.dot(forms.M * r);
      r -= c * e.coeffs;
    }
  }
  return make_field(u.geom, std::move(r));
}

double admissible_alpha_max(const EigenBasis& basis, int ell) {
  if (ell + 1 > basis.n_distinct())
    throw std::runtime_error(
        "admissible_alpha_max: basis has too few distinct eigenvalues; recompute with larger k");
  return basis.lambdas[ell];
}

void save_eigenbasis(const EigenBasis& basis, const std::string& json_path,
                     const std::string& csv_path) {
  nlohmann::json j;
  j["eigenvalues"] = basis.lambdas;
  j["multiplicities"] = basis.multiplicities;
  j["grouping_tol"] = basis.grouping_tol;
  j["coefficients_csv"] = csv_path;
  std::ofstream out(json_path);
  if (!out) throw std::runtime_error("cannot open " + json_path);
  out << j.dump(2) << "\n";

  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open " + csv_path);
  char buf[40];
  const int rows = basis.total() ? basis.functions[0].size() : 0;
  for (int r = 0; r < rows; ++r) {
    for (int f = 0; f < basis.total(); ++f) {
      std::snprintf(buf, sizeof buf, "%.17g", basis.functions[f].coeffs[r]);
      csv << buf << (f + 1 < basis.total() ? "," : "");
    }
    csv << "\n";
  }
}

}  // namespace tmx
