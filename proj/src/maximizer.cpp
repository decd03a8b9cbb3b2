#include "tmx/maximizer.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "tmx/green.hpp"
#include "tmx/linsolve.hpp"
#include "tmx/parallel.hpp"
#include "tmx/rng.hpp"

#include <json.hpp>

namespace tmx {

void MaximizerConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 4.0 * M_PI))
    throw std::invalid_argument("maximizer: epsilon must lie in (0, 4*pi)");
  if (!(damping > 0.0 && damping <= 1.0))
    throw std::invalid_argument("maximizer: damping must lie in (0, 1]");
  if (tol <= 0.0 || max_iter < 1 || multistarts < 1)
    throw std::invalid_argument("maximizer: bad solver knobs");
  if (ell < 0) throw std::invalid_argument("maximizer: ell must be >= 0");
}

namespace {

struct NodalExp {
  Eigen::VectorXd rhs;      // dual vector of u e^{beta(u^2 - cmax^2)}
  double lam_shift = 0.0;   // u . rhs  (lambda_eps * e^{-beta cmax^2})
  double cmax_sq = 0.0;
  double mu_shift = 0.0;    // torus: constant-mode coefficient / L
};

// The shifted weight keeps every intermediate finite: the e^{beta cmax^2}
// factor cancels between rhs and lambda in the Euler-Lagrange solve.
NodalExp nodal_exp_load(const Eigen::VectorXd& u, double beta, const QuadForm& forms) {
  NodalExp out;
  if (!forms.torus) {
    const std::size_t n = static_cast<std::size_t>(u.size());
    out.cmax_sq = u.cwiseAbs().maxCoeff();
    out.cmax_sq *= out.cmax_sq;
    Eigen::VectorXd w(u.size());
    par::parallel_apply(n, [&](std::size_t i) {
      w[i] = u[i] * std::exp(beta * (u[i] * u[i] - out.cmax_sq));
    });
    out.rhs = forms.M * w;
    out.lam_shift = u.dot(out.rhs);
    return out;
  }
  const TorusGrid& grid = as_grid(*forms.geom);
  Eigen::MatrixXd g = torus_synthesize(forms, u);
  out.cmax_sq = g.cwiseAbs().maxCoeff();
  out.cmax_sq *= out.cmax_sq;
  const std::size_t n2 = static_cast<std::size_t>(grid.n) * grid.n;
  par::parallel_apply(n2, [&](std::size_t i) {
    const double v = g.data()[i];
    g.data()[i] = v * std::exp(beta * (v * v - out.cmax_sq));
  });
  out.rhs = torus_analyze(forms, g);
  out.mu_shift = out.rhs[0] / grid.L;
  out.lam_shift = u.dot(out.rhs);
  return out;
}

Eigen::VectorXd dual_project_perp(const Eigen::VectorXd& r, const EigenBasis& basis, int ell,
                                  const QuadForm& forms) {
  Eigen::VectorXd out = r;
  for (int g = 0; g < ell; ++g)
    for (int j = 0; j < basis.multiplicities[g]; ++j) {
      const Eigen::VectorXd& e = basis.function(g, j).coeffs;
      out -= e.dot(out) * (forms.M * e);
    }
  return out;
}

Point deep_interior_point(const TriMesh& mesh) {
  std::vector<int> boundary, interior;
  for (int v = 0; v < mesh.n_vertices(); ++v)
    (mesh.boundary_flag[v] ? boundary : interior).push_back(v);
  if (interior.empty()) throw std::runtime_error("maximizer: mesh has no interior vertices");
  const int bstride = std::max<std::size_t>(1, boundary.size() / 512);
  const int istride = std::max<std::size_t>(1, interior.size() / 2048);
  double best = -1.0;
  int best_v = interior[0];
  for (std::size_t i = 0; i < interior.size(); i += istride) {
    double d = std::numeric_limits<double>::max();
    for (std::size_t b = 0; b < boundary.size(); b += bstride)
      d = std::min(d, dist(mesh.vertices[interior[i]], mesh.vertices[boundary[b]]));
    if (d > best) {
      best = d;
      best_v = interior[i];
    }
  }
  return mesh.vertices[best_v];
}

double torus_mean_zero(Eigen::VectorXd& coeffs) {
  const double c0 = coeffs[0];
  coeffs[0] = 0.0;
  return c0;
}

std::vector<Eigen::VectorXd> build_starts(GeometryPtr geom, const QuadForm& forms,
                                          const EigenBasis* basis, const MaximizerConfig& cfg) {
  std::vector<Eigen::VectorXd> starts;
  const int n = expected_coeff_count(*geom);

  if (basis != nullptr && basis->n_distinct() > cfg.ell)
    starts.push_back(basis->function(cfg.ell, 0).coeffs);

  // Truncated-log bump at the deepest interior point.
  if (is_mesh(*geom)) {
    const TriMesh& mesh = as_mesh(*geom);
    const Point c = deep_interior_point(mesh);
    double d = std::numeric_limits<double>::max();
    for (int v = 0; v < mesh.n_vertices(); ++v)
      if (mesh.boundary_flag[v]) d = std::min(d, dist(mesh.vertices[v], c));
    d *= 0.9;
    Eigen::VectorXd bump(n);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      if (mesh.boundary_flag[v]) {
        bump[v] = 0.0;
        continue;
      }
      const double r = dist(mesh.vertices[v], c);
      bump[v] = r >= d ? 0.0 : std::log(d / std::max(r, d / 20.0));
    }
    starts.push_back(std::move(bump));
  } else {
    const TorusGrid& grid = as_grid(*geom);
    const Point c{grid.L / 2.0, grid.L / 2.0};
    const double d = grid.L / 4.0;
    Eigen::MatrixXd g(grid.n, grid.n);
    for (int i = 0; i < grid.n; ++i)
      for (int j = 0; j < grid.n; ++j) {
        const double r = grid.distance({grid.L * i / grid.n, grid.L * j / grid.n}, c);
        g(i, j) = r >= d ? 0.0 : std::log(d / std::max(r, d / 20.0));
      }
    Eigen::VectorXd coeffs = torus_analyze(forms, g);
    torus_mean_zero(coeffs);
    starts.push_back(std::move(coeffs));
  }

  int extra = 0;
  while (static_cast<int>(starts.size()) < cfg.multistarts) {
    Rng rng(cfg.seed + 1000003ULL * static_cast<std::uint64_t>(extra++));
    Eigen::VectorXd r(n);
    if (is_mesh(*geom)) {
      const TriMesh& mesh = as_mesh(*geom);
      for (int v = 0; v < n; ++v) r[v] = mesh.boundary_flag[v] ? 0.0 : rng.normal();
    } else {
      for (int v = 0; v < n; ++v) r[v] = rng.normal();
      torus_mean_zero(r);
    }
    starts.push_back(std::move(r));
  }
  starts.resize(cfg.multistarts);
  return starts;
}

struct StartOutcome {
  Eigen::VectorXd u;
  double log_value = -std::numeric_limits<double>::infinity();
  double init_log_value = 0.0;
  double init_value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool valid = false;
};

StartOutcome run_start(Eigen::VectorXd u0, GeometryPtr geom, const QuadForm& forms,
                       const EigenBasis* basis, const ShiftedSolver& solver,
                       const MaximizerConfig& cfg) {
  const double beta = 4.0 * M_PI - cfg.epsilon;
  StartOutcome out;

  if (cfg.ell > 0) {
    Field f = project_perp(make_field(geom, u0), *basis, cfg.ell, forms);
    u0 = f.coeffs;
  }
  if (forms.torus) torus_mean_zero(u0);
  double nrm = std::sqrt(std::max(forms.quad_1alpha(u0, cfg.alpha), 0.0));
  if (!(nrm > 1e-14)) return out;
  Eigen::VectorXd u = u0 / nrm;

  {
    const Field f = make_field(geom, u);
    const ExpIntegral e = exp_functional(f, beta, forms);
    out.init_log_value = e.log_value;
    out.init_value = e.value;
  }

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const NodalExp load = nodal_exp_load(u, beta, forms);
    if (!(load.lam_shift > 0.0))
      throw std::runtime_error("maximizer: nonpositive multiplier in fixed point");
    Eigen::VectorXd v = solver.solve(load.rhs / load.lam_shift);
    const double vn = std::sqrt(std::max(forms.quad_1alpha(v, cfg.alpha), 0.0));
    if (!(vn > 1e-300)) throw std::runtime_error("maximizer: degenerate iterate");
    v /= vn;
    Eigen::VectorXd next = cfg.damping * v + (1.0 - cfg.damping) * u;
    const double nn = std::sqrt(std::max(forms.quad_1alpha(next, cfg.alpha), 0.0));
    next /= nn;
    const Eigen::VectorXd d = next - u;
    const double step = std::sqrt(std::max(d.dot(forms.K * d), 0.0));
    u = std::move(next);
    out.iterations = it;
    if (step < cfg.tol) {
      out.converged = true;
      break;
    }
    if (cfg.ell > 0 && (it % 64 == 0)) {
      for (int g = 0; g < cfg.ell; ++g)
        for (int j = 0; j < basis->multiplicities[g]; ++j) {
          const double c = basis->function(g, j).coeffs.dot(forms.M * u);
          if (std::abs(c) > 1e-8)
            throw std::runtime_error("maximizer: constraint violation growth");
        }
    }
  }

  out.u = std::move(u);
  const ExpIntegral e = exp_functional(make_field(geom, out.u), beta, forms);
  out.log_value = e.log_value;
  out.valid = true;
  return out;
}

}  // namespace

MaximizerResult maximize_subcritical(GeometryPtr geom, const QuadForm& forms,
                                     const EigenBasis* basis, const MaximizerConfig& cfg) {
  cfg.validate();
  if (cfg.ell > 0) {
    if (basis == nullptr || basis->n_distinct() < cfg.ell + 1)
      throw std::invalid_argument("maximizer: ell > 0 needs a basis covering ell+1 groups");
    const double cap = (1.0 - 1e-3) * basis->lambdas[cfg.ell];
    if (cfg.alpha > cap)
      throw std::invalid_argument("maximizer: alpha above admissible threshold");
  } else if (basis != nullptr && basis->n_distinct() >= 1) {
    if (cfg.alpha > (1.0 - 1e-3) * basis->lambdas[0])
      throw std::invalid_argument("maximizer: alpha above admissible threshold");
  }

  const ShiftedSolver solver(forms, cfg.alpha, basis, cfg.ell);
  std::vector<Eigen::VectorXd> starts = build_starts(geom, forms, basis, cfg);
  std::vector<StartOutcome> outcomes(starts.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (long long s = 0; s < static_cast<long long>(starts.size()); ++s) {
    outcomes[static_cast<std::size_t>(s)] =
        run_start(starts[static_cast<std::size_t>(s)], geom, forms, basis, solver, cfg);
  }

  // Ties within 1e-12 relative (1e-12 absolute on the log) keep the lowest
  // start index.
  int win = -1;
  for (std::size_t s = 0; s < outcomes.size(); ++s) {
    if (!outcomes[s].valid) continue;
    if (win < 0 ||
        outcomes[s].log_value > outcomes[static_cast<std::size_t>(win)].log_value + 1e-12) {
      win = static_cast<int>(s);
    }
  }
  if (win < 0) throw std::runtime_error("maximizer: every start failed");
  StartOutcome& best = outcomes[static_cast<std::size_t>(win)];

  MaximizerResult res;
  res.winning_start = win;
  res.iterations = best.iterations;
  res.converged = best.converged;
  res.init_value = best.init_value;
  for (const auto& o : outcomes)
    res.start_values.push_back(o.valid ? o.log_value : std::nan(""));

  Eigen::VectorXd u = std::move(best.u);
  // Sign convention: peak positive.
  double umax, umin;
  if (!forms.torus) {
    umax = u.maxCoeff();
    umin = u.minCoeff();
    if (std::abs(umin) > umax) u = -u;
  } else {
    const Eigen::MatrixXd g = torus_synthesize(forms, u);
    umax = g.maxCoeff();
    umin = g.minCoeff();
    if (std::abs(umin) > umax) u = -u;
  }

  const double beta = 4.0 * M_PI - cfg.epsilon;
  const NodalExp load = nodal_exp_load(u, beta, forms);
  res.log_lambda_eps = std::log(load.lam_shift) + beta * load.cmax_sq;
  res.lambda_eps = res.log_lambda_eps < 709.0 ? std::exp(res.log_lambda_eps)
                                              : std::numeric_limits<double>::infinity();
  if (forms.torus) {
    const double scale = std::exp(beta * load.cmax_sq);
    res.mu_eps = load.mu_shift * scale;
  }

  if (!forms.torus) {
    int arg = 0;
    double cmax = -1.0;
    for (int v = 0; v < u.size(); ++v)
      if (std::abs(u[v]) > cmax) {
        cmax = std::abs(u[v]);
        arg = v;
      }
    res.c_eps = cmax;
    res.x_eps_node = arg;
    res.x_eps = as_mesh(*geom).vertices[arg];
    const double floor = -1e-10 * std::max(cmax, 1.0);
    res.positive = u.minCoeff() > floor;
  } else {
    const TorusGrid& grid = as_grid(*geom);
    const Eigen::MatrixXd g = torus_synthesize(forms, u);
    int ai = 0, aj = 0;
    double cmax = -1.0;
    for (int i = 0; i < grid.n; ++i)
      for (int j = 0; j < grid.n; ++j)
        if (std::abs(g(i, j)) > cmax) {
          cmax = std::abs(g(i, j));
          ai = i;
          aj = j;
        }
    res.c_eps = cmax;
    res.x_eps_node = ai * grid.n + aj;
    res.x_eps = {grid.L * ai / grid.n, grid.L * aj / grid.n};
    res.positive = g.minCoeff() > -1e-10 * std::max(cmax, 1.0);
  }

  res.u = make_field(geom, std::move(u));
  const ExpIntegral e = exp_functional(res.u, beta, forms);
  res.value = e.value;
  res.log_value = e.log_value;
  res.overflow = e.overflow_regime;
  res.residual = el_residual(res, forms, cfg.alpha, cfg.epsilon, basis, cfg.ell);
  return res;
}

double el_residual(const MaximizerResult& result, const QuadForm& forms, double alpha,
                   double epsilon, const EigenBasis* basis, int ell) {
  const double beta = 4.0 * M_PI - epsilon;
  const Eigen::VectorXd& u = result.u.coeffs;
  const NodalExp load = nodal_exp_load(u, beta, forms);
  Eigen::VectorXd r = forms.K * u - alpha * (forms.M * u) - load.rhs / load.lam_shift;
  if (forms.torus) {
    r[0] = 0.0;  // mean multiplier absorbs the constant mode
    if (ell > 0 && basis != nullptr) r = dual_project_perp(r, *basis, ell, forms);
    return r.norm();
  }
  if (ell > 0 && basis != nullptr) r = dual_project_perp(r, *basis, ell, forms);
  Eigen::VectorXd rc(forms.constrained.size());
  for (std::size_t i = 0; i < forms.constrained.size(); ++i) rc[i] = r[forms.constrained[i]];
  Eigen::SimplicialLDLT<SparseMat> mass(forms.M_c);
  const Eigen::VectorXd z = mass.solve(rc);
  return std::sqrt(std::max(rc.dot(z), 0.0));
}

UnboundednessReport demonstrate_unboundedness(GeometryPtr geom, const QuadForm& forms,
                                              const EigenBasis& basis, double alpha,
                                              const std::vector<double>& t_values, int ell) {
  if (basis.n_distinct() < ell + 1)
    throw std::invalid_argument("demonstrate_unboundedness: basis too small for ell");
  const Field& e = basis.function(ell, 0);
  UnboundednessReport rep;
  rep.lambda = forms.energy(e.coeffs) / forms.l2_sq(e.coeffs);
  if (alpha < rep.lambda) rep.t_max = 1.0 / std::sqrt(rep.lambda - alpha);
  for (double t : t_values) {
    UnboundednessRow row;
    row.t = t;
    const Eigen::VectorXd ut = t * e.coeffs;
    row.norm_1alpha_sq = forms.quad_1alpha(ut, alpha);
    const ExpIntegral v = exp_functional(make_field(geom, ut), 4.0 * M_PI, forms);
    row.log_functional = v.log_value;
    row.overflow = v.overflow_regime;
    rep.rows.push_back(row);
  }
  return rep;
}

void save_run_record(const MaximizerResult& result, const MaximizerConfig& cfg,
                     const std::string& json_path, const std::string& field_path) {
  nlohmann::json j;
  j["config"] = {{"epsilon", cfg.epsilon}, {"alpha", cfg.alpha},
                 {"ell", cfg.ell},         {"damping", cfg.damping},
                 {"tol", cfg.tol},         {"max_iter", cfg.max_iter},
                 {"multistarts", cfg.multistarts}, {"seed", cfg.seed}};
  j["value"] = std::isfinite(result.value) ? result.value : 0.0;
  j["log_value"] = result.log_value;
  j["overflow_regime"] = result.overflow;
  j["lambda_eps"] = std::isfinite(result.lambda_eps) ? result.lambda_eps : 0.0;
  j["log_lambda_eps"] = result.log_lambda_eps;
  j["mu_eps"] = result.mu_eps;
  j["c_eps"] = result.c_eps;
  j["x_eps"] = {result.x_eps.x, result.x_eps.y};
  j["iterations"] = result.iterations;
  j["residual"] = result.residual;
  j["converged"] = result.converged;
  j["winning_start"] = result.winning_start;
  j["positive"] = result.positive;
  j["field_file"] = field_path;
  std::ofstream out(json_path);
  if (!out) throw std::runtime_error("cannot open " + json_path);
  out << j.dump(2) << "\n";
  save_field_file(result.u, field_path);
}

}  // namespace tmx
