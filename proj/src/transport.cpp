#include "otflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "otflow/check_report.hpp"
#include "otflow/error.hpp"

namespace otflow {
namespace {

constexpr double kStiffnessShift = 1e-12;
constexpr Eigen::Index kDirectFlatNodes = 2048;

double weighted_dot(const Eigen::VectorXd& w, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) sum += w[i] * a[i] * b[i];
  return sum;
}

// Removes the components of f in the kernel of the grid gradient.
ScalarField project_range(const ManifoldGrid& grid, const ScalarField& f) {
  const auto& null = grid.spectrum().null_mask();
  return grid.spectrum().apply_function(f, [&](double, int i) { return null[i] ? 0.0 : 1.0; });
}

ScalarField remove_mean(const ManifoldGrid& grid, const ScalarField& f) {
  return f.array() - grid.integrate(f) / grid.volume();
}

// Largest root of (x - r)(x + g)^2 = q with q >= 0, or 0 when it is not positive.
double prox_root(double r, double q, double g) {
  if (q == 0.0) return std::max(r, 0.0);
  if (r <= 0.0 && -r * g * g >= q) return 0.0;
  double x = std::max(r, 0.0) + std::cbrt(q);
  for (int it = 0; it < 100; ++it) {
    const double a = x + g;
    const double p = (x - r) * a * a - q;
    const double dp = a * a + 2.0 * (x - r) * a;
    const double step = p / dp;
    x -= step;
    if (std::abs(step) <= 1e-15 * (std::abs(x) + g)) break;
  }
  return std::max(x, 0.0);
}

// Douglas-Rachford state: rho at s-nodes and face momentum at s-midpoints
// (constrained side), their centred copies at s-midpoints (integrand side).
struct Variables {
  Eigen::MatrixXd rho;      // nodes x (K + 1)
  Eigen::MatrixXd m;        // faces x K
  Eigen::MatrixXd rho_bar;  // nodes x K
  Eigen::MatrixXd m_bar;    // (dim * nodes) x K
};

class DynamicSolver {
 public:
  DynamicSolver(const ManifoldGrid& grid, const DensityField& mu0, const DensityField& mu1, const TransportParams& p)
      : grid_(grid), mu0_(mu0), mu1_(mu1), params_(p), k_(p.slices), h_(1.0 / p.slices), n_(grid.size()) {
    const FluxOperator& flux = grid.flux();
    gamma_ = params_.gamma / grid.volume();

    // Interpolation projection, s direction: (I + S^T S) with S the midpoint average.
    Eigen::MatrixXd s_avg = Eigen::MatrixXd::Zero(k_, k_ + 1);
    for (int k = 0; k < k_; ++k) s_avg(k, k) = s_avg(k, k + 1) = 0.5;
    s_avg_ = s_avg;
    const Eigen::MatrixXd normal = Eigen::MatrixXd::Identity(k_ + 1, k_ + 1) + s_avg.transpose() * s_avg;
    s_solve_ = normal.inverse();

    // Interpolation projection, space direction: (M_F + A^T M_C A) m = M_F m0 + A^T M_C mbar0.
    face_mass_ = flux.weights.cwiseQuotient(flux.inverse_metric);
    node_mass_.resize(grid.dim() * n_);
    for (int a = 0; a < grid.dim(); ++a) node_mass_.segment(a * n_, n_) = grid.weights().cwiseProduct(grid.metric(a));
    Eigen::SparseMatrix<double> to_nodes = flux.to_nodes;
    Eigen::SparseMatrix<double> normal_m = Eigen::SparseMatrix<double>(to_nodes.transpose()) *
                                           node_mass_.asDiagonal() * to_nodes;
    for (Eigen::Index f = 0; f < flux.faces; ++f) normal_m.coeffRef(f, f) += face_mass_[f];
    m_solver_.compute(normal_m);
    if (m_solver_.info() != Eigen::Success) throw SolverFailure("solve_w2: interpolation system factorization failed");

    // Continuity projection: per eigenmode a tridiagonal system in s.
    const auto& mu = grid.spectrum().eigenvalues();
    const auto& null = grid.spectrum().null_mask();
    inv_pivot_.resize(k_, n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (null[i]) continue;
      double prev = 0.0;
      for (int k = 0; k < k_; ++k) {
        const double diag = (k > 0 ? 1.0 : 0.0) + (k + 1 < k_ ? 1.0 : 0.0) - h_ * h_ * mu[i];
        const double denom = diag - (k > 0 ? prev : 0.0);
        inv_pivot_(k, i) = 1.0 / denom;
        prev = inv_pivot_(k, i);
      }
    }
  }

  TransportPath run() {
    Variables z;
    z.rho.resize(n_, k_ + 1);
    for (int k = 0; k <= k_; ++k) {
      const double s = static_cast<double>(k) / k_;
      z.rho.col(k) = (1.0 - s) * mu0_ + s * mu1_;
    }
    z.m = Eigen::MatrixXd::Zero(grid_.flux().faces, k_);
    z.rho_bar = z.rho * s_avg_.transpose();
    z.m_bar = Eigen::MatrixXd::Zero(grid_.dim() * n_, k_);

    std::vector<double> history;
    TransportDiagnostics diag;
    Variables x, y;
    for (int it = 1; it <= params_.max_iter; ++it) {
      project_interpolation(z, x);
      Variables reflected{2.0 * x.rho - z.rho, 2.0 * x.m - z.m, 2.0 * x.rho_bar - z.rho_bar, 2.0 * x.m_bar - z.m_bar};
      y.rho = std::move(reflected.rho);
      y.m = std::move(reflected.m);
      project_continuity(y.rho, y.m);
      y.rho_bar = std::move(reflected.rho_bar);
      y.m_bar = std::move(reflected.m_bar);
      prox_integrand(y.rho_bar, y.m_bar);
      const double a = params_.relaxation;
      z.rho += a * (y.rho - x.rho);
      z.m += a * (y.m - x.m);
      z.rho_bar += a * (y.rho_bar - x.rho_bar);
      z.m_bar += a * (y.m_bar - x.m_bar);

      history.push_back(momentum_action(y.rho_bar, y.m_bar));
      diag.iterations = it;
      if (it > params_.window) {
        const double now = history.back();
        const double before = history[history.size() - 1 - params_.window];
        if (std::abs(now - before) <= params_.tolerance * std::abs(now)) {
          diag.converged = true;
          break;
        }
      }
    }
    if (!diag.converged)
      throw SolverFailure(fmt::format("solve_w2: no convergence in {} iterations (action {})", params_.max_iter,
                                      history.empty() ? 0.0 : history.back()));
    diag.momentum_action = history.back();
    return finish(y.rho_bar, y.m_bar, diag);
  }

 private:
  void project_interpolation(const Variables& z, Variables& x) const {
    x.rho = (z.rho + z.rho_bar * s_avg_) * s_solve_;
    x.rho_bar = x.rho * s_avg_.transpose();
    const FluxOperator& flux = grid_.flux();
    const Eigen::MatrixXd rhs = face_mass_.asDiagonal() * z.m +
                                Eigen::SparseMatrix<double>(flux.to_nodes.transpose()) * (node_mass_.asDiagonal() * z.m_bar);
    x.m = m_solver_.solve(rhs);
    x.m_bar = flux.to_nodes * x.m;
  }

  void project_continuity(Eigen::MatrixXd& rho, Eigen::MatrixXd& m) const {
    rho.col(0) = mu0_;
    rho.col(k_) = mu1_;
    const LaplaceSpectrum& spectrum = grid_.spectrum();
    const auto& null = spectrum.null_mask();
    Eigen::MatrixXd coeff(k_, n_);
    for (int k = 0; k < k_; ++k) {
      const ScalarField r = (rho.col(k + 1) - rho.col(k)) / h_ + face_divergence(grid_, m.col(k));
      coeff.row(k) = h_ * h_ * spectrum.forward(r).transpose();
    }
    for (Eigen::Index i = 0; i < n_; ++i) {
      Eigen::Ref<Eigen::VectorXd> b = coeff.col(i);
      if (null[i]) {
        // Singular path Laplacian: least-squares solution with zero mean in s.
        b.array() -= b.mean();
        Eigen::VectorXd psi(k_);
        psi[0] = 0.0;
        if (k_ > 1) psi[1] = -b[0];
        for (int k = 1; k + 1 < k_; ++k) psi[k + 1] = 2.0 * psi[k] - psi[k - 1] - b[k];
        b = psi.array() - psi.mean();
        continue;
      }
      // Thomas algorithm with off-diagonals -1.
      b[0] *= inv_pivot_(0, i);
      for (int k = 1; k < k_; ++k) b[k] = (b[k] + b[k - 1]) * inv_pivot_(k, i);
      for (int k = k_ - 2; k >= 0; --k) b[k] += inv_pivot_(k, i) * b[k + 1];
    }
    std::vector<ScalarField> psi(k_);
    for (int k = 0; k < k_; ++k) psi[k] = spectrum.inverse(coeff.row(k).transpose());
    for (int j = 1; j < k_; ++j) rho.col(j) -= (psi[j - 1] - psi[j]) / h_;
    for (int k = 0; k < k_; ++k) m.col(k) += face_gradient(grid_, psi[k]);
  }

  void prox_integrand(Eigen::MatrixXd& rho_bar, Eigen::MatrixXd& m_bar) const {
    const int dim = grid_.dim();
    for (int k = 0; k < k_; ++k) {
      for (Eigen::Index i = 0; i < n_; ++i) {
        double norm_sq = 0.0;
        for (int a = 0; a < dim; ++a) norm_sq += grid_.metric(a)[i] * m_bar(a * n_ + i, k) * m_bar(a * n_ + i, k);
        const double x = prox_root(rho_bar(i, k), 0.5 * gamma_ * norm_sq, gamma_);
        rho_bar(i, k) = x;
        const double scale = x > 0.0 ? x / (x + gamma_) : 0.0;
        for (int a = 0; a < dim; ++a) m_bar(a * n_ + i, k) *= scale;
      }
    }
  }

  double momentum_action(const Eigen::MatrixXd& rho_bar, const Eigen::MatrixXd& m_bar) const {
    const int dim = grid_.dim();
    double total = 0.0;
    for (int k = 0; k < k_; ++k) {
      for (Eigen::Index i = 0; i < n_; ++i) {
        if (!(rho_bar(i, k) > 0.0)) continue;
        double norm_sq = 0.0;
        for (int a = 0; a < dim; ++a) norm_sq += grid_.metric(a)[i] * m_bar(a * n_ + i, k) * m_bar(a * n_ + i, k);
        total += h_ * grid_.weights()[i] * norm_sq / rho_bar(i, k);
      }
    }
    return total;
  }

  // Output slices at the s-nodes from the integrand-side variables: exact
  // endpoints, interior densities and momenta averaged from the adjacent
  // cells. The constrained nodal densities are not used: where the optimal
  // path is vacuum they oscillate in s around zero.
  TransportPath finish(const Eigen::MatrixXd& rho_bar, const Eigen::MatrixXd& m_bar, TransportDiagnostics diag) const {
    TransportPath path;
    path.rho.resize(k_ + 1);
    path.phi.resize(k_ + 1);
    diag.min_density = std::min(mu0_.minCoeff(), mu1_.minCoeff());
    for (int k = 0; k <= k_; ++k) {
      path.s_nodes.push_back(static_cast<double>(k) / k_);
      if (k == 0 || k == k_) {
        path.rho[k] = k == 0 ? mu0_ : mu1_;
        continue;
      }
      ScalarField slice = 0.5 * (rho_bar.col(k - 1) + rho_bar.col(k));
      diag.min_density = std::min(diag.min_density, slice.minCoeff());
      for (Eigen::Index i = 0; i < n_; ++i) {
        if (slice[i] < params_.density_floor) {
          slice[i] = params_.density_floor;
          ++diag.floor_hits;
        }
      }
      path.rho[k] = slice / grid_.integrate(slice);
    }
    const FluxOperator& flux = grid_.flux();
    const Eigen::SparseMatrix<double> to_faces = flux.to_nodes.transpose();
    for (int k = 0; k <= k_; ++k) {
      Eigen::VectorXd momentum;
      if (k == 0)
        momentum = m_bar.col(0);
      else if (k == k_)
        momentum = m_bar.col(k_ - 1);
      else
        momentum = 0.5 * (m_bar.col(k - 1) + m_bar.col(k));
      const ScalarField drho = -face_divergence(grid_, to_faces * momentum);
      const PotentialSolution sol =
          solve_potential_detailed(grid_, path.rho[k], remove_mean(grid_, drho), params_.potential_tol);
      if (!sol.converged)
        throw SolverFailure(fmt::format("solve_w2: potential solve failed at slice {} (residual {}, {} iterations)", k,
                                        sol.relative_residual, sol.iterations));
      path.phi[k] = sol.phi;
    }
    // Consistency of the recovered pair with the slices: d_s rho by centred
    // differences, second-order one-sided at the endpoints.
    for (int k = 0; k <= k_; ++k) {
      ScalarField ds_rho;
      if (k == 0)
        ds_rho = (-3.0 * path.rho[0] + 4.0 * path.rho[1] - path.rho[2]) / (2.0 * h_);
      else if (k == k_)
        ds_rho = (3.0 * path.rho[k_] - 4.0 * path.rho[k_ - 1] + path.rho[k_ - 2]) / (2.0 * h_);
      else
        ds_rho = (path.rho[k + 1] - path.rho[k - 1]) / (2.0 * h_);
      const ScalarField residual = ds_rho + weighted_laplacian(grid_, path.rho[k], path.phi[k]);
      const double scale = grid_.norm(ds_rho);
      if (scale > 0.0) diag.continuity_residual = std::max(diag.continuity_residual, grid_.norm(residual) / scale);
    }
    path.action_per_s = action(grid_, path);
    path.w2_sq_estimate = total_action(path);
    path.diagnostics = diag;
    return path;
  }

  const ManifoldGrid& grid_;
  const DensityField& mu0_;
  const DensityField& mu1_;
  TransportParams params_;
  int k_;
  double h_;
  Eigen::Index n_;
  double gamma_ = 1.0;
  Eigen::MatrixXd s_avg_;
  Eigen::MatrixXd s_solve_;
  Eigen::VectorXd face_mass_;
  Eigen::VectorXd node_mass_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> m_solver_;
  Eigen::MatrixXd inv_pivot_;
};

// Integral of sqrt(c + b t) over [0, t], written without the difference of
// 3/2 powers so that small slopes b do not cancel.
double sqrt_integral(double c, double b, double t) {
  const double u = std::sqrt(std::max(c + b * t, 0.0));
  const double v = std::sqrt(c);
  return 2.0 * t / 3.0 * (u * u + u * v + v * v) / (u + v);
}

// Inverse of sqrt_integral in t for a value v >= 0 (c > 0).
double sqrt_integral_inverse(double c, double b, double v) {
  const double x = std::pow(std::max(std::pow(c, 1.5) + 1.5 * b * v, 0.0), 2.0 / 3.0);
  return (3.0 * v * std::pow(c, 1.5) + 2.25 * b * v * v) / (x * x + x * c + c * c);
}

}  // namespace

PotentialSolution solve_potential_detailed(const ManifoldGrid& grid, const DensityField& rho, const ScalarField& drho,
                                           double tol, int max_iter) {
  grid.check_shape(rho, "solve_potential");
  grid.check_shape(drho, "solve_potential");
  if (!(rho.minCoeff() > 0.0)) throw InvalidArgument("solve_potential: density must be strictly positive");
  PotentialSolution out;
  out.phi = ScalarField::Zero(grid.size());
  const ScalarField b = project_range(grid, drho);
  const Eigen::VectorXd& w = grid.weights();
  const double b_norm = std::sqrt(weighted_dot(w, b, b));
  if (b_norm == 0.0) {
    out.converged = true;
    return out;
  }
  // Preconditioner: Cholesky factor of the stiffness matrix D^T diag(w g rho) D
  // plus a small mass shift. The shift keeps kernel modes invertible; it only
  // perturbs modes whose energy is below shift * mass, which on floored vacuum
  // regions are the ones the spectral preconditioner cannot reach. Spectral
  // difference rows are dense along grid lines, so large flat grids fall back
  // to rho^{-1/2} (-Laplacian)^+ rho^{-1/2}.
  const bool direct = !grid.is_flat() || grid.size() <= kDirectFlatNodes;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor;
  if (direct) {
    const FluxOperator& flux = grid.flux();
    const Eigen::VectorXd face_coeff =
        flux.weights.cwiseProduct(flux.inverse_metric).cwiseProduct(flux.to_faces * rho);
    const Eigen::SparseMatrix<double> difference = flux.difference;
    Eigen::SparseMatrix<double> stiffness =
        Eigen::SparseMatrix<double>(difference.transpose()) * face_coeff.asDiagonal() * difference;
    double scale = 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) scale = std::max(scale, stiffness.coeff(i, i) / w[i]);
    for (Eigen::Index i = 0; i < grid.size(); ++i) stiffness.coeffRef(i, i) += kStiffnessShift * scale * w[i];
    factor.compute(stiffness);
    if (factor.info() != Eigen::Success) throw SolverFailure("solve_potential: stiffness factorization failed");
  }
  const Eigen::VectorXd inv_sqrt_rho = rho.cwiseSqrt().cwiseInverse();
  const auto& null = grid.spectrum().null_mask();
  auto apply = [&](const ScalarField& f) -> ScalarField { return -weighted_laplacian(grid, rho, f); };
  auto precondition = [&](const ScalarField& r) -> ScalarField {
    if (direct) return project_range(grid, factor.solve(w.cwiseProduct(r)));
    const ScalarField inner = grid.spectrum().apply_function(
        inv_sqrt_rho.cwiseProduct(r), [&](double mu, int i) { return null[i] ? 0.0 : -1.0 / mu; });
    return inv_sqrt_rho.cwiseProduct(inner);
  };
  // Conjugate gradients restarted from the true residual: on steep densities
  // the recursive residual drifts away from it before the target is reached.
  ScalarField& x = out.phi;
  for (int round = 0; round < 5 && out.iterations < max_iter; ++round) {
    ScalarField r = b + weighted_laplacian(grid, rho, x);
    const double r_norm = std::sqrt(weighted_dot(w, r, r));
    out.relative_residual = r_norm / b_norm;
    if (out.relative_residual <= tol) break;
    ScalarField z = precondition(r);
    ScalarField p = z;
    double rz = weighted_dot(w, r, z);
    while (out.iterations < max_iter) {
      const ScalarField ap = apply(p);
      const double alpha = rz / weighted_dot(w, p, ap);
      x += alpha * p;
      r -= alpha * ap;
      ++out.iterations;
      if (std::sqrt(weighted_dot(w, r, r)) <= 0.1 * tol * b_norm) break;
      z = precondition(r);
      const double rz_next = weighted_dot(w, r, z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
  }
  // Kernel components would leave the residual unchanged; drop them with the mean.
  x = project_range(grid, x);
  const ScalarField residual = weighted_laplacian(grid, rho, x) + b;
  out.relative_residual = std::sqrt(weighted_dot(w, residual, residual)) / b_norm;
  out.converged = out.relative_residual <= tol;
  return out;
}

ScalarField solve_potential(const ManifoldGrid& grid, const DensityField& rho, const ScalarField& drho, double tol) {
  grid.check_shape(drho, "solve_potential");
  const double mean_tol = 1e-10 * std::max(1.0, grid.integrate(drho.cwiseAbs()));
  if (std::abs(grid.integrate(drho)) > mean_tol)
    throw InvalidArgument(fmt::format("solve_potential: right-hand side has nonzero integral {}", grid.integrate(drho)));
  const PotentialSolution sol = solve_potential_detailed(grid, rho, drho, tol);
  if (!sol.converged)
    throw SolverFailure(fmt::format("solve_potential: conjugate gradients stalled at relative residual {} after {} "
                                    "iterations",
                                    sol.relative_residual, sol.iterations));
  return sol.phi;
}

TransportPath solve_w2(const ManifoldGrid& grid, const DensityField& mu0, const DensityField& mu1,
                       const TransportParams& params) {
  if (params.slices < 8) throw InvalidArgument("solve_w2: at least 8 slices are required");
  if (!(params.gamma > 0.0) || !(params.relaxation > 0.0 && params.relaxation < 2.0) || params.window < 1 ||
      params.max_iter < 1 || !(params.tolerance > 0.0))
    throw InvalidArgument("solve_w2: invalid solver parameters");
  validate_density(grid, mu0);
  validate_density(grid, mu1);
  DynamicSolver solver(grid, mu0, mu1, params);
  return solver.run();
}

std::vector<double> action(const ManifoldGrid& grid, const TransportPath& path) {
  std::vector<double> out;
  out.reserve(path.rho.size());
  for (size_t k = 0; k < path.rho.size(); ++k) out.push_back(dirichlet_energy(grid, path.rho[k], path.phi[k]));
  return out;
}

double total_action(const TransportPath& path) {
  double sum = 0.0;
  for (size_t k = 0; k + 1 < path.s_nodes.size(); ++k)
    sum += 0.5 * (path.s_nodes[k + 1] - path.s_nodes[k]) * (path.action_per_s[k] + path.action_per_s[k + 1]);
  return sum;
}

std::vector<double> reparametrization_times(const std::vector<double>& s_nodes, const std::vector<double>& action,
                                            double eps, const std::vector<double>& r_values, double* length) {
  if (!(eps > 0.0)) throw InvalidArgument("reparametrize: eps must be positive");
  if (s_nodes.size() < 2 || action.size() != s_nodes.size())
    throw InvalidArgument("reparametrize: need matching s-nodes and actions");
  const size_t n = s_nodes.size();
  // Cumulative length at each node; on a segment sqrt(c + b t), t = s - s_k.
  std::vector<double> cumulative(n, 0.0);
  std::vector<double> c(n - 1), b(n - 1);
  for (size_t k = 0; k + 1 < n; ++k) {
    const double ds = s_nodes[k + 1] - s_nodes[k];
    if (!(ds > 0.0)) throw InvalidArgument("reparametrize: s-nodes must be increasing");
    const double a0 = std::max(action[k], 0.0);
    const double a1 = std::max(action[k + 1], 0.0);
    c[k] = eps * eps + a0;
    b[k] = (a1 - a0) / ds;
    cumulative[k + 1] = cumulative[k] + sqrt_integral(c[k], b[k], ds);
  }
  const double total = cumulative.back();
  if (length) *length = total;
  std::vector<double> out;
  out.reserve(r_values.size());
  for (double r : r_values) {
    if (r <= 0.0) {
      out.push_back(s_nodes.front());
      continue;
    }
    if (r >= 1.0) {
      out.push_back(s_nodes.back());
      continue;
    }
    const double target = r * total;
    const size_t k = std::min<size_t>(
        n - 2, static_cast<size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), target) - cumulative.begin()) - 1);
    const double ds = s_nodes[k + 1] - s_nodes[k];
    const double t = std::clamp(sqrt_integral_inverse(c[k], b[k], target - cumulative[k]), 0.0, ds);
    out.push_back(s_nodes[k] + t);
  }
  return out;
}

namespace {

// Locates s in the node list: segment index and fraction in [0, 1].
std::pair<size_t, double> locate(const std::vector<double>& s_nodes, double s) {
  const size_t n = s_nodes.size();
  size_t k = static_cast<size_t>(std::upper_bound(s_nodes.begin(), s_nodes.end(), s) - s_nodes.begin());
  k = std::clamp<size_t>(k, 1, n - 1) - 1;
  const double frac = (s - s_nodes[k]) / (s_nodes[k + 1] - s_nodes[k]);
  return {k, std::clamp(frac, 0.0, 1.0)};
}

}  // namespace

TransportPath reparametrize(const ManifoldGrid& grid, const TransportPath& path, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("reparametrize: eps must be positive");
  if (path.rho.size() < 2 || path.phi.size() != path.rho.size() || path.action_per_s.size() != path.rho.size())
    throw InvalidArgument("reparametrize: incomplete path");
  const int k_total = path.slices();
  std::vector<double> r_values;
  for (int k = 0; k <= k_total; ++k) r_values.push_back(static_cast<double>(k) / k_total);
  double length = 0.0;
  const std::vector<double> s_of_r = reparametrization_times(path.s_nodes, path.action_per_s, eps, r_values, &length);

  TransportPath out;
  out.s_nodes = r_values;
  out.diagnostics = path.diagnostics;
  for (int k = 0; k <= k_total; ++k) {
    const double s = s_of_r[k];
    const auto [seg, frac] = locate(path.s_nodes, s);
    const double a = std::max((1.0 - frac) * path.action_per_s[seg] + frac * path.action_per_s[seg + 1], 0.0);
    const double speed = length / std::sqrt(eps * eps + a);
    DensityField rho;
    ScalarField phi;
    if (k == 0) {
      rho = path.rho.front();
      phi = path.phi.front();
    } else if (k == k_total) {
      rho = path.rho.back();
      phi = path.phi.back();
    } else {
      rho = (1.0 - frac) * path.rho[seg] + frac * path.rho[seg + 1];
      phi = (1.0 - frac) * path.phi[seg] + frac * path.phi[seg + 1];
    }
    grid.check_shape(rho, "reparametrize");
    out.rho.push_back(std::move(rho));
    out.phi.push_back(speed * phi);
    out.action_per_s.push_back(speed * speed * a);
  }
  out.w2_sq_estimate = total_action(out);
  return out;
}

DensityField interpolate(const TransportPath& path, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidArgument(fmt::format("interpolate: s = {} outside [0, 1]", s));
  if (path.rho.empty()) throw InvalidArgument("interpolate: empty path");
  if (s == 0.0) return path.rho.front();
  if (s == 1.0) return path.rho.back();
  const auto [k, frac] = locate(path.s_nodes, s);
  return (1.0 - frac) * path.rho[k] + frac * path.rho[k + 1];
}

std::string path_csv(const ManifoldGrid& grid, const TransportPath& path) {
  std::string out = "s,node";
  static const char* names[2][2] = {{"x", "y"}, {"theta", "phi_coord"}};
  for (int a = 0; a < grid.dim(); ++a) out += fmt::format(",{}", names[grid.is_flat() ? 0 : 1][a]);
  out += ",rho,phi\n";
  for (size_t k = 0; k < path.rho.size(); ++k) {
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      out += format_double(path.s_nodes[k]);
      out += fmt::format(",{}", i);
      for (int a = 0; a < grid.dim(); ++a) out += "," + format_double(grid.nodes()(i, a));
      out += "," + format_double(path.rho[k][i]) + "," + format_double(path.phi[k][i]) + "\n";
    }
  }
  return out;
}

}  // namespace otflow
