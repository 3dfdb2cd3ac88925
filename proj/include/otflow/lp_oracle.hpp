#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "otflow/density.hpp"
#include "otflow/manifold.hpp"

namespace otflow {

struct Coupling {
  Eigen::Index source = 0;
  Eigen::Index target = 0;
  double weight = 0.0;
};

/// Discrete transport plan between two weighted point sets.
struct CouplingPlan {
  std::vector<Coupling> entries;

  /// Row and column sums of the plan.
  Eigen::VectorXd source_marginal(Eigen::Index n) const;
  Eigen::VectorXd target_marginal(Eigen::Index n) const;
};

struct LpTransport {
  double cost = 0.0;
  /// Primal cost minus a dual-feasible lower bound.
  double duality_gap = 0.0;
  int pivots = 0;
  CouplingPlan plan;
};

/// Exact transport between masses a and b (equal totals within 1e-9) with
/// cost(i, j), by the primal network simplex on the complete bipartite graph.
LpTransport solve_transport_lp(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                               const std::function<double(Eigen::Index, Eigen::Index)>& cost);

struct LpW2 {
  double w2 = 0.0;
  double duality_gap = 0.0;
  int pivots = 0;
  CouplingPlan plan;
};

/// W2 between the quadrature-weighted node measures rho_i w_i, with squared
/// exact geodesic distances as cost. Limited to 4096 nodes. Densities may
/// vanish at nodes but must be nonnegative with equal masses.
LpW2 lp_w2_oracle(const ManifoldGrid& grid, const ScalarField& mu0, const ScalarField& mu1);

constexpr Eigen::Index kLpOracleMaxNodes = 4096;

}  // namespace otflow
