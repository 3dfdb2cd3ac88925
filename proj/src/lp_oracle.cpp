#include "otflow/lp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <fmt/format.h>

#include "otflow/error.hpp"

namespace otflow {
namespace {

// Primal network simplex for the uncapacitated transportation problem.
// Sources 0..na-1, sinks na..na+nb-1, artificial root na+nb. Arc ids below
// na*nb are real arcs (i, j) = (id / nb, id % nb); id = na*nb + v is the
// artificial arc joining node v and the root. Tree arcs carry their flow on
// the child node; non-tree arcs have zero flow. An artificial arc points
// towards the root for nodes with nonnegative supply and away from it
// otherwise. Leaving arcs are chosen with the strongly feasible tie-breaking
// rule, so degenerate pivots cannot cycle.
class NetworkSimplex {
 public:
  NetworkSimplex(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                 const std::function<double(Eigen::Index, Eigen::Index)>& cost)
      : na_(a.size()), nb_(b.size()), nodes_(na_ + nb_ + 1), root_(na_ + nb_), cost_fn_(cost) {
    real_arcs_ = static_cast<std::int64_t>(na_) * nb_;
    if (real_arcs_ <= (std::int64_t{1} << 23)) {
      cost_.resize(real_arcs_);
      for (Eigen::Index i = 0; i < na_; ++i)
        for (Eigen::Index j = 0; j < nb_; ++j) cost_[i * nb_ + j] = cost(i, j);
    }
    double max_cost = 0.0;
    if (!cost_.empty()) {
      for (double c : cost_) max_cost = std::max(max_cost, std::abs(c));
    } else {
      for (Eigen::Index i = 0; i < na_; ++i)
        for (Eigen::Index j = 0; j < nb_; ++j) max_cost = std::max(max_cost, std::abs(cost(i, j)));
    }
    art_cost_ = (max_cost + 1.0) * static_cast<double>(nodes_);
    eps_ = 64.0 * std::numeric_limits<double>::epsilon() * art_cost_;

    parent_.assign(nodes_, -1);
    pred_.assign(nodes_, -1);
    up_.assign(nodes_, 0);
    flow_.assign(nodes_, 0.0);
    pi_.assign(nodes_, 0.0);
    in_tree_art_.assign(nodes_, 1);
    art_up_.assign(nodes_, 1);
    stamp_.assign(nodes_, 0);
    for (Eigen::Index v = 0; v < root_; ++v) {
      const double supply = v < na_ ? a[v] : -b[v - na_];
      parent_[v] = root_;
      pred_[v] = real_arcs_ + v;
      if (supply >= 0.0) {
        art_up_[v] = 1;
        up_[v] = 1;
        flow_[v] = supply;
        pi_[v] = -art_cost_;
      } else {
        art_up_[v] = 0;
        up_[v] = 0;
        flow_[v] = -supply;
        pi_[v] = art_cost_;
      }
    }
    in_tree_real_.assign(static_cast<size_t>(real_arcs_), 0);
    block_ = std::max<std::int64_t>(16, static_cast<std::int64_t>(std::sqrt(static_cast<double>(real_arcs_ + root_))));
  }

  int run(std::int64_t max_pivots) {
    int pivots = 0;
    while (find_entering()) {
      if (++pivots > max_pivots) throw SolverFailure("lp oracle: pivot limit exceeded");
      pivot();
    }
    return pivots;
  }

  LpTransport result(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    LpTransport out;
    double primal = 0.0;
    for (Eigen::Index v = 0; v < root_; ++v) {
      if (pred_[v] >= real_arcs_) {
        if (flow_[v] > 1e-12 * (1.0 + a.sum()))
          throw SolverFailure(fmt::format("lp oracle: infeasible marginals (artificial flow {})", flow_[v]));
        continue;
      }
      if (flow_[v] <= 0.0) continue;
      const Eigen::Index i = pred_[v] / nb_;
      const Eigen::Index j = pred_[v] % nb_;
      primal += flow_[v] * arc_cost(pred_[v]);
      out.plan.entries.push_back({i, j, flow_[v]});
    }
    std::sort(out.plan.entries.begin(), out.plan.entries.end(), [](const Coupling& x, const Coupling& y) {
      return x.source != y.source ? x.source < y.source : x.target < y.target;
    });
    // Dual bound: v_j - u_i <= c_ij after shifting sink potentials by the worst violation.
    const double offset = pi_[0];
    double worst = 0.0;
    for (Eigen::Index i = 0; i < na_; ++i)
      for (Eigen::Index j = 0; j < nb_; ++j)
        worst = std::min(worst, arc_cost(i * nb_ + j) + (pi_[i] - offset) - (pi_[na_ + j] - offset));
    double dual = 0.0;
    for (Eigen::Index i = 0; i < na_; ++i) dual -= a[i] * (pi_[i] - offset);
    for (Eigen::Index j = 0; j < nb_; ++j) dual += b[j] * (pi_[na_ + j] - offset + worst);
    out.cost = primal;
    out.duality_gap = primal - dual;
    return out;
  }

 private:
  double arc_cost(std::int64_t id) const {
    if (id >= real_arcs_) return art_cost_;
    if (!cost_.empty()) return cost_[static_cast<size_t>(id)];
    return cost_fn_(id / nb_, id % nb_);
  }

  std::int64_t arc_source(std::int64_t id) const {
    if (id < real_arcs_) return id / nb_;
    const std::int64_t v = id - real_arcs_;
    return art_up_[v] ? v : root_;
  }

  std::int64_t arc_target(std::int64_t id) const {
    if (id < real_arcs_) return na_ + id % nb_;
    const std::int64_t v = id - real_arcs_;
    return art_up_[v] ? root_ : v;
  }

  bool arc_in_tree(std::int64_t id) const {
    return id < real_arcs_ ? in_tree_real_[static_cast<size_t>(id)] != 0 : in_tree_art_[id - real_arcs_] != 0;
  }

  double reduced_cost(std::int64_t id) const {
    return arc_cost(id) + pi_[arc_source(id)] - pi_[arc_target(id)];
  }

  bool find_entering() {
    const std::int64_t total = real_arcs_ + root_;
    double best = -eps_;
    std::int64_t best_id = -1;
    std::int64_t count = 0;
    for (std::int64_t scanned = 0; scanned < total; ++scanned) {
      const std::int64_t id = next_arc_;
      next_arc_ = next_arc_ + 1 == total ? 0 : next_arc_ + 1;
      if (!arc_in_tree(id)) {
        const double rc = reduced_cost(id);
        if (rc < best) {
          best = rc;
          best_id = id;
        }
      }
      if (++count == block_) {
        if (best_id >= 0) break;
        count = 0;
      }
    }
    entering_ = best_id;
    return best_id >= 0;
  }

  void pivot() {
    const std::int64_t first = arc_source(entering_);
    const std::int64_t second = arc_target(entering_);
    // Join node: mark the ancestors of first, walk up from second.
    ++stamp_id_;
    for (std::int64_t u = first; u != -1; u = parent_[u]) stamp_[u] = stamp_id_;
    std::int64_t join = second;
    while (stamp_[join] != stamp_id_) join = parent_[join];

    const double inf = std::numeric_limits<double>::infinity();
    double delta = inf;
    std::int64_t u_out = -1;
    int side = 0;
    for (std::int64_t u = first; u != join; u = parent_[u]) {
      const double d = up_[u] ? flow_[u] : inf;
      if (d < delta) {
        delta = d;
        u_out = u;
        side = 1;
      }
    }
    for (std::int64_t u = second; u != join; u = parent_[u]) {
      const double d = up_[u] ? inf : flow_[u];
      if (d <= delta) {
        delta = d;
        u_out = u;
        side = 2;
      }
    }
    if (side == 0 || !std::isfinite(delta)) throw SolverFailure("lp oracle: unbounded pivot");

    if (delta > 0.0) {
      for (std::int64_t u = first; u != join; u = parent_[u]) flow_[u] += up_[u] ? -delta : delta;
      for (std::int64_t u = second; u != join; u = parent_[u]) flow_[u] += up_[u] ? delta : -delta;
    }

    set_in_tree(pred_[u_out], false);
    set_in_tree(entering_, true);

    // Re-hang the subtree of u_out from the entering arc, reversing the path u_in .. u_out.
    const std::int64_t u_in = side == 1 ? first : second;
    std::int64_t new_parent = side == 1 ? second : first;
    std::int64_t new_arc = entering_;
    char new_up = side == 1 ? 1 : 0;
    double new_flow = delta;
    std::int64_t v = u_in;
    while (true) {
      const std::int64_t old_parent = parent_[v];
      const std::int64_t old_arc = pred_[v];
      const char old_up = up_[v];
      const double old_flow = flow_[v];
      parent_[v] = new_parent;
      pred_[v] = new_arc;
      up_[v] = new_up;
      flow_[v] = new_flow;
      if (v == u_out) break;
      new_parent = v;
      new_arc = old_arc;
      new_up = old_up ? 0 : 1;
      new_flow = old_flow;
      v = old_parent;
    }
    // The re-hung subtree keeps its internal potential differences: shift it as a block.
    const double target = new_up_potential(u_in);
    const double shift = target - pi_[u_in];
    if (shift != 0.0) shift_subtree(u_in, shift);
  }

  double new_up_potential(std::int64_t v) const {
    const double c = arc_cost(pred_[v]);
    return up_[v] ? pi_[parent_[v]] - c : pi_[parent_[v]] + c;
  }

  void shift_subtree(std::int64_t top, double shift) {
    // Nodes whose ancestor chain reaches `top`; memoized with stamps.
    ++stamp_id_;
    const int in_mark = stamp_id_;
    ++stamp_id_;
    const int out_mark = stamp_id_;
    stamp_[top] = in_mark;
    stamp_[root_] = out_mark;
    std::vector<std::int64_t> chain;
    for (std::int64_t v = 0; v < nodes_; ++v) {
      if (stamp_[v] == in_mark || stamp_[v] == out_mark) continue;
      chain.clear();
      std::int64_t u = v;
      while (stamp_[u] != in_mark && stamp_[u] != out_mark) {
        chain.push_back(u);
        u = parent_[u];
      }
      const int mark = stamp_[u];
      for (std::int64_t w : chain) stamp_[w] = mark;
    }
    for (std::int64_t v = 0; v < nodes_; ++v)
      if (stamp_[v] == in_mark) pi_[v] += shift;
  }

  void set_in_tree(std::int64_t id, bool value) {
    if (id < real_arcs_)
      in_tree_real_[static_cast<size_t>(id)] = value ? 1 : 0;
    else
      in_tree_art_[id - real_arcs_] = value ? 1 : 0;
  }

  Eigen::Index na_, nb_;
  std::int64_t nodes_, root_;
  std::int64_t real_arcs_ = 0;
  const std::function<double(Eigen::Index, Eigen::Index)>& cost_fn_;
  std::vector<double> cost_;
  double art_cost_ = 0.0;
  double eps_ = 0.0;
  std::vector<std::int64_t> parent_, pred_;
  std::vector<char> up_;
  std::vector<double> flow_, pi_;
  std::vector<char> in_tree_real_, in_tree_art_, art_up_;
  std::vector<int> stamp_;
  int stamp_id_ = 0;
  std::int64_t block_ = 16;
  std::int64_t next_arc_ = 0;
  std::int64_t entering_ = -1;
};

}  // namespace

Eigen::VectorXd CouplingPlan::source_marginal(Eigen::Index n) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (const auto& e : entries) out[e.source] += e.weight;
  return out;
}

Eigen::VectorXd CouplingPlan::target_marginal(Eigen::Index n) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (const auto& e : entries) out[e.target] += e.weight;
  return out;
}

LpTransport solve_transport_lp(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                               const std::function<double(Eigen::Index, Eigen::Index)>& cost) {
  if (a.size() == 0 || b.size() == 0) throw InvalidArgument("lp oracle: empty measure");
  if (!a.allFinite() || !b.allFinite() || a.minCoeff() < 0.0 || b.minCoeff() < 0.0)
    throw InvalidArgument("lp oracle: masses must be finite and nonnegative");
  const double sa = a.sum();
  const double sb = b.sum();
  if (!(sa > 0.0) || std::abs(sa - sb) > 1e-9 * std::max(sa, sb))
    throw InvalidArgument(fmt::format("lp oracle: infeasible marginals (total masses {} and {})", sa, sb));
  const Eigen::VectorXd b_balanced = b * (sa / sb);
  NetworkSimplex solver(a, b_balanced, cost);
  const std::int64_t cap = 100 * (a.size() + b.size()) * static_cast<std::int64_t>(a.size() + b.size()) + 1000;
  const int pivots = solver.run(cap);
  LpTransport out = solver.result(a, b_balanced);
  out.pivots = pivots;
  return out;
}

LpW2 lp_w2_oracle(const ManifoldGrid& grid, const ScalarField& mu0, const ScalarField& mu1) {
  grid.check_shape(mu0, "lp_w2_oracle");
  grid.check_shape(mu1, "lp_w2_oracle");
  if (grid.size() > kLpOracleMaxNodes)
    throw InvalidArgument(fmt::format("lp oracle: {} nodes exceed the limit of {}", grid.size(), kLpOracleMaxNodes));
  const Eigen::VectorXd a = mu0.cwiseProduct(grid.weights());
  const Eigen::VectorXd b = mu1.cwiseProduct(grid.weights());
  const LpTransport t = solve_transport_lp(a, b, [&](Eigen::Index i, Eigen::Index j) {
    const double d = geodesic_distance(grid, i, j);
    return d * d;
  });
  return {std::sqrt(std::max(t.cost, 0.0)), t.duality_gap, t.pivots, t.plan};
}

}  // namespace otflow
