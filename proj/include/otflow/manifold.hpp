#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "otflow/spectrum.hpp"

namespace otflow {

/// Per-node real values.
using ScalarField = Eigen::VectorXd;

/// Per-node tangent vectors, stored as contravariant components in the chart
/// frame (one Eigen vector per coordinate axis). Metric coefficients are applied
/// by the grid operations, never by callers.
struct VectorField {
  std::vector<Eigen::VectorXd> components;

  VectorField() = default;
  VectorField(int dim, Eigen::Index nodes) : components(dim, Eigen::VectorXd::Zero(nodes)) {}

  int dim() const { return static_cast<int>(components.size()); }
  Eigen::Index size() const { return components.empty() ? 0 : components.front().size(); }
  Eigen::VectorXd& operator[](int a) { return components[a]; }
  const Eigen::VectorXd& operator[](int a) const { return components[a]; }
};

/// Conservative flux discretization: scalar values live at nodes, fluxes
/// (momentum components) live at faces. The face gradient and the face
/// divergence are exact negative adjoints under the node and face weights, and
/// the grid Laplacian is their composition.
///
/// On flat grids faces coincide with nodes (one copy per axis) and the
/// differences are the spectral derivative matrices. On the sphere faces sit
/// halfway between neighbouring nodes (no face crosses a pole) and the
/// differences are two-point finite differences.
struct FluxOperator {
  using SparseRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  Eigen::Index faces = 0;
  /// faces x nodes: covariant derivative component d_a f at each face.
  SparseRow difference;
  /// Quadrature weight of each face.
  Eigen::VectorXd weights;
  /// g^{aa} at each face (its reciprocal is the face metric coefficient).
  Eigen::VectorXd inverse_metric;
  /// faces x nodes: interpolation of nodal values onto faces.
  SparseRow to_faces;
  /// (dim * nodes) x faces: average of face components onto nodes, stacked by axis.
  SparseRow to_nodes;
};

enum class ManifoldKind { circle, torus2, sphere2 };

std::string_view to_string(ManifoldKind kind);

struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::circle;
  /// Lattice rows (axis 0): 1 for the circle, x for the torus, colatitude for the sphere.
  int rows = 1;
  /// Lattice columns (axis 1, periodic): x for the circle, y for the torus, longitude for the sphere.
  int cols = 64;
  /// Circle length / torus side. Ignored for the unit sphere.
  double side = 1.0;

  static ManifoldSpec circle(int n, double length = 1.0);
  static ManifoldSpec torus(int nx, int ny, double side = 1.0);
  static ManifoldSpec sphere(int ntheta, int nphi);

  /// Parses "circle:64", "circle:64:2.0", "torus:32", "torus:32x48", "sphere:48x96".
  static ManifoldSpec parse(std::string_view text);

  /// Throws InvalidArgument when the spec cannot produce a valid grid.
  void validate() const;

  std::string str() const;
};

/// Discretized compact manifold with its differential operators.
///
/// Nodes are laid out row-major on a rows x cols lattice whose column axis is
/// periodic. On the circle and torus the first derivatives are trigonometric
/// (spectral) collocation matrices; on the sphere they are centered second
/// order differences in (theta, phi) with pole rows excluded and neighbours
/// across a pole taken from the antipodal longitude.
///
/// Instances are immutable; every operation is a pure const function.
class ManifoldGrid {
 public:
  explicit ManifoldGrid(const ManifoldSpec& spec);

  const ManifoldSpec& spec() const { return spec_; }
  ManifoldKind kind() const { return spec_.kind; }
  int rows() const { return spec_.rows; }
  int cols() const { return spec_.cols; }
  Eigen::Index size() const { return weights_.size(); }
  int dim() const { return dim_; }
  double ricci_lambda() const { return ricci_lambda_; }
  double volume() const { return volume_; }
  bool is_flat() const { return spec_.kind != ManifoldKind::sphere2; }

  /// Node coordinates, one row per node: x (circle), (x, y) (torus), (theta, phi) (sphere).
  const Eigen::MatrixXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  /// Smallest coordinate spacing along any axis (arc length).
  double min_spacing() const { return min_spacing_; }

  /// Metric coefficient g_aa at every node (the metric is diagonal in the chart).
  const Eigen::VectorXd& metric(int axis) const { return metric_[axis]; }
  const Eigen::VectorXd& inverse_metric(int axis) const { return inverse_metric_[axis]; }

  /// Partial derivative along a chart axis of a scalar field.
  Eigen::VectorXd partial(int axis, const ScalarField& f) const;

  /// Assembled Laplacian: face_divergence(face_gradient(.)).
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& laplacian_matrix() const { return laplacian_; }

  const FluxOperator& flux() const { return flux_; }

  /// Eigenbasis of the grid Laplacian.
  const LaplaceSpectrum& spectrum() const { return spectrum_; }

  /// Pointwise g(X, Y).
  ScalarField inner(const VectorField& x, const VectorField& y) const;

  /// Sum of f * weight in node order.
  double integrate(const ScalarField& f) const;

  /// Weighted L2 norm sqrt(integrate(f^2)).
  double norm(const ScalarField& f) const;

  void check_shape(const ScalarField& f, const char* what) const;
  void check_shape(const VectorField& x, const char* what) const;

 private:
  friend ScalarField divergence(const ManifoldGrid&, const VectorField&);
  friend ScalarField hessian_norm_sq(const ManifoldGrid&, const ScalarField&);
  friend ScalarField face_divergence(const ManifoldGrid&, const Eigen::VectorXd&);

  using SparseRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  void build_flat();
  void build_sphere();
  void finish();

  ManifoldSpec spec_;
  int dim_ = 1;
  double ricci_lambda_ = 0.0;
  double volume_ = 0.0;
  double min_spacing_ = 0.0;
  Eigen::MatrixXd nodes_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd row_weights_;
  std::vector<Eigen::VectorXd> metric_;
  std::vector<Eigen::VectorXd> inverse_metric_;
  std::vector<SparseRow> partial_;
  // Same as partial_ except that values reflected across a pole change sign;
  // used to differentiate the theta component of a vector on the sphere.
  std::vector<SparseRow> partial_odd_;
  FluxOperator flux_;
  std::vector<SparseRow> divergence_;
  SparseRow face_divergence_;
  SparseRow laplacian_;
  LaplaceSpectrum spectrum_;
};

ManifoldGrid build_grid(const ManifoldSpec& spec);

/// Node-collocated gradient and divergence. On flat grids these are exact
/// negative adjoints and compose to the Laplacian; on the sphere both are
/// second-order consistent and agree with the flux pair up to truncation error.
VectorField gradient(const ManifoldGrid& grid, const ScalarField& f);
ScalarField divergence(const ManifoldGrid& grid, const VectorField& x);

/// Self-adjoint grid Laplacian (flux form).
ScalarField laplacian(const ManifoldGrid& grid, const ScalarField& f);

/// Contravariant gradient components at faces.
Eigen::VectorXd face_gradient(const ManifoldGrid& grid, const ScalarField& f);

/// Divergence of a face flux (contravariant components).
ScalarField face_divergence(const ManifoldGrid& grid, const Eigen::VectorXd& flux);

/// div(rho grad f) in flux form, rho interpolated to faces.
ScalarField weighted_laplacian(const ManifoldGrid& grid, const ScalarField& rho, const ScalarField& f);

/// Integral of rho |grad f|^2 in flux form; equals -integral(f * weighted_laplacian(rho, f)).
double dirichlet_energy(const ManifoldGrid& grid, const ScalarField& rho, const ScalarField& f);

/// Squared norm of the covariant Hessian at every node.
ScalarField hessian_norm_sq(const ManifoldGrid& grid, const ScalarField& f);

/// Ric(X, X) at every node.
ScalarField ricci_quadratic(const ManifoldGrid& grid, const VectorField& x);

/// <grad f, grad lap f> - 1/2 lap |grad f|^2 + |Hess f|^2 + Ric(grad f, grad f).
ScalarField bochner_residual(const ManifoldGrid& grid, const ScalarField& f);

double integrate(const ManifoldGrid& grid, const ScalarField& f);

/// Evaluates fn(coordinates) at every node.
template <class Fn>
ScalarField sample(const ManifoldGrid& grid, Fn&& fn) {
  ScalarField out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) out[i] = fn(grid.nodes().row(i));
  return out;
}

/// Cyclic shift by whole nodes on a flat grid: out(i0 + s0, i1 + s1) = f(i0, i1).
ScalarField shift_nodes(const ManifoldGrid& grid, const ScalarField& f, int shift_rows, int shift_cols);

/// Exact geodesic distance between two nodes (arc, minimum image, great circle).
double geodesic_distance(const ManifoldGrid& grid, Eigen::Index i, Eigen::Index j);

}  // namespace otflow
