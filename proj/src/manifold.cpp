#include "otflow/manifold.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "otflow/error.hpp"

namespace otflow {
namespace {

using SparseRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplets = std::vector<Eigen::Triplet<double>>;

constexpr int kMinResolution = 8;

// Trigonometric collocation derivative on n equispaced points of a period-`length` axis.
Eigen::MatrixXd spectral_derivative(int n, double length) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  const double pi = std::numbers::pi;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const int k = i - j;
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      const double arg = pi * k / n;
      const double entry = (n % 2 == 0) ? sign / std::tan(arg) : sign / std::sin(arg);
      d(i, j) = (pi / length) * entry;
    }
    // Negative row sum on the diagonal so constants are annihilated to roundoff.
    d(i, i) = -d.row(i).sum();
  }
  return d;
}

// Dense 1D operator acting along the row axis (rows x rows) or the column axis (cols x cols).
SparseRow kron_rows(const Eigen::MatrixXd& d, int rows, int cols) {
  Triplets t;
  t.reserve(static_cast<size_t>(rows) * rows * cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < rows; ++j)
      if (d(i, j) != 0.0)
        for (int k = 0; k < cols; ++k) t.emplace_back(i * cols + k, j * cols + k, d(i, j));
  SparseRow m(rows * cols, rows * cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseRow kron_cols(const Eigen::MatrixXd& d, int rows, int cols) {
  Triplets t;
  t.reserve(static_cast<size_t>(rows) * cols * cols);
  for (int r = 0; r < rows; ++r)
    for (int i = 0; i < cols; ++i)
      for (int j = 0; j < cols; ++j)
        if (d(i, j) != 0.0) t.emplace_back(r * cols + i, r * cols + j, d(i, j));
  SparseRow m(rows * cols, rows * cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

int parse_int(std::string_view s, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidArgument(fmt::format("bad manifold spec '{}'", whole));
  return value;
}

double parse_double(std::string_view s, std::string_view whole) {
  try {
    size_t used = 0;
    const std::string str(s);
    const double v = std::stod(str, &used);
    if (used != str.size()) throw InvalidArgument("");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(fmt::format("bad manifold spec '{}'", whole));
  }
}

}  // namespace

std::string_view to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::circle:
      return "circle";
    case ManifoldKind::torus2:
      return "torus2";
    case ManifoldKind::sphere2:
      return "sphere2";
  }
  return "unknown";
}

ManifoldSpec ManifoldSpec::circle(int n, double length) { return {ManifoldKind::circle, 1, n, length}; }
ManifoldSpec ManifoldSpec::torus(int nx, int ny, double side) { return {ManifoldKind::torus2, nx, ny, side}; }
ManifoldSpec ManifoldSpec::sphere(int ntheta, int nphi) { return {ManifoldKind::sphere2, ntheta, nphi, 1.0}; }

ManifoldSpec ManifoldSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw InvalidArgument(fmt::format("bad manifold spec '{}'", text));
  const std::string_view kind = text.substr(0, colon);
  std::string_view rest = text.substr(colon + 1);
  double side = 1.0;
  if (const auto c2 = rest.find(':'); c2 != std::string_view::npos) {
    side = parse_double(rest.substr(c2 + 1), text);
    rest = rest.substr(0, c2);
  }
  int a = 0;
  int b = 0;
  if (const auto x = rest.find('x'); x != std::string_view::npos) {
    a = parse_int(rest.substr(0, x), text);
    b = parse_int(rest.substr(x + 1), text);
  } else {
    a = parse_int(rest, text);
  }
  ManifoldSpec spec;
  if (kind == "circle") {
    if (b != 0) throw InvalidArgument(fmt::format("circle takes one resolution: '{}'", text));
    spec = circle(a, side);
  } else if (kind == "torus" || kind == "torus2") {
    spec = torus(a, b == 0 ? a : b, side);
  } else if (kind == "sphere" || kind == "sphere2") {
    if (side != 1.0) throw InvalidArgument("sphere2 uses unit radius only");
    spec = sphere(a, b == 0 ? 2 * a : b);
  } else {
    throw InvalidArgument(fmt::format("unsupported manifold kind '{}'", kind));
  }
  spec.validate();
  return spec;
}

void ManifoldSpec::validate() const {
  if (!(side > 0.0) || !std::isfinite(side)) throw InvalidArgument("side length must be positive");
  switch (kind) {
    case ManifoldKind::circle:
      if (rows != 1) throw InvalidArgument("circle grid has a single row");
      if (cols < kMinResolution) throw InvalidArgument(fmt::format("resolution {} below minimum {}", cols, kMinResolution));
      break;
    case ManifoldKind::torus2:
      if (rows < kMinResolution || cols < kMinResolution)
        throw InvalidArgument(fmt::format("resolution {}x{} below minimum {}", rows, cols, kMinResolution));
      break;
    case ManifoldKind::sphere2:
      if (side != 1.0) throw InvalidArgument("sphere2 uses unit radius only");
      if (rows < kMinResolution || cols < kMinResolution)
        throw InvalidArgument(fmt::format("resolution {}x{} below minimum {}", rows, cols, kMinResolution));
      if (cols % 2 != 0) throw InvalidArgument("sphere2 needs an even longitude count");
      break;
    default:
      throw InvalidArgument("unsupported manifold kind");
  }
}

std::string ManifoldSpec::str() const {
  switch (kind) {
    case ManifoldKind::circle:
      return side == 1.0 ? fmt::format("circle:{}", cols) : fmt::format("circle:{}:{}", cols, side);
    case ManifoldKind::torus2:
      return side == 1.0 ? fmt::format("torus:{}x{}", rows, cols) : fmt::format("torus:{}x{}:{}", rows, cols, side);
    case ManifoldKind::sphere2:
      return fmt::format("sphere:{}x{}", rows, cols);
  }
  return "unknown";
}

ManifoldGrid::ManifoldGrid(const ManifoldSpec& spec) : spec_(spec) {
  spec_.validate();
  if (spec_.kind == ManifoldKind::sphere2)
    build_sphere();
  else
    build_flat();
  finish();
}

void ManifoldGrid::build_flat() {
  const int rows = spec_.rows;
  const int cols = spec_.cols;
  const double length = spec_.side;
  const Eigen::Index n = static_cast<Eigen::Index>(rows) * cols;
  if (spec_.kind == ManifoldKind::circle) {
    dim_ = 1;
    volume_ = length;
    nodes_.resize(n, 1);
    for (int k = 0; k < cols; ++k) nodes_(k, 0) = length * k / cols;
    partial_.push_back(kron_cols(spectral_derivative(cols, length), rows, cols));
    min_spacing_ = length / cols;
    row_weights_ = Eigen::VectorXd::Constant(1, length / cols);
  } else {
    dim_ = 2;
    volume_ = length * length;
    nodes_.resize(n, 2);
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < cols; ++k) {
        nodes_(i * cols + k, 0) = length * i / rows;
        nodes_(i * cols + k, 1) = length * k / cols;
      }
    partial_.push_back(kron_rows(spectral_derivative(rows, length), rows, cols));
    partial_.push_back(kron_cols(spectral_derivative(cols, length), rows, cols));
    min_spacing_ = std::min(length / rows, length / cols);
    row_weights_ = Eigen::VectorXd::Constant(rows, (length / rows) * (length / cols));
  }
  ricci_lambda_ = 0.0;
  partial_odd_ = partial_;
  metric_.assign(dim_, Eigen::VectorXd::Ones(n));
  inverse_metric_ = metric_;

  // Faces coincide with nodes, one block per axis.
  const double w = row_weights_[0];
  flux_.faces = dim_ * n;
  flux_.weights = Eigen::VectorXd::Constant(flux_.faces, w);
  flux_.inverse_metric = Eigen::VectorXd::Ones(flux_.faces);
  Triplets diff;
  Triplets interp;
  for (int a = 0; a < dim_; ++a) {
    for (int r = 0; r < partial_[a].outerSize(); ++r)
      for (SparseRow::InnerIterator it(partial_[a], r); it; ++it) diff.emplace_back(a * n + r, it.col(), it.value());
    for (Eigen::Index i = 0; i < n; ++i) interp.emplace_back(a * n + i, i, 1.0);
  }
  flux_.difference = SparseRow(flux_.faces, n);
  flux_.difference.setFromTriplets(diff.begin(), diff.end());
  flux_.to_faces = SparseRow(flux_.faces, n);
  flux_.to_faces.setFromTriplets(interp.begin(), interp.end());
  flux_.to_nodes = SparseRow(flux_.faces, flux_.faces);
  flux_.to_nodes.setIdentity();
}

void ManifoldGrid::build_sphere() {
  const int rows = spec_.rows;
  const int cols = spec_.cols;
  const Eigen::Index n = static_cast<Eigen::Index>(rows) * cols;
  const double pi = std::numbers::pi;
  const double dtheta = pi / rows;
  const double dphi = 2.0 * pi / cols;
  dim_ = 2;
  ricci_lambda_ = 1.0;
  volume_ = 4.0 * pi;
  min_spacing_ = std::min(dtheta, dphi);

  nodes_.resize(n, 2);
  row_weights_.resize(rows);
  Eigen::VectorXd sin2(n);
  for (int j = 0; j < rows; ++j) {
    const double theta = (j + 0.5) * dtheta;
    // Exact band areas: the weights sum to 4 pi and are proportional to sin(theta).
    row_weights_[j] = 2.0 * dphi * std::sin(theta) * std::sin(0.5 * dtheta);
    for (int k = 0; k < cols; ++k) {
      nodes_(j * cols + k, 0) = theta;
      nodes_(j * cols + k, 1) = k * dphi;
      sin2[j * cols + k] = std::sin(theta) * std::sin(theta);
    }
  }

  auto index = [cols](int j, int k) { return j * cols + ((k % cols) + cols) % cols; };
  for (int parity = 0; parity < 2; ++parity) {
    const double reflect = parity == 0 ? 1.0 : -1.0;
    Triplets t;
    for (int j = 0; j < rows; ++j) {
      for (int k = 0; k < cols; ++k) {
        const int row = index(j, k);
        const double c = 0.5 / dtheta;
        if (j + 1 < rows)
          t.emplace_back(row, index(j + 1, k), c);
        else
          t.emplace_back(row, index(rows - 1, k + cols / 2), reflect * c);
        if (j > 0)
          t.emplace_back(row, index(j - 1, k), -c);
        else
          t.emplace_back(row, index(0, k + cols / 2), -reflect * c);
      }
    }
    SparseRow g(n, n);
    g.setFromTriplets(t.begin(), t.end());
    (parity == 0 ? partial_ : partial_odd_).push_back(std::move(g));
  }
  Triplets t;
  for (int j = 0; j < rows; ++j)
    for (int k = 0; k < cols; ++k) {
      t.emplace_back(index(j, k), index(j, k + 1), 0.5 / dphi);
      t.emplace_back(index(j, k), index(j, k - 1), -0.5 / dphi);
    }
  SparseRow gphi(n, n);
  gphi.setFromTriplets(t.begin(), t.end());
  partial_.push_back(gphi);
  partial_odd_.push_back(gphi);

  metric_ = {Eigen::VectorXd::Ones(n), sin2};
  inverse_metric_ = {Eigen::VectorXd::Ones(n), sin2.cwiseInverse()};

  // Theta faces between rows j and j+1 (none across a pole), then phi faces
  // between columns k and k+1. Face weights are the areas of the dual cells.
  const Eigen::Index theta_faces = static_cast<Eigen::Index>(rows - 1) * cols;
  flux_.faces = theta_faces + n;
  flux_.weights.resize(flux_.faces);
  flux_.inverse_metric.resize(flux_.faces);
  Triplets diff;
  Triplets to_faces;
  Triplets to_nodes;
  for (int j = 0; j + 1 < rows; ++j) {
    const double s_face = std::sin((j + 1) * dtheta);
    for (int k = 0; k < cols; ++k) {
      const Eigen::Index f = static_cast<Eigen::Index>(j) * cols + k;
      flux_.weights[f] = dphi * dtheta * s_face;
      flux_.inverse_metric[f] = 1.0;
      diff.emplace_back(f, index(j + 1, k), 1.0 / dtheta);
      diff.emplace_back(f, index(j, k), -1.0 / dtheta);
      to_faces.emplace_back(f, index(j + 1, k), 0.5);
      to_faces.emplace_back(f, index(j, k), 0.5);
      to_nodes.emplace_back(index(j, k), f, 0.5);
      to_nodes.emplace_back(index(j + 1, k), f, 0.5);
    }
  }
  for (int j = 0; j < rows; ++j) {
    for (int k = 0; k < cols; ++k) {
      const Eigen::Index f = theta_faces + index(j, k);
      flux_.weights[f] = row_weights_[j];
      flux_.inverse_metric[f] = 1.0 / sin2[index(j, k)];
      diff.emplace_back(f, index(j, k + 1), 1.0 / dphi);
      diff.emplace_back(f, index(j, k), -1.0 / dphi);
      to_faces.emplace_back(f, index(j, k + 1), 0.5);
      to_faces.emplace_back(f, index(j, k), 0.5);
      to_nodes.emplace_back(n + index(j, k), f, 0.5);
      to_nodes.emplace_back(n + index(j, k + 1), f, 0.5);
    }
  }
  flux_.difference = SparseRow(flux_.faces, n);
  flux_.difference.setFromTriplets(diff.begin(), diff.end());
  flux_.to_faces = SparseRow(flux_.faces, n);
  flux_.to_faces.setFromTriplets(to_faces.begin(), to_faces.end());
  flux_.to_nodes = SparseRow(2 * n, flux_.faces);
  flux_.to_nodes.setFromTriplets(to_nodes.begin(), to_nodes.end());
}

void ManifoldGrid::finish() {
  const Eigen::Index n = static_cast<Eigen::Index>(spec_.rows) * spec_.cols;
  weights_.resize(n);
  for (int i = 0; i < spec_.rows; ++i) weights_.segment(static_cast<Eigen::Index>(i) * spec_.cols, spec_.cols).setConstant(row_weights_[i]);

  // div X = -W^{-1} sum_a G_a^T W X^a. With the sign-flipping pole reflection
  // for the theta component this is consistent on the sphere; on flat grids it
  // is the exact negative adjoint of the gradient.
  divergence_.clear();
  for (int a = 0; a < dim_; ++a) {
    divergence_.push_back(
        -(weights_.cwiseInverse().asDiagonal() * SparseRow(partial_odd_[a].transpose()) * weights_.asDiagonal()));
  }
  face_divergence_ = -(weights_.cwiseInverse().asDiagonal() * SparseRow(flux_.difference.transpose()) *
                       flux_.weights.asDiagonal());
  laplacian_ = face_divergence_ * (flux_.inverse_metric.asDiagonal() * flux_.difference);
  laplacian_.prune(0.0);
  // Exact zero row sums: the Laplacian is applied in difference form.
  for (Eigen::Index r = 0; r < laplacian_.outerSize(); ++r) {
    double off = 0.0;
    for (SparseRow::InnerIterator it(laplacian_, r); it; ++it)
      if (it.col() != r) off += it.value();
    laplacian_.coeffRef(r, r) = -off;
  }
  spectrum_ = LaplaceSpectrum(spec_.rows, spec_.cols, row_weights_,
                              [this](const Eigen::VectorXd& f) -> Eigen::VectorXd { return laplacian_ * f; });
}

Eigen::VectorXd ManifoldGrid::partial(int axis, const ScalarField& f) const {
  check_shape(f, "partial");
  if (axis < 0 || axis >= dim_) throw InvalidArgument("axis out of range");
  return partial_[axis] * f;
}

ScalarField ManifoldGrid::inner(const VectorField& x, const VectorField& y) const {
  check_shape(x, "inner");
  check_shape(y, "inner");
  ScalarField out = ScalarField::Zero(size());
  for (int a = 0; a < dim_; ++a) out.array() += metric_[a].array() * x[a].array() * y[a].array();
  return out;
}

double ManifoldGrid::integrate(const ScalarField& f) const {
  check_shape(f, "integrate");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) sum += f[i] * weights_[i];
  return sum;
}

double ManifoldGrid::norm(const ScalarField& f) const { return std::sqrt(integrate(f.cwiseAbs2())); }

void ManifoldGrid::check_shape(const ScalarField& f, const char* what) const {
  if (f.size() != size())
    throw InvalidArgument(fmt::format("{}: field has {} nodes, grid has {}", what, f.size(), size()));
}

void ManifoldGrid::check_shape(const VectorField& x, const char* what) const {
  if (x.dim() != dim_ || x.size() != size())
    throw InvalidArgument(fmt::format("{}: vector field shape {}x{} does not match grid {}x{}", what, x.dim(),
                                      x.size(), dim_, size()));
}

ManifoldGrid build_grid(const ManifoldSpec& spec) { return ManifoldGrid(spec); }

VectorField gradient(const ManifoldGrid& grid, const ScalarField& f) {
  grid.check_shape(f, "gradient");
  VectorField out;
  for (int a = 0; a < grid.dim(); ++a)
    out.components.push_back(grid.inverse_metric(a).cwiseProduct(grid.partial(a, f)));
  return out;
}

ScalarField divergence(const ManifoldGrid& grid, const VectorField& x) {
  grid.check_shape(x, "divergence");
  ScalarField out = ScalarField::Zero(grid.size());
  for (int a = 0; a < grid.dim(); ++a) out += grid.divergence_[a] * x[a];
  return out;
}

ScalarField laplacian(const ManifoldGrid& grid, const ScalarField& f) {
  grid.check_shape(f, "laplacian");
  // sum_j L_ij (f_j - f_i): constants are annihilated exactly.
  const auto& l = grid.laplacian_matrix();
  ScalarField out(f.size());
  for (Eigen::Index r = 0; r < l.outerSize(); ++r) {
    double acc = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(l, r); it; ++it)
      if (it.col() != r) acc += it.value() * (f[it.col()] - f[r]);
    out[r] = acc;
  }
  return out;
}

Eigen::VectorXd face_gradient(const ManifoldGrid& grid, const ScalarField& f) {
  grid.check_shape(f, "face_gradient");
  const FluxOperator& flux = grid.flux();
  return flux.inverse_metric.cwiseProduct(flux.difference * f);
}

ScalarField face_divergence(const ManifoldGrid& grid, const Eigen::VectorXd& flux) {
  if (flux.size() != grid.flux().faces)
    throw InvalidArgument(fmt::format("face_divergence: flux has {} faces, grid has {}", flux.size(), grid.flux().faces));
  return grid.face_divergence_ * flux;
}

ScalarField weighted_laplacian(const ManifoldGrid& grid, const ScalarField& rho, const ScalarField& f) {
  grid.check_shape(rho, "weighted_laplacian");
  const Eigen::VectorXd rho_face = grid.flux().to_faces * rho;
  return face_divergence(grid, rho_face.cwiseProduct(face_gradient(grid, f)));
}

double dirichlet_energy(const ManifoldGrid& grid, const ScalarField& rho, const ScalarField& f) {
  grid.check_shape(rho, "dirichlet_energy");
  grid.check_shape(f, "dirichlet_energy");
  const FluxOperator& flux = grid.flux();
  const Eigen::VectorXd d = flux.difference * f;
  const Eigen::VectorXd rho_face = flux.to_faces * rho;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < flux.faces; ++i) sum += flux.weights[i] * flux.inverse_metric[i] * rho_face[i] * d[i] * d[i];
  return sum;
}

ScalarField hessian_norm_sq(const ManifoldGrid& grid, const ScalarField& f) {
  grid.check_shape(f, "hessian_norm_sq");
  const auto& d = grid.partial_;
  if (grid.is_flat()) {
    ScalarField out = ScalarField::Zero(grid.size());
    std::vector<Eigen::VectorXd> first;
    for (int b = 0; b < grid.dim(); ++b) first.push_back(d[b] * f);
    for (int a = 0; a < grid.dim(); ++a)
      for (int b = 0; b < grid.dim(); ++b) out += (d[a] * first[b]).cwiseAbs2();
    return out;
  }
  // Round metric diag(1, sin^2 theta): Christoffel symbols
  // Gamma^theta_{phi phi} = -sin cos, Gamma^phi_{theta phi} = cos / sin.
  const Eigen::VectorXd f_t = d[0] * f;
  const Eigen::VectorXd f_p = d[1] * f;
  const Eigen::VectorXd f_tt = grid.partial_odd_[0] * f_t;
  const Eigen::VectorXd f_tp = d[1] * f_t;
  const Eigen::VectorXd f_pp = d[1] * f_p;
  ScalarField out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double theta = grid.nodes()(i, 0);
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double h_tt = f_tt[i];
    const double h_tp = f_tp[i] - (c / s) * f_p[i];
    const double h_pp = f_pp[i] + s * c * f_t[i];
    out[i] = h_tt * h_tt + 2.0 * h_tp * h_tp / (s * s) + h_pp * h_pp / (s * s * s * s);
  }
  return out;
}

ScalarField ricci_quadratic(const ManifoldGrid& grid, const VectorField& x) {
  grid.check_shape(x, "ricci_quadratic");
  if (grid.is_flat()) return ScalarField::Zero(grid.size());
  // Unit round sphere: Ric = g.
  return grid.inner(x, x);
}

ScalarField bochner_residual(const ManifoldGrid& grid, const ScalarField& f) {
  grid.check_shape(f, "bochner_residual");
  const VectorField grad_f = gradient(grid, f);
  const VectorField grad_lap_f = gradient(grid, laplacian(grid, f));
  const ScalarField lap_energy = laplacian(grid, grid.inner(grad_f, grad_f));
  return grid.inner(grad_f, grad_lap_f) - 0.5 * lap_energy + hessian_norm_sq(grid, f) + ricci_quadratic(grid, grad_f);
}

double integrate(const ManifoldGrid& grid, const ScalarField& f) { return grid.integrate(f); }

ScalarField shift_nodes(const ManifoldGrid& grid, const ScalarField& f, int shift_rows, int shift_cols) {
  grid.check_shape(f, "shift_nodes");
  if (!grid.is_flat()) throw InvalidArgument("shift_nodes needs a flat grid");
  const int rows = grid.rows();
  const int cols = grid.cols();
  ScalarField out(f.size());
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) {
      const int ti = ((i + shift_rows) % rows + rows) % rows;
      const int tk = ((k + shift_cols) % cols + cols) % cols;
      out[ti * cols + tk] = f[i * cols + k];
    }
  return out;
}

double geodesic_distance(const ManifoldGrid& grid, Eigen::Index i, Eigen::Index j) {
  const auto& x = grid.nodes();
  switch (grid.kind()) {
    case ManifoldKind::circle:
    case ManifoldKind::torus2: {
      const double length = grid.spec().side;
      double sq = 0.0;
      for (int a = 0; a < grid.dim(); ++a) {
        double delta = std::abs(x(i, a) - x(j, a));
        delta = std::min(delta, length - delta);
        sq += delta * delta;
      }
      return std::sqrt(sq);
    }
    case ManifoldKind::sphere2: {
      auto unit = [&](Eigen::Index k) {
        const double t = x(k, 0);
        const double p = x(k, 1);
        return Eigen::Vector3d(std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t));
      };
      const double chord = (unit(i) - unit(j)).norm();
      return 2.0 * std::asin(std::min(1.0, 0.5 * chord));
    }
  }
  return 0.0;
}

}  // namespace otflow
