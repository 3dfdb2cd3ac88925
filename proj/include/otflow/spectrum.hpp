#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace otflow {

/// Eigen-decomposition of a grid Laplacian that is block diagonal in a real
/// Fourier basis along the periodic column axis.
///
/// Fields are stored row-major on a rows x cols lattice with the column axis
/// periodic. The Laplacian must be self-adjoint for the weighted inner product
/// sum_i w_row(i) f_i g_i and must map (row profile) x (Fourier column mode)
/// onto the same Fourier column mode. Under these assumptions the operator is
/// diagonalized by a dense symmetric eigensolve per column mode.
///
/// Coefficients returned by forward() are orthonormal for the weighted inner
/// product: sum_n w_n f_n g_n == forward(f).dot(forward(g)).
class LaplaceSpectrum {
 public:
  using Apply = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  LaplaceSpectrum() = default;
  LaplaceSpectrum(int rows, int cols, const Eigen::VectorXd& row_weights, const Apply& laplacian);

  int size() const { return rows_ * cols_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& field) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd& coeffs) const;

  /// Eigenvalues (<= 0), indexed like the coefficient vector.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

  /// True for coefficients whose eigenvalue is numerically zero.
  const std::vector<bool>& null_mask() const { return null_mask_; }

  /// Index of the coefficient carrying the constant field.
  int constant_index() const { return constant_index_; }

  /// Largest |eigenvalue|.
  double spectral_radius() const { return spectral_radius_; }

  /// Evaluates g(Laplacian) f through the eigenbasis.
  template <class Fn>
  Eigen::VectorXd apply_function(const Eigen::VectorXd& field, Fn&& g) const {
    Eigen::VectorXd c = forward(field);
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= g(eigenvalues_[i], static_cast<int>(i));
    return inverse(c);
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  Eigen::VectorXd sqrt_w_;                 // per row
  Eigen::MatrixXd fourier_;                // cols x cols, orthonormal columns
  std::vector<Eigen::MatrixXd> row_basis_; // per column mode, rows x rows
  Eigen::VectorXd eigenvalues_;
  std::vector<bool> null_mask_;
  int constant_index_ = 0;
  double spectral_radius_ = 0.0;
};

/// Orthonormal real Fourier basis on n periodic points (columns: constant,
/// cos/sin pairs, and the alternating mode when n is even).
Eigen::MatrixXd real_fourier_basis(int n);

}  // namespace otflow
