#include "otflow/spectrum.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "otflow/error.hpp"

namespace otflow {

Eigen::MatrixXd real_fourier_basis(int n) {
  Eigen::MatrixXd q(n, n);
  const double two_pi = 2.0 * std::numbers::pi;
  q.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  int col = 1;
  for (int m = 1; 2 * m < n; ++m) {
    for (int k = 0; k < n; ++k) {
      const double angle = two_pi * m * k / n;
      q(k, col) = std::sqrt(2.0 / n) * std::cos(angle);
      q(k, col + 1) = std::sqrt(2.0 / n) * std::sin(angle);
    }
    col += 2;
  }
  if (n % 2 == 0) {
    for (int k = 0; k < n; ++k) q(k, col) = (k % 2 == 0 ? 1.0 : -1.0) / std::sqrt(static_cast<double>(n));
    ++col;
  }
  return q;
}

LaplaceSpectrum::LaplaceSpectrum(int rows, int cols, const Eigen::VectorXd& row_weights, const Apply& laplacian)
    : rows_(rows), cols_(cols), sqrt_w_(row_weights.cwiseSqrt()), fourier_(real_fourier_basis(cols)) {
  const Eigen::Index n = static_cast<Eigen::Index>(rows) * cols;
  eigenvalues_.resize(n);
  row_basis_.resize(cols);

  Eigen::VectorXd probe = Eigen::VectorXd::Zero(n);
  for (int m = 0; m < cols; ++m) {
    Eigen::MatrixXd block(rows, rows);
    for (int j = 0; j < rows; ++j) {
      probe.setZero();
      for (int k = 0; k < cols; ++k) probe[static_cast<Eigen::Index>(j) * cols + k] = fourier_(k, m);
      const Eigen::VectorXd image = laplacian(probe);
      const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> img(
          image.data(), rows, cols);
      block.col(j) = img * fourier_.col(m);
    }
    // Similarity transform to a symmetric matrix: W^{1/2} B W^{-1/2}.
    Eigen::MatrixXd sym = sqrt_w_.asDiagonal() * block * sqrt_w_.cwiseInverse().asDiagonal();
    sym = 0.5 * (sym + sym.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw SolverFailure("Laplacian block eigensolve failed");
    row_basis_[m] = solver.eigenvectors();
    eigenvalues_.segment(static_cast<Eigen::Index>(m) * rows, rows) = solver.eigenvalues();
  }

  spectral_radius_ = eigenvalues_.cwiseAbs().maxCoeff();
  null_mask_.assign(n, false);
  const double null_tol = 1e-9 * std::max(spectral_radius_, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) null_mask_[i] = std::abs(eigenvalues_[i]) <= null_tol;

  // The constant field sqrt(w) lies in the null space of the constant-column
  // block, which may be degenerate; rotate that null space so that one basis
  // vector is exactly the constant.
  std::vector<int> block_null;
  for (int i = 0; i < rows; ++i)
    if (null_mask_[i]) block_null.push_back(i);
  const Eigen::VectorXd unit_sqrt_w = sqrt_w_.normalized();
  Eigen::MatrixXd null_basis(rows, block_null.size());
  for (size_t c = 0; c < block_null.size(); ++c) null_basis.col(c) = row_basis_[0].col(block_null[c]);
  const Eigen::VectorXd overlap = null_basis.transpose() * unit_sqrt_w;
  if (block_null.empty() || overlap.norm() < 1.0 - 1e-8)
    throw SolverFailure("Laplacian spectrum has no constant null mode");
  Eigen::MatrixXd rotated(rows, block_null.size());
  rotated.col(0) = unit_sqrt_w;
  if (block_null.size() > 1) {
    // Orthonormal complement of the constant inside the null space.
    Eigen::MatrixXd rest = null_basis - unit_sqrt_w * overlap.transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rest);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, block_null.size() - 1);
    rotated.rightCols(block_null.size() - 1) = q;
  }
  for (size_t c = 0; c < block_null.size(); ++c) {
    row_basis_[0].col(block_null[c]) = rotated.col(c);
    eigenvalues_[block_null[c]] = 0.0;
  }
  constant_index_ = block_null.front();
}

Eigen::VectorXd LaplaceSpectrum::forward(const Eigen::VectorXd& field) const {
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> f(field.data(), rows_,
                                                                                                   cols_);
  const Eigen::MatrixXd along = f * fourier_;  // rows x cols, column m = mode m
  Eigen::VectorXd coeffs(field.size());
  for (int m = 0; m < cols_; ++m) {
    coeffs.segment(static_cast<Eigen::Index>(m) * rows_, rows_).noalias() =
        row_basis_[m].transpose() * along.col(m).cwiseProduct(sqrt_w_);
  }
  return coeffs;
}

Eigen::VectorXd LaplaceSpectrum::inverse(const Eigen::VectorXd& coeffs) const {
  Eigen::MatrixXd along(rows_, cols_);
  for (int m = 0; m < cols_; ++m) {
    along.col(m) = (row_basis_[m] * coeffs.segment(static_cast<Eigen::Index>(m) * rows_, rows_))
                       .cwiseQuotient(sqrt_w_);
  }
  Eigen::VectorXd field(coeffs.size());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> f(field.data(), rows_, cols_);
  f.noalias() = along * fourier_.transpose();
  return field;
}

}  // namespace otflow
