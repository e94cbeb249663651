#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "amcckf/types.hpp"

namespace amcckf {

inline constexpr double kRidge = 1e-12;

template <typename Derived>
auto symmetrized(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out = (m + m.transpose()) * Scalar(0.5);
  return out;
}

template <typename Derived>
void symmetrize(Eigen::MatrixBase<Derived>& m) {
  m = ((m + m.transpose()) * typename Derived::Scalar(0.5)).eval();
}

/// Smallest eigenvalue of the symmetric part of `m`.
template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0) return Scalar(0);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(symmetrized(m),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Symmetric projection with eigenvalues clipped to at least `floor`.
template <typename Derived>
MatrixX<typename Derived::Scalar> project_psd(
    const Eigen::MatrixBase<Derived>& m,
    typename Derived::Scalar floor = typename Derived::Scalar(0)) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> sym = symmetrized(m);
  if (sym.size() == 0) return sym;
  if (sym.isDiagonal(Scalar(0))) {
    sym.diagonal() = sym.diagonal().cwiseMax(floor);
    return sym;
  }
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(sym);
  if (es.eigenvalues().minCoeff() >= floor) return sym;
  const VectorX<Scalar> clipped = es.eigenvalues().cwiseMax(floor);
  MatrixX<Scalar> out =
      es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return symmetrized(out);
}

template <typename Derived>
void floor_diagonal(Eigen::MatrixBase<Derived>& m,
                    typename Derived::Scalar floor) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    m(i, i) = std::max(m(i, i), floor);
  }
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Inverse of a symmetric positive-definite matrix through Cholesky. When the
/// factorization fails a ridge of kRidge * I is added and `regularized` is set.
template <typename Derived>
MatrixX<typename Derived::Scalar> spd_inverse(
    const Eigen::MatrixBase<Derived>& m, bool* regularized = nullptr) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = m.rows();
  const MatrixX<Scalar> identity = MatrixX<Scalar>::Identity(n, n);
  Eigen::LLT<MatrixX<Scalar>> llt(symmetrized(m));
  if (llt.info() == Eigen::Success) {
    MatrixX<Scalar> inv = llt.solve(identity);
    if (inv.allFinite()) return inv;
  }
  if (regularized) *regularized = true;
  MatrixX<Scalar> ridged = symmetrized(m) + Scalar(kRidge) * identity;
  llt.compute(ridged);
  if (llt.info() == Eigen::Success) return llt.solve(identity);
  // Indefinite beyond the ridge; fall back to a pivoted LU.
  return ridged.fullPivLu().inverse();
}

}  // namespace amcckf
