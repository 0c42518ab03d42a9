#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace pens {

/// (x - c)^T P (x - c) for a symmetric precision matrix P.
template <typename DerivedX, typename DerivedC, typename DerivedP>
typename DerivedX::Scalar mahalanobis(const Eigen::MatrixBase<DerivedX>& x,
                                      const Eigen::MatrixBase<DerivedC>& c,
                                      const Eigen::MatrixBase<DerivedP>& precision) {
  const auto d = (x - c).eval();
  return d.dot(precision * d);
}

/// Gaussian kernel exp(-d_M). Equals one exactly at the center.
template <typename DerivedX, typename DerivedC, typename DerivedP>
typename DerivedX::Scalar gaussian_fire(const Eigen::MatrixBase<DerivedX>& x,
                                        const Eigen::MatrixBase<DerivedC>& c,
                                        const Eigen::MatrixBase<DerivedP>& precision) {
  using std::exp;
  return exp(-mahalanobis(x, c, precision));
}

/// Index of the largest coefficient; the lowest index wins ties.
template <typename Derived>
Eigen::Index argmax_first(const Eigen::DenseBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

/// Index of the smallest coefficient; the lowest index wins ties.
template <typename Derived>
Eigen::Index argmin_first(const Eigen::DenseBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) < v(best)) best = i;
  return best;
}

/// Numerically stable softmax of a log-weight vector.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& logw) {
  using S = typename Derived::Scalar;
  const S mx = logw.maxCoeff();
  Eigen::Matrix<S, Eigen::Dynamic, 1> w = (logw.array() - mx).exp().matrix();
  return w / w.sum();
}

/// log(sum(exp(v))) without overflow.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  const S mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

template <typename Derived>
bool is_spd(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar tol = 1e-10) {
  using MatT = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.rows() != m.cols()) return false;
  if (!((m - m.transpose()).cwiseAbs().maxCoeff() <= tol * (1 + m.cwiseAbs().maxCoeff())))
    return false;
  Eigen::SelfAdjointEigenSolver<MatT> es(m, Eigen::EigenvaluesOnly);
  return es.info() == Eigen::Success && es.eigenvalues().minCoeff() > tol;
}

/// Symmetrizes and lifts every eigenvalue to at least `floor`.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> spd_floor(
    const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar floor = 1e-8) {
  using MatT = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const MatT sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<MatT> es(sym);
  const auto vals = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace pens
