#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>

namespace subcov {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using CMatrixX = MatrixX<std::complex<Scalar>>;
template <typename Scalar>
using CVectorX = VectorX<std::complex<Scalar>>;

using MatrixXd = MatrixX<double>;
using VectorXd = VectorX<double>;
using CMatrixXd = CMatrixX<double>;
using CVectorXd = CVectorX<double>;

inline constexpr double pi = std::numbers::pi;

/// Far-field arrival direction. Elevation is the polar angle in [0, pi],
/// azimuth wraps into [0, 2*pi).
struct Direction {
  double elevation = 0.0;
  double azimuth = 0.0;

  /// Builds a direction with both angles reduced to their canonical ranges:
  /// elevation folded into [0, pi] (flipping azimuth by pi when it crosses a
  /// pole), azimuth wrapped into [0, 2*pi).
  static Direction normalized(double elevation, double azimuth) {
    const double two_pi = 2.0 * pi;
    double e = std::fmod(elevation, two_pi);
    if (e < 0) e += two_pi;
    double a = azimuth;
    if (e > pi) {
      e = two_pi - e;
      a += pi;
    }
    a = std::fmod(a, two_pi);
    if (a < 0) a += two_pi;
    return Direction{e, a};
  }

  static Direction from_degrees(double elevation_deg, double azimuth_deg = 0.0) {
    return normalized(elevation_deg * pi / 180.0, azimuth_deg * pi / 180.0);
  }
};

/// Unit propagation vector u(theta, phi) = (sin t cos p, sin t sin p, cos t).
template <typename Scalar = double>
Vector3<Scalar> propagation_direction(const Direction& dir) {
  const Scalar st = static_cast<Scalar>(std::sin(dir.elevation));
  return Vector3<Scalar>(st * static_cast<Scalar>(std::cos(dir.azimuth)),
                         st * static_cast<Scalar>(std::sin(dir.azimuth)),
                         static_cast<Scalar>(std::cos(dir.elevation)));
}

/// Column-stacking vec(A): entry (i, j) lands at index i + j*rows.
template <typename Derived>
auto vec(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> out(a.size());
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out[k++] = a(i, j);
  return out;
}

/// Inverse of vec for square matrices.
template <typename Derived>
auto unvec(const Eigen::MatrixBase<Derived>& v, Eigen::Index n) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) out(i, j) = v[k++];
  return out;
}

/// (A + A^H) / 2.
template <typename Derived>
auto hermitian_part(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out = (a + a.adjoint()) / Scalar(2);
  return out;
}

}  // namespace subcov
