#pragma once

#include <cmath>
#include <format>
#include <stdexcept>
#include <string>

#include "subcov/types.hpp"

namespace subcov {

/// Antenna element positions in units of the carrier wavelength. Elements are
/// isotropic (unit gain, no coupling), so the array response is phase-only.
template <typename Scalar = double>
struct ArrayGeometry {
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> positions;  // one column per element
  std::string tag;                                     // e.g. "ula:10:0.5"

  Eigen::Index n_elements() const { return positions.cols(); }

  /// True when all elements lie on one line (their response is then
  /// rotationally degenerate about that line).
  bool collinear() const {
    const auto n = positions.cols();
    if (n <= 2) return true;
    Vector3<Scalar> axis = positions.col(1) - positions.col(0);
    const Scalar scale = positions.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 2; k < n; ++k) {
      Vector3<Scalar> d = positions.col(k) - positions.col(0);
      if (axis.cross(d).norm() > Scalar(1e-12) * std::max(scale, Scalar(1))) return false;
    }
    return true;
  }
};

using ArrayGeometryd = ArrayGeometry<double>;

namespace detail {
template <typename Scalar>
void check_geometry_finite(const ArrayGeometry<Scalar>& geom) {
  if (!geom.positions.allFinite())
    throw std::invalid_argument("array geometry: positions must be finite");
}
}  // namespace detail

/// Uniform linear array with n elements spaced `spacing` wavelengths apart
/// along the array axis (taken as z, so a direction's elevation is the angle
/// from the array line and 90 degrees is broadside).
template <typename Scalar = double>
ArrayGeometry<Scalar> make_ula(int n, double spacing) {
  if (n < 2) throw std::invalid_argument("make_ula: need at least 2 elements");
  if (!(spacing > 0.0)) throw std::invalid_argument("make_ula: spacing must be positive");
  ArrayGeometry<Scalar> geom;
  geom.positions.setZero(3, n);
  for (int k = 0; k < n; ++k) geom.positions(2, k) = static_cast<Scalar>(k * spacing);
  geom.tag = std::format("ula:{}:{}", n, spacing);
  detail::check_geometry_finite(geom);
  return geom;
}

/// Rectangular grid of nx-by-ny elements in the z = 0 plane.
template <typename Scalar = double>
ArrayGeometry<Scalar> make_planar(int nx, int ny, double dx, double dy) {
  if (nx < 1 || ny < 1 || nx * ny < 2)
    throw std::invalid_argument("make_planar: grid must contain at least 2 elements");
  if (!(dx > 0.0) || !(dy > 0.0))
    throw std::invalid_argument("make_planar: spacings must be positive");
  ArrayGeometry<Scalar> geom;
  geom.positions.setZero(3, nx * ny);
  int k = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i, ++k) {
      geom.positions(0, k) = static_cast<Scalar>(i * dx);
      geom.positions(1, k) = static_cast<Scalar>(j * dy);
    }
  geom.tag = std::format("planar:{}:{}:{}:{}", nx, ny, dx, dy);
  detail::check_geometry_finite(geom);
  return geom;
}

/// n elements equally spaced on a circle of the given radius in the z = 0 plane.
template <typename Scalar = double>
ArrayGeometry<Scalar> make_uca(int n, double radius) {
  if (n < 2) throw std::invalid_argument("make_uca: need at least 2 elements");
  if (!(radius > 0.0)) throw std::invalid_argument("make_uca: radius must be positive");
  ArrayGeometry<Scalar> geom;
  geom.positions.setZero(3, n);
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * pi * k / n;
    geom.positions(0, k) = static_cast<Scalar>(radius * std::cos(a));
    geom.positions(1, k) = static_cast<Scalar>(radius * std::sin(a));
  }
  geom.tag = std::format("uca:{}:{}", n, radius);
  detail::check_geometry_finite(geom);
  return geom;
}

/// Phase-only steering vector: entry k = exp(+j 2 pi <p_k, u(dir)>).
/// An element at the origin always responds with 1 + 0j.
template <typename Scalar = double>
CVectorX<Scalar> steering_vector(const ArrayGeometry<Scalar>& geom, const Direction& dir) {
  const Vector3<Scalar> u = propagation_direction<Scalar>(dir);
  const Eigen::Index n = geom.n_elements();
  CVectorX<Scalar> v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar phase = Scalar(2) * static_cast<Scalar>(pi) * geom.positions.col(k).dot(u);
    v[k] = std::polar(Scalar(1), phase);
  }
  return v;
}

/// Correlation vector c(dir) = vec(v v^H); entry i + j*N equals v_i * conj(v_j).
template <typename Scalar = double>
CVectorX<Scalar> correlation_vector(const ArrayGeometry<Scalar>& geom, const Direction& dir) {
  const CVectorX<Scalar> v = steering_vector(geom, dir);
  const Eigen::Index n = v.size();
  CVectorX<Scalar> c(n * n);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::complex<Scalar> vj = std::conj(v[j]);
    for (Eigen::Index i = 0; i < n; ++i) c[k++] = v[i] * vj;
  }
  return c;
}

}  // namespace subcov
