#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

#include "subcov/array_model.hpp"
#include "subcov/estimator.hpp"
#include "subcov/types.hpp"

namespace subcov {

/// MUSIC pseudospectrum sampled on a strictly increasing angle grid.
struct Spectrum {
  std::vector<double> angles_deg;
  std::vector<double> values;
};

/// 1-D scan: elevation sweeps [start, stop] in fixed steps at a fixed azimuth.
/// For a collinear array the elevation is the angle from the array axis, so
/// [0, 180] with azimuth 0 covers every distinguishable direction.
struct ScanGrid {
  double start_deg = 0.0;
  double stop_deg = 180.0;
  double step_deg = 0.1;
  double azimuth_deg = 0.0;

  std::vector<double> angles() const {
    if (!(step_deg > 0) || stop_deg < start_deg)
      throw std::invalid_argument("ScanGrid: need step > 0 and stop >= start");
    std::vector<double> out;
    const auto count = static_cast<std::size_t>((stop_deg - start_deg) / step_deg + 1.5);
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double a = start_deg + static_cast<double>(i) * step_deg;
      if (a > stop_deg + 1e-9) break;
      out.push_back(a);
    }
    return out;
  }
};

/// Orthonormal columns spanning the same space, via Householder QR.
/// Throws when the input is column-rank deficient.
template <typename Scalar = double>
CMatrixX<Scalar> orthonormal_columns(const CMatrixX<Scalar>& a) {
  if (a.cols() < 1 || a.rows() < a.cols())
    throw std::invalid_argument("orthonormal_columns: need a tall matrix");
  Eigen::ColPivHouseholderQR<CMatrixX<Scalar>> qr(a);
  if (qr.rank() < a.cols())
    throw std::invalid_argument("orthonormal_columns: matrix is column-rank deficient");
  Eigen::HouseholderQR<CMatrixX<Scalar>> hqr(a);
  CMatrixX<Scalar> q = hqr.householderQ() * CMatrixX<Scalar>::Identity(a.rows(), a.cols());
  return q;
}

/// Orthonormal basis of the orthogonal complement of span(q), where q itself
/// has orthonormal columns.
template <typename Scalar = double>
CMatrixX<Scalar> orthogonal_complement(const CMatrixX<Scalar>& q) {
  const Eigen::Index n = q.rows(), k = q.cols();
  Eigen::HouseholderQR<CMatrixX<Scalar>> hqr(q);
  CMatrixX<Scalar> full = hqr.householderQ() * CMatrixX<Scalar>::Identity(n, n);
  return full.rightCols(n - k);
}

/// Eigenvectors of the k largest eigenvalues of R, orthonormal.
template <typename Scalar = double>
CMatrixX<Scalar> signal_subspace(const HermitianMatrix<Scalar>& r, int k) {
  const Eigen::Index n = r.dimension();
  if (k < 1 || k >= n) throw std::invalid_argument("signal_subspace: need 1 <= k < N");
  Eigen::SelfAdjointEigenSolver<CMatrixX<Scalar>> solver(r.matrix());
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("signal_subspace: eigendecomposition failed");
  return solver.eigenvectors().rightCols(k).rowwise().reverse();
}

/// MUSIC pseudospectrum 1 / ||E_n^H v(theta)||^2 with E_n the noise subspace
/// (eigenvectors of the N - p smallest eigenvalues of R).
template <typename Scalar = double>
Spectrum music_spectrum(const HermitianMatrix<Scalar>& r, const ArrayGeometry<Scalar>& geom,
                        int p, const ScanGrid& scan) {
  const Eigen::Index n = r.dimension();
  if (p < 1 || p >= n) throw std::invalid_argument("music_spectrum: need 1 <= p < N");
  if (geom.n_elements() != n)
    throw std::invalid_argument("music_spectrum: geometry and covariance sizes disagree");
  Eigen::SelfAdjointEigenSolver<CMatrixX<Scalar>> solver(r.matrix());
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("music_spectrum: eigendecomposition failed");
  const CMatrixX<Scalar> noise_basis = solver.eigenvectors().leftCols(n - p);

  Spectrum spec;
  spec.angles_deg = scan.angles();
  spec.values.reserve(spec.angles_deg.size());
  for (const double a : spec.angles_deg) {
    const CVectorX<Scalar> v =
        steering_vector(geom, Direction::from_degrees(a, scan.azimuth_deg));
    const Scalar den = (noise_basis.adjoint() * v).squaredNorm();
    spec.values.push_back(1.0 / std::max<double>(den, 1e-18));
  }
  return spec;
}

struct ResolutionEvent {
  bool resolved = false;
  std::vector<double> detected_angles_deg;  // the two highest local maxima, when present
  std::vector<double> truth_angles_deg;
};

/// Indices of strict local maxima (greater than both neighbors), sorted by
/// descending spectrum value. Boundary points are excluded.
inline std::vector<std::size_t> local_maxima(const Spectrum& spec) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 1; i + 1 < spec.values.size(); ++i)
    if (spec.values[i] > spec.values[i - 1] && spec.values[i] > spec.values[i + 1])
      idx.push_back(i);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return spec.values[a] > spec.values[b]; });
  return idx;
}

/// Two sources count as resolved when the two highest local maxima fall within
/// +-window of distinct true angles and the spectrum at the midpoint of the
/// detected pair dips strictly below both peaks.
inline ResolutionEvent resolution_event(const Spectrum& spec, double truth1_deg,
                                        double truth2_deg, double window_deg) {
  if (!(window_deg > 0)) throw std::invalid_argument("resolution_event: window must be > 0");
  if (spec.angles_deg.size() < 3)
    throw std::invalid_argument("resolution_event: spectrum too short");
  const double lo = spec.angles_deg.front(), hi = spec.angles_deg.back();
  for (double t : {truth1_deg, truth2_deg})
    if (t < lo || t > hi)
      throw std::invalid_argument("resolution_event: truth angle outside scan range");

  ResolutionEvent event;
  event.truth_angles_deg = {truth1_deg, truth2_deg};
  const auto maxima = local_maxima(spec);
  if (maxima.size() < 2) return event;

  const std::size_t i1 = maxima[0], i2 = maxima[1];
  const double a1 = spec.angles_deg[i1], a2 = spec.angles_deg[i2];
  event.detected_angles_deg = {a1, a2};

  const bool matched =
      (std::abs(a1 - truth1_deg) <= window_deg && std::abs(a2 - truth2_deg) <= window_deg) ||
      (std::abs(a1 - truth2_deg) <= window_deg && std::abs(a2 - truth1_deg) <= window_deg);
  if (!matched) return event;

  // classical dip criterion at the midpoint of the detected pair
  const double mid = (a1 + a2) / 2.0;
  const auto it = std::lower_bound(spec.angles_deg.begin(), spec.angles_deg.end(), mid);
  std::size_t im = static_cast<std::size_t>(it - spec.angles_deg.begin());
  if (im > 0 && (im == spec.angles_deg.size() ||
                 mid - spec.angles_deg[im - 1] < spec.angles_deg[im] - mid))
    --im;
  event.resolved =
      spec.values[im] < spec.values[i1] && spec.values[im] < spec.values[i2];
  return event;
}

/// Distance between span(U) and span(V): the spectral norm of U_perp^H V
/// after orthonormalizing, equal to the sine of the largest principal angle.
/// Symmetric in its arguments and invariant to the choice of bases.
template <typename Scalar = double>
Scalar subspace_distance(const CMatrixX<Scalar>& u, const CMatrixX<Scalar>& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw std::invalid_argument("subspace_distance: shapes must agree");
  if (u.cols() == u.rows()) return Scalar(0);  // whole space vs whole space
  const CMatrixX<Scalar> u_on = orthonormal_columns(u);
  const CMatrixX<Scalar> v_on = orthonormal_columns(v);
  const CMatrixX<Scalar> cross = orthogonal_complement(u_on).adjoint() * v_on;
  Eigen::JacobiSVD<CMatrixX<Scalar>> svd(cross);
  return svd.singularValues().maxCoeff();
}

}  // namespace subcov
