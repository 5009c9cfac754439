#pragma once

#include <Eigen/Eigenvalues>
#include <format>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "subcov/array_model.hpp"
#include "subcov/types.hpp"

namespace subcov {

/// Rectangular direction grid over which the correlation vectors are
/// accumulated. Uniform spacing, uniform weights: any strictly positive
/// weighting spans the same column space, so nothing fancier is needed.
struct GridSpec {
  int elevation_points = 181;  // inclusive of both ends of [0, pi]
  int azimuth_points = 360;    // over [0, 2*pi), end excluded

  Eigen::Index total_points() const {
    return static_cast<Eigen::Index>(elevation_points) * azimuth_points;
  }

  double elevation_at(int i) const {
    if (elevation_points == 1) return 0.0;
    return pi * i / (elevation_points - 1);
  }
  double azimuth_at(int j) const { return 2.0 * pi * j / azimuth_points; }
};

/// 1 degree spacing; collinear arrays are azimuth-degenerate about their axis,
/// so they integrate over elevation only.
template <typename Scalar>
GridSpec default_grid(const ArrayGeometry<Scalar>& geom) {
  GridSpec grid;
  grid.elevation_points = 181;
  grid.azimuth_points = geom.collinear() ? 1 : 360;
  return grid;
}

/// S = sum over the grid of c(dir) c(dir)^H, Hermitian PSD of size N^2 x N^2.
/// Accumulation runs over fixed-size direction chunks (reduced in chunk order,
/// so results are identical for any thread count).
template <typename Scalar = double>
CMatrixX<Scalar> accumulate_s(const ArrayGeometry<Scalar>& geom, const GridSpec& grid,
                              int threads = 1) {
  const Eigen::Index n = geom.n_elements();
  if (n > 64)
    throw std::invalid_argument("accumulate_s: N > 64 would need a " +
                                std::to_string(n * n) + "^2 matrix; refusing");
  if (grid.elevation_points < 1 || grid.azimuth_points < 1)
    throw std::invalid_argument("accumulate_s: grid point counts must be >= 1");
  const Eigen::Index total = grid.total_points();
  if (total < n * n / 4)
    throw std::invalid_argument(std::format(
        "accumulate_s: grid has {} points for subspace dimension up to {}; "
        "the rank of S would likely be underestimated",
        total, n * n));

  const Eigen::Index dim = n * n;
  constexpr Eigen::Index kChunk = 2048;
  const Eigen::Index n_chunks = (total + kChunk - 1) / kChunk;

  std::vector<CMatrixX<Scalar>> partial(static_cast<std::size_t>(n_chunks));
  auto run_chunk = [&](Eigen::Index ci) {
    const Eigen::Index begin = ci * kChunk;
    const Eigen::Index end = std::min(begin + kChunk, total);
    CMatrixX<Scalar> c_block(dim, end - begin);
    for (Eigen::Index k = begin; k < end; ++k) {
      const int i = static_cast<int>(k / grid.azimuth_points);
      const int j = static_cast<int>(k % grid.azimuth_points);
      c_block.col(k - begin) =
          correlation_vector(geom, Direction{grid.elevation_at(i), grid.azimuth_at(j)});
    }
    CMatrixX<Scalar> s = CMatrixX<Scalar>::Zero(dim, dim);
    s.template selfadjointView<Eigen::Lower>().rankUpdate(c_block);
    partial[static_cast<std::size_t>(ci)] = std::move(s);
  };

  threads = std::max(1, threads);
  if (threads == 1 || n_chunks == 1) {
    for (Eigen::Index ci = 0; ci < n_chunks; ++ci) run_chunk(ci);
  } else {
    std::vector<std::thread> pool;
    std::atomic<Eigen::Index> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (Eigen::Index ci; (ci = next.fetch_add(1)) < n_chunks;) run_chunk(ci);
      });
    for (auto& th : pool) th.join();
  }

  CMatrixX<Scalar> s = CMatrixX<Scalar>::Zero(dim, dim);
  for (auto& p : partial) s += p;  // chunk order is fixed
  s = s.template selfadjointView<Eigen::Lower>();
  return hermitian_part(s);
}

template <typename Scalar = double>
struct EigenSpectrum {
  VectorX<Scalar> eigenvalues;   // descending
  CMatrixX<Scalar> eigenvectors; // columns aligned with eigenvalues
};

/// Full Hermitian eigendecomposition, eigenvalues sorted descending.
/// The input is symmetrized first to bound round-off drift.
template <typename Derived>
EigenSpectrum<typename Derived::RealScalar> eigen_spectrum(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::RealScalar;
  if (s.rows() != s.cols()) throw std::invalid_argument("eigen_spectrum: matrix must be square");
  const Scalar asym = (s - s.adjoint()).norm() / Scalar(2);
  if (asym > Scalar(1e-8) * std::max<Scalar>(s.norm(), Scalar(1)))
    throw std::invalid_argument("eigen_spectrum: input is not Hermitian within 1e-8");
  CMatrixX<Scalar> sym = hermitian_part(s);
  Eigen::SelfAdjointEigenSolver<CMatrixX<Scalar>> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error(std::format(
        "eigen_spectrum: decomposition failed (size {}, norm {:g}, asymmetry {:g})", s.rows(),
        static_cast<double>(sym.norm()), static_cast<double>(asym)));
  EigenSpectrum<Scalar> out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

// Rank selection policies for select_basis.
struct RelativeThreshold {
  double value = 1e-8;  // keep eigenvalues > value * lambda_max
};
struct FixedDim {
  int value = 1;
};
struct EnergyFraction {
  double value = 0.9999;  // smallest prefix whose eigenvalue mass reaches this
};
using BasisPolicy = std::variant<RelativeThreshold, FixedDim, EnergyFraction>;

/// Orthonormal basis of the correlation-vector subspace together with the
/// full eigen-spectrum of S it was cut from.
template <typename Scalar = double>
struct CorrelationSubspace {
  CMatrixX<Scalar> basis;        // N^2 x dim, orthonormal columns
  VectorX<Scalar> eigenvalues;   // all N^2 of them, descending
  Eigen::Index dim = 0;
  std::string geometry_tag;
};

using CorrelationSubspaced = CorrelationSubspace<double>;

template <typename Scalar = double>
CorrelationSubspace<Scalar> select_basis(const EigenSpectrum<Scalar>& spectrum,
                                         const BasisPolicy& policy,
                                         std::string geometry_tag = {}) {
  const VectorX<Scalar>& w = spectrum.eigenvalues;
  if (w.size() == 0) throw std::invalid_argument("select_basis: empty spectrum");
  if (w.minCoeff() < Scalar(-1e-10) * std::max<Scalar>(w.maxCoeff(), Scalar(1)))
    throw std::invalid_argument("select_basis: spectrum has significantly negative eigenvalues");

  Eigen::Index dim = 0;
  if (const auto* rel = std::get_if<RelativeThreshold>(&policy)) {
    if (!(rel->value > 0)) throw std::invalid_argument("select_basis: threshold must be > 0");
    const Scalar cut = static_cast<Scalar>(rel->value) * w[0];
    while (dim < w.size() && w[dim] > cut) ++dim;
  } else if (const auto* fd = std::get_if<FixedDim>(&policy)) {
    if (fd->value < 1 || fd->value > w.size())
      throw std::invalid_argument("select_basis: fixed_dim out of range");
    dim = fd->value;
  } else {
    const auto& ef = std::get<EnergyFraction>(policy);
    if (!(ef.value > 0.0) || ef.value > 1.0)
      throw std::invalid_argument("select_basis: energy_fraction must be in (0, 1]");
    const Scalar total = w.cwiseMax(Scalar(0)).sum();
    Scalar acc = 0;
    while (dim < w.size() && acc < static_cast<Scalar>(ef.value) * total)
      acc += std::max(w[dim++], Scalar(0));
  }
  if (dim == 0) throw std::invalid_argument("select_basis: policy selected no eigenvectors");

  CorrelationSubspace<Scalar> sub;
  sub.basis = spectrum.eigenvectors.leftCols(dim);
  sub.eigenvalues = w;
  sub.dim = dim;
  sub.geometry_tag = std::move(geometry_tag);
  return sub;
}

/// Convenience: S accumulation + eigendecomposition + basis cut in one call.
template <typename Scalar = double>
CorrelationSubspace<Scalar> build_subspace(const ArrayGeometry<Scalar>& geom, const GridSpec& grid,
                                           const BasisPolicy& policy = RelativeThreshold{},
                                           int threads = 1) {
  const CMatrixX<Scalar> s = accumulate_s(geom, grid, threads);
  return select_basis(eigen_spectrum(s), policy, geom.tag);
}

/// Orthonormal basis of vec{Hermitian Toeplitz n x n}: the normalized
/// identity plus, per diagonal offset k >= 1, a real-symmetric and an
/// imaginary-antisymmetric generator. 2n-1 columns; the independent oracle
/// for what select_basis should span on a uniform linear array.
template <typename Scalar = double>
CMatrixX<Scalar> toeplitz_basis(int n) {
  if (n < 2) throw std::invalid_argument("toeplitz_basis: need n >= 2");
  using C = std::complex<Scalar>;
  CMatrixX<Scalar> basis = CMatrixX<Scalar>::Zero(static_cast<Eigen::Index>(n) * n, 2 * n - 1);
  CMatrixX<Scalar> gen(n, n);

  auto push = [&, col = Eigen::Index(0)]() mutable {
    basis.col(col++) = vec(gen) / gen.norm();
  };

  gen.setIdentity();
  push();
  for (int k = 1; k < n; ++k) {
    gen.setZero();
    for (int i = 0; i + k < n; ++i) {
      gen(i, i + k) = C(1, 0);
      gen(i + k, i) = C(1, 0);
    }
    push();
    gen.setZero();
    for (int i = 0; i + k < n; ++i) {
      gen(i, i + k) = C(0, 1);
      gen(i + k, i) = C(0, -1);
    }
    push();
  }
  return basis;
}

/// x projected onto span(Q) through the general formula Q (Q^H Q)^{-1} Q^H x.
/// Library-built bases are orthonormal so the Gram solve is the identity, but
/// user-supplied bases are accepted and must pass a conditioning check.
template <typename Scalar = double>
CVectorX<Scalar> subspace_project(const CMatrixX<Scalar>& q, const CVectorX<Scalar>& x) {
  if (q.rows() != x.size())
    throw std::invalid_argument("subspace_project: basis and vector sizes disagree");
  CMatrixX<Scalar> gram = q.adjoint() * q;
  Eigen::LDLT<CMatrixX<Scalar>> ldlt(gram);
  if (ldlt.info() != Eigen::Success || ldlt.isNegative() ||
      ldlt.vectorD().real().minCoeff() < Scalar(1e-12) * ldlt.vectorD().real().maxCoeff())
    throw std::runtime_error("subspace_project: basis Gram matrix is ill-conditioned");
  return q * ldlt.solve(q.adjoint() * x);
}

/// Materialized projector Q (Q^H Q)^{-1} Q^H. Quadratic in memory; meant for
/// diagnostics and tests rather than hot paths.
template <typename Scalar = double>
CMatrixX<Scalar> projector(const CMatrixX<Scalar>& q) {
  CMatrixX<Scalar> gram = q.adjoint() * q;
  Eigen::LDLT<CMatrixX<Scalar>> ldlt(gram);
  if (ldlt.info() != Eigen::Success || ldlt.isNegative() ||
      ldlt.vectorD().real().minCoeff() < Scalar(1e-12) * ldlt.vectorD().real().maxCoeff())
    throw std::runtime_error("projector: basis Gram matrix is ill-conditioned");
  return q * ldlt.solve(q.adjoint());
}

}  // namespace subcov
