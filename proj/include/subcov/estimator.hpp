#pragma once

#include <Eigen/Eigenvalues>
#include <stdexcept>
#include <variant>

#include "subcov/subspace.hpp"
#include "subcov/types.hpp"

namespace subcov {

/// N x N complex Hermitian matrix; symmetrized on construction, with the
/// removed asymmetry recorded for diagnostics.
template <typename Scalar = double>
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  explicit HermitianMatrix(const CMatrixX<Scalar>& a) {
    if (a.rows() != a.cols())
      throw std::invalid_argument("HermitianMatrix: matrix must be square");
    asymmetry_ = (a - a.adjoint()).norm() / Scalar(2);
    m_ = hermitian_part(a);
  }

  const CMatrixX<Scalar>& matrix() const { return m_; }
  Eigen::Index dimension() const { return m_.rows(); }
  Scalar asymmetry() const { return asymmetry_; }

 private:
  CMatrixX<Scalar> m_;
  Scalar asymmetry_ = 0;
};

using HermitianMatrixd = HermitianMatrix<double>;

// Noise-variance policies. The scenarios supply the true value ("known"),
// mirroring how the estimator is normally driven; "estimate_floor" averages
// the N - p smallest sample eigenvalues for use on real data.
struct KnownNoise {
  double variance = 0.0;
};
struct EstimateFloor {
  int source_count = 1;
};
struct NoNoise {};
using NoisePolicy = std::variant<KnownNoise, EstimateFloor, NoNoise>;

struct ClosedFormSolver {};
struct ExactSolver {
  double tolerance = 1e-8;
  int max_iterations = 5000;
};
using SolverChoice = std::variant<ClosedFormSolver, ExactSolver>;

template <typename Scalar = double>
struct EstimatorConfig {
  NoisePolicy noise = KnownNoise{};
  SolverChoice solver = ClosedFormSolver{};
  CorrelationSubspace<Scalar> basis;
};

using EstimatorConfigd = EstimatorConfig<double>;

template <typename Scalar = double>
struct EstimateReport {
  HermitianMatrix<Scalar> estimate;     // R_s estimate, PSD
  HermitianMatrix<Scalar> reassembled;  // estimate + sigma_n^2 I, for MUSIC et al.
  Scalar orthogonal_residual_norm = 0;  // ||vec(R_perp)||_2 removed by the projection
  Scalar truncated_negative_mass = 0;   // sum |lambda| over truncated negative eigenvalues
  Scalar noise_variance_used = 0;
  bool noise_clamped = false;
  int iterations_used = 0;  // 0 for the closed form
  bool converged = true;
  Scalar final_step = 0;    // last Frobenius step of the exact solver
};

using EstimateReportd = EstimateReport<double>;

/// R_hat = (1/M) sum_m x(m) x(m)^H with snapshots as the columns of x.
template <typename Scalar = double>
HermitianMatrix<Scalar> sample_covariance(const CMatrixX<Scalar>& snapshots) {
  if (snapshots.cols() < 1)
    throw std::invalid_argument("sample_covariance: need at least one snapshot");
  const Eigen::Index n = snapshots.rows();
  CMatrixX<Scalar> r = CMatrixX<Scalar>::Zero(n, n);
  r.template selfadjointView<Eigen::Lower>().rankUpdate(snapshots,
                                                        Scalar(1) / snapshots.cols());
  return HermitianMatrix<Scalar>(CMatrixX<Scalar>(r.template selfadjointView<Eigen::Lower>()));
}

struct NoiseEstimate {
  double value = 0.0;
  bool clamped = false;
};

template <typename Scalar = double>
NoiseEstimate noise_variance(const HermitianMatrix<Scalar>& r_hat, const NoisePolicy& policy) {
  if (const auto* known = std::get_if<KnownNoise>(&policy)) {
    if (known->variance < 0) throw std::invalid_argument("noise_variance: known variance < 0");
    return {known->variance, false};
  }
  if (std::holds_alternative<NoNoise>(policy)) return {0.0, false};

  const auto& floor = std::get<EstimateFloor>(policy);
  const Eigen::Index n = r_hat.dimension();
  if (floor.source_count < 1 || floor.source_count >= n)
    throw std::invalid_argument("noise_variance: estimate_floor needs 1 <= p < N");
  Eigen::SelfAdjointEigenSolver<CMatrixX<Scalar>> solver(r_hat.matrix(),
                                                         Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("noise_variance: eigendecomposition failed");
  const double mean =
      solver.eigenvalues().head(n - floor.source_count).mean();  // ascending order
  if (mean < 0) return {0.0, true};
  return {mean, false};
}

template <typename Scalar = double>
struct ParallelSplit {
  HermitianMatrix<Scalar> parallel;   // R_par, the in-subspace part
  Scalar orthogonal_norm = 0;         // ||vec(R_perp)||_2
  Scalar asymmetry = 0;               // symmetrization applied to R_par
};

/// Splits R_hat - sigma^2 I into its component inside span(Q) and the residual
/// norm of the discarded orthogonal part. The span of correlation vectors is
/// conjugation-symmetric, so the parallel part is Hermitian up to round-off;
/// it is symmetrized and the removed magnitude reported.
template <typename Scalar = double>
ParallelSplit<Scalar> project_parallel(const HermitianMatrix<Scalar>& r_hat, Scalar sigma2,
                                       const CorrelationSubspace<Scalar>& subspace) {
  const Eigen::Index n = r_hat.dimension();
  if (subspace.basis.rows() != n * n)
    throw std::invalid_argument("project_parallel: basis rows must equal N^2");
  CVectorX<Scalar> z = vec(CMatrixX<Scalar>(
      r_hat.matrix() - sigma2 * CMatrixX<Scalar>::Identity(n, n)));
  const CVectorX<Scalar> w = subspace_project(subspace.basis, z);
  ParallelSplit<Scalar> out;
  out.orthogonal_norm = (z - w).norm();
  HermitianMatrix<Scalar> par{unvec(w, n)};
  out.asymmetry = par.asymmetry();
  out.parallel = std::move(par);
  return out;
}

template <typename Scalar = double>
struct Truncation {
  HermitianMatrix<Scalar> psd;
  Scalar negative_mass = 0;  // sum of |lambda| over the negative eigenvalues
  Eigen::Index rank = 0;     // eigenvalues counted as strictly positive
};

/// Nearest PSD matrix in Frobenius norm: keep the strictly positive
/// eigenvalues (lambda > 1e-12 * |lambda|_max, so machine-noise eigenvalues
/// do not inflate the rank) and rebuild.
template <typename Scalar = double>
Truncation<Scalar> psd_truncate(const HermitianMatrix<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<CMatrixX<Scalar>> solver(a.matrix());
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("psd_truncate: eigendecomposition failed");
  const VectorX<Scalar> lam = solver.eigenvalues();
  const Scalar cutoff = Scalar(1e-12) * lam.cwiseAbs().maxCoeff();

  Truncation<Scalar> out;
  const Eigen::Index n = a.dimension();
  CMatrixX<Scalar> rebuilt = CMatrixX<Scalar>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lam[i] > cutoff) {
      rebuilt.noalias() += lam[i] * solver.eigenvectors().col(i) *
                           solver.eigenvectors().col(i).adjoint();
      ++out.rank;
    } else if (lam[i] < 0) {
      out.negative_mass += -lam[i];
    }
  }
  out.psd = HermitianMatrix<Scalar>(rebuilt);
  return out;
}

/// Exact projection onto the PSD cone (negative eigenvalues clipped to zero,
/// everything nonnegative kept). Used by the alternating-projection solver.
template <typename Scalar = double>
HermitianMatrix<Scalar> psd_clip(const HermitianMatrix<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<CMatrixX<Scalar>> solver(a.matrix());
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("psd_clip: eigendecomposition failed");
  const VectorX<Scalar> lam = solver.eigenvalues().cwiseMax(Scalar(0));
  CMatrixX<Scalar> rebuilt = solver.eigenvectors() * lam.asDiagonal() *
                             solver.eigenvectors().adjoint();
  return HermitianMatrix<Scalar>(rebuilt);
}

/// ||target - x||_F^2, the objective both solvers minimize against
/// target = R_hat - sigma_n^2 I.
template <typename Scalar = double>
Scalar estimation_objective(const HermitianMatrix<Scalar>& target,
                            const HermitianMatrix<Scalar>& x) {
  return (target.matrix() - x.matrix()).squaredNorm();
}

namespace detail {

template <typename Scalar>
EstimateReport<Scalar> closed_form_from_covariance(const HermitianMatrix<Scalar>& r_hat,
                                                   const EstimatorConfig<Scalar>& config) {
  const NoiseEstimate noise = noise_variance(r_hat, config.noise);
  const ParallelSplit<Scalar> split =
      project_parallel(r_hat, static_cast<Scalar>(noise.value), config.basis);
  Truncation<Scalar> trunc = psd_truncate(split.parallel);

  EstimateReport<Scalar> report;
  report.reassembled = HermitianMatrix<Scalar>(
      trunc.psd.matrix() + static_cast<Scalar>(noise.value) *
                               CMatrixX<Scalar>::Identity(r_hat.dimension(), r_hat.dimension()));
  report.estimate = std::move(trunc.psd);
  report.orthogonal_residual_norm = split.orthogonal_norm;
  report.truncated_negative_mass = trunc.negative_mass;
  report.noise_variance_used = noise.value;
  report.noise_clamped = noise.clamped;
  report.iterations_used = 0;
  return report;
}

/// Dykstra's alternating projections between the subspace and the PSD cone.
/// Both are closed convex sets with exact projections, so the iterates
/// converge to the unique projection of the target onto their intersection.
/// The correction terms are what distinguishes this from plain alternating
/// projection, which would find some intersection point but not the nearest.
template <typename Scalar>
EstimateReport<Scalar> exact_from_covariance(const HermitianMatrix<Scalar>& r_hat,
                                             const EstimatorConfig<Scalar>& config) {
  const auto& solver = std::get<ExactSolver>(config.solver);
  if (!(solver.tolerance > 0))
    throw std::invalid_argument("estimate_exact: tolerance must be > 0");
  if (solver.max_iterations < 1)
    throw std::invalid_argument("estimate_exact: max_iterations must be >= 1");

  const NoiseEstimate noise = noise_variance(r_hat, config.noise);
  const Eigen::Index n = r_hat.dimension();
  if (config.basis.basis.rows() != n * n)
    throw std::invalid_argument("estimate_exact: basis rows must equal N^2");

  const CMatrixX<Scalar> target =
      r_hat.matrix() - static_cast<Scalar>(noise.value) * CMatrixX<Scalar>::Identity(n, n);
  const Scalar orthogonal_norm =
      (vec(target) - subspace_project(config.basis.basis, CVectorX<Scalar>(vec(target)))).norm();

  CMatrixX<Scalar> x = target;
  CMatrixX<Scalar> p = CMatrixX<Scalar>::Zero(n, n);
  CMatrixX<Scalar> q = CMatrixX<Scalar>::Zero(n, n);

  EstimateReport<Scalar> report;
  report.converged = false;
  Scalar negative_mass = 0;
  for (int k = 0; k < solver.max_iterations; ++k) {
    const CMatrixX<Scalar> u = unvec(
        subspace_project(config.basis.basis, CVectorX<Scalar>(vec(CMatrixX<Scalar>(x + p)))), n);
    p += x - u;

    const HermitianMatrix<Scalar> shifted{u + q};
    Eigen::SelfAdjointEigenSolver<CMatrixX<Scalar>> eig(shifted.matrix());
    if (eig.info() != Eigen::Success)
      throw std::runtime_error("estimate_exact: eigendecomposition failed");
    negative_mass = -eig.eigenvalues().cwiseMin(Scalar(0)).sum();
    const CMatrixX<Scalar> x_next = eig.eigenvectors() *
                                    eig.eigenvalues().cwiseMax(Scalar(0)).asDiagonal() *
                                    eig.eigenvectors().adjoint();
    q = shifted.matrix() - x_next;

    report.final_step = (x_next - x).norm();
    report.iterations_used = k + 1;
    x = x_next;
    if (report.final_step < solver.tolerance) {
      report.converged = true;
      break;
    }
  }

  report.estimate = HermitianMatrix<Scalar>(x);
  report.reassembled = HermitianMatrix<Scalar>(
      x + static_cast<Scalar>(noise.value) * CMatrixX<Scalar>::Identity(n, n));
  report.orthogonal_residual_norm = orthogonal_norm;
  report.truncated_negative_mass = negative_mass;
  report.noise_variance_used = noise.value;
  report.noise_clamped = noise.clamped;
  return report;
}

}  // namespace detail

/// Direct-covariance entry point (used by oracle tests and file-driven runs);
/// dispatches on the configured solver.
template <typename Scalar = double>
EstimateReport<Scalar> estimate_from_covariance(const HermitianMatrix<Scalar>& r_hat,
                                                const EstimatorConfig<Scalar>& config) {
  if (std::holds_alternative<ClosedFormSolver>(config.solver))
    return detail::closed_form_from_covariance(r_hat, config);
  return detail::exact_from_covariance(r_hat, config);
}

/// Two-stage closed form: sample covariance, noise removal, projection onto
/// the correlation-vector subspace, then eigenvalue truncation to the nearest
/// PSD matrix. The truncation must come second; the reverse order answers a
/// different question (see the order-sensitivity test).
template <typename Scalar = double>
EstimateReport<Scalar> estimate_closed_form(const CMatrixX<Scalar>& snapshots,
                                            const EstimatorConfig<Scalar>& config) {
  if (!std::holds_alternative<ClosedFormSolver>(config.solver))
    throw std::invalid_argument("estimate_closed_form: config selects a different solver");
  return detail::closed_form_from_covariance(sample_covariance(snapshots), config);
}

/// Exact minimizer of ||(R_hat - sigma^2 I) - R_s||_F^2 over the intersection
/// of span(Q) and the PSD cone.
template <typename Scalar = double>
EstimateReport<Scalar> estimate_exact(const CMatrixX<Scalar>& snapshots,
                                      const EstimatorConfig<Scalar>& config) {
  if (!std::holds_alternative<ExactSolver>(config.solver))
    throw std::invalid_argument("estimate_exact: config selects a different solver");
  return detail::exact_from_covariance(sample_covariance(snapshots), config);
}

}  // namespace subcov
