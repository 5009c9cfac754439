#pragma once

#include <atomic>
#include <cmath>
#include <cstring>
#include <sstream>
#include <thread>
#include <vector>

#include "subcov/evaluation.hpp"
#include "subcov/matrix_io.hpp"
#include "subcov/rng.hpp"
#include "subcov/scenario.hpp"

namespace subcov {

/// x(t) = sum_i z_i(t) v(theta_i, phi_i) + n(t) with mutually uncorrelated
/// circularly-symmetric complex Gaussian signals and white noise. Snapshots
/// are the columns of the result; the draw order (per snapshot: sources, then
/// noise per element) is fixed so a stream key fully determines the data.
inline CMatrixXd generate_snapshots(const ArrayGeometryd& geom,
                                    const std::vector<SourceSpec>& sources,
                                    double noise_variance, int m, Philox& rng) {
  if (m < 1) throw std::invalid_argument("generate_snapshots: need M >= 1");
  const Eigen::Index n = geom.n_elements();
  CMatrixXd steering(n, static_cast<Eigen::Index>(sources.size()));
  for (std::size_t i = 0; i < sources.size(); ++i)
    steering.col(static_cast<Eigen::Index>(i)) = steering_vector(geom, sources[i].direction);

  CMatrixXd x(n, m);
  for (int t = 0; t < m; ++t) {
    CVectorXd col = CVectorXd::Zero(n);
    for (std::size_t i = 0; i < sources.size(); ++i)
      col += rng.next_complex_gaussian(sources[i].power) * steering.col(static_cast<Eigen::Index>(i));
    for (Eigen::Index k = 0; k < n; ++k)
      col[k] += rng.next_complex_gaussian(noise_variance);
    x.col(t) = col;
  }
  return x;
}

/// FNV-1a over the raw snapshot buffer; used to assert that every estimator
/// in a trial consumed the same realization.
inline std::uint64_t snapshot_checksum(const CMatrixXd& x) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(x.data());
  const std::size_t size = static_cast<std::size_t>(x.size()) * sizeof(std::complex<double>);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

struct ResultRow {
  int snapshots = 0;
  double snr_db = 0.0;
  EstimatorKind estimator = EstimatorKind::Sample;
  std::string metric;
  double mean = 0.0;
  double std_error = 0.0;
  int trials = 0;    // trials aggregated into the mean
  int failures = 0;  // trials excluded because the estimator threw
};

struct TrialRecord {
  int sweep_index = 0;
  int trial = 0;
  std::uint64_t checksum = 0;                 // shared across estimators by construction
  std::vector<double> metric_per_estimator;   // NaN where the estimator failed
  std::vector<double> objective_per_estimator;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<TrialRecord> trial_log;  // ordered by (sweep_index, trial)
  std::string metric_name;
};

namespace detail {

inline double evaluate_trial_metric(const ScenarioSpec& spec, const HermitianMatrixd& cov,
                                    const CorrelationSubspaced&, const CMatrixXd& true_signal_basis) {
  if (const auto* res = std::get_if<ResolutionEval>(&spec.evaluation)) {
    ScanGrid scan;
    scan.step_deg = res->scan_step_deg;
    const Spectrum spectrum =
        music_spectrum(cov, spec.geometry, static_cast<int>(spec.sources.size()), scan);
    const double t1 = spec.sources[0].direction.elevation * 180.0 / pi;
    const double t2 = spec.sources[1].direction.elevation * 180.0 / pi;
    return resolution_event(spectrum, t1, t2, res->window_deg).resolved ? 1.0 : 0.0;
  }
  const auto& sd = std::get<SubspaceDistanceEval>(spec.evaluation);
  return subspace_distance(signal_subspace(cov, sd.subspace_dim), true_signal_basis);
}

inline void run_indexed(int count, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, threads);
  if (threads == 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(threads, count); ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < count;) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Runs trials x sweep points x estimators. Within a trial every estimator
/// consumes the same snapshot matrix (paired comparison); streams are keyed by
/// (seed, sweep index, trial) so any thread count produces identical results.
/// Estimator failures are excluded from the aggregate and counted, never
/// silently dropped.
inline SweepResult run_sweep(const ScenarioSpec& spec, const CorrelationSubspaced& subspace,
                             int threads = 1) {
  const std::size_t n_est = spec.estimators.size();
  const int n_sweep = static_cast<int>(spec.snapshot_counts.size() * spec.snr_db.size());

  SweepResult result;
  result.metric_name = std::holds_alternative<ResolutionEval>(spec.evaluation)
                           ? "resolution_probability"
                           : "subspace_distance";
  result.trial_log.resize(static_cast<std::size_t>(n_sweep) * spec.trials);

  // true signal subspace for the distance metric (independent of the sweep)
  CMatrixXd true_basis;
  if (const auto* sd = std::get_if<SubspaceDistanceEval>(&spec.evaluation)) {
    CMatrixXd steering(spec.geometry.n_elements(),
                       static_cast<Eigen::Index>(spec.sources.size()));
    for (std::size_t i = 0; i < spec.sources.size(); ++i)
      steering.col(static_cast<Eigen::Index>(i)) =
          steering_vector(spec.geometry, spec.sources[i].direction);
    if (sd->subspace_dim != steering.cols())
      throw std::invalid_argument(
          "run_sweep: evaluation.k must equal the source count so the true "
          "subspace is well defined");
    true_basis = orthonormal_columns(steering);
  }

  for (int sweep = 0; sweep < n_sweep; ++sweep) {
    const int m = spec.snapshot_counts[static_cast<std::size_t>(sweep) / spec.snr_db.size()];
    const double snr = spec.snr_db[static_cast<std::size_t>(sweep) % spec.snr_db.size()];
    const double power_scale = std::pow(10.0, snr / 10.0);

    std::vector<SourceSpec> sources = spec.sources;
    for (auto& s : sources) s.power *= power_scale;

    detail::run_indexed(spec.trials, threads, [&](int trial) {
      Philox rng = trial_stream(spec.seed, static_cast<std::uint32_t>(sweep),
                                static_cast<std::uint32_t>(trial));
      const CMatrixXd snapshots =
          generate_snapshots(spec.geometry, sources, spec.noise_variance, m, rng);

      TrialRecord record;
      record.sweep_index = sweep;
      record.trial = trial;
      record.metric_per_estimator.assign(n_est, std::numeric_limits<double>::quiet_NaN());
      record.objective_per_estimator.assign(n_est, std::numeric_limits<double>::quiet_NaN());

      std::optional<std::uint64_t> shared_checksum;
      for (std::size_t e = 0; e < n_est; ++e) {
        const std::uint64_t checksum = snapshot_checksum(snapshots);
        if (shared_checksum && *shared_checksum != checksum)
          throw std::logic_error("run_sweep: estimators saw different snapshot data");
        shared_checksum = checksum;
        record.checksum = checksum;

        try {
          const HermitianMatrixd r_hat = sample_covariance(snapshots);
          HermitianMatrixd cov;
          if (spec.estimators[e] == EstimatorKind::Sample) {
            cov = r_hat;
          } else {
            EstimatorConfigd config;
            config.noise = spec.noise_policy;
            config.basis = subspace;
            config.solver = spec.estimators[e] == EstimatorKind::Exact
                                ? SolverChoice{spec.exact_solver}
                                : SolverChoice{ClosedFormSolver{}};
            const EstimateReportd report = estimate_from_covariance(r_hat, config);
            const HermitianMatrixd target{
                r_hat.matrix() - report.noise_variance_used *
                                     CMatrixXd::Identity(r_hat.dimension(), r_hat.dimension())};
            record.objective_per_estimator[e] = estimation_objective(target, report.estimate);
            cov = report.reassembled;
          }
          record.metric_per_estimator[e] =
              detail::evaluate_trial_metric(spec, cov, subspace, true_basis);
        } catch (const std::exception&) {
          // leave NaN; counted as a failure below
        }
      }
      result.trial_log[static_cast<std::size_t>(sweep) * spec.trials + trial] =
          std::move(record);
    });

    for (std::size_t e = 0; e < n_est; ++e) {
      double sum = 0.0;
      int ok = 0;
      for (int trial = 0; trial < spec.trials; ++trial) {
        const double v =
            result.trial_log[static_cast<std::size_t>(sweep) * spec.trials + trial]
                .metric_per_estimator[e];
        if (!std::isnan(v)) {
          sum += v;
          ++ok;
        }
      }
      ResultRow row;
      row.snapshots = m;
      row.snr_db = snr;
      row.estimator = spec.estimators[e];
      row.metric = result.metric_name;
      row.trials = ok;
      row.failures = spec.trials - ok;
      row.mean = ok > 0 ? sum / ok : std::numeric_limits<double>::quiet_NaN();
      if (ok > 1) {
        double ss = 0.0;
        for (int trial = 0; trial < spec.trials; ++trial) {
          const double v =
              result.trial_log[static_cast<std::size_t>(sweep) * spec.trials + trial]
                  .metric_per_estimator[e];
          if (!std::isnan(v)) ss += (v - row.mean) * (v - row.mean);
        }
        row.std_error = std::sqrt(ss / (ok - 1)) / std::sqrt(static_cast<double>(ok));
      }
      result.rows.push_back(row);
    }
  }
  return result;
}

/// Fixed-header CSV; identical (spec, seed) runs produce identical bytes.
inline std::string result_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "m,snr_db,estimator,metric,mean,std_error,trials,failures\n";
  for (const auto& row : result.rows) {
    out << row.snapshots << ',' << detail::format_double(row.snr_db) << ','
        << to_string(row.estimator) << ',' << row.metric << ','
        << detail::format_double(row.mean) << ',' << detail::format_double(row.std_error)
        << ',' << row.trials << ',' << row.failures << '\n';
  }
  return out.str();
}

/// JSON sidecar with the fully resolved spec and library version; optionally
/// includes the per-trial log (checksums and raw metrics).
inline nlohmann::json result_sidecar(const ScenarioSpec& spec, const SweepResult& result,
                                     const std::string& library_version,
                                     Eigen::Index subspace_dim, bool include_trials = false) {
  nlohmann::json j;
  j["library_version"] = library_version;
  j["scenario"] = scenario_to_json(spec);
  j["subspace_dim"] = subspace_dim;
  j["metric"] = result.metric_name;
  auto& failures = j["failures"];
  failures = nlohmann::json::array();
  for (const auto& row : result.rows)
    if (row.failures > 0)
      failures.push_back({{"m", row.snapshots},
                          {"snr_db", row.snr_db},
                          {"estimator", to_string(row.estimator)},
                          {"count", row.failures}});
  if (include_trials) {
    auto& trials = j["trials"];
    trials = nlohmann::json::array();
    for (const auto& rec : result.trial_log) {
      nlohmann::json t;
      t["sweep_index"] = rec.sweep_index;
      t["trial"] = rec.trial;
      t["checksum"] = rec.checksum;
      t["metrics"] = rec.metric_per_estimator;
      trials.push_back(std::move(t));
    }
  }
  return j;
}

}  // namespace subcov
