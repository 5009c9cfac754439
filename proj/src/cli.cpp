#include "subcov/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "subcov/harness.hpp"
#include "subcov/version.hpp"

namespace subcov::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_scenario(text);
}

/// Loads the subspace from the cache file when present, otherwise builds it
/// on the default grid and (if a path was given) saves it for the next run.
CorrelationSubspaced obtain_subspace(const ArrayGeometryd& geom,
                                     const std::optional<std::string>& cache_path,
                                     int threads) {
  if (cache_path && fs::exists(*cache_path)) {
    CorrelationSubspaced sub = load_subspace(*cache_path);
    if (sub.basis.rows() != geom.n_elements() * geom.n_elements())
      throw std::invalid_argument("subspace cache '" + *cache_path +
                                  "' does not match the scenario geometry");
    return sub;
  }
  CorrelationSubspaced sub =
      build_subspace(geom, default_grid(geom), RelativeThreshold{}, threads);
  if (cache_path) save_subspace(*cache_path, sub);
  return sub;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
}

struct CommonOptions {
  int threads = 1;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> trials_override;
  std::optional<std::vector<std::string>> estimators_override;
};

void apply_overrides(ScenarioSpec& spec, const CommonOptions& opts) {
  if (opts.seed_override) spec.seed = *opts.seed_override;
  if (opts.trials_override) {
    if (*opts.trials_override < 1) throw std::invalid_argument("trials: must be >= 1");
    spec.trials = *opts.trials_override;
  }
  if (opts.estimators_override) {
    spec.estimators.clear();
    for (const auto& name : *opts.estimators_override)
      spec.estimators.push_back(estimator_kind_from_string(name));
  }
}

int cmd_subspace(const std::string& geometry, double grid_step_deg, double threshold,
                 std::optional<int> fixed_dim, std::optional<double> energy,
                 const std::string& out_path, const std::string& spectrum_path, int threads) {
  const ArrayGeometryd geom = parse_geometry(geometry);
  GridSpec grid = default_grid(geom);
  const int elev = static_cast<int>(std::lround(180.0 / grid_step_deg)) + 1;
  const int azim = geom.collinear() ? 1 : static_cast<int>(std::lround(360.0 / grid_step_deg));
  grid.elevation_points = std::max(elev, 2);
  grid.azimuth_points = std::max(azim, 1);

  BasisPolicy policy = RelativeThreshold{threshold};
  if (fixed_dim) policy = FixedDim{*fixed_dim};
  if (energy) policy = EnergyFraction{*energy};

  const CorrelationSubspaced sub = build_subspace(geom, grid, policy, threads);
  std::cout << "geometry = " << geom.tag << "\n"
            << "grid = " << grid.elevation_points << " x " << grid.azimuth_points
            << " directions\n"
            << "dim = " << sub.dim << "\n";
  const Eigen::Index show = std::min<Eigen::Index>(sub.eigenvalues.size(), sub.dim + 3);
  std::cout << "eigenvalues (top " << show << " of " << sub.eigenvalues.size() << "):\n";
  for (Eigen::Index i = 0; i < show; ++i)
    std::cout << "  " << i + 1 << "  " << detail::format_double(sub.eigenvalues[i]) << "\n";

  if (!out_path.empty()) {
    save_subspace(out_path, sub);
    std::cout << "subspace written to " << out_path << "\n";
  }
  if (!spectrum_path.empty()) {
    std::ostringstream csv;
    csv << "index,eigenvalue\n";
    for (Eigen::Index i = 0; i < sub.eigenvalues.size(); ++i)
      csv << i + 1 << ',' << detail::format_double(sub.eigenvalues[i]) << '\n';
    write_text(spectrum_path, csv.str());
  }
  return kExitOk;
}

int cmd_estimate(const std::string& scenario_path, const std::string& covariance_path,
                 int snapshots, const std::string& estimator_name, const std::string& out_dir,
                 const CommonOptions& opts) {
  ScenarioSpec spec = load_scenario_file(scenario_path);
  apply_overrides(spec, opts);
  const CorrelationSubspaced sub =
      obtain_subspace(spec.geometry, spec.subspace_cache, opts.threads);

  const EstimatorKind kind = estimator_kind_from_string(estimator_name);
  if (kind == EstimatorKind::Sample)
    throw std::invalid_argument("estimate: estimator must be closed_form or exact");

  EstimatorConfigd config;
  config.noise = spec.noise_policy;
  config.basis = sub;
  config.solver = kind == EstimatorKind::Exact ? SolverChoice{spec.exact_solver}
                                               : SolverChoice{ClosedFormSolver{}};

  HermitianMatrixd r_hat;
  if (!covariance_path.empty()) {
    r_hat = HermitianMatrixd(load_matrix(covariance_path));
    if (r_hat.dimension() != spec.geometry.n_elements())
      throw std::invalid_argument("covariance file size does not match the scenario geometry");
  } else {
    if (snapshots < 1) throw std::invalid_argument("estimate: need --m >= 1 when generating");
    Philox rng = trial_stream(spec.seed, 0, 0);
    r_hat = sample_covariance(
        generate_snapshots(spec.geometry, spec.sources, spec.noise_variance, snapshots, rng));
  }

  const EstimateReportd report = estimate_from_covariance(r_hat, config);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  save_matrix(dir / "sample_covariance.mtx", r_hat.matrix());
  save_matrix(dir / "estimate.mtx", report.estimate.matrix());
  save_matrix(dir / "reassembled.mtx", report.reassembled.matrix());

  std::cout << "estimator = " << to_string(kind) << "\n"
            << "noise_variance_used = " << detail::format_double(report.noise_variance_used)
            << (report.noise_clamped ? " (clamped)" : "") << "\n"
            << "orthogonal_residual_norm = "
            << detail::format_double(report.orthogonal_residual_norm) << "\n"
            << "truncated_negative_mass = "
            << detail::format_double(report.truncated_negative_mass) << "\n"
            << "iterations_used = " << report.iterations_used << "\n"
            << "converged = " << (report.converged ? "yes" : "no") << "\n"
            << "matrices written to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& scenario_path, const std::string& out_dir, bool log_trials,
              const CommonOptions& opts) {
  ScenarioSpec spec = load_scenario_file(scenario_path);
  apply_overrides(spec, opts);
  const CorrelationSubspaced sub =
      obtain_subspace(spec.geometry, spec.subspace_cache, opts.threads);

  const SweepResult result = run_sweep(spec, sub, opts.threads);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_text(dir / "results.csv", result_csv(result));
  write_text(dir / "results.json",
             result_sidecar(spec, result, kVersion, sub.dim, log_trials).dump(2) + "\n");

  int total_failures = 0;
  for (const auto& row : result.rows) total_failures += row.failures;
  std::cout << "sweep complete: " << result.rows.size() << " rows, metric "
            << result.metric_name << ", " << total_failures << " failed trials\n"
            << "results written to " << (dir / "results.csv").string() << "\n";
  return kExitOk;
}

int cmd_spectrum(const std::string& scenario_path, int snapshots,
                 const std::string& estimator_name, const std::string& out_path,
                 const CommonOptions& opts) {
  ScenarioSpec spec = load_scenario_file(scenario_path);
  apply_overrides(spec, opts);

  const EstimatorKind kind = estimator_kind_from_string(estimator_name);
  if (snapshots < 1) throw std::invalid_argument("spectrum: need --m >= 1");

  Philox rng = trial_stream(spec.seed, 0, 0);
  const HermitianMatrixd r_hat = sample_covariance(
      generate_snapshots(spec.geometry, spec.sources, spec.noise_variance, snapshots, rng));

  HermitianMatrixd cov = r_hat;
  if (kind != EstimatorKind::Sample) {
    const CorrelationSubspaced sub =
        obtain_subspace(spec.geometry, spec.subspace_cache, opts.threads);
    EstimatorConfigd config;
    config.noise = spec.noise_policy;
    config.basis = sub;
    config.solver = kind == EstimatorKind::Exact ? SolverChoice{spec.exact_solver}
                                                 : SolverChoice{ClosedFormSolver{}};
    cov = estimate_from_covariance(r_hat, config).reassembled;
  }

  ScanGrid scan;
  if (const auto* res = std::get_if<ResolutionEval>(&spec.evaluation))
    scan.step_deg = res->scan_step_deg;
  const Spectrum spectrum =
      music_spectrum(cov, spec.geometry, static_cast<int>(spec.sources.size()), scan);

  std::ostringstream csv;
  csv << "angle_degrees,value\n";
  for (std::size_t i = 0; i < spectrum.angles_deg.size(); ++i)
    csv << detail::format_double(spectrum.angles_deg[i]) << ','
        << detail::format_double(spectrum.values[i]) << '\n';
  write_text(out_path, csv.str());
  std::cout << "spectrum (" << spectrum.angles_deg.size() << " points, estimator "
            << to_string(kind) << ") written to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"subspace-constrained array covariance estimation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonOptions opts;

  // subspace
  auto* subspace = app.add_subcommand(
      "subspace", "build the correlation-vector subspace for a geometry");
  std::string geometry;
  double grid_step_deg = 1.0, threshold = 1e-8;
  std::optional<int> fixed_dim;
  std::optional<double> energy;
  std::string sub_out, spectrum_out;
  subspace->add_option("--geometry", geometry, "ula:<n>:<spacing> | planar:<nx>:<ny>:<dx>:<dy> | uca:<n>:<radius>")
      ->required();
  subspace->add_option("--grid-step-deg", grid_step_deg, "direction grid spacing in degrees")
      ->check(CLI::PositiveNumber);
  subspace->add_option("--threshold", threshold, "relative eigenvalue threshold")
      ->check(CLI::PositiveNumber);
  subspace->add_option("--dim", fixed_dim, "keep a fixed number of eigenvectors");
  subspace->add_option("--energy", energy, "keep the smallest dim reaching this eigenvalue mass fraction");
  subspace->add_option("--out", sub_out, "write the subspace cache file here");
  subspace->add_option("--spectrum-out", spectrum_out, "write the eigenvalue spectrum CSV here");
  subspace->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);

  // estimate
  auto* estimate = app.add_subcommand(
      "estimate", "one-shot estimation from a generated scenario or a covariance file");
  std::string est_scenario, est_cov, est_kind = "closed_form", est_out = ".";
  int est_m = 0;
  estimate->add_option("--scenario", est_scenario, "scenario JSON file")->required();
  estimate->add_option("--covariance", est_cov, "direct covariance input (matrix file, bypasses snapshots)");
  estimate->add_option("--m", est_m, "number of snapshots to generate");
  estimate->add_option("--estimator", est_kind, "closed_form | exact");
  estimate->add_option("--out-dir", est_out, "output directory for the matrices");
  estimate->add_option("--seed", opts.seed_override, "override the scenario seed");
  estimate->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a Monte Carlo scenario sweep");
  std::string sweep_scenario, sweep_out = ".";
  bool log_trials = false;
  sweep->add_option("scenario", sweep_scenario, "scenario JSON file")->required();
  sweep->add_option("--out-dir", sweep_out, "output directory for results.csv / results.json");
  sweep->add_option("--seed", opts.seed_override, "override the scenario seed");
  sweep->add_option("--trials", opts.trials_override, "override the scenario trial count");
  sweep->add_option("--estimators", opts.estimators_override,
                    "subset of sample | closed_form | exact");
  sweep->add_flag("--log-trials", log_trials, "include the per-trial log in the sidecar");
  sweep->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);

  // spectrum
  auto* spectrum = app.add_subcommand("spectrum", "emit a MUSIC pseudospectrum CSV");
  std::string spec_scenario, spec_kind = "sample", spec_out = "spectrum.csv";
  int spec_m = 0;
  spectrum->add_option("--scenario", spec_scenario, "scenario JSON file")->required();
  spectrum->add_option("--m", spec_m, "number of snapshots to generate")->required();
  spectrum->add_option("--estimator", spec_kind, "sample | closed_form | exact");
  spectrum->add_option("--out", spec_out, "output CSV path");
  spectrum->add_option("--seed", opts.seed_override, "override the scenario seed");
  spectrum->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (subspace->parsed())
      return cmd_subspace(geometry, grid_step_deg, threshold, fixed_dim, energy, sub_out,
                          spectrum_out, opts.threads);
    if (estimate->parsed())
      return cmd_estimate(est_scenario, est_cov, est_m, est_kind, est_out, opts);
    if (sweep->parsed()) return cmd_sweep(sweep_scenario, sweep_out, log_trials, opts);
    if (spectrum->parsed()) return cmd_spectrum(spec_scenario, spec_m, spec_kind, spec_out, opts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitValidation;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace subcov::cli
