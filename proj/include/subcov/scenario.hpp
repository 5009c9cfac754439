#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "subcov/array_model.hpp"
#include "subcov/estimator.hpp"

namespace subcov {

enum class EstimatorKind { Sample, ClosedForm, Exact };

inline std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Sample: return "sample";
    case EstimatorKind::ClosedForm: return "closed_form";
    case EstimatorKind::Exact: return "exact";
  }
  return "?";
}

inline EstimatorKind estimator_kind_from_string(const std::string& s) {
  if (s == "sample") return EstimatorKind::Sample;
  if (s == "closed_form") return EstimatorKind::ClosedForm;
  if (s == "exact") return EstimatorKind::Exact;
  throw std::invalid_argument("estimators: unknown estimator '" + s +
                              "' (expected sample | closed_form | exact)");
}

struct SourceSpec {
  Direction direction;
  double power = 1.0;
};

struct ResolutionEval {
  double window_deg = 2.0;
  double scan_step_deg = 0.1;
};
struct SubspaceDistanceEval {
  int subspace_dim = 1;  // "k": rank of the compared signal subspaces
};
using EvaluationSpec = std::variant<ResolutionEval, SubspaceDistanceEval>;

/// One Monte Carlo experiment: geometry, sources, sweeps and evaluation rule.
/// The sweep enumerates the cross product of the snapshot and SNR lists
/// (normally one of them is a singleton).
struct ScenarioSpec {
  std::string geometry_descriptor;  // "ula:10:0.5" | "planar:4:4:0.5:0.5" | "uca:16:1.0"
  ArrayGeometryd geometry;
  std::vector<SourceSpec> sources;
  double noise_variance = 1.0;
  std::vector<int> snapshot_counts;
  std::vector<double> snr_db{0.0};
  int trials = 200;
  std::uint64_t seed = 1;
  std::vector<EstimatorKind> estimators{EstimatorKind::Sample, EstimatorKind::ClosedForm,
                                        EstimatorKind::Exact};
  EvaluationSpec evaluation = ResolutionEval{};
  NoisePolicy noise_policy = KnownNoise{1.0};
  ExactSolver exact_solver{};
  std::optional<std::string> subspace_cache;
};

/// Parses "kind:param:param..." geometry descriptors.
inline ArrayGeometryd parse_geometry(const std::string& descriptor) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= descriptor.size()) {
    const auto next = descriptor.find(':', pos);
    parts.push_back(descriptor.substr(pos, next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  auto num = [&](std::size_t i) -> double {
    try {
      return std::stod(parts.at(i));
    } catch (const std::exception&) {
      throw std::invalid_argument("geometry: bad parameter in '" + descriptor + "'");
    }
  };
  const std::string& kind = parts.at(0);
  if (kind == "ula") {
    if (parts.size() != 3) throw std::invalid_argument("geometry: ula needs ula:<n>:<spacing>");
    return make_ula(static_cast<int>(num(1)), num(2));
  }
  if (kind == "planar") {
    if (parts.size() != 5)
      throw std::invalid_argument("geometry: planar needs planar:<nx>:<ny>:<dx>:<dy>");
    return make_planar(static_cast<int>(num(1)), static_cast<int>(num(2)), num(3), num(4));
  }
  if (kind == "uca") {
    if (parts.size() != 3) throw std::invalid_argument("geometry: uca needs uca:<n>:<radius>");
    return make_uca(static_cast<int>(num(1)), num(2));
  }
  throw std::invalid_argument("geometry: unknown kind '" + kind +
                              "' (expected ula | planar | uca)");
}

namespace detail {

template <typename T>
T require_field(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw std::invalid_argument("scenario: missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("scenario: field '" + key + "' has the wrong type");
  }
}

template <typename T>
T optional_field(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("scenario: field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Parses and validates a versioned scenario document. Every validation error
/// names the offending field.
inline ScenarioSpec parse_scenario(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("scenario: document must be a JSON object");
  const int version = detail::require_field<int>(j, "version");
  if (version != 1) throw std::invalid_argument("scenario: unsupported version");

  ScenarioSpec spec;
  spec.geometry_descriptor = detail::require_field<std::string>(j, "geometry");
  spec.geometry = parse_geometry(spec.geometry_descriptor);
  const Eigen::Index n = spec.geometry.n_elements();

  const auto sources = detail::require_field<nlohmann::json>(j, "sources");
  if (!sources.is_array() || sources.empty())
    throw std::invalid_argument("scenario: 'sources' must be a non-empty array");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    const std::string ctx = "sources[" + std::to_string(i) + "]";
    if (!s.contains("elevation_deg"))
      throw std::invalid_argument("scenario: " + ctx + " missing 'elevation_deg'");
    SourceSpec src;
    src.direction = Direction::from_degrees(s.at("elevation_deg").get<double>(),
                                            s.value("azimuth_deg", 0.0));
    src.power = s.value("power", 1.0);
    if (!(src.power > 0)) throw std::invalid_argument("scenario: " + ctx + ".power must be > 0");
    spec.sources.push_back(src);
  }
  if (static_cast<Eigen::Index>(spec.sources.size()) >= n)
    throw std::invalid_argument("scenario: source count must be below the element count");

  spec.noise_variance = detail::optional_field<double>(j, "noise_variance", 1.0);
  if (spec.noise_variance < 0)
    throw std::invalid_argument("scenario: 'noise_variance' must be >= 0");

  spec.snapshot_counts = detail::require_field<std::vector<int>>(j, "snapshots");
  if (spec.snapshot_counts.empty())
    throw std::invalid_argument("scenario: 'snapshots' must be non-empty");
  for (int m : spec.snapshot_counts)
    if (m < 1) throw std::invalid_argument("scenario: 'snapshots' entries must be >= 1");

  spec.snr_db = detail::optional_field<std::vector<double>>(j, "snr_db", {0.0});
  if (spec.snr_db.empty()) throw std::invalid_argument("scenario: 'snr_db' must be non-empty");

  spec.trials = detail::optional_field<int>(j, "trials", 200);
  if (spec.trials < 1) throw std::invalid_argument("scenario: 'trials' must be >= 1");
  spec.seed = detail::optional_field<std::uint64_t>(j, "seed", 1);

  if (j.contains("estimators")) {
    spec.estimators.clear();
    for (const auto& e : j.at("estimators"))
      spec.estimators.push_back(estimator_kind_from_string(e.get<std::string>()));
    if (spec.estimators.empty())
      throw std::invalid_argument("scenario: 'estimators' must be non-empty");
  }

  const auto eval = detail::require_field<nlohmann::json>(j, "evaluation");
  const auto kind = detail::require_field<std::string>(eval, "kind");
  if (kind == "resolution") {
    ResolutionEval r;
    r.window_deg = eval.value("window_deg", 2.0);
    r.scan_step_deg = eval.value("scan_step_deg", 0.1);
    if (!(r.window_deg > 0))
      throw std::invalid_argument("scenario: evaluation.window_deg must be > 0");
    if (!(r.scan_step_deg > 0))
      throw std::invalid_argument("scenario: evaluation.scan_step_deg must be > 0");
    if (spec.sources.size() != 2)
      throw std::invalid_argument("scenario: resolution evaluation needs exactly 2 sources");
    spec.evaluation = r;
  } else if (kind == "subspace_distance") {
    SubspaceDistanceEval s;
    s.subspace_dim = detail::require_field<int>(eval, "k");
    if (s.subspace_dim < 1 || s.subspace_dim >= n)
      throw std::invalid_argument("scenario: evaluation.k must satisfy 1 <= k < N");
    spec.evaluation = s;
  } else {
    throw std::invalid_argument(
        "scenario: evaluation.kind must be resolution | subspace_distance");
  }

  if (j.contains("noise_policy")) {
    const auto& np = j.at("noise_policy");
    const auto np_kind = detail::require_field<std::string>(np, "kind");
    if (np_kind == "known") {
      spec.noise_policy = KnownNoise{np.value("variance", spec.noise_variance)};
    } else if (np_kind == "estimate_floor") {
      EstimateFloor f{detail::require_field<int>(np, "sources")};
      if (f.source_count < 1 || f.source_count >= n)
        throw std::invalid_argument("scenario: noise_policy.sources must satisfy 1 <= p < N");
      spec.noise_policy = f;
    } else if (np_kind == "none") {
      spec.noise_policy = NoNoise{};
    } else {
      throw std::invalid_argument("scenario: noise_policy.kind must be known | estimate_floor | none");
    }
  } else {
    spec.noise_policy = KnownNoise{spec.noise_variance};
  }

  if (j.contains("exact_solver")) {
    const auto& ex = j.at("exact_solver");
    spec.exact_solver.tolerance = ex.value("tolerance", 1e-8);
    spec.exact_solver.max_iterations = ex.value("max_iterations", 5000);
    if (!(spec.exact_solver.tolerance > 0))
      throw std::invalid_argument("scenario: exact_solver.tolerance must be > 0");
    if (spec.exact_solver.max_iterations < 1)
      throw std::invalid_argument("scenario: exact_solver.max_iterations must be >= 1");
  }

  if (j.contains("subspace_cache"))
    spec.subspace_cache = detail::require_field<std::string>(j, "subspace_cache");
  return spec;
}

inline ScenarioSpec parse_scenario(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scenario: invalid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

/// Serializes the fully resolved spec (after CLI overrides) for the sidecar.
inline nlohmann::json scenario_to_json(const ScenarioSpec& spec) {
  nlohmann::json j;
  j["version"] = 1;
  j["geometry"] = spec.geometry_descriptor;
  auto& sources = j["sources"];
  for (const auto& s : spec.sources) {
    sources.push_back({{"elevation_deg", s.direction.elevation * 180.0 / pi},
                       {"azimuth_deg", s.direction.azimuth * 180.0 / pi},
                       {"power", s.power}});
  }
  j["noise_variance"] = spec.noise_variance;
  j["snapshots"] = spec.snapshot_counts;
  j["snr_db"] = spec.snr_db;
  j["trials"] = spec.trials;
  j["seed"] = spec.seed;
  auto& est = j["estimators"];
  est = nlohmann::json::array();
  for (auto k : spec.estimators) est.push_back(to_string(k));
  if (const auto* r = std::get_if<ResolutionEval>(&spec.evaluation)) {
    j["evaluation"] = {{"kind", "resolution"},
                       {"window_deg", r->window_deg},
                       {"scan_step_deg", r->scan_step_deg}};
  } else {
    const auto& s = std::get<SubspaceDistanceEval>(spec.evaluation);
    j["evaluation"] = {{"kind", "subspace_distance"}, {"k", s.subspace_dim}};
  }
  if (const auto* known = std::get_if<KnownNoise>(&spec.noise_policy)) {
    j["noise_policy"] = {{"kind", "known"}, {"variance", known->variance}};
  } else if (const auto* floor = std::get_if<EstimateFloor>(&spec.noise_policy)) {
    j["noise_policy"] = {{"kind", "estimate_floor"}, {"sources", floor->source_count}};
  } else {
    j["noise_policy"] = {{"kind", "none"}};
  }
  j["exact_solver"] = {{"tolerance", spec.exact_solver.tolerance},
                       {"max_iterations", spec.exact_solver.max_iterations}};
  if (spec.subspace_cache) j["subspace_cache"] = *spec.subspace_cache;
  return j;
}

}  // namespace subcov
