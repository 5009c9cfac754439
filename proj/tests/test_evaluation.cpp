#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "subcov/evaluation.hpp"

using namespace subcov;

namespace {

HermitianMatrixd model_covariance(const ArrayGeometryd& geom,
                                  const std::vector<double>& angles_deg, double power,
                                  double noise_variance) {
  const Eigen::Index n = geom.n_elements();
  CMatrixXd r = noise_variance * CMatrixXd::Identity(n, n);
  for (double deg : angles_deg) {
    const CVectorXd v = steering_vector(geom, Direction::from_degrees(deg));
    r += power * v * v.adjoint();
  }
  return HermitianMatrixd(r);
}

CMatrixXd random_unitary(Eigen::Index n, std::mt19937& gen) {
  std::normal_distribution<double> dist;
  CMatrixXd a(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = {dist(gen), dist(gen)};
  return orthonormal_columns(a);
}

}  // namespace

TEST_CASE("signal_subspace") {
  SUBCASE("diag(3, 2, 1) with k = 2 spans {e1, e2}") {
    CMatrixXd d = CMatrixXd::Zero(3, 3);
    d(0, 0) = 3;
    d(1, 1) = 2;
    d(2, 2) = 1;
    const CMatrixXd u = signal_subspace(HermitianMatrixd{d}, 2);
    REQUIRE(u.cols() == 2);
    CMatrixXd expect = CMatrixXd::Zero(3, 2);
    expect(0, 0) = 1;
    expect(1, 1) = 1;
    CHECK(subspace_distance(u, expect) < 1e-12);
    // leading eigenvector first
    CHECK(std::abs(std::abs(u(0, 0)) - 1.0) < 1e-12);
  }

  SUBCASE("exact covariance recovers the steering span") {
    const auto geom = make_ula(10, 0.5);
    const std::vector<double> angles{45.0, 50.0, 120.0};
    const auto r = model_covariance(geom, angles, 1.0, 1.0);
    const CMatrixXd u = signal_subspace(r, 3);
    CMatrixXd steering(10, 3);
    for (int i = 0; i < 3; ++i)
      steering.col(i) = steering_vector(geom, Direction::from_degrees(angles[i]));
    CHECK(subspace_distance(u, steering) <= 1e-8);
  }

  SUBCASE("k bounds") {
    const HermitianMatrixd r{CMatrixXd::Identity(4, 4)};
    CHECK_THROWS_AS(signal_subspace(r, 0), std::invalid_argument);
    CHECK_THROWS_AS(signal_subspace(r, 4), std::invalid_argument);
  }
}

TEST_CASE("music_spectrum") {
  const auto geom = make_ula(10, 0.5);

  SUBCASE("noise-free MUSIC is exact to the scan grid") {
    const auto r = model_covariance(geom, {45.0, 50.0}, 1.0, 1.0);
    const Spectrum spec = music_spectrum(r, geom, 2, ScanGrid{});
    const auto peaks = local_maxima(spec);
    REQUIRE(peaks.size() >= 2);
    const double a1 = spec.angles_deg[peaks[0]], a2 = spec.angles_deg[peaks[1]];
    CHECK(std::min(a1, a2) == doctest::Approx(45.0).epsilon(0.11 / 45.0));
    CHECK(std::max(a1, a2) == doctest::Approx(50.0).epsilon(0.11 / 50.0));
  }

  SUBCASE("white noise with p = N - 1 yields a near-flat spectrum") {
    const auto r = HermitianMatrixd{CMatrixXd::Identity(10, 10)};
    const Spectrum spec = music_spectrum(r, geom, 9, ScanGrid{});
    const double lo = *std::min_element(spec.values.begin(), spec.values.end());
    const double hi = *std::max_element(spec.values.begin(), spec.values.end());
    CHECK(hi / lo < 10.0);
  }

  SUBCASE("scaling the covariance moves values but not peak locations") {
    const auto r = model_covariance(geom, {60.0, 100.0}, 2.0, 1.0);
    const HermitianMatrixd scaled{7.5 * r.matrix()};
    const Spectrum a = music_spectrum(r, geom, 2, ScanGrid{});
    const Spectrum b = music_spectrum(scaled, geom, 2, ScanGrid{});
    const auto pa = local_maxima(a), pb = local_maxima(b);
    REQUIRE(pa.size() >= 2);
    REQUIRE(pb.size() >= 2);
    CHECK(pa[0] == pb[0]);
    CHECK(pa[1] == pb[1]);
  }

  SUBCASE("argument validation") {
    const auto r = HermitianMatrixd{CMatrixXd::Identity(10, 10)};
    CHECK_THROWS_AS(music_spectrum(r, geom, 0, ScanGrid{}), std::invalid_argument);
    CHECK_THROWS_AS(music_spectrum(r, geom, 10, ScanGrid{}), std::invalid_argument);
    CHECK_THROWS_AS(music_spectrum(r, make_ula(4, 0.5), 2, ScanGrid{}),
                    std::invalid_argument);
  }
}

TEST_CASE("resolution_event") {
  const auto geom = make_ula(10, 0.5);

  SUBCASE("noise-free two-source spectrum resolves") {
    const auto r = model_covariance(geom, {45.0, 50.0}, 1.0, 1.0);
    const Spectrum spec = music_spectrum(r, geom, 2, ScanGrid{});
    const auto event = resolution_event(spec, 45.0, 50.0, 2.0);
    CHECK(event.resolved);
    REQUIRE(event.detected_angles_deg.size() == 2);
  }

  SUBCASE("a single merged peak at the midpoint does not resolve") {
    Spectrum spec;
    for (double a = 40.0; a <= 55.0 + 1e-9; a += 0.1) {
      spec.angles_deg.push_back(a);
      // one bump centered between the true angles
      spec.values.push_back(1.0 + std::exp(-(a - 47.5) * (a - 47.5)));
    }
    const auto event = resolution_event(spec, 45.0, 50.0, 2.0);
    CHECK_FALSE(event.resolved);
  }

  SUBCASE("two peaks with no dip between them do not resolve") {
    // plateau-ish double bump whose midpoint is higher than one of the peaks
    Spectrum spec;
    for (double a = 40.0; a <= 55.0 + 1e-9; a += 0.1) {
      spec.angles_deg.push_back(a);
      const double bump = std::exp(-(a - 46.0) * (a - 46.0) / 8.0) +
                          std::exp(-(a - 49.0) * (a - 49.0) / 8.0);
      spec.values.push_back(bump);
    }
    const auto event = resolution_event(spec, 45.0, 50.0, 2.0);
    CHECK_FALSE(event.resolved);
  }

  SUBCASE("peaks outside the window do not resolve") {
    const auto r = model_covariance(geom, {45.0, 50.0}, 1.0, 1.0);
    const Spectrum spec = music_spectrum(r, geom, 2, ScanGrid{});
    const auto event = resolution_event(spec, 70.0, 80.0, 2.0);
    CHECK_FALSE(event.resolved);
  }

  SUBCASE("widening the window never un-resolves") {
    std::mt19937 gen(3);
    std::normal_distribution<double> dist;
    const auto base = model_covariance(geom, {45.0, 50.0}, 1.0, 1.0);
    for (int rep = 0; rep < 25; ++rep) {
      CMatrixXd noise(10, 10);
      for (Eigen::Index j = 0; j < 10; ++j)
        for (Eigen::Index i = 0; i < 10; ++i) noise(i, j) = {dist(gen), dist(gen)};
      const HermitianMatrixd r{base.matrix() + 0.5 * hermitian_part(noise)};
      const Spectrum spec = music_spectrum(r, geom, 2, ScanGrid{});
      bool prev = false;
      for (double window : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const bool now = resolution_event(spec, 45.0, 50.0, window).resolved;
        if (prev) CHECK(now);
        prev = now;
      }
    }
  }

  SUBCASE("validation") {
    const auto r = model_covariance(geom, {45.0, 50.0}, 1.0, 1.0);
    const Spectrum spec = music_spectrum(r, geom, 2, ScanGrid{});
    CHECK_THROWS_AS(resolution_event(spec, 45.0, 50.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(resolution_event(spec, 45.0, 200.0, 2.0), std::invalid_argument);
  }
}

TEST_CASE("subspace_distance") {
  SUBCASE("identical and orthogonal subspaces") {
    CMatrixXd e1 = CMatrixXd::Zero(3, 1);
    e1(0, 0) = 1;
    CMatrixXd e2 = CMatrixXd::Zero(3, 1);
    e2(1, 0) = 1;
    CHECK(subspace_distance(e1, e1) == doctest::Approx(0.0));
    CHECK(subspace_distance(e1, e2) == doctest::Approx(1.0));
  }

  SUBCASE("principal angle identity: dist(e1, cos a e1 + sin a e2) = sin a") {
    for (double deg : {30.0, 10.0, 60.0, 45.0}) {
      const double a = deg * pi / 180.0;
      CMatrixXd u = CMatrixXd::Zero(2, 1);
      u(0, 0) = 1;
      CMatrixXd v = CMatrixXd::Zero(2, 1);
      v(0, 0) = std::cos(a);
      v(1, 0) = std::sin(a);
      CHECK(subspace_distance(u, v) == doctest::Approx(std::sin(a)).epsilon(1e-12));
    }
  }

  SUBCASE("symmetry and basis invariance") {
    std::mt19937 gen(8);
    std::normal_distribution<double> dist;
    for (int rep = 0; rep < 30; ++rep) {
      CMatrixXd u(6, 2), v(6, 2);
      for (Eigen::Index j = 0; j < 2; ++j)
        for (Eigen::Index i = 0; i < 6; ++i) {
          u(i, j) = {dist(gen), dist(gen)};
          v(i, j) = {dist(gen), dist(gen)};
        }
      const double duv = subspace_distance(u, v);
      CHECK(duv >= 0.0);
      CHECK(duv <= 1.0 + 1e-12);
      CHECK(std::abs(duv - subspace_distance(v, u)) < 1e-10);

      const CMatrixXd w = random_unitary(2, gen);
      CHECK(std::abs(duv - subspace_distance(CMatrixXd(u * w), v)) < 1e-10);
    }
  }

  SUBCASE("shape and rank validation") {
    CMatrixXd u = CMatrixXd::Identity(4, 2);
    CMatrixXd v = CMatrixXd::Identity(4, 3);
    CHECK_THROWS_AS(subspace_distance(u, v), std::invalid_argument);
    CMatrixXd deficient(4, 2);
    deficient.col(0) = CVectorXd::Ones(4);
    deficient.col(1) = CVectorXd::Ones(4);
    CHECK_THROWS_AS(subspace_distance(deficient, u), std::invalid_argument);
  }
}
