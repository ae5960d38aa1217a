#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "scwt/error.hpp"
#include "scwt/forward.hpp"

using namespace scwt;

namespace {

constexpr double kR = 0.09;
constexpr double kSigma = 0.33;

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  return v.normalized();
}

// Random geometry with sources inside `max_rho` times the radius.
HeadGeometry random_geometry(int electrodes, int sources, double max_rho, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HeadGeometry g;
  g.sphere_radius = kR;
  g.conductivity = kSigma;
  g.electrode_positions = cap_electrode_layout(electrodes, kR);
  for (int n = 0; n < sources; ++n) {
    g.source_positions.push_back(random_unit(rng) * kR * max_rho * std::cbrt(u(rng)));
    g.source_orientations.push_back(random_unit(rng));
  }
  return g;
}

bool close_rel(double a, double b, double rel, double floor) {
  return std::abs(a - b) <= rel * std::max(std::abs(b), floor);
}

}  // namespace

TEST_SUITE("forward") {
  TEST_CASE("central dipole gives antipodal potentials of opposite sign") {
    const Eigen::Vector3d dir = Eigen::Vector3d(1.0, 2.0, -0.5).normalized();
    HeadGeometry g;
    g.electrode_positions = {dir * kR, -dir * kR};
    g.source_positions = {Eigen::Vector3d::Zero()};
    g.source_orientations = {Eigen::Vector3d(0.3, 0.4, 0.5).normalized()};
    const LeadField lf = build_spherical_lead_field(g);
    CHECK(lf.gain(0, 0) != 0.0);
    CHECK(lf.gain(0, 0) == doctest::Approx(-lf.gain(1, 0)).epsilon(1e-14));
  }

  TEST_CASE("central z dipole at the north pole matches the order-200 series oracle") {
    const Eigen::Vector3d north(0.0, 0.0, kR);
    const Eigen::Vector3d z(0.0, 0.0, 1.0);
    const double value = sphere_dipole_potential(north, Eigen::Vector3d::Zero(), z, kR, kSigma, kDefaultSeriesOrder);
    const double series = oracle::sphere_potential_fd(north, Eigen::Vector3d::Zero(), z, kR, kSigma, 200);
    const double closed = oracle::central_dipole_potential(north, z, kR, kSigma);
    CHECK(close_rel(value, series, 1e-8, 0.0));
    CHECK(close_rel(value, closed, 1e-12, 0.0));
  }

  TEST_CASE("off-centre dipoles match the series and closed-form oracles") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto electrodes = cap_electrode_layout(16, kR);
    const double scale = oracle::central_dipole_potential(Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitZ(), kR, kSigma);
    int checked = 0;
    for (int trial = 0; trial < 25; ++trial) {
      const double rho = 0.05 + 0.45 * u(rng);
      const Eigen::Vector3d pos = random_unit(rng) * rho * kR;
      const Eigen::Vector3d moment = random_unit(rng);
      for (const auto& e : electrodes) {
        const double value = sphere_dipole_potential(e, pos, moment, kR, kSigma, kDefaultSeriesOrder);
        const double series = oracle::sphere_potential_fd(e, pos, moment, kR, kSigma, 200);
        const double closed = oracle::sphere_potential_closed_form(e, pos, moment, kR, kSigma);
        CHECK(close_rel(value, series, 1e-8, scale));
        CHECK(close_rel(value, closed, 1e-8, scale));
        ++checked;
      }
    }
    CHECK(checked == 400);
  }

  TEST_CASE("deep sources converge with a higher series order") {
    const Eigen::Vector3d e = Eigen::Vector3d(0.2, -0.3, 1.0).normalized() * kR;
    const Eigen::Vector3d pos = Eigen::Vector3d(0.1, 0.2, 0.6).normalized() * 0.85 * kR;
    const Eigen::Vector3d moment = Eigen::Vector3d(1.0, 0.0, 1.0).normalized();
    const double value = sphere_dipole_potential(e, pos, moment, kR, kSigma, 200);
    const double closed = oracle::sphere_potential_closed_form(e, pos, moment, kR, kSigma);
    CHECK(close_rel(value, closed, 1e-8, 0.0));
  }

  TEST_CASE("gain columns are linear in the dipole moment") {
    HeadGeometry g = random_geometry(12, 5, 0.7, 3);
    const LeadField lf = build_spherical_lead_field(g);
    for (int n = 0; n < 5; ++n) {
      for (int m = 0; m < 12; ++m) {
        const double doubled = sphere_dipole_potential(g.electrode_positions[m], g.source_positions[n],
                                                       2.0 * g.source_orientations[n], kR, kSigma, kDefaultSeriesOrder);
        CHECK(doubled == doctest::Approx(2.0 * lf.gain(m, n)).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("gain is rotation equivariant") {
    const HeadGeometry g = random_geometry(20, 15, 0.8, 5);
    const Eigen::Matrix3d rot =
        (Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()) * Eigen::AngleAxisd(-1.3, Eigen::Vector3d::UnitY()))
            .toRotationMatrix();
    HeadGeometry r = g;
    for (auto& v : r.electrode_positions) v = rot * v;
    for (auto& v : r.source_positions) v = rot * v;
    for (auto& v : r.source_orientations) v = rot * v;
    const Eigen::MatrixXd a = build_spherical_lead_field(g).gain;
    const Eigen::MatrixXd b = build_spherical_lead_field(r).gain;
    CHECK((a - b).norm() <= 1e-8 * a.norm());
  }

  TEST_CASE("geometry errors") {
    HeadGeometry g = random_geometry(8, 3, 0.5, 1);
    g.source_positions[1] = Eigen::Vector3d(kR, 0, 0);
    CHECK_THROWS_AS(build_spherical_lead_field(g), GeometryError);
    g = random_geometry(8, 3, 0.5, 1);
    g.source_orientations[2] *= 1.5;
    CHECK_THROWS_AS(build_spherical_lead_field(g), ValidationError);
    g = random_geometry(8, 3, 0.5, 1);
    g.electrode_positions[0] *= 0.9;
    CHECK_THROWS_AS(build_spherical_lead_field(g), GeometryError);
    CHECK_THROWS_AS(build_spherical_lead_field(random_geometry(8, 3, 0.5, 1), 39), ValidationError);
  }

  TEST_CASE("geometry json round trip") {
    const HeadGeometry g = random_geometry(6, 4, 0.5, 2);
    const HeadGeometry back = HeadGeometry::from_json(g.to_json());
    CHECK(build_spherical_lead_field(back).gain == build_spherical_lead_field(g).gain);
  }

  TEST_CASE("project_sources examples") {
    LeadField lf;
    lf.gain = Eigen::Matrix2d::Identity();
    Eigen::MatrixXd s(2, 2);
    s << 1, 2, 3, 4;
    CHECK(project_sources(lf, s, 0.0).data == s);
    CHECK(project_sources(lf, Eigen::MatrixXd::Zero(2, 7), 0.0).data.isZero(0.0));
    CHECK_THROWS_AS(project_sources(lf, Eigen::MatrixXd::Zero(3, 7), 0.0), ShapeError);
    CHECK_THROWS_AS(project_sources(lf, s, -1.0), ValidationError);

    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    LeadField big;
    big.gain = Eigen::MatrixXd::NullaryExpr(8, 20, [&] { return n(rng); });
    const Eigen::MatrixXd src = Eigen::MatrixXd::NullaryExpr(20, 100, [&] { return n(rng); });
    const Eigen::MatrixXd expected = oracle::naive_matmul(big.gain, src);
    const Eigen::MatrixXd got = project_sources(big, src, 0.0).data;
    CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-12 * expected.cwiseAbs().maxCoeff());
  }

  TEST_CASE("projection is linear and deterministic") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0.0, 1.0);
    LeadField lf;
    lf.gain = Eigen::MatrixXd::NullaryExpr(6, 10, [&] { return n(rng); });
    const Eigen::MatrixXd s1 = Eigen::MatrixXd::NullaryExpr(10, 40, [&] { return n(rng); });
    const Eigen::MatrixXd s2 = Eigen::MatrixXd::NullaryExpr(10, 40, [&] { return n(rng); });
    const double a = 1.7;
    const double b = -0.4;
    const Eigen::MatrixXd lhs = project_sources(lf, a * s1 + b * s2, 0.0).data;
    const Eigen::MatrixXd rhs = a * project_sources(lf, s1, 0.0).data + b * project_sources(lf, s2, 0.0).data;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * rhs.cwiseAbs().maxCoeff());

    CHECK(project_sources(lf, s1, 0.0).data == project_sources(lf, s1, 0.0).data);
    CHECK(project_sources(lf, s1, 0.5, 4).data == project_sources(lf, s1, 0.5, 4).data);
    CHECK(project_sources(lf, s1, 0.5, 4).data != project_sources(lf, s1, 0.5, 5).data);
  }
}
