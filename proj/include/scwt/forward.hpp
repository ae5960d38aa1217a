#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "scwt/types.hpp"

namespace scwt {

/// Homogeneous conducting sphere with point electrodes on its surface and
/// fixed-orientation current dipoles inside it. Lengths in metres,
/// conductivity in S/m.
struct HeadGeometry {
  double sphere_radius = 0.09;
  double conductivity = 0.33;
  std::vector<Eigen::Vector3d> electrode_positions;
  std::vector<Eigen::Vector3d> source_positions;
  std::vector<Eigen::Vector3d> source_orientations;

  /// Throws GeometryError for sources on/outside the sphere or electrodes off
  /// the surface, ValidationError for non-unit orientations or bad scalars.
  void validate() const;

  nlohmann::json to_json() const;
  static HeadGeometry from_json(const nlohmann::json& j);
};

/// Channels x sources gain matrix. Entries are microvolts per nA*m of dipole
/// moment.
struct LeadField {
  Eigen::MatrixXd gain;
  std::optional<HeadGeometry> geometry;
  std::string provenance = "spherical";

  Eigen::Index channels() const noexcept { return gain.rows(); }
  Eigen::Index sources() const noexcept { return gain.cols(); }
  void validate() const;
};

struct ScalpRecording {
  Eigen::MatrixXd data;  // channels x samples, microvolts
  double sampling_rate = 0.0;
  std::vector<std::string> channel_labels;
  std::optional<ClassLabel> label;

  void validate() const;
};

inline constexpr int kDefaultSeriesOrder = 60;

/// Electrode potential of a unit dipole in a homogeneous sphere, as a
/// truncated Legendre series. Returns microvolts per nA*m.
double sphere_dipole_potential(const Eigen::Vector3d& electrode, const Eigen::Vector3d& dipole_position,
                               const Eigen::Vector3d& dipole_moment, double radius, double conductivity,
                               int series_order);

/// gain(m, n) is the potential at electrode m from a unit dipole at source n
/// along its orientation. `series_order` must be at least 40.
LeadField build_spherical_lead_field(const HeadGeometry& geometry, int series_order = kDefaultSeriesOrder);

/// Loads a rank-2 gain matrix from a tensor container; provenance "external".
LeadField load_lead_field(const std::filesystem::path& path);
void save_lead_field(const std::filesystem::path& path, const LeadField& lead_field);

/// data = A * S + Z, with Z i.i.d. N(0, noise_sigma^2) drawn from `seed`.
ScalpRecording project_sources(const LeadField& lead_field, const Eigen::MatrixXd& sources, double noise_sigma,
                               std::uint64_t seed = 0, double sampling_rate = 512.0);

/// Approximately uniform electrode layout on the sphere cap z >= min_z * radius
/// (Fibonacci lattice).
std::vector<Eigen::Vector3d> cap_electrode_layout(int count, double radius, double min_z = -0.3);

std::vector<std::string> default_channel_labels(Eigen::Index count);

}  // namespace scwt
