#include "scwt/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "scwt/error.hpp"
#include "scwt/tensor_io.hpp"

namespace scwt {
namespace {

// Volts per A*m  ->  microvolts per nA*m.
constexpr double kGainUnitScale = 1e-9 * 1e6;

constexpr double kOrientationTolerance = 1e-12;
constexpr double kElectrodeRelTolerance = 1e-9;

nlohmann::json vectors_to_json(const std::vector<Eigen::Vector3d>& vs) {
  auto arr = nlohmann::json::array();
  for (const auto& v : vs) arr.push_back({v.x(), v.y(), v.z()});
  return arr;
}

std::vector<Eigen::Vector3d> vectors_from_json(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw ValidationError(std::string("geometry field '") + field + "' must be an array");
  std::vector<Eigen::Vector3d> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 3) {
      throw ValidationError(std::string("geometry field '") + field + "' entries must be 3-vectors");
    }
    out.emplace_back(e[0].get<double>(), e[1].get<double>(), e[2].get<double>());
  }
  return out;
}

}  // namespace

void HeadGeometry::validate() const {
  if (!(sphere_radius > 0.0) || !std::isfinite(sphere_radius)) {
    throw ValidationError("sphere radius must be positive and finite");
  }
  if (!(conductivity > 0.0) || !std::isfinite(conductivity)) {
    throw ValidationError("conductivity must be positive and finite");
  }
  if (electrode_positions.size() < 2) throw ValidationError("at least two electrodes are required");
  if (source_positions.empty()) throw ValidationError("at least one source is required");
  if (source_orientations.size() != source_positions.size()) {
    throw ValidationError("source orientation count does not match source position count");
  }
  for (std::size_t m = 0; m < electrode_positions.size(); ++m) {
    const double r = electrode_positions[m].norm();
    if (std::abs(r - sphere_radius) > kElectrodeRelTolerance * sphere_radius) {
      throw GeometryError("electrode " + std::to_string(m) + " is not on the sphere surface");
    }
  }
  for (std::size_t n = 0; n < source_positions.size(); ++n) {
    if (!source_positions[n].allFinite() || !(source_positions[n].norm() < sphere_radius)) {
      throw GeometryError("source " + std::to_string(n) + " is not strictly inside the sphere");
    }
    if (std::abs(source_orientations[n].norm() - 1.0) > kOrientationTolerance) {
      throw ValidationError("source orientation " + std::to_string(n) + " is not unit-norm");
    }
  }
}

nlohmann::json HeadGeometry::to_json() const {
  return {
      {"sphere_radius", sphere_radius},
      {"conductivity", conductivity},
      {"laterality", "positive x = right hemisphere"},
      {"electrode_positions", vectors_to_json(electrode_positions)},
      {"source_positions", vectors_to_json(source_positions)},
      {"source_orientations", vectors_to_json(source_orientations)},
  };
}

HeadGeometry HeadGeometry::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("geometry document must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "sphere_radius" && key != "conductivity" && key != "laterality" && key != "electrode_positions" &&
        key != "source_positions" && key != "source_orientations") {
      throw ValidationError("unknown geometry field '" + key + "'");
    }
  }
  HeadGeometry g;
  g.sphere_radius = j.value("sphere_radius", g.sphere_radius);
  g.conductivity = j.value("conductivity", g.conductivity);
  if (j.contains("electrode_positions")) g.electrode_positions = vectors_from_json(j["electrode_positions"], "electrode_positions");
  if (j.contains("source_positions")) g.source_positions = vectors_from_json(j["source_positions"], "source_positions");
  if (j.contains("source_orientations")) {
    g.source_orientations = vectors_from_json(j["source_orientations"], "source_orientations");
  }
  return g;
}

void LeadField::validate() const {
  if (gain.rows() < 2) throw ValidationError("lead field needs at least two channels");
  if (gain.cols() < 1) throw ValidationError("lead field needs at least one source");
  if (!gain.allFinite()) throw NumericError("lead field has non-finite entries");
}

void ScalpRecording::validate() const {
  if (!(sampling_rate > 0.0)) throw ValidationError("sampling rate must be positive");
  if (static_cast<std::size_t>(data.rows()) != channel_labels.size()) {
    throw ShapeError("recording has " + std::to_string(data.rows()) + " rows but " +
                     std::to_string(channel_labels.size()) + " channel labels");
  }
}

double sphere_dipole_potential(const Eigen::Vector3d& electrode, const Eigen::Vector3d& dipole_position,
                               const Eigen::Vector3d& dipole_moment, double radius, double conductivity,
                               int series_order) {
  // Surface potential of a current dipole in an insulated homogeneous sphere:
  //   V = 1/(4 pi sigma) sum_n (2n+1)/n R^-(n+1) p . grad_r0 [ r0^n P_n(cos g) ]
  // with grad [r^n P_n(c)] = r^(n-1) [ n P_n(c) rhat + P_n'(c) (ehat - c rhat) ].
  const Eigen::Vector3d ehat = electrode.normalized();
  const double r0 = dipole_position.norm();
  const double prefactor = kGainUnitScale / (4.0 * std::numbers::pi * conductivity * radius * radius);

  if (r0 <= 1e-15 * radius) {
    // Only the dipolar n = 1 term survives at the centre.
    return prefactor * 3.0 * dipole_moment.dot(ehat);
  }

  const Eigen::Vector3d rhat = dipole_position / r0;
  const double c = std::clamp(rhat.dot(ehat), -1.0, 1.0);
  const double p_radial = dipole_moment.dot(rhat);
  const double p_tangential = dipole_moment.dot(ehat) - c * p_radial;
  const double rho = r0 / radius;

  double p_prev = 1.0;  // P_0
  double p_cur = c;     // P_1
  double dp_prev = 0.0; // P_0'
  double dp_cur = 1.0;  // P_1'
  double rho_pow = 1.0; // rho^(n-1)
  double sum = 0.0;
  for (int n = 1; n <= series_order; ++n) {
    const double dn = n;
    sum += (2.0 * dn + 1.0) / dn * rho_pow * (dn * p_cur * p_radial + dp_cur * p_tangential);
    const double p_next = ((2.0 * dn + 1.0) * c * p_cur - dn * p_prev) / (dn + 1.0);
    const double dp_next = dp_prev + (2.0 * dn + 1.0) * p_cur;
    p_prev = p_cur;
    p_cur = p_next;
    dp_prev = dp_cur;
    dp_cur = dp_next;
    rho_pow *= rho;
  }
  return prefactor * sum;
}

LeadField build_spherical_lead_field(const HeadGeometry& geometry, int series_order) {
  geometry.validate();
  if (series_order < 40) throw ValidationError("series truncation order must be at least 40");
  const auto m_count = static_cast<Eigen::Index>(geometry.electrode_positions.size());
  const auto n_count = static_cast<Eigen::Index>(geometry.source_positions.size());
  LeadField lf;
  lf.gain.resize(m_count, n_count);
  for (Eigen::Index n = 0; n < n_count; ++n) {
    const auto& pos = geometry.source_positions[static_cast<std::size_t>(n)];
    const auto& ori = geometry.source_orientations[static_cast<std::size_t>(n)];
    for (Eigen::Index m = 0; m < m_count; ++m) {
      lf.gain(m, n) = sphere_dipole_potential(geometry.electrode_positions[static_cast<std::size_t>(m)], pos, ori,
                                              geometry.sphere_radius, geometry.conductivity, series_order);
    }
  }
  lf.geometry = geometry;
  lf.provenance = "spherical";
  return lf;
}

LeadField load_lead_field(const std::filesystem::path& path) {
  const Tensor t = read_tensor(path);
  if (t.rank() != 2) {
    throw FormatError(path.string() + ": lead field must be rank 2, header declares rank " + std::to_string(t.rank()));
  }
  LeadField lf;
  lf.gain = t.to_matrix();
  lf.provenance = "external";
  try {
    lf.validate();
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return lf;
}

void save_lead_field(const std::filesystem::path& path, const LeadField& lead_field) {
  write_matrix(path, lead_field.gain);
}

ScalpRecording project_sources(const LeadField& lead_field, const Eigen::MatrixXd& sources, double noise_sigma,
                               std::uint64_t seed, double sampling_rate) {
  if (sources.rows() != lead_field.sources()) {
    throw ShapeError("source matrix has " + std::to_string(sources.rows()) + " rows, lead field has " +
                     std::to_string(lead_field.sources()) + " sources");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ValidationError("noise sigma must be >= 0");
  ScalpRecording rec;
  rec.data = lead_field.gain * sources;
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (Eigen::Index c = 0; c < rec.data.cols(); ++c) {
      for (Eigen::Index r = 0; r < rec.data.rows(); ++r) rec.data(r, c) += noise(rng);
    }
  }
  rec.sampling_rate = sampling_rate;
  rec.channel_labels = default_channel_labels(rec.data.rows());
  return rec;
}

std::vector<Eigen::Vector3d> cap_electrode_layout(int count, double radius, double min_z) {
  if (count < 2) throw ValidationError("electrode count must be >= 2");
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Eigen::Vector3d> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (1.0 - min_z) * (i + 0.5) / count;
    const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    Eigen::Vector3d u(rxy * std::cos(phi), rxy * std::sin(phi), z);
    out.push_back(radius * u.normalized());
  }
  return out;
}

std::vector<std::string> default_channel_labels(Eigen::Index count) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) labels.push_back("E" + std::to_string(i + 1));
  return labels;
}

}  // namespace scwt
