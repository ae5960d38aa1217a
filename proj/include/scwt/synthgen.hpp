#pragma once

// Seeded synthetic cohorts with class-dependent subcortical rhythms, and
// planted single-dipole recordings for localization checks.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "scwt/forward.hpp"
#include "scwt/scout.hpp"

namespace scwt {

/// One spectral component: sinusoids spread over [center - bw/2, center + bw/2].
struct BandComponent {
  double center_hz = 10.0;
  double bandwidth_hz = 4.0;
  double power = 1.0;
};

/// Per-region list of band components for one class.
using ClassProfile = std::array<std::vector<BandComponent>, kNumRegions>;

struct CohortConfig {
  int subjects_per_class = 9;
  double duration_s = 6.0;
  double sampling_rate = 1000.0;
  std::array<ClassProfile, kNumClasses> profiles = default_profiles();
  int sinusoids_per_band = 6;
  double source_amplitude = 10.0;       // nA*m RMS of a unit-power region signal
  double background_amplitude = 2.0;    // nA*m RMS of each background source
  double noise_sigma = 0.05;            // microvolts
  std::uint64_t seed = 1;

  /// AD centred on 1-6 Hz, FTD/MCI on 4-8 Hz, HC on 8-12 Hz, in every region.
  static std::array<ClassProfile, kNumClasses> default_profiles();

  void validate() const;
  nlohmann::json to_json() const;
  static CohortConfig from_json(const nlohmann::json& j);
};

struct SourceSpaceConfig {
  double sphere_radius = 0.09;
  double conductivity = 0.33;
  int electrodes = 32;
  int sources_per_region = 4;
  int background_sources = 26;
  double background_max_radius = 0.8;  // fraction of the sphere radius
  std::uint64_t seed = 7;

  void validate() const;
  nlohmann::json to_json() const;
  static SourceSpaceConfig from_json(const nlohmann::json& j);
};

struct SyntheticHead {
  HeadGeometry geometry;
  Atlas atlas;
};

/// Region sources are drawn uniformly inside 80% of each structure ball
/// (mirrored for the left hemisphere); background sources fill the rest of
/// the inner sphere outside every ball. Orientations are uniform on the sphere.
SyntheticHead build_synthetic_head(const SourceSpaceConfig& config);

/// Region rhythm as a sum of random-phase sinusoids. Each component
/// contributes `sinusoids_per_band` tones with frequencies uniform in its band
/// and equal amplitudes chosen so the component's mean power is `power`.
Eigen::VectorXd band_limited_signal(const std::vector<BandComponent>& components, int sinusoids_per_band,
                                    Eigen::Index samples, double sampling_rate, std::mt19937_64& rng);

/// Broadband tones at 1..40 Hz with amplitude proportional to f^(-1/2),
/// random phases, normalized to unit RMS.
Eigen::VectorXd pink_like_signal(Eigen::Index samples, double sampling_rate, std::mt19937_64& rng);

struct SubjectRecording {
  std::string subject;
  ClassLabel label = ClassLabel::HC;
  std::uint64_t seed = 0;
  ScalpRecording recording;
};

/// Subjects are ordered class by class; subject k (0-based over the whole
/// cohort) draws all of its randomness from seed + k.
std::vector<SubjectRecording> generate_cohort(const CohortConfig& config, const LeadField& lead_field,
                                              const Atlas& atlas);

struct PlantedRecording {
  ScalpRecording recording;
  Eigen::Index source_index = 0;
};

/// recording = A[:, index] * waveform^T + noise.
PlantedRecording plant_dipole(const LeadField& lead_field, Eigen::Index source_index,
                              const Eigen::VectorXd& waveform, double noise_sigma, std::uint64_t seed = 0,
                              double sampling_rate = 512.0);

}  // namespace scwt
