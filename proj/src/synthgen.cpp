#include "scwt/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "scwt/error.hpp"
#include "scwt/json_keys.hpp"

namespace scwt {
namespace {

Eigen::Vector3d random_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Eigen::Vector3d v(normal(rng), normal(rng), normal(rng));
    const double n = v.norm();
    if (n > 1e-6) return v / n;
  }
}

Eigen::Vector3d random_point_in_ball(const Eigen::Vector3d& center, double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    const Eigen::Vector3d p(u(rng), u(rng), u(rng));
    if (p.squaredNorm() <= 1.0) return center + radius * p;
  }
}

nlohmann::json band_to_json(const BandComponent& b) {
  return {{"center_hz", b.center_hz}, {"bandwidth_hz", b.bandwidth_hz}, {"power", b.power}};
}

BandComponent band_from_json(const nlohmann::json& j) {
  require_known_keys(j, {"center_hz", "bandwidth_hz", "power"}, "band component");
  return {j.at("center_hz").get<double>(), j.at("bandwidth_hz").get<double>(), j.at("power").get<double>()};
}

}  // namespace

std::array<ClassProfile, kNumClasses> CohortConfig::default_profiles() {
  const std::array<BandComponent, kNumClasses> bands{{{3.5, 5.0, 1.0}, {6.0, 4.0, 1.0}, {10.0, 4.0, 1.0}}};
  std::array<ClassProfile, kNumClasses> out;
  for (int c = 0; c < kNumClasses; ++c) {
    for (auto& region : out[static_cast<std::size_t>(c)]) region = {bands[static_cast<std::size_t>(c)]};
  }
  return out;
}

void CohortConfig::validate() const {
  if (subjects_per_class < 1) throw ValidationError("subjects_per_class must be >= 1");
  if (!(duration_s > 0.0)) throw ValidationError("duration must be positive");
  if (!(sampling_rate > 0.0)) throw ValidationError("sampling rate must be positive");
  if (sinusoids_per_band < 1) throw ValidationError("sinusoids_per_band must be >= 1");
  if (!(source_amplitude >= 0.0) || !(background_amplitude >= 0.0) || !(noise_sigma >= 0.0)) {
    throw ValidationError("amplitudes and noise must be non-negative");
  }
  for (const auto& profile : profiles) {
    for (const auto& region : profile) {
      for (const auto& b : region) {
        if (!(b.power >= 0.0)) throw ValidationError("band power must be non-negative");
        if (!(b.bandwidth_hz >= 0.0) || !(b.center_hz - b.bandwidth_hz / 2.0 > 0.0)) {
          throw ValidationError("band must lie above 0 Hz");
        }
        if (!(b.center_hz + b.bandwidth_hz / 2.0 < sampling_rate / 2.0)) {
          throw ValidationError("band must lie below the Nyquist frequency");
        }
      }
    }
  }
}

nlohmann::json CohortConfig::to_json() const {
  nlohmann::json prof = nlohmann::json::object();
  for (int c = 0; c < kNumClasses; ++c) {
    auto regions = nlohmann::json::array();
    for (const auto& region : profiles[static_cast<std::size_t>(c)]) {
      auto bands = nlohmann::json::array();
      for (const auto& b : region) bands.push_back(band_to_json(b));
      regions.push_back(bands);
    }
    prof[std::string(class_name(class_from_index(c)))] = regions;
  }
  return {{"subjects_per_class", subjects_per_class},
          {"duration_s", duration_s},
          {"sampling_rate", sampling_rate},
          {"profiles", prof},
          {"sinusoids_per_band", sinusoids_per_band},
          {"source_amplitude", source_amplitude},
          {"background_amplitude", background_amplitude},
          {"noise_sigma", noise_sigma},
          {"seed", seed}};
}

CohortConfig CohortConfig::from_json(const nlohmann::json& j) {
  require_known_keys(j,
                     {"subjects_per_class", "duration_s", "sampling_rate", "profiles", "sinusoids_per_band",
                      "source_amplitude", "background_amplitude", "noise_sigma", "seed"},
                     "cohort");
  CohortConfig c;
  c.subjects_per_class = j.value("subjects_per_class", c.subjects_per_class);
  c.duration_s = j.value("duration_s", c.duration_s);
  c.sampling_rate = j.value("sampling_rate", c.sampling_rate);
  c.sinusoids_per_band = j.value("sinusoids_per_band", c.sinusoids_per_band);
  c.source_amplitude = j.value("source_amplitude", c.source_amplitude);
  c.background_amplitude = j.value("background_amplitude", c.background_amplitude);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.seed = j.value("seed", c.seed);
  if (j.contains("profiles")) {
    const auto& prof = j.at("profiles");
    require_known_keys(prof, {kClassNames[0], kClassNames[1], kClassNames[2]}, "cohort.profiles");
    for (const auto& item : prof.items()) {
      const auto cls = static_cast<std::size_t>(class_index(*parse_class_label(item.key())));
      const auto& regions = item.value();
      if (!regions.is_array() || regions.size() != kNumRegions) {
        throw SchemaError("profile for " + item.key() + " must list 6 regions");
      }
      for (std::size_t r = 0; r < kNumRegions; ++r) {
        auto& dst = c.profiles[cls][r];
        dst.clear();
        for (const auto& b : regions[r]) dst.push_back(band_from_json(b));
      }
    }
  }
  c.validate();
  return c;
}

void SourceSpaceConfig::validate() const {
  if (!(sphere_radius > 0.0) || !(conductivity > 0.0)) throw ValidationError("head scalars must be positive");
  if (electrodes < 2) throw ValidationError("need at least 2 electrodes");
  if (sources_per_region < 1) throw ValidationError("sources_per_region must be >= 1");
  if (background_sources < 0) throw ValidationError("background_sources must be >= 0");
  if (!(background_max_radius > 0.0 && background_max_radius < 1.0)) {
    throw ValidationError("background_max_radius must be in (0, 1)");
  }
}

nlohmann::json SourceSpaceConfig::to_json() const {
  return {{"sphere_radius", sphere_radius},           {"conductivity", conductivity},
          {"electrodes", electrodes},                 {"sources_per_region", sources_per_region},
          {"background_sources", background_sources}, {"background_max_radius", background_max_radius},
          {"seed", seed}};
}

SourceSpaceConfig SourceSpaceConfig::from_json(const nlohmann::json& j) {
  require_known_keys(j,
                     {"sphere_radius", "conductivity", "electrodes", "sources_per_region", "background_sources",
                      "background_max_radius", "seed"},
                     "geometry");
  SourceSpaceConfig c;
  c.sphere_radius = j.value("sphere_radius", c.sphere_radius);
  c.conductivity = j.value("conductivity", c.conductivity);
  c.electrodes = j.value("electrodes", c.electrodes);
  c.sources_per_region = j.value("sources_per_region", c.sources_per_region);
  c.background_sources = j.value("background_sources", c.background_sources);
  c.background_max_radius = j.value("background_max_radius", c.background_max_radius);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

SyntheticHead build_synthetic_head(const SourceSpaceConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const RegionSpec spec = RegionSpec::standard(config.sphere_radius);

  SyntheticHead head;
  auto& g = head.geometry;
  g.sphere_radius = config.sphere_radius;
  g.conductivity = config.conductivity;
  g.electrode_positions = cap_electrode_layout(config.electrodes, config.sphere_radius);

  for (int r = 0; r < kNumRegions; ++r) {
    const auto& ball = spec.balls[static_cast<std::size_t>(r % kNumStructures)];
    Eigen::Vector3d center = ball.center;
    if (r < kNumStructures) center.x() = -center.x();
    for (int k = 0; k < config.sources_per_region; ++k) {
      g.source_positions.push_back(random_point_in_ball(center, 0.8 * ball.radius, rng));
      g.source_orientations.push_back(random_unit_vector(rng));
    }
  }

  auto inside_any_ball = [&](const Eigen::Vector3d& p) {
    Eigen::Vector3d mirrored = p;
    mirrored.x() = std::abs(p.x());
    for (const auto& ball : spec.balls) {
      if ((mirrored - ball.center).norm() <= ball.radius * 1.25) return true;
    }
    return false;
  };
  const double rmax = config.background_max_radius * config.sphere_radius;
  for (int k = 0; k < config.background_sources;) {
    const Eigen::Vector3d p = random_point_in_ball(Eigen::Vector3d::Zero(), rmax, rng);
    if (inside_any_ball(p) || p.x() == 0.0) continue;
    g.source_positions.push_back(p);
    g.source_orientations.push_back(random_unit_vector(rng));
    ++k;
  }
  g.validate();
  head.atlas = build_subatlas(g.source_positions, spec);
  return head;
}

Eigen::VectorXd band_limited_signal(const std::vector<BandComponent>& components, int sinusoids_per_band,
                                    Eigen::Index samples, double sampling_rate, std::mt19937_64& rng) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(samples);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  for (const auto& b : components) {
    std::uniform_real_distribution<double> freq_dist(b.center_hz - b.bandwidth_hz / 2.0,
                                                     b.center_hz + b.bandwidth_hz / 2.0);
    // A tone of amplitude a has mean power a^2 / 2.
    const double amp = std::sqrt(2.0 * b.power / sinusoids_per_band);
    for (int k = 0; k < sinusoids_per_band; ++k) {
      const double w = 2.0 * std::numbers::pi * freq_dist(rng) / sampling_rate;
      const double phase = phase_dist(rng);
      for (Eigen::Index n = 0; n < samples; ++n) x(n) += amp * std::sin(w * static_cast<double>(n) + phase);
    }
  }
  return x;
}

Eigen::VectorXd pink_like_signal(Eigen::Index samples, double sampling_rate, std::mt19937_64& rng) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(samples);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  double power = 0.0;
  for (int f = 1; f <= 40; ++f) {
    const double amp = 1.0 / std::sqrt(static_cast<double>(f));
    const double w = 2.0 * std::numbers::pi * f / sampling_rate;
    const double phase = phase_dist(rng);
    for (Eigen::Index n = 0; n < samples; ++n) x(n) += amp * std::sin(w * static_cast<double>(n) + phase);
    power += amp * amp / 2.0;
  }
  return x / std::sqrt(power);
}

std::vector<SubjectRecording> generate_cohort(const CohortConfig& config, const LeadField& lead_field,
                                              const Atlas& atlas) {
  config.validate();
  lead_field.validate();
  try {
    atlas.validate(lead_field.sources());
  } catch (const Error& e) {
    throw ValidationError(std::string("atlas does not match the lead field: ") + e.what());
  }

  std::vector<bool> in_region(static_cast<std::size_t>(lead_field.sources()), false);
  for (const auto& region : atlas.regions) {
    for (auto idx : region) in_region[static_cast<std::size_t>(idx)] = true;
  }

  const auto samples = static_cast<Eigen::Index>(std::llround(config.duration_s * config.sampling_rate));
  std::vector<SubjectRecording> cohort;
  std::uint64_t subject_index = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const ClassLabel label = class_from_index(c);
    const auto& profile = config.profiles[static_cast<std::size_t>(c)];
    for (int s = 0; s < config.subjects_per_class; ++s, ++subject_index) {
      const std::uint64_t seed = config.seed + subject_index;
      std::mt19937_64 rng(seed);
      Eigen::MatrixXd sources = Eigen::MatrixXd::Zero(lead_field.sources(), samples);
      for (int r = 0; r < kNumRegions; ++r) {
        const Eigen::VectorXd rhythm = config.source_amplitude *
                                       band_limited_signal(profile[static_cast<std::size_t>(r)],
                                                           config.sinusoids_per_band, samples, config.sampling_rate,
                                                           rng);
        for (auto idx : atlas.regions[static_cast<std::size_t>(r)]) sources.row(idx) = rhythm.transpose();
      }
      for (Eigen::Index idx = 0; idx < lead_field.sources(); ++idx) {
        if (in_region[static_cast<std::size_t>(idx)]) continue;
        sources.row(idx) =
            config.background_amplitude * pink_like_signal(samples, config.sampling_rate, rng).transpose();
      }

      SubjectRecording rec;
      char id[64];
      std::snprintf(id, sizeof id, "%s-%02d", std::string(class_name(label)).c_str(), s);
      rec.subject = id;
      rec.label = label;
      rec.seed = seed;
      rec.recording = project_sources(lead_field, sources, config.noise_sigma, seed, config.sampling_rate);
      rec.recording.label = label;
      cohort.push_back(std::move(rec));
    }
  }
  return cohort;
}

PlantedRecording plant_dipole(const LeadField& lead_field, Eigen::Index source_index,
                              const Eigen::VectorXd& waveform, double noise_sigma, std::uint64_t seed,
                              double sampling_rate) {
  if (source_index < 0 || source_index >= lead_field.sources()) {
    throw ValidationError("source index " + std::to_string(source_index) + " out of range");
  }
  Eigen::MatrixXd sources = Eigen::MatrixXd::Zero(lead_field.sources(), waveform.size());
  sources.row(source_index) = waveform.transpose();
  return {project_sources(lead_field, sources, noise_sigma, seed, sampling_rate), source_index};
}

}  // namespace scwt
