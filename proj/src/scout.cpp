#include "scwt/scout.hpp"

#include <string>

#include "scwt/error.hpp"

namespace scwt {

RegionSpec RegionSpec::standard(double sphere_radius) {
  // Deep, disjoint balls in the right hemisphere, scaled to the head radius.
  const double s = sphere_radius / 0.09;
  RegionSpec spec;
  spec.balls[0] = {Eigen::Vector3d(0.012, -0.005, 0.012) * s, 0.009 * s};   // thalamus
  spec.balls[1] = {Eigen::Vector3d(0.028, -0.022, -0.010) * s, 0.009 * s};  // hippocampus
  spec.balls[2] = {Eigen::Vector3d(0.024, 0.006, -0.018) * s, 0.008 * s};   // amygdala
  return spec;
}

Region region_of(Structure structure, bool right_hemisphere) noexcept {
  return static_cast<Region>(static_cast<int>(structure) + (right_hemisphere ? kNumStructures : 0));
}

void Atlas::validate(Eigen::Index source_count) const {
  std::vector<int> owner(static_cast<std::size_t>(std::max<Eigen::Index>(source_count, 0)), -1);
  for (int r = 0; r < kNumRegions; ++r) {
    const auto& idx = regions[static_cast<std::size_t>(r)];
    if (idx.empty()) throw AtlasError("region " + std::string(kRegionNames[static_cast<std::size_t>(r)]) + " is empty");
    for (auto i : idx) {
      if (i < 0 || i >= source_count) {
        throw ShapeError("region " + std::string(kRegionNames[static_cast<std::size_t>(r)]) + " index " +
                         std::to_string(i) + " out of range for " + std::to_string(source_count) + " sources");
      }
      auto& o = owner[static_cast<std::size_t>(i)];
      if (o >= 0) {
        throw AtlasError("source " + std::to_string(i) + " belongs to both " +
                         std::string(kRegionNames[static_cast<std::size_t>(o)]) + " and " +
                         std::string(kRegionNames[static_cast<std::size_t>(r)]));
      }
      o = r;
    }
  }
}

nlohmann::json Atlas::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (int r = 0; r < kNumRegions; ++r) {
    j[std::string(kRegionNames[static_cast<std::size_t>(r)])] = regions[static_cast<std::size_t>(r)];
  }
  return j;
}

Atlas Atlas::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw AtlasError("atlas document must be a JSON object");
  Atlas atlas;
  for (const auto& [key, value] : j.items()) {
    int found = -1;
    for (int r = 0; r < kNumRegions; ++r) {
      if (kRegionNames[static_cast<std::size_t>(r)] == key) found = r;
    }
    if (found < 0) throw AtlasError("unknown region '" + key + "'");
    atlas.regions[static_cast<std::size_t>(found)] = value.get<std::vector<Eigen::Index>>();
  }
  return atlas;
}

Atlas build_subatlas(std::span<const Eigen::Vector3d> source_positions, const RegionSpec& spec) {
  for (int a = 0; a < kNumStructures; ++a) {
    const auto& ba = spec.balls[static_cast<std::size_t>(a)];
    if (!(ba.radius > 0.0)) {
      throw AtlasError("ball of " + std::string(kStructureNames[static_cast<std::size_t>(a)]) + " has no radius");
    }
    for (int b = a + 1; b < kNumStructures; ++b) {
      const auto& bb = spec.balls[static_cast<std::size_t>(b)];
      if ((ba.center - bb.center).norm() < ba.radius + bb.radius) {
        throw AtlasError("balls of " + std::string(kStructureNames[static_cast<std::size_t>(a)]) + " and " +
                         std::string(kStructureNames[static_cast<std::size_t>(b)]) + " overlap");
      }
    }
  }

  Atlas atlas;
  for (std::size_t i = 0; i < source_positions.size(); ++i) {
    const auto& p = source_positions[i];
    if (p.x() == 0.0) continue;
    const bool right = p.x() > 0.0;
    const Eigen::Vector3d mirrored(std::abs(p.x()), p.y(), p.z());
    for (int s = 0; s < kNumStructures; ++s) {
      const auto& ball = spec.balls[static_cast<std::size_t>(s)];
      if ((mirrored - ball.center).norm() <= ball.radius) {
        const auto r = static_cast<std::size_t>(region_of(static_cast<Structure>(s), right));
        atlas.regions[r].push_back(static_cast<Eigen::Index>(i));
        break;
      }
    }
  }
  for (int r = 0; r < kNumRegions; ++r) {
    if (atlas.regions[static_cast<std::size_t>(r)].empty()) {
      throw AtlasError("region " + std::string(kRegionNames[static_cast<std::size_t>(r)]) + " contains no source");
    }
  }
  return atlas;
}

ScoutMatrix extract_scout_series(const SourceEstimate& estimate, const Atlas& atlas) {
  atlas.validate(estimate.currents.rows());
  ScoutMatrix out;
  out.series.resize(kNumRegions, estimate.currents.cols());
  for (int r = 0; r < kNumRegions; ++r) {
    const auto& idx = atlas.regions[static_cast<std::size_t>(r)];
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(estimate.currents.cols());
    for (auto i : idx) acc += estimate.currents.row(i);
    out.series.row(r) = acc / static_cast<double>(idx.size());
  }
  out.sampling_rate = estimate.sampling_rate;
  return out;
}

}  // namespace scwt
