#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "scwt/inverse.hpp"

namespace scwt {

/// Canonical region order. Rows of a ScoutMatrix follow this order, and the
/// first three rows feed the left image, the last three the right image.
enum class Region : int { ThalamusL = 0, HippocampusL, AmygdalaL, ThalamusR, HippocampusR, AmygdalaR };

inline constexpr int kNumRegions = 6;
inline constexpr std::array<std::string_view, kNumRegions> kRegionNames{
    "ThalamusL", "HippocampusL", "AmygdalaL", "ThalamusR", "HippocampusR", "AmygdalaR"};

enum class Structure : int { Thalamus = 0, Hippocampus, Amygdala };
inline constexpr int kNumStructures = 3;
inline constexpr std::array<std::string_view, kNumStructures> kStructureNames{"Thalamus", "Hippocampus", "Amygdala"};

/// Bounding ball of one structure. `center` is given in the right
/// hemisphere; the left ball is its mirror image through x = 0.
struct StructureBall {
  Eigen::Vector3d center;
  double radius = 0.0;
};

/// Laterality comes from the sign of x (x > 0 is right, x < 0 is left);
/// sources exactly on the midline belong to no region.
struct RegionSpec {
  std::array<StructureBall, kNumStructures> balls;

  static RegionSpec standard(double sphere_radius = 0.09);
};

struct Atlas {
  std::array<std::vector<Eigen::Index>, kNumRegions> regions;

  /// Throws AtlasError for empty or overlapping regions and ShapeError for
  /// indices at or beyond `source_count`.
  void validate(Eigen::Index source_count) const;

  nlohmann::json to_json() const;
  static Atlas from_json(const nlohmann::json& j);
};

struct ScoutMatrix {
  Eigen::MatrixXd series;  // 6 x T
  double sampling_rate = 0.0;
};

Region region_of(Structure structure, bool right_hemisphere) noexcept;

/// Throws AtlasError when a region receives no source or two balls of the
/// same hemisphere intersect.
Atlas build_subatlas(std::span<const Eigen::Vector3d> source_positions, const RegionSpec& spec);

/// Row r is the mean of the estimate rows listed in atlas.regions[r].
ScoutMatrix extract_scout_series(const SourceEstimate& estimate, const Atlas& atlas);

}  // namespace scwt
