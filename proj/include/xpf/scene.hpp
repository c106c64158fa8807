#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "xpf/implant.hpp"
#include "xpf/volume.hpp"

namespace xpf {

inline constexpr double kMetalHuMin = 3000.0;
inline constexpr double kMetalHuMax = 8000.0;
inline constexpr double kAnchorHuThreshold = 500.0;
inline constexpr int kPlacementRetryCap = 200;

/// One implant instance in world space: world = R * model + translation, with
/// R = Rz * Ry * Rx of the Euler angles.
struct Placement {
    ImplantModel implant;
    Vec3 rotation_rad;
    Vec3 translation_mm;
    double hu_value = kMetalHuMin;
    std::uint64_t seed = 0;
    /// Voxel nearest the implant centroid (model origin) in the anatomy grid.
    std::array<int, 3> anchor_voxel{};

    friend bool operator==(const Placement&, const Placement&) = default;
};

struct ComposedScene {
    Volume anatomy;
    Volume metal;   ///< 0 where no metal
    Volume merged;
    std::vector<Placement> placements;
};

/// Rejection-samples n implants whose centroid voxel lies in anatomy above
/// 500 HU, then rasterizes them into a metal grid (later placements win).
/// Throws PlacementInfeasible naming the implant that exhausted the retry cap.
ComposedScene place_implants(const Volume& anatomy, int n_implants, std::uint64_t seed, unsigned workers = 0);

/// Writes hu_value into every voxel of `metal` (same grid as `grid`) whose
/// center lies inside the placed implant.
void rasterize_placement(const Volume& grid, const Placement& placement, std::vector<float>& metal,
                         unsigned workers = 0);

/// Per voxel: metal where metal > 0, anatomy otherwise.
Volume merge(const Volume& anatomy, const Volume& metal);

void to_json(nlohmann::json& j, const Placement& p);
void from_json(const nlohmann::json& j, Placement& p);

} // namespace xpf
