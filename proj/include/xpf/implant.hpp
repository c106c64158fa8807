#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "xpf/vec3.hpp"

namespace xpf {

enum class ImplantKind { kwire, screw, plate };

std::string_view to_string(ImplantKind kind);
ImplantKind implant_kind_from_string(std::string_view name);

/// Kirschner wire along +z, centered on the origin: a cylinder ending in a
/// conical tip at z = +length/2.
struct KWireParams {
    double radius_mm = 1.0;
    double length_mm = 100.0;
    double tip_length_mm = 3.0;
    friend bool operator==(const KWireParams&, const KWireParams&) = default;
};

/// Bone screw along +z: shaft over [-length/2, length/2] with a single-start
/// triangular thread, head cylinder on top.
struct ScrewParams {
    double shaft_radius_mm = 2.0;
    double length_mm = 40.0;
    double pitch_mm = 1.75;
    double thread_depth_mm = 0.6;
    double head_radius_mm = 4.0;
    double head_height_mm = 3.0;
    friend bool operator==(const ScrewParams&, const ScrewParams&) = default;
};

/// Fixation plate: length along x, width along y, thickness along z, with a
/// row of through-holes on the center line. Optionally bent about an axis
/// parallel to y at height bend_radius above the plate center.
struct PlateParams {
    double length_mm = 100.0;
    double width_mm = 12.0;
    double thickness_mm = 3.0;
    std::optional<double> bend_radius_mm;
    double hole_radius_mm = 2.0;
    int hole_count = 4;
    double hole_spacing_mm = 15.0;
    friend bool operator==(const PlateParams&, const PlateParams&) = default;

    /// x coordinate (flat frame) of hole `i`.
    double hole_center_x(int i) const { return (i - 0.5 * (hole_count - 1)) * hole_spacing_mm; }
};

struct ImplantModel {
    std::variant<KWireParams, ScrewParams, PlateParams> params;

    ImplantKind kind() const { return static_cast<ImplantKind>(params.index()); }
    friend bool operator==(const ImplantModel&, const ImplantModel&) = default;
};

struct Aabb {
    Vec3 min;
    Vec3 max;
};

/// Throws InvalidArgument when a dimension or relation invariant is violated.
void validate(const ImplantModel& model);

/// Signed distance in millimeters, negative inside. The sign is exact; the
/// magnitude is a Lipschitz-1 lower bound of the true distance.
double sdf_eval(const ImplantModel& model, Vec3 p_mm);

/// Conservative model-frame bounding box.
Aabb bounds(const ImplantModel& model);

/// Smallest geometric feature used for the resolution warning.
double smallest_feature_mm(const ImplantModel& model);

/// Binary occupancy grid, x fastest, with voxel-center origin.
struct BinaryVolume {
    std::array<int, 3> dims{1, 1, 1};
    double spacing_mm = 1.0;
    Vec3 origin_mm{};
    std::vector<std::uint8_t> mask;
    std::vector<std::string> warnings;

    std::size_t count() const;
    std::size_t index(int i, int j, int k) const {
        return std::size_t(i) + std::size_t(dims[0]) * (std::size_t(j) + std::size_t(dims[1]) * k);
    }
    Vec3 voxel_center(int i, int j, int k) const {
        return origin_mm + spacing_mm * Vec3{double(i), double(j), double(k)};
    }
};

/// Center-sampled voxelization over the model bounds plus one voxel margin.
/// Throws EmptyVoxelization when no voxel center falls inside the model.
BinaryVolume voxelize(const ImplantModel& model, double spacing_mm, unsigned workers = 0);

/// Draws a model with parameters from fixed clinically plausible ranges.
/// A null kind picks one of the three kinds uniformly.
ImplantModel random_implant(std::uint64_t seed, std::optional<ImplantKind> kind = std::nullopt);

void to_json(nlohmann::json& j, const ImplantModel& model);
void from_json(const nlohmann::json& j, ImplantModel& model);

} // namespace xpf
