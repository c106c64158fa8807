#pragma once

#include <vector>

#include <json.hpp>

#include "xpf/vec3.hpp"

namespace xpf {

/// Circular cone-beam trajectory about the x axis through the isocenter.
/// At angle theta the source sits at iso + source_iso * (0, cos, sin); the
/// flat detector faces it at source_detector from the source, with columns
/// (u) along (0, -sin, cos) and rows (v) along the rotation axis.
struct ProjectionGeometry {
    double source_detector_mm = 1164.0;
    double detector_iso_mm = 700.0;
    int n_u = 976;
    int n_v = 976;
    double pixel_pitch_mm = 0.305;
    std::vector<double> angles_deg = uniform_angles(60, 6.0);
    Vec3 isocenter_mm{};

    double source_iso_mm() const { return source_detector_mm - detector_iso_mm; }
    double magnification() const { return source_detector_mm / source_iso_mm(); }
    int view_count() const { return static_cast<int>(angles_deg.size()); }

    static std::vector<double> uniform_angles(int count, double step_deg);

    friend bool operator==(const ProjectionGeometry&, const ProjectionGeometry&) = default;
};

/// Throws InvalidArgument when an invariant does not hold.
void validate(const ProjectionGeometry& g);

struct Ray {
    Vec3 origin;
    Vec3 direction;  ///< unit length
};

Vec3 source_position(const ProjectionGeometry& g, int view);

/// Ray from the source through the center of detector pixel (u, v).
/// Throws OutOfBounds for indices outside the geometry.
Ray ray_for_pixel(const ProjectionGeometry& g, int view, int u, int v);

void to_json(nlohmann::json& j, const ProjectionGeometry& g);
void from_json(const nlohmann::json& j, ProjectionGeometry& g);

} // namespace xpf
