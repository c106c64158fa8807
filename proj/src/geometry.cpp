#include "xpf/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <json.hpp>

#include "xpf/errors.hpp"

namespace xpf {

std::vector<double> ProjectionGeometry::uniform_angles(int count, double step_deg) {
    std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        out[i] = i * step_deg;
    }
    return out;
}

void validate(const ProjectionGeometry& g) {
    if (!(g.detector_iso_mm > 0.0) || !(g.source_detector_mm > g.detector_iso_mm)) {
        throw InvalidArgument("geometry: need source_detector_mm > detector_iso_mm > 0");
    }
    if (g.n_u < 1 || g.n_v < 1) {
        throw InvalidArgument("geometry: detector needs at least one pixel per axis");
    }
    if (!(g.pixel_pitch_mm > 0.0)) {
        throw InvalidArgument("geometry: pixel pitch must be > 0");
    }
    if (g.angles_deg.empty()) {
        throw InvalidArgument("geometry: at least one view angle required");
    }
    for (std::size_t i = 0; i < g.angles_deg.size(); ++i) {
        const double a = g.angles_deg[i];
        if (!(a >= 0.0 && a < 360.0)) {
            throw InvalidArgument("geometry: angles must lie in [0, 360)");
        }
        if (i > 0 && !(a > g.angles_deg[i - 1])) {
            throw InvalidArgument("geometry: angles must be strictly increasing");
        }
    }
    if (!is_finite(g.isocenter_mm)) {
        throw InvalidArgument("geometry: isocenter must be finite");
    }
}

namespace {

struct Frame {
    Vec3 radial;  // isocenter -> source
    Vec3 u_axis;
    Vec3 v_axis;
};

Frame frame_for(const ProjectionGeometry& g, int view) {
    const double theta = g.angles_deg[static_cast<std::size_t>(view)] * std::numbers::pi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    return {{0.0, c, s}, {0.0, -s, c}, {1.0, 0.0, 0.0}};
}

} // namespace

Vec3 source_position(const ProjectionGeometry& g, int view) {
    if (view < 0 || view >= g.view_count()) {
        throw OutOfBounds("view index " + std::to_string(view) + " out of range");
    }
    return g.isocenter_mm + g.source_iso_mm() * frame_for(g, view).radial;
}

Ray ray_for_pixel(const ProjectionGeometry& g, int view, int u, int v) {
    if (view < 0 || view >= g.view_count() || u < 0 || u >= g.n_u || v < 0 || v >= g.n_v) {
        throw OutOfBounds("pixel (" + std::to_string(view) + ", " + std::to_string(u) + ", " + std::to_string(v) +
                          ") out of range");
    }
    const Frame f = frame_for(g, view);
    const Vec3 source = g.isocenter_mm + g.source_iso_mm() * f.radial;
    const Vec3 detector_center = source - g.source_detector_mm * f.radial;
    const double du = (u - 0.5 * (g.n_u - 1)) * g.pixel_pitch_mm;
    const double dv = (v - 0.5 * (g.n_v - 1)) * g.pixel_pitch_mm;
    const Vec3 pixel = detector_center + du * f.u_axis + dv * f.v_axis;
    return {source, normalized(pixel - source)};
}

void to_json(nlohmann::json& j, const ProjectionGeometry& g) {
    j = {{"source_detector_mm", g.source_detector_mm},
         {"detector_iso_mm", g.detector_iso_mm},
         {"detector_pixels", {g.n_u, g.n_v}},
         {"pixel_pitch_mm", g.pixel_pitch_mm},
         {"angles_deg", g.angles_deg},
         {"isocenter_mm", {g.isocenter_mm.x, g.isocenter_mm.y, g.isocenter_mm.z}}};
}

void from_json(const nlohmann::json& j, ProjectionGeometry& g) {
    g.source_detector_mm = j.value("source_detector_mm", g.source_detector_mm);
    g.detector_iso_mm = j.value("detector_iso_mm", g.detector_iso_mm);
    if (j.contains("detector_pixels")) {
        const auto px = j.at("detector_pixels").get<std::array<int, 2>>();
        g.n_u = px[0];
        g.n_v = px[1];
    }
    g.pixel_pitch_mm = j.value("pixel_pitch_mm", g.pixel_pitch_mm);
    if (j.contains("angles_deg")) {
        g.angles_deg = j.at("angles_deg").get<std::vector<double>>();
    } else if (j.contains("n_views")) {
        g.angles_deg = ProjectionGeometry::uniform_angles(j.at("n_views").get<int>(), j.value("angle_step_deg", 6.0));
    }
    if (j.contains("isocenter_mm")) {
        const auto c = j.at("isocenter_mm").get<std::array<double, 3>>();
        g.isocenter_mm = {c[0], c[1], c[2]};
    }
    validate(g);
}

} // namespace xpf
