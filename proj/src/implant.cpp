#include "xpf/implant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "xpf/errors.hpp"
#include "xpf/parallel.hpp"

namespace xpf {

namespace {

constexpr double kPi = std::numbers::pi;

struct V2 {
    double x, y;
};
V2 operator-(V2 a, V2 b) { return {a.x - b.x, a.y - b.y}; }
V2 operator*(double s, V2 a) { return {s * a.x, s * a.y}; }
double dot2(V2 a, V2 b) { return a.x * b.x + a.y * b.y; }

// Exact SDF of a cylinder along z with radius r over z in [z0, z1].
double capped_cylinder(Vec3 p, double r, double z0, double z1) {
    const double dx = std::hypot(p.x, p.y) - r;
    const double dz = std::abs(p.z - 0.5 * (z0 + z1)) - 0.5 * (z1 - z0);
    return std::min(std::max(dx, dz), 0.0) + std::hypot(std::max(dx, 0.0), std::max(dz, 0.0));
}

// Exact SDF of a truncated cone along z: radius r0 at z0, r1 at z1 (z1 > z0).
double capped_cone(Vec3 p, double z0, double r0, double z1, double r1) {
    const double h = 0.5 * (z1 - z0);
    const V2 q{std::hypot(p.x, p.y), p.z - 0.5 * (z0 + z1)};
    const V2 k1{r1, h};
    const V2 k2{r1 - r0, 2.0 * h};
    const V2 ca{q.x - std::min(q.x, q.y < 0.0 ? r0 : r1), std::abs(q.y) - h};
    const double t = std::clamp(dot2(k1 - q, k2) / dot2(k2, k2), 0.0, 1.0);
    const V2 cb{q.x - k1.x + k2.x * t, q.y - k1.y + k2.y * t};
    const double s = (cb.x < 0.0 && ca.y < 0.0) ? -1.0 : 1.0;
    return s * std::sqrt(std::min(dot2(ca, ca), dot2(cb, cb)));
}

// Exact 2D SDF of a triangle.
double triangle_2d(V2 p, V2 p0, V2 p1, V2 p2) {
    const V2 e0 = p1 - p0, e1 = p2 - p1, e2 = p0 - p2;
    const V2 v0 = p - p0, v1 = p - p1, v2 = p - p2;
    const V2 pq0 = v0 - std::clamp(dot2(v0, e0) / dot2(e0, e0), 0.0, 1.0) * e0;
    const V2 pq1 = v1 - std::clamp(dot2(v1, e1) / dot2(e1, e1), 0.0, 1.0) * e1;
    const V2 pq2 = v2 - std::clamp(dot2(v2, e2) / dot2(e2, e2), 0.0, 1.0) * e2;
    const double s = (e0.x * e2.y - e0.y * e2.x) > 0.0 ? 1.0 : -1.0;
    const double dx = std::min({dot2(pq0, pq0), dot2(pq1, pq1), dot2(pq2, pq2)});
    const double dy = std::min({s * (v0.x * e0.y - v0.y * e0.x), s * (v1.x * e1.y - v1.y * e1.x),
                                s * (v2.x * e2.y - v2.y * e2.x)});
    return -std::sqrt(dx) * (dy < 0.0 ? -1.0 : 1.0);
}

double box(Vec3 p, Vec3 half) {
    const Vec3 q{std::abs(p.x) - half.x, std::abs(p.y) - half.y, std::abs(p.z) - half.z};
    const Vec3 outside{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
    return norm(outside) + std::min(std::max({q.x, q.y, q.z}), 0.0);
}

double sdf_kwire(const KWireParams& k, Vec3 p) {
    const double z_top = 0.5 * k.length_mm;
    const double z_tip = z_top - k.tip_length_mm;
    const double shaft = capped_cylinder(p, k.radius_mm, -z_top, z_tip);
    const double tip = capped_cone(p, z_tip, k.radius_mm, z_top, 0.0);
    return std::min(shaft, tip);
}

// Thread cross-section in the (radius, axial offset) half-plane. The base sits
// half a depth inside the shaft so the union has no coplanar sliver.
double sdf_thread(const ScrewParams& s, Vec3 p) {
    const double pitch = s.pitch_mm;
    const double rho = std::hypot(p.x, p.y);
    const double phi = std::atan2(p.y, p.x);
    double delta = p.z - pitch * phi / (2.0 * kPi);
    delta -= pitch * std::round(delta / pitch);
    const double half_w = 0.4 * pitch;
    const V2 a{s.shaft_radius_mm - 0.5 * s.thread_depth_mm, -half_w};
    const V2 b{s.shaft_radius_mm - 0.5 * s.thread_depth_mm, half_w};
    const V2 apex{s.shaft_radius_mm + s.thread_depth_mm, 0.0};
    double d = triangle_2d({rho, delta}, a, b, apex);
    d = std::min(d, triangle_2d({rho, delta - pitch}, a, b, apex));
    d = std::min(d, triangle_2d({rho, delta + pitch}, a, b, apex));
    // The helical parameterization stretches tangential distances by at most
    // k at radius r_ref; below r_ref the shaft term always wins the union.
    const double r_ref = 0.5 * s.shaft_radius_mm;
    const double slope = pitch / (2.0 * kPi * r_ref);
    d /= std::sqrt(1.0 + slope * slope);
    return std::max(d, std::abs(p.z) - 0.5 * s.length_mm);
}

double sdf_screw(const ScrewParams& s, Vec3 p) {
    const double z_top = 0.5 * s.length_mm;
    const double shaft = capped_cylinder(p, s.shaft_radius_mm, -z_top, z_top);
    const double head = capped_cylinder(p, s.head_radius_mm, z_top, z_top + s.head_height_mm);
    return std::min({shaft, head, sdf_thread(s, p)});
}

double sdf_flat_plate(const PlateParams& pl, Vec3 p) {
    double d = box(p, {0.5 * pl.length_mm, 0.5 * pl.width_mm, 0.5 * pl.thickness_mm});
    double nearest_hole = std::numeric_limits<double>::infinity();
    for (int i = 0; i < pl.hole_count; ++i) {
        nearest_hole = std::min(nearest_hole, std::hypot(p.x - pl.hole_center_x(i), p.y) - pl.hole_radius_mm);
    }
    return std::max(d, -nearest_hole);
}

double sdf_plate(const PlateParams& pl, Vec3 p) {
    if (!pl.bend_radius_mm) {
        return sdf_flat_plate(pl, p);
    }
    const double r = *pl.bend_radius_mm;
    const double qx = p.x, qz = p.z - r;
    const double rho = std::hypot(qx, qz);
    const double theta = std::atan2(qx, -qz);
    const Vec3 unbent{r * theta, p.y, r - rho};
    // Unbending stretches arcs inside the bend radius by r / rho.
    const double shrink = std::min(1.0, std::max(rho, 1e-9) / r);
    return sdf_flat_plate(pl, unbent) * shrink;
}

} // namespace

std::string_view to_string(ImplantKind kind) {
    switch (kind) {
    case ImplantKind::kwire:
        return "kwire";
    case ImplantKind::screw:
        return "screw";
    case ImplantKind::plate:
        return "plate";
    }
    return "unknown";
}

ImplantKind implant_kind_from_string(std::string_view name) {
    if (name == "kwire") {
        return ImplantKind::kwire;
    }
    if (name == "screw") {
        return ImplantKind::screw;
    }
    if (name == "plate") {
        return ImplantKind::plate;
    }
    throw InvalidArgument("unknown implant kind: " + std::string(name));
}

void validate(const ImplantModel& model) {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidArgument(std::string(what) + " must be > 0");
        }
    };
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, KWireParams>) {
                positive(m.radius_mm, "kwire radius");
                positive(m.length_mm, "kwire length");
                positive(m.tip_length_mm, "kwire tip length");
                if (m.tip_length_mm >= m.length_mm) {
                    throw InvalidArgument("kwire tip length must be < length");
                }
            } else if constexpr (std::is_same_v<T, ScrewParams>) {
                positive(m.shaft_radius_mm, "screw shaft radius");
                positive(m.length_mm, "screw length");
                positive(m.pitch_mm, "screw pitch");
                positive(m.thread_depth_mm, "screw thread depth");
                positive(m.head_radius_mm, "screw head radius");
                positive(m.head_height_mm, "screw head height");
                if (m.thread_depth_mm >= m.shaft_radius_mm) {
                    throw InvalidArgument("screw thread depth must be < shaft radius");
                }
            } else {
                positive(m.length_mm, "plate length");
                positive(m.width_mm, "plate width");
                positive(m.thickness_mm, "plate thickness");
                positive(m.hole_radius_mm, "plate hole radius");
                positive(m.hole_spacing_mm, "plate hole spacing");
                if (m.hole_count < 1) {
                    throw InvalidArgument("plate hole count must be >= 1");
                }
                if (m.hole_spacing_mm * (m.hole_count - 1) + 2.0 * m.hole_radius_mm >= m.length_mm) {
                    throw InvalidArgument("plate holes do not fit inside the plate length");
                }
                if (m.bend_radius_mm) {
                    positive(*m.bend_radius_mm, "plate bend radius");
                    if (*m.bend_radius_mm <= 0.5 * m.thickness_mm || 0.5 * m.length_mm / *m.bend_radius_mm >= 0.9 * kPi) {
                        throw InvalidArgument("plate bend radius too small for its length/thickness");
                    }
                }
            }
        },
        model.params);
}

double sdf_eval(const ImplantModel& model, Vec3 p) {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, KWireParams>) {
                return sdf_kwire(m, p);
            } else if constexpr (std::is_same_v<T, ScrewParams>) {
                return sdf_screw(m, p);
            } else {
                return sdf_plate(m, p);
            }
        },
        model.params);
}

Aabb bounds(const ImplantModel& model) {
    return std::visit(
        [](const auto& m) -> Aabb {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, KWireParams>) {
                const double r = m.radius_mm, h = 0.5 * m.length_mm;
                return {{-r, -r, -h}, {r, r, h}};
            } else if constexpr (std::is_same_v<T, ScrewParams>) {
                const double r = std::max(m.head_radius_mm, m.shaft_radius_mm + m.thread_depth_mm);
                const double h = 0.5 * m.length_mm;
                return {{-r, -r, -h}, {r, r, h + m.head_height_mm}};
            } else {
                const double hw = 0.5 * m.width_mm, ht = 0.5 * m.thickness_mm;
                if (!m.bend_radius_mm) {
                    return {{-0.5 * m.length_mm, -hw, -ht}, {0.5 * m.length_mm, hw, ht}};
                }
                const double r = *m.bend_radius_mm;
                const double alpha = 0.5 * m.length_mm / r;
                const double outer = r + ht, inner = r - ht;
                const double hx = outer * (alpha >= 0.5 * kPi ? 1.0 : std::sin(alpha));
                const double zmax = std::max(r - inner * std::cos(alpha), r - outer * std::cos(alpha));
                return {{-hx, -hw, -ht}, {hx, hw, std::max(zmax, ht)}};
            }
        },
        model.params);
}

double smallest_feature_mm(const ImplantModel& model) {
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, KWireParams>) {
                return m.radius_mm;
            } else if constexpr (std::is_same_v<T, ScrewParams>) {
                return m.thread_depth_mm;
            } else {
                return std::min(m.thickness_mm, m.hole_radius_mm);
            }
        },
        model.params);
}

std::size_t BinaryVolume::count() const {
    return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t b) { return b != 0; }));
}

BinaryVolume voxelize(const ImplantModel& model, double spacing_mm, unsigned workers) {
    validate(model);
    if (!(spacing_mm > 0.0) || !std::isfinite(spacing_mm)) {
        throw InvalidArgument("voxelize: spacing must be > 0");
    }
    BinaryVolume out;
    out.spacing_mm = spacing_mm;
    const double feature = smallest_feature_mm(model);
    if (spacing_mm > feature) {
        out.warnings.push_back("spacing " + std::to_string(spacing_mm) + " mm exceeds smallest feature " +
                               std::to_string(feature) + " mm");
    }
    const Aabb b = bounds(model);
    for (int a = 0; a < 3; ++a) {
        out.dims[a] = static_cast<int>(std::ceil((b.max[a] - b.min[a]) / spacing_mm)) + 3;
        out.origin_mm[a] = 0.5 * (b.min[a] + b.max[a]) - 0.5 * (out.dims[a] - 1) * spacing_mm;
    }
    out.mask.assign(std::size_t(out.dims[0]) * out.dims[1] * out.dims[2], 0);
    parallel_for(
        std::size_t(out.dims[2]),
        [&](std::size_t k) {
            for (int j = 0; j < out.dims[1]; ++j) {
                for (int i = 0; i < out.dims[0]; ++i) {
                    if (sdf_eval(model, out.voxel_center(i, j, int(k))) <= 0.0) {
                        out.mask[out.index(i, j, int(k))] = 1;
                    }
                }
            }
        },
        workers);
    if (out.count() == 0) {
        throw EmptyVoxelization("voxelize: no voxel center inside the " + std::string(to_string(model.kind())) +
                                " at spacing " + std::to_string(spacing_mm) + " mm");
    }
    return out;
}

ImplantModel random_implant(std::uint64_t seed, std::optional<ImplantKind> kind) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    const ImplantKind chosen =
        kind ? *kind : static_cast<ImplantKind>(std::uniform_int_distribution<int>(0, 2)(rng));
    switch (chosen) {
    case ImplantKind::kwire: {
        KWireParams k;
        k.radius_mm = uniform(0.5, 1.5);
        k.length_mm = uniform(50.0, 150.0);
        k.tip_length_mm = uniform(2.0, 2.0 + 3.0 * k.radius_mm);
        return {k};
    }
    case ImplantKind::screw: {
        ScrewParams s;
        s.length_mm = uniform(20.0, 80.0);
        s.shaft_radius_mm = uniform(1.5, 3.25);
        s.pitch_mm = uniform(1.0, 2.75);
        s.thread_depth_mm = uniform(0.25, 0.45) * s.shaft_radius_mm;
        s.head_radius_mm = s.shaft_radius_mm + uniform(1.5, 3.0);
        s.head_height_mm = uniform(2.0, 4.5);
        return {s};
    }
    case ImplantKind::plate: {
        PlateParams p;
        p.length_mm = uniform(60.0, 160.0);
        p.width_mm = uniform(8.0, 16.0);
        p.thickness_mm = uniform(2.0, 4.0);
        if (uniform(0.0, 1.0) < 0.5) {
            p.bend_radius_mm = uniform(50.0, 150.0);
        }
        p.hole_radius_mm = uniform(1.5, std::min(3.0, 0.5 * p.width_mm - 1.0));
        int n = std::uniform_int_distribution<int>(2, 8)(rng);
        const double min_spacing = 2.0 * p.hole_radius_mm + 2.0;
        auto max_spacing = [&](int count) { return (p.length_mm - 2.0 * p.hole_radius_mm - 4.0) / (count - 1); };
        while (n > 2 && max_spacing(n) < min_spacing) {
            --n;
        }
        p.hole_count = n;
        p.hole_spacing_mm = uniform(min_spacing, std::max(min_spacing, max_spacing(n)));
        return {p};
    }
    }
    throw InvalidArgument("random_implant: bad kind");
}

void to_json(nlohmann::json& j, const ImplantModel& model) {
    j = nlohmann::json::object();
    j["kind"] = std::string(to_string(model.kind()));
    nlohmann::json p;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, KWireParams>) {
                p = {{"radius_mm", m.radius_mm}, {"length_mm", m.length_mm}, {"tip_length_mm", m.tip_length_mm}};
            } else if constexpr (std::is_same_v<T, ScrewParams>) {
                p = {{"shaft_radius_mm", m.shaft_radius_mm}, {"length_mm", m.length_mm},
                     {"pitch_mm", m.pitch_mm},               {"thread_depth_mm", m.thread_depth_mm},
                     {"head_radius_mm", m.head_radius_mm},   {"head_height_mm", m.head_height_mm}};
            } else {
                p = {{"length_mm", m.length_mm},
                     {"width_mm", m.width_mm},
                     {"thickness_mm", m.thickness_mm},
                     {"bend_radius_mm", m.bend_radius_mm ? nlohmann::json(*m.bend_radius_mm) : nlohmann::json()},
                     {"hole_radius_mm", m.hole_radius_mm},
                     {"hole_count", m.hole_count},
                     {"hole_spacing_mm", m.hole_spacing_mm}};
            }
        },
        model.params);
    j["params"] = std::move(p);
}

void from_json(const nlohmann::json& j, ImplantModel& model) {
    const auto kind = implant_kind_from_string(j.at("kind").get<std::string>());
    const auto& p = j.at("params");
    switch (kind) {
    case ImplantKind::kwire:
        model.params = KWireParams{p.at("radius_mm").get<double>(), p.at("length_mm").get<double>(),
                                   p.at("tip_length_mm").get<double>()};
        break;
    case ImplantKind::screw:
        model.params = ScrewParams{p.at("shaft_radius_mm").get<double>(), p.at("length_mm").get<double>(),
                                   p.at("pitch_mm").get<double>(),        p.at("thread_depth_mm").get<double>(),
                                   p.at("head_radius_mm").get<double>(),  p.at("head_height_mm").get<double>()};
        break;
    case ImplantKind::plate: {
        PlateParams pl;
        pl.length_mm = p.at("length_mm").get<double>();
        pl.width_mm = p.at("width_mm").get<double>();
        pl.thickness_mm = p.at("thickness_mm").get<double>();
        if (p.contains("bend_radius_mm") && !p.at("bend_radius_mm").is_null()) {
            pl.bend_radius_mm = p.at("bend_radius_mm").get<double>();
        }
        pl.hole_radius_mm = p.at("hole_radius_mm").get<double>();
        pl.hole_count = p.at("hole_count").get<int>();
        pl.hole_spacing_mm = p.at("hole_spacing_mm").get<double>();
        model.params = pl;
        break;
    }
    }
    validate(model);
}

} // namespace xpf
