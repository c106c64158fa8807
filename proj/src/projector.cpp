#include "xpf/projector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "xpf/errors.hpp"
#include "xpf/parallel.hpp"

namespace xpf {

std::string_view to_string(Channel c) {
    switch (c) {
    case Channel::line_integral:
        return "line-integral";
    case Channel::material_thickness:
        return "material-thickness";
    case Channel::areal_density:
        return "areal-density";
    case Channel::intensity:
        return "intensity";
    case Channel::normalized:
        return "normalized";
    }
    return "unknown";
}

Channel channel_from_string(std::string_view s) {
    for (Channel c : {Channel::line_integral, Channel::material_thickness, Channel::areal_density, Channel::intensity,
                      Channel::normalized}) {
        if (to_string(c) == s) {
            return c;
        }
    }
    throw InvalidArgument("unknown channel label: " + std::string(s));
}

void validate(const ProjectionStack& stack) {
    validate(stack.geometry);
    if (static_cast<int>(stack.images.size()) != stack.geometry.view_count()) {
        throw InvalidArgument("projection stack: image count differs from view count");
    }
    const bool nonnegative = stack.channel == Channel::line_integral || stack.channel == Channel::material_thickness ||
                             stack.channel == Channel::areal_density;
    for (const auto& img : stack.images) {
        if (img.rows != stack.geometry.n_v || img.cols != stack.geometry.n_u) {
            throw InvalidArgument("projection stack: image shape differs from detector");
        }
        for (float p : img.pixels) {
            if (!std::isfinite(p) || (nonnegative && p < 0.0f)) {
                throw InvalidArgument("projection stack: invalid pixel value");
            }
        }
    }
}

RaySegment clip_ray(const std::array<int, 3>& dims, double spacing, Vec3 grid_origin, Vec3 origin, Vec3 direction,
                    double step_fraction) {
    RaySegment seg;
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double lo = grid_origin[a] - 0.5 * spacing;
        const double hi = grid_origin[a] + (dims[a] - 0.5) * spacing;
        if (direction[a] == 0.0) {
            if (origin[a] < lo || origin[a] > hi) {
                return seg;
            }
            continue;
        }
        double ta = (lo - origin[a]) / direction[a];
        double tb = (hi - origin[a]) / direction[a];
        if (ta > tb) {
            std::swap(ta, tb);
        }
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (!(t1 > t0)) {
        return seg;
    }
    const double length = t1 - t0;
    const int n = std::max(1, static_cast<int>(std::ceil(length / (step_fraction * spacing) - 1e-9)));
    seg.hit = true;
    seg.t_enter = t0;
    seg.t_exit = t1;
    seg.step_mm = length / n;
    const Vec3 first = (origin + (t0 + 0.5 * seg.step_mm) * direction - grid_origin) / spacing;
    const Vec3 step = direction * (seg.step_mm / spacing);
    seg.run.first = {first.x, first.y, first.z};
    seg.run.step = {step.x, step.y, step.z};
    seg.run.count = n;
    return seg;
}

namespace {

const simd::KernelTable& table(const ProjectOptions& opts) {
    return opts.kernels ? *opts.kernels : simd::active();
}

Vec3 checked_direction(Vec3 origin, Vec3 direction) {
    if (!is_finite(origin) || !is_finite(direction)) {
        throw InvalidArgument("line_integral: origin and direction must be finite");
    }
    const double n = norm(direction);
    if (!(n > 0.0)) {
        throw InvalidArgument("line_integral: direction must be non-zero");
    }
    return direction / n;
}

ProjectionStack empty_stack(const ProjectionGeometry& g, Channel channel, std::string label) {
    ProjectionStack s{g, channel, std::move(label), {}};
    s.images.assign(static_cast<std::size_t>(g.view_count()), Image(g.n_v, g.n_u));
    return s;
}

// Calls row_fn(view, row) for every detector row of every view.
template <typename RowFn>
void for_each_row(const ProjectionGeometry& g, unsigned workers, RowFn&& row_fn) {
    const std::size_t rows = static_cast<std::size_t>(g.view_count()) * static_cast<std::size_t>(g.n_v);
    parallel_for(
        rows, [&](std::size_t r) { row_fn(static_cast<int>(r / g.n_v), static_cast<int>(r % g.n_v)); }, workers);
}

} // namespace

double line_integral(const Volume& grid, Vec3 origin, Vec3 direction, const ProjectOptions& opts) {
    const Vec3 dir = checked_direction(origin, direction);
    const RaySegment seg = clip_ray(grid.dims(), grid.spacing(), grid.origin(), origin, dir, opts.step_fraction);
    if (!seg.hit) {
        return 0.0;
    }
    const simd::GridRef ref{grid.values().data(), grid.dims()};
    return table(opts).sum_samples(ref, seg.run) * seg.step_mm;
}

ProjectionGeometry centered_on(const ProjectionGeometry& g, const Volume& v) {
    ProjectionGeometry out = g;
    out.isocenter_mm = v.center();
    return out;
}

ProjectionStack project_line_integrals(const Volume& values, const ProjectionGeometry& geometry,
                                       const ProjectOptions& opts) {
    const ProjectionGeometry g = centered_on(geometry, values);
    validate(g);
    ProjectionStack out = empty_stack(g, Channel::line_integral, "");
    const simd::GridRef ref{values.values().data(), values.dims()};
    const auto& k = table(opts);
    for_each_row(g, opts.workers, [&](int view, int v) {
        Image& img = out.images[static_cast<std::size_t>(view)];
        for (int u = 0; u < g.n_u; ++u) {
            const Ray ray = ray_for_pixel(g, view, u, v);
            const RaySegment seg =
                clip_ray(values.dims(), values.spacing(), values.origin(), ray.origin, ray.direction, opts.step_fraction);
            img.at(v, u) = seg.hit ? static_cast<float>(k.sum_samples(ref, seg.run) * seg.step_mm) : 0.0f;
        }
    });
    return out;
}

Volume hu_to_mu_water(const Volume& hu, double mu_water_per_mm, const ProjectOptions& opts) {
    std::vector<float> mu(hu.size());
    table(opts).hu_to_mu(hu.values().data(), mu.data(), mu.size(), static_cast<float>(mu_water_per_mm));
    return Volume(hu.dims(), hu.spacing(), hu.origin(), std::move(mu));
}

Volume material_mu(const Volume& hu, const MaterialModel& model, double energy_keV) {
    std::array<double, 4> mu_rho{};
    for (Material m : kMaterials) {
        mu_rho[static_cast<int>(m)] = model.table(m).at(energy_keV);
    }
    auto vals = hu.values();
    std::vector<float> mu(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const Material m = classify_hu(vals[i]);
        mu[i] = static_cast<float>(0.1 * mu_rho[static_cast<int>(m)] * model.densities(vals[i], m));
    }
    return Volume(hu.dims(), hu.spacing(), hu.origin(), std::move(mu));
}

Volume material_indicator(const Volume& hu, Material m) {
    auto vals = hu.values();
    std::vector<float> out(vals.size());
    std::transform(vals.begin(), vals.end(), out.begin(), [m](float h) { return classify_hu(h) == m ? 1.0f : 0.0f; });
    return Volume(hu.dims(), hu.spacing(), hu.origin(), std::move(out));
}

ProjectionStack project_mono(const Volume& hu, const ProjectionGeometry& g, double energy_keV,
                             const MaterialModel& model, const ProjectOptions& opts) {
    const double mu_water = model.mu_water_per_mm(energy_keV);
    return project_line_integrals(hu_to_mu_water(hu, mu_water, opts), g, opts);
}

MaterialProjections project_materials(const Volume& hu, const ProjectionGeometry& geometry,
                                      const DensityMap& densities, const ProjectOptions& opts) {
    const ProjectionGeometry g = centered_on(geometry, hu);
    validate(g);
    const LabelVolume labels = decompose_materials(hu);
    const std::vector<float> density = density_grid(hu, labels, densities);
    const simd::MaterialGridRef ref{density.data(), labels.labels.data(), hu.dims()};

    MaterialProjections out;
    for (Material m : kMaterials) {
        const auto i = static_cast<std::size_t>(m);
        out.thickness[i] = empty_stack(g, Channel::material_thickness, std::string(to_string(m)));
        out.areal_density[i] = empty_stack(g, Channel::areal_density, std::string(to_string(m)));
    }
    const auto& k = table(opts);
    for_each_row(g, opts.workers, [&](int view, int v) {
        const auto vi = static_cast<std::size_t>(view);
        std::array<double, 8> sums{};
        for (int u = 0; u < g.n_u; ++u) {
            const Ray ray = ray_for_pixel(g, view, u, v);
            const RaySegment seg = clip_ray(hu.dims(), hu.spacing(), hu.origin(), ray.origin, ray.direction, opts.step_fraction);
            if (!seg.hit) {
                continue;
            }
            k.sum_material_samples(ref, seg.run, sums);
            for (int m = 0; m < 4; ++m) {
                // mm * g/cm^3 -> g/cm^2
                out.thickness[m].images[vi].at(v, u) = static_cast<float>(sums[m] * seg.step_mm);
                out.areal_density[m].images[vi].at(v, u) = static_cast<float>(0.1 * sums[4 + m] * seg.step_mm);
            }
        }
    });
    return out;
}

std::string view_file_stem(std::string_view stem, int view) {
    std::ostringstream os;
    os << stem << '_' << std::setw(3) << std::setfill('0') << view;
    return os.str();
}

void save_stack(const ProjectionStack& stack, const std::filesystem::path& dir, std::string_view stem) {
    validate(stack);
    std::filesystem::create_directories(dir);
    for (int view = 0; view < stack.geometry.view_count(); ++view) {
        const std::string base = view_file_stem(stem, view);
        write_raw(dir / (base + ".f32"), stack.images[static_cast<std::size_t>(view)]);
        nlohmann::json j = {{"geometry", stack.geometry},
                            {"channel", std::string(to_string(stack.channel))},
                            {"label", stack.label},
                            {"view_index", view},
                            {"angle_deg", stack.geometry.angles_deg[static_cast<std::size_t>(view)]},
                            {"rows", stack.geometry.n_v},
                            {"cols", stack.geometry.n_u},
                            {"dtype", "f32le"}};
        std::ofstream out(dir / (base + ".json"));
        if (!out) {
            throw IoError("cannot write " + (dir / (base + ".json")).string());
        }
        out << j.dump(2) << '\n';
    }
}

ProjectionStack load_stack(const std::filesystem::path& dir, std::string_view stem) {
    ProjectionStack stack;
    for (int view = 0;; ++view) {
        const std::string base = view_file_stem(stem, view);
        std::ifstream in(dir / (base + ".json"));
        if (!in) {
            if (view == 0) {
                throw IoError("no projection stack '" + std::string(stem) + "' in " + dir.string());
            }
            break;
        }
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw IoError(base + ".json: " + e.what());
        }
        if (view == 0) {
            stack.geometry = j.at("geometry").get<ProjectionGeometry>();
            stack.channel = channel_from_string(j.at("channel").get<std::string>());
            stack.label = j.value("label", std::string());
        }
        stack.images.push_back(read_raw_image(dir / (base + ".f32"), j.at("rows").get<int>(), j.at("cols").get<int>()));
    }
    validate(stack);
    return stack;
}

} // namespace xpf
