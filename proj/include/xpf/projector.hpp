#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xpf/geometry.hpp"
#include "xpf/image.hpp"
#include "xpf/materials.hpp"
#include "xpf/simd/kernels.hpp"
#include "xpf/volume.hpp"

namespace xpf {

enum class Channel { line_integral, material_thickness, areal_density, intensity, normalized };

std::string_view to_string(Channel c);
Channel channel_from_string(std::string_view s);

struct ProjectionStack {
    ProjectionGeometry geometry;
    Channel channel = Channel::line_integral;
    std::string label;  ///< material name for per-material channels, else empty
    std::vector<Image> images;

    friend bool operator==(const ProjectionStack&, const ProjectionStack&) = default;
};

/// Throws InvalidArgument when the image count or shapes disagree with the
/// geometry, or a path-length channel holds negative values.
void validate(const ProjectionStack& stack);

struct ProjectOptions {
    unsigned workers = 0;                          ///< 0 = default_workers()
    const simd::KernelTable* kernels = nullptr;    ///< null = simd::active()
    double step_fraction = 0.5;                    ///< sample step / voxel spacing
};

/// Portion of a ray inside the grid's voxel box, split into equal midpoint
/// quadrature steps of at most step_fraction * spacing.
struct RaySegment {
    bool hit = false;
    double t_enter = 0.0;
    double t_exit = 0.0;
    double step_mm = 0.0;
    simd::SampleRun run;  ///< in voxel index coordinates
};

/// The grid box spans half a voxel beyond the outer voxel centers. Only the
/// forward half-line (t >= 0) is considered.
RaySegment clip_ray(const std::array<int, 3>& dims, double spacing, Vec3 grid_origin, Vec3 origin, Vec3 direction,
                    double step_fraction = 0.5);

/// Path integral of the clamped-trilinear field along a ray (value * mm).
/// Throws InvalidArgument for a non-finite origin or a non-finite/zero direction.
double line_integral(const Volume& grid, Vec3 origin, Vec3 direction, const ProjectOptions& opts = {});

/// Isocenter moved to the volume center.
ProjectionGeometry centered_on(const ProjectionGeometry& g, const Volume& v);

/// Line integrals of an arbitrary scalar grid for every pixel of every view.
ProjectionStack project_line_integrals(const Volume& values, const ProjectionGeometry& g,
                                       const ProjectOptions& opts = {});

/// mu = max(0, mu_water * (1 + HU / 1000)) in 1/mm.
Volume hu_to_mu_water(const Volume& hu, double mu_water_per_mm, const ProjectOptions& opts = {});

/// mu = (mu/rho)_material(E) * density(HU) per voxel in 1/mm; the per-voxel
/// attenuation the polychromatic model uses at a single energy.
Volume material_mu(const Volume& hu, const MaterialModel& model, double energy_keV);

/// 1 where the voxel's material is m, else 0.
Volume material_indicator(const Volume& hu, Material m);

/// Monochromatic line integrals of water-scaled mu. Throws InvalidArgument if
/// the energy is outside the attenuation table.
ProjectionStack project_mono(const Volume& hu, const ProjectionGeometry& g, double energy_keV,
                             const MaterialModel& model, const ProjectOptions& opts = {});

struct MaterialProjections {
    std::array<ProjectionStack, 4> thickness;      ///< mm, indexed by Material
    std::array<ProjectionStack, 4> areal_density;  ///< g/cm^2, indexed by Material
};

MaterialProjections project_materials(const Volume& hu, const ProjectionGeometry& g, const DensityMap& densities,
                                      const ProjectOptions& opts = {});

/// `<dir>/<stem>_<view>.f32` + `.json` sidecar per view.
void save_stack(const ProjectionStack& stack, const std::filesystem::path& dir, std::string_view stem = "view");
ProjectionStack load_stack(const std::filesystem::path& dir, std::string_view stem = "view");

std::string view_file_stem(std::string_view stem, int view);

} // namespace xpf
