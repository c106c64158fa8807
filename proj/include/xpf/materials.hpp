#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "xpf/volume.hpp"

namespace xpf {

enum class Material : std::uint8_t { air = 0, soft_tissue = 1, bone = 2, metal = 3 };

inline constexpr std::array<Material, 4> kMaterials{Material::air, Material::soft_tissue, Material::bone,
                                                    Material::metal};

std::string_view to_string(Material m);

/// air < -800 <= soft tissue <= 350 < bone <= 2000 < metal
constexpr Material classify_hu(float hu) {
    if (hu < -800.0f) {
        return Material::air;
    }
    if (hu <= 350.0f) {
        return Material::soft_tissue;
    }
    if (hu <= 2000.0f) {
        return Material::bone;
    }
    return Material::metal;
}

/// Per-voxel material labels, same layout as the source volume. The buffer is
/// padded so vector gathers may read 3 bytes past the last voxel.
struct LabelVolume {
    std::array<int, 3> dims{1, 1, 1};
    std::vector<std::uint8_t> labels;  // size = voxel count + padding

    std::size_t size() const { return std::size_t(dims[0]) * dims[1] * dims[2]; }
    Material at(std::size_t i) const { return static_cast<Material>(labels[i]); }
};

LabelVolume decompose_materials(const Volume& v);

/// Mass attenuation table with log-log interpolation.
struct AttenuationTable {
    std::vector<double> energy_keV;
    std::vector<double> mu_over_rho_cm2_g;

    /// Throws InvalidArgument outside [front, back] of the energy grid.
    double at(double energy_keV) const;
    double min_energy() const { return energy_keV.front(); }
    double max_energy() const { return energy_keV.back(); }
};

/// Piecewise-linear HU -> mass density (g/cm^3) for non-metal voxels,
/// constant density for metal.
struct DensityMap {
    std::vector<double> hu{-1000.0, 0.0, 1500.0};
    std::vector<double> density{0.0012, 1.0, 1.92};
    double metal_density = 4.5;

    double operator()(float hu_value, Material m) const;
};

struct SpectrumBin {
    double energy_keV = 0.0;
    double weight = 0.0;
};

struct MaterialModel {
    std::vector<SpectrumBin> spectrum;
    std::array<AttenuationTable, 4> mu_over_rho;  // indexed by Material
    AttenuationTable water;                        // reference for HU -> mu
    DensityMap densities;

    /// Throws InvalidArgument on unnormalized weights, non-positive or
    /// non-decreasing-with-energy tables, or spectrum energies off-table.
    void validate() const;

    /// Linear attenuation of water in 1/mm.
    double mu_water_per_mm(double energy_keV) const { return 0.1 * water.at(energy_keV); }

    const AttenuationTable& table(Material m) const { return mu_over_rho[static_cast<int>(m)]; }

    /// Same tables, spectrum replaced by one bin of weight 1.
    MaterialModel with_single_bin(double energy_keV) const;
};

/// Directory holding spectrum_90kvp.csv and mu_{air,soft_tissue,bone,metal,water}.csv.
/// Resolution order: explicit argument, $XPF_DATA_DIR, build-time default.
std::filesystem::path resolve_data_dir(const std::filesystem::path& explicit_dir = {});

std::vector<SpectrumBin> load_spectrum_csv(const std::filesystem::path& path);
AttenuationTable load_attenuation_csv(const std::filesystem::path& path);
MaterialModel load_material_model(const std::filesystem::path& data_dir);

/// Per-voxel density from labels and HU.
std::vector<float> density_grid(const Volume& v, const LabelVolume& labels, const DensityMap& map);

} // namespace xpf
