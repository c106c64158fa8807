#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference implementation
// and, on x86-64, an AVX2/FMA variant; the active table is picked once at
// runtime from CPUID (override with XPF_SIMD=scalar|avx2).

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace xpf::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Voxel grid in index space, x fastest. Sample positions are in voxel
/// index coordinates; samples are clamped to the voxel-center range.
struct GridRef {
    const float* values = nullptr;
    std::array<int, 3> dims{1, 1, 1};
};

/// Per-voxel material label (0..3) plus density, as consumed by the material
/// ray kernel. `labels` must be readable for 3 bytes past the last voxel.
struct MaterialGridRef {
    const float* density = nullptr;
    const std::uint8_t* labels = nullptr;
    std::array<int, 3> dims{1, 1, 1};
};

/// Straight run of `count` samples: first + i * step, index coordinates.
struct SampleRun {
    std::array<double, 3> first{};
    std::array<double, 3> step{};
    int count = 0;
};

struct MinMax {
    float min = 0.0f;
    float max = 0.0f;
};

struct Counts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct KernelTable {
    Isa isa = Isa::scalar;

    /// Sum of clamped-trilinear samples along the run.
    double (*sum_samples)(const GridRef& grid, const SampleRun& run) = nullptr;

    /// Per-material sums along the run: out[m] accumulates the interpolated
    /// indicator of material m, out[4 + m] the interpolated indicator*density.
    void (*sum_material_samples)(const MaterialGridRef& grid, const SampleRun& run,
                                 std::array<double, 8>& out) = nullptr;

    /// mu = max(0, mu_water * (1 + hu / 1000))
    void (*hu_to_mu)(const float* hu, float* mu, std::size_t n, float mu_water) = nullptr;

    /// Requires n >= 1.
    MinMax (*min_max)(const float* x, std::size_t n) = nullptr;

    /// Masks are 0/1 bytes (any nonzero byte counts as true).
    Counts (*confusion)(const std::uint8_t* pred, const std::uint8_t* gt, std::size_t n) = nullptr;
};

const KernelTable& kernels(Isa isa);

/// The table selected for this process.
const KernelTable& active();

bool isa_supported(Isa isa);

} // namespace xpf::simd
