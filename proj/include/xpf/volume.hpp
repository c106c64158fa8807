#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "xpf/vec3.hpp"

namespace xpf {

inline constexpr float kAirHu = -1000.0f;

/// Scalar HU grid with isotropic spacing. Storage is x fastest:
/// index = i + nx * (j + ny * k). Axis 0 (x) is the long/slice axis and
/// doubles as the rotation axis of the scanner.
class Volume {
  public:
    Volume(std::array<int, 3> dims, double spacing_mm, Vec3 origin_mm, std::vector<float> values);

    static Volume filled(std::array<int, 3> dims, double spacing_mm, Vec3 origin_mm, float value);

    const std::array<int, 3>& dims() const { return dims_; }
    double spacing() const { return spacing_; }
    const Vec3& origin() const { return origin_; }
    std::span<const float> values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims_[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
    }
    float at(int i, int j, int k) const { return values_[index(i, j, k)]; }

    /// Center of voxel (i, j, k) in millimeters.
    Vec3 voxel_center(int i, int j, int k) const {
        return origin_ + spacing_ * Vec3{double(i), double(j), double(k)};
    }
    /// Midpoint between the first and last voxel centers.
    Vec3 center() const;
    /// Continuous voxel-index coordinates of a millimeter point.
    Vec3 to_index(Vec3 p_mm) const { return (p_mm - origin_) / spacing_; }

    friend bool operator==(const Volume&, const Volume&) = default;

  private:
    std::array<int, 3> dims_;
    double spacing_;
    Vec3 origin_;
    std::vector<float> values_;
};

struct Ellipsoid {
    Vec3 center_mm;
    Vec3 semi_axes_mm;
    float hu = 0.0f;
};

/// Synthetic anatomy description. Ellipsoids are rasterized in order, later
/// parts overwriting earlier ones. texture_hu > 0 adds seeded uniform jitter
/// in [-texture_hu, texture_hu] to voxels covered by a part.
struct PhantomSpec {
    std::uint64_t seed = 0;
    std::array<int, 3> dims{1, 1, 1};
    double spacing_mm = 1.0;
    Vec3 origin_mm{};
    std::vector<Ellipsoid> parts;
    float texture_hu = 0.0f;
};

/// Resample onto a grid of the given isotropic spacing. Origin is preserved,
/// output dims are round(n * spacing / target); samples outside the input
/// voxel-center range are air.
Volume resample(const Volume& v, double target_spacing_mm, unsigned workers = 0);

/// Keep `count` contiguous slices of axis 0 starting at `start`.
Volume crop_slices(const Volume& v, int start, int count);

Volume synth_phantom(const PhantomSpec& spec);
void validate(const PhantomSpec& spec);

/// Seeded knee-like phantom: leg soft tissue, femur and tibia with cortical
/// shell and marrow, condyles, tibial plateau and patella, along axis 0.
PhantomSpec knee_phantom(std::uint64_t seed, std::array<int, 3> dims, double spacing_mm);

/// `<stem>.vol.raw` + `<stem>.vol.json`.
void save_volume(const Volume& v, const std::filesystem::path& stem);
/// Accepts the stem, the `.vol.json` or the `.vol.raw` path.
Volume load_volume(const std::filesystem::path& path);

} // namespace xpf
