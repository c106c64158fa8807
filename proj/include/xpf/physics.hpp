#pragma once

#include <array>
#include <cstdint>

#include <json.hpp>

#include "xpf/image.hpp"
#include "xpf/materials.hpp"

namespace xpf {

struct AugmentationConfig {
    std::array<double, 2> gamma_range{0.7, 1.3};
    double photons_per_pixel = 1e5;
    std::uint64_t noise_seed = 0;

    friend bool operator==(const AugmentationConfig&, const AugmentationConfig&) = default;
};

/// Throws InvalidArgument when an invariant does not hold.
void validate(const AugmentationConfig& cfg);

void to_json(nlohmann::json& j, const AugmentationConfig& c);
void from_json(const nlohmann::json& j, AugmentationConfig& c);

/// I/I0 = sum_k S_k exp(-sum_m (mu/rho)_m(E_k) a_m), areal densities in g/cm^2
/// indexed by Material. Throws InvalidArgument on shape mismatch or a
/// negative areal density.
Image polychromatic_intensity(const std::array<Image, 4>& areal_density, const MaterialModel& model,
                              unsigned workers = 0);

/// exp(-p) per pixel.
Image transmitted(const Image& line_integral);

/// Poisson(N0 * I) / N0 per pixel with zero counts clamped to 1/(2 N0). Each
/// pixel draws from its own counter-based stream keyed by (seed, pixel index).
Image add_poisson_noise(const Image& rel_intensity, double photons_per_pixel, std::uint64_t seed,
                        unsigned workers = 0);

/// -ln(I) rescaled to [0, 1] per image; a constant image maps to zeros.
/// Throws InvalidArgument for non-positive intensities.
Image log_normalize(const Image& intensity);

/// img^gamma. Throws InvalidArgument for gamma <= 0.
Image gamma_adjust(const Image& img, double gamma);

/// thickness > epsilon
Mask metal_mask(const Image& metal_thickness_mm, double epsilon_mm = 0.1);

} // namespace xpf
