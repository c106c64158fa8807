#include "xpf/physics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "xpf/errors.hpp"
#include "xpf/parallel.hpp"
#include "xpf/random.hpp"
#include "xpf/simd/kernels.hpp"

namespace xpf {

void validate(const AugmentationConfig& cfg) {
    const auto [lo, hi] = cfg.gamma_range;
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
        throw InvalidArgument("augmentation: gamma range must satisfy 0 < low <= high");
    }
    if (!(cfg.photons_per_pixel >= 1.0) || !std::isfinite(cfg.photons_per_pixel)) {
        throw InvalidArgument("augmentation: photons_per_pixel must be >= 1");
    }
}

void to_json(nlohmann::json& j, const AugmentationConfig& c) {
    j = {{"gamma_range", c.gamma_range}, {"photons_per_pixel", c.photons_per_pixel}, {"noise_seed", c.noise_seed}};
}

void from_json(const nlohmann::json& j, AugmentationConfig& c) {
    c.gamma_range = j.value("gamma_range", c.gamma_range);
    c.photons_per_pixel = j.value("photons_per_pixel", c.photons_per_pixel);
    c.noise_seed = j.value("noise_seed", c.noise_seed);
    validate(c);
}

Image polychromatic_intensity(const std::array<Image, 4>& areal_density, const MaterialModel& model,
                              unsigned workers) {
    const Image& first = areal_density[0];
    for (const auto& a : areal_density) {
        if (!a.same_shape(first)) {
            throw InvalidArgument("polychromatic_intensity: areal density maps differ in shape");
        }
        for (float x : a.pixels) {
            if (!(x >= 0.0f) || !std::isfinite(x)) {
                throw InvalidArgument("polychromatic_intensity: areal density must be finite and >= 0");
            }
        }
    }

    const std::size_t bins = model.spectrum.size();
    std::vector<std::array<double, 4>> mu_rho(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        for (Material m : kMaterials) {
            mu_rho[k][static_cast<int>(m)] = model.table(m).at(model.spectrum[k].energy_keV);
        }
    }

    Image out(first.rows, first.cols);
    constexpr std::size_t kChunk = 4096;
    const std::size_t n = first.size();
    parallel_for(
        (n + kChunk - 1) / kChunk,
        [&](std::size_t c) {
            const std::size_t end = std::min(n, (c + 1) * kChunk);
            for (std::size_t i = c * kChunk; i < end; ++i) {
                double sum = 0.0;
                for (std::size_t k = 0; k < bins; ++k) {
                    double e = 0.0;
                    for (int m = 0; m < 4; ++m) {
                        e += mu_rho[k][m] * areal_density[m].pixels[i];
                    }
                    sum += model.spectrum[k].weight * std::exp(-e);
                }
                out.pixels[i] = static_cast<float>(sum);
            }
        },
        workers);
    return out;
}

Image transmitted(const Image& line_integral) {
    Image out(line_integral.rows, line_integral.cols);
    std::transform(line_integral.pixels.begin(), line_integral.pixels.end(), out.pixels.begin(),
                   [](float p) { return static_cast<float>(std::exp(-static_cast<double>(p))); });
    return out;
}

Image add_poisson_noise(const Image& rel_intensity, double photons_per_pixel, std::uint64_t seed,
                        unsigned workers) {
    if (!(photons_per_pixel >= 1.0)) {
        throw InvalidArgument("add_poisson_noise: photons_per_pixel must be >= 1");
    }
    Image out(rel_intensity.rows, rel_intensity.cols);
    const double floor_value = 0.5 / photons_per_pixel;
    const std::size_t n = rel_intensity.size();
    constexpr std::size_t kChunk = 4096;
    parallel_for(
        (n + kChunk - 1) / kChunk,
        [&](std::size_t c) {
            const std::size_t end = std::min(n, (c + 1) * kChunk);
            for (std::size_t i = c * kChunk; i < end; ++i) {
                const double lambda = photons_per_pixel * std::max(0.0, double(rel_intensity.pixels[i]));
                double counts = 0.0;
                if (lambda > 0.0) {
                    CounterRng rng(derive_seed(seed, i));
                    std::poisson_distribution<long long> dist(lambda);
                    counts = static_cast<double>(dist(rng));
                }
                out.pixels[i] = static_cast<float>(counts > 0.0 ? counts / photons_per_pixel : floor_value);
            }
        },
        workers);
    return out;
}

Image log_normalize(const Image& intensity) {
    Image p(intensity.rows, intensity.cols);
    for (std::size_t i = 0; i < intensity.size(); ++i) {
        const float v = intensity.pixels[i];
        if (!(v > 0.0f) || !std::isfinite(v)) {
            throw InvalidArgument("log_normalize: intensity must be positive and finite");
        }
        p.pixels[i] = static_cast<float>(-std::log(static_cast<double>(v)));
    }
    if (p.pixels.empty()) {
        return p;
    }
    const auto mm = simd::active().min_max(p.pixels.data(), p.size());
    const double range = double(mm.max) - double(mm.min);
    for (float& v : p.pixels) {
        v = range > 0.0 ? static_cast<float>((double(v) - mm.min) / range) : 0.0f;
    }
    return p;
}

Image gamma_adjust(const Image& img, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("gamma_adjust: gamma must be > 0");
    }
    Image out(img.rows, img.cols);
    std::transform(img.pixels.begin(), img.pixels.end(), out.pixels.begin(),
                   [gamma](float v) { return static_cast<float>(std::pow(static_cast<double>(v), gamma)); });
    return out;
}

Mask metal_mask(const Image& metal_thickness_mm, double epsilon_mm) {
    Mask m(metal_thickness_mm.rows, metal_thickness_mm.cols);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.pixels[i] = metal_thickness_mm.pixels[i] > epsilon_mm ? 1 : 0;
    }
    return m;
}

} // namespace xpf
