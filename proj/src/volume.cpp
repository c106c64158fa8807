#include "xpf/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

#include "xpf/errors.hpp"
#include "xpf/parallel.hpp"
#include "xpf/random.hpp"

namespace xpf {

static_assert(std::endian::native == std::endian::little, "raw volume I/O assumes a little-endian host");

Volume::Volume(std::array<int, 3> dims, double spacing_mm, Vec3 origin_mm, std::vector<float> values)
    : dims_(dims), spacing_(spacing_mm), origin_(origin_mm), values_(std::move(values)) {
    for (int d : dims_) {
        if (d < 1) {
            throw InvalidArgument("volume dims must be >= 1");
        }
    }
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_)) {
        throw InvalidArgument("volume spacing must be > 0");
    }
    if (!is_finite(origin_)) {
        throw InvalidArgument("volume origin must be finite");
    }
    const std::size_t expected = std::size_t(dims_[0]) * dims_[1] * dims_[2];
    if (values_.size() != expected) {
        throw InvalidArgument("volume value count " + std::to_string(values_.size()) + " != " +
                              std::to_string(expected));
    }
    if (!std::all_of(values_.begin(), values_.end(), [](float x) { return std::isfinite(x); })) {
        throw InvalidArgument("volume values must be finite");
    }
}

Volume Volume::filled(std::array<int, 3> dims, double spacing_mm, Vec3 origin_mm, float value) {
    for (int d : dims) {
        if (d < 1) {
            throw InvalidArgument("volume dims must be >= 1");
        }
    }
    return Volume(dims, spacing_mm, origin_mm, std::vector<float>(std::size_t(dims[0]) * dims[1] * dims[2], value));
}

Vec3 Volume::center() const {
    return origin_ + 0.5 * spacing_ * Vec3{double(dims_[0] - 1), double(dims_[1] - 1), double(dims_[2] - 1)};
}

namespace {

// Trilinear sample at continuous index coordinates; air when the point is
// outside the voxel-center range.
float sample_or_air(const Volume& v, Vec3 q) {
    constexpr double tol = 1e-9;
    const auto& d = v.dims();
    std::array<int, 3> i0{};
    std::array<double, 3> f{};
    for (int a = 0; a < 3; ++a) {
        double p = q[a];
        if (p < -tol || p > d[a] - 1 + tol) {
            return kAirHu;
        }
        p = std::clamp(p, 0.0, double(d[a] - 1));
        i0[a] = std::min(static_cast<int>(std::floor(p)), std::max(d[a] - 2, 0));
        f[a] = p - i0[a];
    }
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
        const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
        const double w = (bx ? f[0] : 1.0 - f[0]) * (by ? f[1] : 1.0 - f[1]) * (bz ? f[2] : 1.0 - f[2]);
        if (w == 0.0) {
            continue;
        }
        acc += w * v.at(std::min(i0[0] + bx, d[0] - 1), std::min(i0[1] + by, d[1] - 1), std::min(i0[2] + bz, d[2] - 1));
    }
    return static_cast<float>(acc);
}

} // namespace

Volume resample(const Volume& v, double target_spacing_mm, unsigned workers) {
    if (!(target_spacing_mm > 0.0) || !std::isfinite(target_spacing_mm)) {
        throw InvalidArgument("resample: target spacing must be > 0");
    }
    if (target_spacing_mm == v.spacing()) {
        return v;
    }
    const double ratio = target_spacing_mm / v.spacing();
    std::array<int, 3> out_dims{};
    for (int a = 0; a < 3; ++a) {
        out_dims[a] = std::max(1, static_cast<int>(std::lround(v.dims()[a] * v.spacing() / target_spacing_mm)));
    }
    std::vector<float> out(std::size_t(out_dims[0]) * out_dims[1] * out_dims[2]);
    parallel_for(
        std::size_t(out_dims[2]),
        [&](std::size_t k) {
            for (int j = 0; j < out_dims[1]; ++j) {
                float* row = out.data() + std::size_t(out_dims[0]) * (j + std::size_t(out_dims[1]) * k);
                for (int i = 0; i < out_dims[0]; ++i) {
                    row[i] = sample_or_air(v, Vec3{i * ratio, j * ratio, k * ratio});
                }
            }
        },
        workers);
    return Volume(out_dims, target_spacing_mm, v.origin(), std::move(out));
}

Volume crop_slices(const Volume& v, int start, int count) {
    const auto& d = v.dims();
    if (start < 0 || count < 1 || static_cast<long>(start) + count > d[0]) {
        throw OutOfBounds("crop_slices: [" + std::to_string(start) + ", " + std::to_string(long(start) + count) +
                          ") outside " + std::to_string(d[0]) + " slices");
    }
    std::vector<float> out(std::size_t(count) * d[1] * d[2]);
    auto src = v.values();
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            const auto first = src.begin() + static_cast<std::ptrdiff_t>(v.index(start, j, k));
            std::copy(first, first + count, out.begin() + std::ptrdiff_t(count) * (j + std::ptrdiff_t(d[1]) * k));
        }
    }
    Vec3 origin = v.origin();
    origin.x += start * v.spacing();
    return Volume({count, d[1], d[2]}, v.spacing(), origin, std::move(out));
}

void validate(const PhantomSpec& spec) {
    for (int d : spec.dims) {
        if (d < 1) {
            throw InvalidArgument("phantom dims must be >= 1");
        }
    }
    if (!(spec.spacing_mm > 0.0)) {
        throw InvalidArgument("phantom spacing must be > 0");
    }
    if (spec.texture_hu < 0.0f) {
        throw InvalidArgument("phantom texture amplitude must be >= 0");
    }
    for (const auto& p : spec.parts) {
        if (!(p.semi_axes_mm.x > 0 && p.semi_axes_mm.y > 0 && p.semi_axes_mm.z > 0)) {
            throw InvalidArgument("phantom ellipsoid semi-axes must be > 0");
        }
        if (p.hu - spec.texture_hu < -1000.0f || p.hu + spec.texture_hu > 3000.0f) {
            throw InvalidArgument("phantom HU must lie in [-1000, 3000]");
        }
    }
}

Volume synth_phantom(const PhantomSpec& spec) {
    validate(spec);
    const auto& d = spec.dims;
    std::vector<float> values(std::size_t(d[0]) * d[1] * d[2], kAirHu);
    std::vector<std::uint8_t> covered(spec.texture_hu > 0.0f ? values.size() : 0, 0);
    const double s = spec.spacing_mm;
    for (const auto& part : spec.parts) {
        std::array<int, 3> lo{}, hi{};
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::max(0, static_cast<int>(std::floor((part.center_mm[a] - part.semi_axes_mm[a] - spec.origin_mm[a]) / s)));
            hi[a] = std::min(d[a] - 1, static_cast<int>(std::ceil((part.center_mm[a] + part.semi_axes_mm[a] - spec.origin_mm[a]) / s)));
        }
        for (int k = lo[2]; k <= hi[2]; ++k) {
            const double z = (spec.origin_mm.z + k * s - part.center_mm.z) / part.semi_axes_mm.z;
            for (int j = lo[1]; j <= hi[1]; ++j) {
                const double y = (spec.origin_mm.y + j * s - part.center_mm.y) / part.semi_axes_mm.y;
                const double yz = y * y + z * z;
                if (yz > 1.0) {
                    continue;
                }
                for (int i = lo[0]; i <= hi[0]; ++i) {
                    const double x = (spec.origin_mm.x + i * s - part.center_mm.x) / part.semi_axes_mm.x;
                    if (x * x + yz <= 1.0) {
                        const std::size_t idx = std::size_t(i) + std::size_t(d[0]) * (j + std::size_t(d[1]) * k);
                        values[idx] = part.hu;
                        if (!covered.empty()) {
                            covered[idx] = 1;
                        }
                    }
                }
            }
        }
    }
    if (!covered.empty()) {
        for (std::size_t idx = 0; idx < values.size(); ++idx) {
            if (covered[idx]) {
                CounterRng rng(derive_seed(spec.seed, idx));
                const double u = std::ldexp(static_cast<double>(rng() >> 11), -53);
                values[idx] += static_cast<float>((2.0 * u - 1.0) * spec.texture_hu);
            }
        }
    }
    return Volume(d, s, spec.origin_mm, std::move(values));
}

PhantomSpec knee_phantom(std::uint64_t seed, std::array<int, 3> dims, double spacing_mm) {
    PhantomSpec spec;
    spec.seed = seed;
    spec.dims = dims;
    spec.spacing_mm = spacing_mm;
    spec.texture_hu = 15.0f;

    std::mt19937_64 rng(seed);
    auto jitter = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto scale = [&] { return jitter(0.9, 1.1); };

    const Vec3 c = 0.5 * spacing_mm * Vec3{double(dims[0] - 1), double(dims[1] - 1), double(dims[2] - 1)};
    const double lx = dims[0] * spacing_mm;
    const double w = std::min(dims[1], dims[2]) * spacing_mm;
    const double joint = c.x + jitter(-0.03, 0.03) * lx;
    auto add = [&](Vec3 center, Vec3 semi, double hu) {
        spec.parts.push_back({center, semi, static_cast<float>(hu)});
    };

    // leg: fat sheath then muscle
    const double leg = 0.3 * w * scale();
    add({c.x, c.y, c.z}, {0.75 * lx, leg, 0.9 * leg}, jitter(-110.0, -80.0));
    add({c.x, c.y, c.z}, {0.75 * lx, 0.88 * leg, 0.8 * leg}, jitter(30.0, 60.0));

    // femur: shaft cortex, marrow, condyles
    const double fr = 0.1 * w * scale();
    add({joint - 0.42 * lx, c.y, c.z}, {0.42 * lx, fr, fr}, jitter(1200.0, 1600.0));
    add({joint - 0.45 * lx, c.y, c.z}, {0.42 * lx, 0.6 * fr, 0.6 * fr}, jitter(200.0, 400.0));
    for (double side : {-1.0, 1.0}) {
        add({joint - 0.05 * lx, c.y + side * 0.07 * w, c.z}, {0.07 * lx, 0.075 * w * scale(), 0.1 * w}, jitter(650.0, 950.0));
    }

    // tibia: shaft cortex, marrow, plateau; fibula
    const double tr = 0.09 * w * scale();
    add({joint + 0.44 * lx, c.y, c.z - 0.02 * w}, {0.42 * lx, tr, tr}, jitter(1200.0, 1600.0));
    add({joint + 0.47 * lx, c.y, c.z - 0.02 * w}, {0.42 * lx, 0.6 * tr, 0.6 * tr}, jitter(200.0, 400.0));
    add({joint + 0.06 * lx, c.y, c.z - 0.02 * w}, {0.055 * lx, 0.16 * w * scale(), 0.12 * w}, jitter(650.0, 950.0));
    add({joint + 0.35 * lx, c.y + 0.15 * w, c.z - 0.05 * w}, {0.3 * lx, 0.03 * w, 0.03 * w}, jitter(1000.0, 1300.0));

    // patella
    add({joint - 0.02 * lx, c.y, c.z + 0.19 * w}, {0.045 * lx, 0.06 * w * scale(), 0.03 * w}, jitter(800.0, 1100.0));
    return spec;
}

void save_volume(const Volume& v, const std::filesystem::path& stem) {
    const std::string base = stem.string();
    {
        std::ofstream raw(base + ".vol.raw", std::ios::binary);
        if (!raw) {
            throw IoError("cannot write " + base + ".vol.raw");
        }
        auto vals = v.values();
        raw.write(reinterpret_cast<const char*>(vals.data()), static_cast<std::streamsize>(vals.size_bytes()));
        if (!raw) {
            throw IoError("short write to " + base + ".vol.raw");
        }
    }
    nlohmann::json j;
    j["dims"] = v.dims();
    j["spacing_mm"] = v.spacing();
    j["origin_mm"] = {v.origin().x, v.origin().y, v.origin().z};
    j["dtype"] = "f32le";
    std::ofstream out(base + ".vol.json");
    if (!out) {
        throw IoError("cannot write " + base + ".vol.json");
    }
    out << j.dump(2) << '\n';
}

namespace {

std::string strip_suffix(std::string s) {
    for (const char* suffix : {".vol.json", ".vol.raw"}) {
        const std::string suf(suffix);
        if (s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0) {
            return s.substr(0, s.size() - suf.size());
        }
    }
    return s;
}

} // namespace

Volume load_volume(const std::filesystem::path& path) {
    const std::string base = strip_suffix(path.string());
    std::ifstream in(base + ".vol.json");
    if (!in) {
        throw IoError("cannot read " + base + ".vol.json");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(base + ".vol.json: " + e.what());
    }
    if (j.value("dtype", std::string()) != "f32le") {
        throw IoError(base + ".vol.json: dtype must be \"f32le\"");
    }
    const auto dims = j.at("dims").get<std::array<int, 3>>();
    const auto origin = j.at("origin_mm").get<std::array<double, 3>>();
    const double spacing = j.at("spacing_mm").get<double>();
    for (int d : dims) {
        if (d < 1) {
            throw IoError(base + ".vol.json: dims must be >= 1");
        }
    }
    std::vector<float> values(std::size_t(dims[0]) * dims[1] * dims[2]);
    std::ifstream raw(base + ".vol.raw", std::ios::binary | std::ios::ate);
    if (!raw) {
        throw IoError("cannot read " + base + ".vol.raw");
    }
    const auto bytes = static_cast<std::size_t>(raw.tellg());
    if (bytes != values.size() * sizeof(float)) {
        throw IoError(base + ".vol.raw: size " + std::to_string(bytes) + " does not match header dims");
    }
    raw.seekg(0);
    raw.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
    return Volume(dims, spacing, {origin[0], origin[1], origin[2]}, std::move(values));
}

} // namespace xpf
