#include "xpf/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "xpf/errors.hpp"
#include "xpf/parallel.hpp"

namespace xpf {

namespace {

std::array<int, 3> nearest_voxel(const Volume& v, Vec3 p_mm) {
    const Vec3 q = v.to_index(p_mm);
    std::array<int, 3> idx{};
    for (int a = 0; a < 3; ++a) {
        idx[a] = std::clamp(static_cast<int>(std::lround(q[a])), 0, v.dims()[a] - 1);
    }
    return idx;
}

} // namespace

void rasterize_placement(const Volume& grid, const Placement& placement, std::vector<float>& metal,
                         unsigned workers) {
    const Mat3 rot = rotation_zyx(placement.rotation_rad);
    const Mat3 inv = rot.transposed();
    const Aabb local = bounds(placement.implant);
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    for (int c = 0; c < 8; ++c) {
        const Vec3 corner{(c & 1) ? local.max.x : local.min.x, (c & 2) ? local.max.y : local.min.y,
                          (c & 4) ? local.max.z : local.min.z};
        const Vec3 w = rot * corner + placement.translation_mm;
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], w[a]);
            hi[a] = std::max(hi[a], w[a]);
        }
    }
    std::array<int, 3> first{}, last{};
    for (int a = 0; a < 3; ++a) {
        first[a] = std::max(0, static_cast<int>(std::floor((lo[a] - grid.origin()[a]) / grid.spacing())));
        last[a] = std::min(grid.dims()[a] - 1, static_cast<int>(std::ceil((hi[a] - grid.origin()[a]) / grid.spacing())));
        if (first[a] > last[a]) {
            return;
        }
    }
    const float hu = static_cast<float>(placement.hu_value);
    parallel_for(
        std::size_t(last[2] - first[2] + 1),
        [&](std::size_t dk) {
            const int k = first[2] + int(dk);
            for (int j = first[1]; j <= last[1]; ++j) {
                for (int i = first[0]; i <= last[0]; ++i) {
                    const Vec3 local_p = inv * (grid.voxel_center(i, j, k) - placement.translation_mm);
                    if (sdf_eval(placement.implant, local_p) <= 0.0) {
                        metal[grid.index(i, j, k)] = hu;
                    }
                }
            }
        },
        workers);
}

ComposedScene place_implants(const Volume& anatomy, int n_implants, std::uint64_t seed, unsigned workers) {
    if (n_implants < 0) {
        throw InvalidArgument("place_implants: n_implants must be >= 0");
    }
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    const Vec3 extent_lo = anatomy.origin();
    const Vec3 extent_hi = anatomy.voxel_center(anatomy.dims()[0] - 1, anatomy.dims()[1] - 1, anatomy.dims()[2] - 1);

    std::vector<Placement> placements;
    placements.reserve(n_implants);
    for (int n = 0; n < n_implants; ++n) {
        Placement p;
        p.seed = rng();
        p.implant = random_implant(p.seed);
        bool placed = false;
        for (int attempt = 0; attempt < kPlacementRetryCap && !placed; ++attempt) {
            for (int a = 0; a < 3; ++a) {
                p.rotation_rad[a] = uniform(0.0, 2.0 * std::numbers::pi);
            }
            for (int a = 0; a < 3; ++a) {
                p.translation_mm[a] = extent_lo[a] == extent_hi[a] ? extent_lo[a] : uniform(extent_lo[a], extent_hi[a]);
            }
            p.anchor_voxel = nearest_voxel(anatomy, p.translation_mm);
            placed = anatomy.at(p.anchor_voxel[0], p.anchor_voxel[1], p.anchor_voxel[2]) > kAnchorHuThreshold;
        }
        if (!placed) {
            throw PlacementInfeasible(n, "no anchor above " + std::to_string(int(kAnchorHuThreshold)) + " HU after " +
                                             std::to_string(kPlacementRetryCap) + " attempts");
        }
        p.hu_value = uniform(kMetalHuMin, kMetalHuMax);
        placements.push_back(std::move(p));
    }

    std::vector<float> metal(anatomy.size(), 0.0f);
    for (const auto& p : placements) {
        rasterize_placement(anatomy, p, metal, workers);
    }
    Volume metal_volume(anatomy.dims(), anatomy.spacing(), anatomy.origin(), std::move(metal));
    Volume merged = merge(anatomy, metal_volume);
    return {anatomy, std::move(metal_volume), std::move(merged), std::move(placements)};
}

Volume merge(const Volume& anatomy, const Volume& metal) {
    if (anatomy.dims() != metal.dims() || anatomy.spacing() != metal.spacing()) {
        throw InvalidArgument("merge: anatomy and metal grids differ in dims or spacing");
    }
    auto a = anatomy.values();
    auto m = metal.values();
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = m[i] > 0.0f ? m[i] : a[i];
    }
    return Volume(anatomy.dims(), anatomy.spacing(), anatomy.origin(), std::move(out));
}

void to_json(nlohmann::json& j, const Placement& p) {
    j = {{"implant", p.implant},
         {"rotation_rad", {p.rotation_rad.x, p.rotation_rad.y, p.rotation_rad.z}},
         {"translation_mm", {p.translation_mm.x, p.translation_mm.y, p.translation_mm.z}},
         {"hu_value", p.hu_value},
         {"seed", p.seed},
         {"anchor_voxel", p.anchor_voxel}};
}

void from_json(const nlohmann::json& j, Placement& p) {
    p.implant = j.at("implant").get<ImplantModel>();
    const auto r = j.at("rotation_rad").get<std::array<double, 3>>();
    const auto t = j.at("translation_mm").get<std::array<double, 3>>();
    p.rotation_rad = {r[0], r[1], r[2]};
    p.translation_mm = {t[0], t[1], t[2]};
    p.hu_value = j.at("hu_value").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.anchor_voxel = j.at("anchor_voxel").get<std::array<int, 3>>();
}

} // namespace xpf
