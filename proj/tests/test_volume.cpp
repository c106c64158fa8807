#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "xpf/errors.hpp"
#include "xpf/volume.hpp"

using namespace xpf;

namespace {

Volume ramp_x(std::array<int, 3> dims, double spacing) {
    std::vector<float> v(std::size_t(dims[0]) * dims[1] * dims[2]);
    for (int k = 0; k < dims[2]; ++k)
        for (int j = 0; j < dims[1]; ++j)
            for (int i = 0; i < dims[0]; ++i) v[i + std::size_t(dims[0]) * (j + std::size_t(dims[1]) * k)] = 10.0f * i + j - 2.0f * k;
    return Volume(dims, spacing, {1.0, -2.0, 3.5}, v);
}

} // namespace

TEST_CASE("volume invariants are enforced") {
    CHECK_THROWS_AS(Volume({0, 1, 1}, 1.0, {}, {}), InvalidArgument);
    CHECK_THROWS_AS(Volume({1, 1, 1}, 0.0, {}, {0.0f}), InvalidArgument);
    CHECK_THROWS_AS(Volume({2, 1, 1}, 1.0, {}, {0.0f}), InvalidArgument);
    CHECK_THROWS_AS(Volume({1, 1, 1}, 1.0, {}, {std::nanf("")}), InvalidArgument);
    const Volume v = Volume::filled({2, 3, 4}, 0.5, {1, 2, 3}, 7.0f);
    CHECK(v.size() == 24);
    CHECK(v.at(1, 2, 3) == 7.0f);
    CHECK(v.voxel_center(1, 2, 3).x == doctest::Approx(1.5));
    CHECK(v.center().z == doctest::Approx(3.75));
}

TEST_CASE("resample") {
    SUBCASE("equal spacing is value-identical") {
        const Volume v = ramp_x({6, 5, 4}, 0.5);
        CHECK(resample(v, 0.5) == v);
    }
    SUBCASE("constant volume stays constant inside support") {
        const Volume v = Volume::filled({8, 8, 8}, 1.0, {}, 300.0f);
        const Volume r = resample(v, 0.7);
        CHECK(r.spacing() == 0.7);
        CHECK(r.dims()[0] == 11);
        for (int k = 0; k < r.dims()[2]; ++k)
            for (int j = 0; j < r.dims()[1]; ++j)
                for (int i = 0; i < r.dims()[0]; ++i) {
                    const Vec3 p = r.voxel_center(i, j, k);
                    const bool inside = p.x <= 7.0 && p.y <= 7.0 && p.z <= 7.0;
                    REQUIRE(r.at(i, j, k) == (inside ? 300.0f : -1000.0f));
                }
    }
    SUBCASE("downsampling a ramp matches a direct trilinear oracle") {
        const Volume v = ramp_x({20, 9, 7}, 0.5);
        const Volume r = resample(v, 1.0);
        CHECK(r.dims() == std::array<int, 3>{10, 5, 4});  // round(n * 0.5 / 1.0)
        double worst = 0.0;
        for (int k = 0; k < r.dims()[2]; ++k)
            for (int j = 0; j < r.dims()[1]; ++j)
                for (int i = 0; i < r.dims()[0]; ++i) {
                    const Vec3 q = v.to_index(r.voxel_center(i, j, k));
                    if (q.x > 19 || q.y > 8 || q.z > 6) continue;
                    worst = std::max(worst, std::abs(r.at(i, j, k) - oracle::trilinear(v, q.x, q.y, q.z)));
                }
        CHECK(worst < 1e-6 * 200);  // float storage of values up to ~200
    }
    SUBCASE("upsampling keeps values within the input range extended by air") {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<float> d(-200.f, 1500.f);
        std::vector<float> vals(6 * 6 * 6);
        for (auto& x : vals) x = d(rng);
        const Volume v({6, 6, 6}, 1.0, {}, vals);
        const Volume r = resample(v, 0.5);
        CHECK(r.dims() == std::array<int, 3>{12, 12, 12});
        for (float x : r.values()) {
            REQUIRE((x == -1000.0f || (x >= -200.0f - 1e-3f && x <= 1500.0f + 1e-3f)));
        }
    }
    SUBCASE("spacing after resampling to 0.5 mm is exact") {
        CHECK(resample(ramp_x({5, 5, 5}, 0.8), 0.5).spacing() == 0.5);
    }
    SUBCASE("worker count does not change results") {
        const Volume v = ramp_x({15, 11, 9}, 0.9);
        CHECK(resample(v, 0.4, 1) == resample(v, 0.4, 3));
    }
    SUBCASE("non-positive spacing throws") {
        CHECK_THROWS_AS(resample(ramp_x({2, 2, 2}, 1.0), 0.0), InvalidArgument);
        CHECK_THROWS_AS(resample(ramp_x({2, 2, 2}, 1.0), -1.0), InvalidArgument);
    }
}

TEST_CASE("crop_slices") {
    const Volume v = ramp_x({10, 3, 2}, 0.5);
    CHECK(crop_slices(v, 0, 10) == v);
    const Volume c = crop_slices(v, 3, 4);
    CHECK(c.dims() == std::array<int, 3>{4, 3, 2});
    CHECK(c.at(0, 1, 1) == v.at(3, 1, 1));
    CHECK(c.origin().x == doctest::Approx(v.origin().x + 1.5));
    CHECK(crop_slices(crop_slices(v, 2, 7), 1, 3) == crop_slices(v, 3, 3));
    CHECK_THROWS_AS(crop_slices(v, 5, 6), OutOfBounds);
    CHECK_THROWS_AS(crop_slices(v, -1, 2), OutOfBounds);

    const Volume big = Volume::filled({1000, 2, 2}, 0.5, {}, 0.0f);
    CHECK(crop_slices(big, 400, 600).dims()[0] == 600);
    CHECK_THROWS_AS(crop_slices(big, 500, 600), OutOfBounds);
}

TEST_CASE("synth_phantom") {
    PhantomSpec spec;
    spec.dims = {8, 8, 8};
    Volume empty = synth_phantom(spec);
    for (float x : empty.values()) REQUIRE(x == -1000.0f);

    spec.dims = {60, 60, 60};
    spec.spacing_mm = 0.5;
    spec.parts = {{{14.75, 14.75, 14.75}, {10, 10, 10}, 1200.0f}};
    const Volume v = synth_phantom(spec);
    std::size_t inside = 0;
    for (float x : v.values()) inside += x == 1200.0f;
    const double expected = 4.0 / 3.0 * std::numbers::pi * 20.0 * 20.0 * 20.0;
    CHECK(std::abs(double(inside) - expected) / expected < 0.02);

    spec.texture_hu = 20.0f;
    spec.seed = 9;
    CHECK(synth_phantom(spec) == synth_phantom(spec));

    spec.parts[0].hu = 2990.0f;
    CHECK_THROWS_AS(validate(spec), InvalidArgument);
    spec.parts[0].hu = 1200.0f;
    spec.parts[0].semi_axes_mm.y = 0.0;
    CHECK_THROWS_AS(validate(spec), InvalidArgument);
}

TEST_CASE("knee phantom has bone above the anchor threshold") {
    const Volume v = synth_phantom(knee_phantom(3, {125, 75, 75}, 1.0));
    std::size_t bone = 0, cortical = 0;
    for (float x : v.values()) {
        bone += x > 500.0f;
        cortical += x > 1100.0f;
        REQUIRE(x < 2000.0f);
    }
    CHECK(bone > 1000);
    CHECK(cortical > 100);
}

TEST_CASE("volume file round trip") {
    const Volume v = ramp_x({4, 3, 2}, 0.25);
    const auto dir = std::filesystem::temp_directory_path() / "xpf_volume_io";
    std::filesystem::create_directories(dir);
    save_volume(v, dir / "ramp");
    CHECK(std::filesystem::exists(dir / "ramp.vol.raw"));
    CHECK(std::filesystem::file_size(dir / "ramp.vol.raw") == 4 * 24);
    CHECK(load_volume(dir / "ramp") == v);
    CHECK(load_volume(dir / "ramp.vol.json") == v);
    CHECK_THROWS_AS(load_volume(dir / "missing"), IoError);
    std::filesystem::remove_all(dir);
}
