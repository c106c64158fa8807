#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "xpf/errors.hpp"
#include "xpf/materials.hpp"
#include "xpf/physics.hpp"

using namespace xpf;

namespace {

MaterialModel two_bin_model(double mu_rho_a, double mu_rho_b) {
    MaterialModel m;
    m.spectrum = {{40.0, 0.5}, {80.0, 0.5}};
    AttenuationTable t;
    t.energy_keV = {40.0, 80.0};
    t.mu_over_rho_cm2_g = {mu_rho_a, mu_rho_b};
    m.mu_over_rho = {t, t, t, t};
    m.water = t;
    return m;
}

Image image_of(std::vector<float> v) {
    Image img(1, int(v.size()));
    img.pixels = std::move(v);
    return img;
}

} // namespace

TEST_CASE("material classification") {
    CHECK(classify_hu(-1000.0f) == Material::air);
    CHECK(classify_hu(-800.01f) == Material::air);
    CHECK(classify_hu(-800.0f) == Material::soft_tissue);
    CHECK(classify_hu(0.0f) == Material::soft_tissue);
    CHECK(classify_hu(350.0f) == Material::soft_tissue);
    CHECK(classify_hu(350.01f) == Material::bone);
    CHECK(classify_hu(1000.0f) == Material::bone);
    CHECK(classify_hu(2000.0f) == Material::bone);
    CHECK(classify_hu(2000.01f) == Material::metal);
    CHECK(classify_hu(5000.0f) == Material::metal);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<float> d(-1100.f, 6000.f);
    std::vector<float> v(1000);
    for (auto& x : v) x = d(rng);
    const LabelVolume l = decompose_materials(Volume({10, 10, 10}, 1.0, {}, v));
    std::array<std::size_t, 4> counts{};
    for (std::size_t i = 0; i < l.size(); ++i) counts[l.labels[i]]++;
    CHECK(counts[0] + counts[1] + counts[2] + counts[3] == 1000);
    CHECK(l.labels.size() >= l.size() + 3);
}

TEST_CASE("density map") {
    const DensityMap d;
    CHECK(d(-1000.0f, Material::air) == doctest::Approx(0.0012));
    CHECK(d(0.0f, Material::soft_tissue) == doctest::Approx(1.0));
    CHECK(d(1500.0f, Material::bone) == doctest::Approx(1.92));
    CHECK(d(750.0f, Material::bone) == doctest::Approx(1.46));
    CHECK(d(6000.0f, Material::metal) == 4.5);
    CHECK(d(1600.0f, Material::bone) > 1.92);
}

TEST_CASE("shipped material model is valid") {
    const MaterialModel m = load_material_model(resolve_data_dir());
    CHECK_NOTHROW(m.validate());
    CHECK(m.spectrum.size() == 20);
    double sum = 0.0;
    for (const auto& b : m.spectrum) sum += b.weight;
    CHECK(std::abs(sum - 1.0) < 1e-9);
    for (Material mat : kMaterials) {
        const auto& t = m.table(mat);
        CHECK(t.min_energy() <= 10.0);
        CHECK(t.max_energy() >= 150.0);
        for (std::size_t i = 1; i < t.energy_keV.size(); ++i) CHECK(t.mu_over_rho_cm2_g[i] < t.mu_over_rho_cm2_g[i - 1]);
    }
    // log-log interpolation hits table nodes exactly and is monotone between them
    const auto& w = m.water;
    CHECK(w.at(w.energy_keV[3]) == doctest::Approx(w.mu_over_rho_cm2_g[3]).epsilon(1e-12));
    CHECK(w.at(55.0) < w.at(50.0));
    CHECK(w.at(55.0) > w.at(60.0));
    CHECK(m.mu_water_per_mm(60.0) == doctest::Approx(0.1 * w.at(60.0)));
    CHECK_THROWS_AS(w.at(5.0), InvalidArgument);

    MaterialModel bad = m;
    bad.spectrum[0].weight += 0.01;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("polychromatic_intensity") {
    const MaterialModel m = two_bin_model(0.1, 1.0);
    std::array<Image, 4> zero{Image(2, 2), Image(2, 2), Image(2, 2), Image(2, 2)};
    for (float p : polychromatic_intensity(zero, m).pixels) CHECK(p == 1.0f);

    std::array<Image, 4> one = zero;
    one[1] = Image(2, 2, 1.0f);
    for (float p : polychromatic_intensity(one, m).pixels) CHECK(p == doctest::Approx(0.5 * std::exp(-0.1) + 0.5 * std::exp(-1.0)).epsilon(1e-6));

    const MaterialModel single = m.with_single_bin(40.0);
    std::array<Image, 4> a = zero;
    a[3] = Image(2, 2, 3.0f);
    for (float p : polychromatic_intensity(a, single).pixels) CHECK(p == doctest::Approx(std::exp(-0.3)).epsilon(1e-6));

    std::array<Image, 4> neg = zero;
    neg[2].pixels[1] = -0.1f;
    CHECK_THROWS_AS(polychromatic_intensity(neg, m), InvalidArgument);
    std::array<Image, 4> mismatch = zero;
    mismatch[0] = Image(3, 2);
    CHECK_THROWS_AS(polychromatic_intensity(mismatch, m), InvalidArgument);

    SUBCASE("strictly monotone in every areal density") {
        const MaterialModel real = load_material_model(resolve_data_dir());
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<float> u(0.0f, 3.0f);
        for (int n = 0; n < 200; ++n) {
            std::array<Image, 4> base{Image(1, 1), Image(1, 1), Image(1, 1), Image(1, 1)};
            for (auto& img : base) img.pixels[0] = u(rng);
            const float i0 = polychromatic_intensity(base, real).pixels[0];
            REQUIRE(i0 > 0.0f);
            REQUIRE(i0 <= 1.0f);
            for (int mat = 0; mat < 4; ++mat) {
                auto more = base;
                more[mat].pixels[0] += 0.5f;
                REQUIRE(polychromatic_intensity(more, real).pixels[0] < i0);
            }
        }
    }
}

TEST_CASE("add_poisson_noise") {
    SUBCASE("reproducible and independent of evaluation order") {
        Image img(37, 53, 0.4f);
        const Image a = add_poisson_noise(img, 1e4, 12, 1), b = add_poisson_noise(img, 1e4, 12, 4);
        CHECK(a == b);
        CHECK(add_poisson_noise(img, 1e4, 13) != a);
        // each pixel depends only on (seed, index): a cropped copy of the first row matches
        Image row(1, 53, 0.4f);
        const Image r = add_poisson_noise(row, 1e4, 12);
        for (int u = 0; u < 53; ++u) CHECK(r.at(0, u) == a.at(0, u));
    }
    SUBCASE("high photon counts converge") {
        Image img(100, 100, 0.5f);
        const Image n = add_poisson_noise(img, 1e7, 3);
        int within = 0;
        for (float p : n.pixels) within += std::abs(p - 0.5) / 0.5 < 0.002;
        CHECK(within >= 9900);
    }
    SUBCASE("statistics at lambda = 1000") {
        Image img(100, 1000, 1.0f);
        const Image n = add_poisson_noise(img, 1000.0, 77);
        double mean = 0.0, var = 0.0;
        for (float p : n.pixels) mean += 1000.0 * p;
        mean /= double(n.size());
        for (float p : n.pixels) var += (1000.0 * p - mean) * (1000.0 * p - mean);
        var /= double(n.size() - 1);
        CHECK(std::abs(mean - 1000.0) <= 3.0 * std::sqrt(1000.0 / double(n.size())));
        CHECK(std::abs(var - 1000.0) <= 50.0);
    }
    SUBCASE("zero counts are clamped") {
        Image img(10, 10, 1e-9f);
        for (float p : add_poisson_noise(img, 10.0, 1).pixels) CHECK(p == doctest::Approx(0.05));
    }
}

TEST_CASE("log_normalize") {
    for (float p : log_normalize(Image(3, 3, 1.0f)).pixels) CHECK(p == 0.0f);
    const Image two = log_normalize(image_of({1.0f, float(std::exp(-2.0))}));
    CHECK(two.pixels[0] == 0.0f);
    CHECK(two.pixels[1] == 1.0f);
    CHECK_THROWS_AS(log_normalize(image_of({0.5f, 0.0f})), InvalidArgument);
    CHECK_THROWS_AS(log_normalize(image_of({-0.5f})), InvalidArgument);

    // invariant to positive affine rescaling of p: I^a scales p by a
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> u(0.01f, 1.0f);
    Image img(8, 8);
    for (auto& p : img.pixels) p = u(rng);
    Image scaled = img;
    for (auto& p : scaled.pixels) p = float(std::exp(2.0 * std::log(p)));  // p -> 2p
    const Image a = log_normalize(img), b = log_normalize(scaled);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.pixels[i] == doctest::Approx(b.pixels[i]).epsilon(1e-5));
        CHECK(a.pixels[i] >= 0.0f);
        CHECK(a.pixels[i] <= 1.0f);
    }
}

TEST_CASE("gamma_adjust") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Image img(16, 16);
    for (auto& p : img.pixels) p = u(rng);
    img.pixels[0] = 0.0f;
    img.pixels[1] = 1.0f;
    CHECK(gamma_adjust(img, 1.0) == img);
    for (double g : {0.7, 1.3, 2.0}) {
        const Image out = gamma_adjust(img, g);
        CHECK(out.pixels[0] == 0.0f);
        CHECK(out.pixels[1] == 1.0f);
        const auto amax = std::max_element(img.pixels.begin(), img.pixels.end()) - img.pixels.begin();
        const auto bmax = std::max_element(out.pixels.begin(), out.pixels.end()) - out.pixels.begin();
        CHECK(amax == bmax);
        for (std::size_t i = 1; i < img.size(); ++i)
            for (std::size_t j = 0; j < 4; ++j)
                if (img.pixels[i] < img.pixels[j]) REQUIRE(out.pixels[i] <= out.pixels[j]);
    }
    CHECK(gamma_adjust(image_of({0.25f}), 0.5).pixels[0] == doctest::Approx(0.5));
    CHECK_THROWS_AS(gamma_adjust(img, 0.0), InvalidArgument);
    CHECK_THROWS_AS(gamma_adjust(img, -1.0), InvalidArgument);
}

TEST_CASE("metal_mask") {
    for (auto p : metal_mask(Image(4, 4)).pixels) CHECK(p == 0);
    const Image t = image_of({0.0f, 0.25f, 0.5f, 0.75f, 10.0f});
    const Mask m = metal_mask(t, 0.5);
    CHECK(m.pixels == std::vector<std::uint8_t>{0, 0, 0, 1, 1});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(0.0f, 2.0f);
    Image r(20, 20);
    for (auto& p : r.pixels) p = u(rng);
    const Mask lo = metal_mask(r, 0.2), hi = metal_mask(r, 0.9);
    for (std::size_t i = 0; i < lo.size(); ++i) CHECK((!hi.pixels[i] || lo.pixels[i]));
}

TEST_CASE("augmentation config") {
    AugmentationConfig c;
    CHECK_NOTHROW(validate(c));
    CHECK(c.gamma_range[0] == 0.7);
    CHECK(c.gamma_range[1] == 1.3);
    CHECK(c.photons_per_pixel == 1e5);
    c.gamma_range = {1.2, 1.1};
    CHECK_THROWS_AS(validate(c), InvalidArgument);
    c.gamma_range = {0.0, 1.1};
    CHECK_THROWS_AS(validate(c), InvalidArgument);
    c = {};
    c.photons_per_pixel = 0.5;
    CHECK_THROWS_AS(validate(c), InvalidArgument);
}
