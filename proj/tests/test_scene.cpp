#include <doctest.h>

#include "xpf/errors.hpp"
#include "xpf/scene.hpp"

using namespace xpf;

namespace {

Volume bone_phantom() {
    PhantomSpec spec;
    spec.dims = {60, 50, 50};
    spec.spacing_mm = 1.0;
    spec.parts = {{{29.5, 24.5, 24.5}, {25, 20, 20}, 0.0f}, {{29.5, 24.5, 24.5}, {15, 8, 8}, 1200.0f}};
    return synth_phantom(spec);
}

} // namespace

TEST_CASE("place_implants") {
    const Volume anatomy = bone_phantom();

    SUBCASE("no implants leaves anatomy unchanged") {
        const ComposedScene s = place_implants(anatomy, 0, 1);
        CHECK(s.merged == anatomy);
        CHECK(s.placements.empty());
    }
    SUBCASE("all-air anatomy is infeasible") {
        const Volume air = Volume::filled({10, 10, 10}, 1.0, {}, -1000.0f);
        try {
            place_implants(air, 2, 3);
            FAIL("expected PlacementInfeasible");
        } catch (const PlacementInfeasible& e) {
            CHECK(e.implant_index() == 0);
        }
    }
    SUBCASE("constraints hold for every placement") {
        const ComposedScene s = place_implants(anatomy, 3, 11);
        REQUIRE(s.placements.size() == 3);
        for (const auto& p : s.placements) {
            const auto& a = p.anchor_voxel;
            CHECK(anatomy.at(a[0], a[1], a[2]) > 500.0f);
            CHECK(p.hu_value >= 3000.0);
            CHECK(p.hu_value <= 8000.0);
            for (int k = 0; k < 3; ++k) {
                CHECK(p.rotation_rad[k] >= 0.0);
                CHECK(p.rotation_rad[k] < 2 * 3.14159265358979324);
            }
        }
        for (float m : s.metal.values()) {
            REQUIRE((m == 0.0f || (m >= 3000.0f && m <= 8000.0f)));
        }
        auto a = anatomy.values(), mt = s.metal.values(), mg = s.merged.values();
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(mg[i] == (mt[i] > 0.0f ? mt[i] : a[i]));
        }
    }
    SUBCASE("deterministic") {
        const ComposedScene a = place_implants(anatomy, 3, 5), b = place_implants(anatomy, 3, 5);
        CHECK(a.placements == b.placements);
        CHECK(a.merged == b.merged);
        CHECK(place_implants(anatomy, 3, 5, 1).metal == place_implants(anatomy, 3, 5, 3).metal);
    }
    SUBCASE("metal support equals the union of rasterized placements") {
        const ComposedScene s = place_implants(anatomy, 4, 21);
        std::vector<float> union_grid(anatomy.size(), 0.0f);
        for (const auto& p : s.placements) {
            Placement unit = p;
            unit.hu_value = 1.0;
            rasterize_placement(anatomy, unit, union_grid);
        }
        auto mg = s.merged.values();
        for (std::size_t i = 0; i < union_grid.size(); ++i) {
            REQUIRE((mg[i] > 2000.0f) == (union_grid[i] > 0.0f));
        }
    }
    SUBCASE("later placements win on overlap") {
        Placement a, b;
        a.implant = ImplantModel{KWireParams{3.0, 40.0, 2.0}};
        a.translation_mm = anatomy.center();
        a.hu_value = 3000;
        b = a;
        b.hu_value = 7000;
        std::vector<float> metal(anatomy.size(), 0.0f);
        rasterize_placement(anatomy, a, metal);
        rasterize_placement(anatomy, b, metal);
        for (float m : metal) REQUIRE((m == 0.0f || m == 7000.0f));
    }
}

TEST_CASE("merge") {
    Volume anatomy = Volume::filled({2, 1, 1}, 1.0, {}, 1200.0f);
    const Volume metal({2, 1, 1}, 1.0, {}, {5000.0f, 0.0f});
    const Volume m = merge(anatomy, metal);
    CHECK(m.at(0, 0, 0) == 5000.0f);
    CHECK(m.at(1, 0, 0) == 1200.0f);
    CHECK(merge(anatomy, Volume::filled({2, 1, 1}, 1.0, {}, 0.0f)) == anatomy);
    CHECK_THROWS_AS(merge(anatomy, Volume::filled({3, 1, 1}, 1.0, {}, 0.0f)), InvalidArgument);
    CHECK_THROWS_AS(merge(anatomy, Volume::filled({2, 1, 1}, 0.5, {}, 0.0f)), InvalidArgument);
}

TEST_CASE("placement JSON round trip") {
    const ComposedScene s = place_implants(bone_phantom(), 2, 8);
    for (const auto& p : s.placements) {
        const nlohmann::json j = p;
        CHECK(j.get<Placement>() == p);
    }
}
