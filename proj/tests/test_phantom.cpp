#include <doctest.h>

#include <cmath>

#include "reorient/error.hpp"
#include "reorient/phantom.hpp"
#include "reorient/register.hpp"
#include "reorient/stn.hpp"
#include "test_support.hpp"

using namespace reorient;

TEST_CASE("noise-free shell voxels equal the shell intensity") {
    PhantomSpec spec;
    spec.shell_intensity = 0.8;
    const auto v = generate_phantom(spec, 1);
    int shell = 0;
    for (int z = 0; z < spec.dims.nz; ++z)
        for (int y = 0; y < spec.dims.ny; ++y)
            for (int x = 0; x < spec.dims.nx; ++x)
                if (in_shell(spec, x, y, z)) {
                    ++shell;
                    CHECK(v.at(x, y, z) == 0.8f);
                }
    CHECK(shell > 500);
    for (float x : v.data()) CHECK((x >= 0.0f && x <= 1.0f));
}

TEST_CASE("full-severity defect zeroes its sector") {
    PhantomSpec spec;
    spec.defect = Defect{45.0, 60.0, 1.0};
    const auto v = generate_phantom(spec, 1);
    int covered = 0;
    for (int z = 0; z < spec.dims.nz; ++z)
        for (int y = 0; y < spec.dims.ny; ++y)
            for (int x = 0; x < spec.dims.nx; ++x)
                if (in_defect(spec, x, y, z)) {
                    ++covered;
                    CHECK(v.at(x, y, z) == 0.0f);
                }
    CHECK(covered > 50);
}

TEST_CASE("partial defect scales by one minus severity") {
    PhantomSpec spec;
    spec.defect = Defect{-90.0, 90.0, 0.25};
    const auto v = generate_phantom(spec, 1);
    for (int z = 0; z < spec.dims.nz; ++z)
        for (int y = 0; y < spec.dims.ny; ++y)
            for (int x = 0; x < spec.dims.nx; ++x)
                if (in_defect(spec, x, y, z)) CHECK(v.at(x, y, z) == 0.75f);
}

TEST_CASE("long axis lies along z with the apex at low z") {
    const PhantomSpec spec;
    const auto v = generate_phantom(spec, 1);
    const Dims d = spec.dims;
    double mx = 0, my = 0, mz = 0, mass = 0, sxx = 0, syy = 0, szz = 0;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const double w = v.at(x, y, z);
                mass += w;
                mx += w * x;
                my += w * y;
                mz += w * z;
            }
    mx /= mass;
    my /= mass;
    mz /= mass;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const double w = v.at(x, y, z);
                sxx += w * (x - mx) * (x - mx);
                syy += w * (y - my) * (y - my);
                szz += w * (z - mz) * (z - mz);
            }
    CHECK(mx == doctest::Approx((d.nx - 1) / 2.0).epsilon(0.01));
    CHECK(my == doctest::Approx((d.ny - 1) / 2.0).epsilon(0.01));
    CHECK(sxx > syy);  // elliptical cross-section
    CHECK(szz > syy);
    // the apex is a closed cap: the lowest occupied slice is sparser than the highest
    int low = -1, high = -1;
    for (int z = 0; z < d.nz; ++z) {
        double s = 0;
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) s += v.at(x, y, z);
        if (s > 0 && low < 0) low = z;
        if (s > 0) high = z;
    }
    const int cx = d.nx / 2, cy = d.ny / 2;
    CHECK(v.at(cx, cy, low + 2) > 0.5f);   // apex wall crosses the axis
    CHECK(v.at(cx, cy, high - 2) < 0.2f);  // base is open
    int y_low = -1, y_high = -1;
    for (int y = 0; y < d.ny; ++y)
        for (int z = 0; z < d.nz; ++z)
            if (v.at(cx, y, z) > 0.0f) {
                if (y_low < 0) y_low = y;
                y_high = y;
            }
    CHECK(high - low > y_high - y_low);  // apex-to-base span exceeds the minor diameter
}

TEST_CASE("generation is deterministic per seed") {
    PhantomSpec spec;
    spec.noise = 0.05;
    spec.blob_count = 2;
    CHECK(generate_phantom(spec, 3) == generate_phantom(spec, 3));
    CHECK_FALSE(generate_phantom(spec, 3) == generate_phantom(spec, 4));
}

TEST_CASE("blobs stay clear of the shell") {
    PhantomSpec spec;
    spec.blob_count = 3;
    spec.blob_intensity = 0.5;
    const auto plain = generate_phantom(PhantomSpec{}, 5);
    const auto v = generate_phantom(spec, 5);
    double added = 0;
    for (int z = 0; z < spec.dims.nz; ++z)
        for (int y = 0; y < spec.dims.ny; ++y)
            for (int x = 0; x < spec.dims.nx; ++x) {
                if (in_shell(spec, x, y, z)) CHECK(v.at(x, y, z) == plain.at(x, y, z));
                added += v.at(x, y, z) - plain.at(x, y, z);
            }
    CHECK(added > 10.0);
}

TEST_CASE("invalid specs are rejected") {
    PhantomSpec s;
    s.inner_semi_axes = {10, 5, 8};
    CHECK_THROWS_AS(generate_phantom(s, 1), InvalidArgument);
    s = {};
    s.noise = 0.3;
    CHECK_THROWS_AS(generate_phantom(s, 1), InvalidArgument);
    s = {};
    s.defect = Defect{0, 30, 1.5};
    CHECK_THROWS_AS(generate_phantom(s, 1), InvalidArgument);
    s = {};
    s.dims = Dims{0, 4, 4};
    CHECK_THROWS_AS(generate_phantom(s, 1), InvalidArgument);
}

TEST_CASE("drawn specs are valid and reproducible") {
    const PhantomRanges r;
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto s = draw_spec(r, i);
        CHECK_NOTHROW(s.validate());
        CHECK(s.outer_semi_axes[0] > s.outer_semi_axes[1]);
    }
    CHECK(generate_phantom(draw_spec(r, 9), 1) == generate_phantom(draw_spec(r, 9), 1));
}

TEST_CASE("make_dataset writes n cases with exact ground truth") {
    testing::TempDir dir("ph");
    GaussianParamModel pm;
    pm.std = {2, 2, 2, 8, 8, 8};
    const auto m = make_dataset(10, pm, PhantomRanges{}, 7, dir.path(), 2);
    REQUIRE(m.entries.size() == 10);
    const auto loaded = load_manifest(dir / "manifest.json");
    CHECK(loaded.entries == m.entries);
    for (const auto& e : m.entries) {
        REQUIRE(e.params);
        REQUIRE(e.sa_path);
        const auto sa = load_volume(m.resolve(*e.sa_path));
        const auto tra = load_volume(m.resolve(e.transaxial_path));
        // params applied to the transaxial volume reproduce the SA view centrally
        const auto back = reorient::reorient(tra, *e.params);
        double err = 0;
        int n = 0;
        for (int z = 8; z < 24; ++z)
            for (int y = 16; y < 48; ++y)
                for (int x = 16; x < 48; ++x, ++n) err += std::abs(double(back.at(x, y, z)) - sa.at(x, y, z));
            // two trilinear passes over a sharp-edged shell
        CHECK(err / n < 0.03);
    }

    testing::TempDir again("ph2");
    make_dataset(10, pm, PhantomRanges{}, 7, again.path(), 1);
    CHECK(testing::slurp(dir / "manifest.json") == testing::slurp(again / "manifest.json"));
    CHECK(testing::slurp(dir / "case_0004_tra.f32") == testing::slurp(again / "case_0004_tra.f32"));
    CHECK_THROWS_AS(make_dataset(0, pm, PhantomRanges{}, 7, dir.path()), InvalidArgument);
}

TEST_CASE("registration recovers every case of a small dataset") {
    GaussianParamModel pm;
    pm.std = {2, 2, 2, 8, 8, 8};
    const auto cases = make_cases(4, pm, PhantomRanges{}, 11);
    for (const auto& c : cases) {
        const auto r = register_volumes(c.transaxial, c.sa);
        const auto got = r.params.to_array(), want = c.params.to_array();
        for (int k = 0; k < 3; ++k) CHECK(std::abs(got[k] - want[k]) < 0.5);
        for (int k = 3; k < 6; ++k) CHECK(std::abs(got[k] - want[k]) < 1.0);
    }
}
