#include <doctest.h>

#include <cstring>
#include <fstream>

#include "reorient/error.hpp"
#include "reorient/volume.hpp"
#include "test_support.hpp"

using namespace reorient;

TEST_CASE("volume layout is x fastest") {
    Volume3D v(Dims{3, 4, 5});
    CHECK(v.size() == 60);
    CHECK(v.index(1, 0, 0) == 1);
    CHECK(v.index(0, 1, 0) == 3);
    CHECK(v.index(0, 0, 1) == 12);
    CHECK(v.index(2, 3, 4) == 59);
}

TEST_CASE("volume construction rejects bad shapes") {
    CHECK_THROWS_AS(Volume3D(Dims{0, 4, 4}), InvalidArgument);
    CHECK_THROWS_AS(Volume3D(Dims{4, -1, 4}), InvalidArgument);
    CHECK_THROWS_AS(Volume3D(Dims{2, 2, 2}, Spacing{1, 0, 1}), InvalidArgument);
    CHECK_THROWS_AS(Volume3D(Dims{2, 2, 2}, Spacing{1, 1, 1}, std::vector<float>(7)), InvalidArgument);
}

TEST_CASE("save and load round trip bitwise") {
    testing::TempDir dir("vol");
    auto v = testing::random_volume(Dims{7, 5, 3}, 11);
    v = Volume3D(v.dims(), Spacing{6.4, 6.4, 3.2}, {v.data().begin(), v.data().end()});
    save_volume(v, dir / "a");
    CHECK(std::filesystem::exists(dir / "a.json"));
    CHECK(std::filesystem::exists(dir / "a.f32"));
    CHECK(std::filesystem::file_size(dir / "a.f32") == v.size() * 4);
    CHECK(load_volume(dir / "a") == v);
    CHECK(load_volume(dir / "a.json") == v);
    CHECK(load_volume(dir / "a.f32") == v);
}

TEST_CASE("payload is little-endian f32") {
    testing::TempDir dir("le");
    Volume3D v(Dims{2, 1, 1}, Spacing{1, 1, 1}, {1.0f, -2.5f});
    save_volume(v, dir / "b");
    const std::string bytes = testing::slurp(dir / "b.f32");
    REQUIRE(bytes.size() == 8);
    // 1.0f = 0x3f800000
    CHECK(static_cast<unsigned char>(bytes[0]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[3]) == 0x3f);
    CHECK(static_cast<unsigned char>(bytes[2]) == 0x80);
}

TEST_CASE("load reports io and format errors") {
    testing::TempDir dir("bad");
    CHECK_THROWS_AS(load_volume(dir / "missing"), IoError);

    std::ofstream(dir / "h.json") << "{not json";
    CHECK_THROWS_AS(load_volume(dir / "h"), FormatError);

    std::ofstream(dir / "d.json") << R"({"dims":[2,2,2],"voxel_size_mm":[1,1,1],"dtype":"f64le"})";
    std::ofstream(dir / "d.f32") << std::string(64, '\0');
    CHECK_THROWS_AS(load_volume(dir / "d"), FormatError);

    std::ofstream(dir / "s.json") << R"({"dims":[2,2,2],"voxel_size_mm":[1,1,1],"dtype":"f32le"})";
    std::ofstream(dir / "s.f32") << std::string(31, '\0');
    CHECK_THROWS_AS(load_volume(dir / "s"), FormatError);

    std::ofstream(dir / "n.json") << R"({"dims":[2,2,2],"voxel_size_mm":[1,1,1],"dtype":"f32le"})";
    CHECK_THROWS_AS(load_volume(dir / "n"), IoError);
}

TEST_CASE("error kinds are stable strings") {
    CHECK(std::string(IoError("x").kind()) == "io");
    CHECK(std::string(FormatError("x").kind()) == "format");
    CHECK(std::string(InvalidArgument("x").kind()) == "invalid_argument");
}

TEST_CASE("normalize divides by max and clamps negatives") {
    Volume3D v(Dims{4, 1, 1}, Spacing{1, 1, 1}, {-1.0f, 0.0f, 2.0f, 4.0f});
    const auto n = normalize(v);
    CHECK(n.data()[0] == 0.0f);
    CHECK(n.data()[1] == 0.0f);
    CHECK(n.data()[2] == 0.5f);
    CHECK(n.data()[3] == 1.0f);
    Volume3D z(Dims{3, 1, 1}, Spacing{1, 1, 1}, {-1.0f, -2.0f, 0.0f});
    const auto zn = normalize(z);
    for (float x : zn.data()) CHECK(x == 0.0f);
}

TEST_CASE("normalize is idempotent") {
    const auto v = normalize(testing::random_volume(Dims{6, 6, 6}, 3));
    CHECK(normalize(v) == v);
    CHECK(v.max_value() == 1.0f);
}

TEST_CASE("resize to same dims is identity") {
    const auto v = testing::random_volume(Dims{5, 6, 7}, 4);
    const auto r = resize_trilinear(v, v.dims());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(r.data()[i] == doctest::Approx(v.data()[i]).epsilon(1e-6));
}

TEST_CASE("resize preserves linear ramps in the interior and scales spacing") {
    Volume3D v(Dims{8, 4, 4}, Spacing{2, 2, 2});
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 8; ++x) v.at(x, y, z) = static_cast<float>(x);
    const auto r = resize_trilinear(v, Dims{16, 4, 4});
    CHECK(r.voxel_size_mm()[0] == doctest::Approx(1.0));
    CHECK(r.voxel_size_mm()[1] == doctest::Approx(2.0));
    // output centre i sits at input coordinate (i + 0.5) / 2 - 0.5
    for (int x = 1; x < 15; ++x) CHECK(r.at(x, 1, 1) == doctest::Approx((x + 0.5) / 2.0 - 0.5));
    CHECK(r.at(0, 0, 0) == doctest::Approx(0.0));
}

TEST_CASE("gradient magnitude of a ramp") {
    Volume3D v(Dims{5, 5, 5}, Spacing{1, 1, 1});
    for (int z = 0; z < 5; ++z)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x) v.at(x, y, z) = static_cast<float>(3 * x + 4 * y);
    const auto g = gradient_magnitude(v);
    for (float x : g.data()) CHECK(x == doctest::Approx(5.0));
    CHECK_THROWS_AS(gradient_magnitude(Volume3D(Dims{1, 4, 4})), InvalidArgument);
}
