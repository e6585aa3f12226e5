#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ringmark/grid_io.hpp"
#include "ringmark/rng.hpp"
#include "test_helpers.hpp"

using namespace ringmark;
namespace fs = std::filesystem;

namespace {
std::string tmp_path(const char* name) {
    return (fs::temp_directory_path() / name).string();
}
} // namespace

TEST_CASE("RGF1 round-trips bit-exactly") {
    Rng rng(21);
    Grid g = oracle::random_grid(rng, 16, 8, 3);
    g.data[0] = -123.456789;
    const std::string path = tmp_path("rm_test.rgf");
    write_rgf(path, g);
    const Grid back = read_rgf(path);
    REQUIRE(back.height == 16);
    REQUIRE(back.width == 8);
    REQUIRE(back.channels == 3);
    REQUIRE(back.data == g.data);
    fs::remove(path);
}

TEST_CASE("bad RGF inputs are rejected") {
    const std::string path = tmp_path("rm_bad.rgf");
    {
        std::ofstream os(path, std::ios::binary);
        os << "NOPE";
    }
    CHECK_THROWS_AS(read_rgf(path), IoError);
    CHECK_THROWS_AS(read_rgf(tmp_path("rm_missing.rgf")), IoError);
    fs::remove(path);
}

TEST_CASE("PGM export quantizes with round-half-up") {
    Grid g(8, 8, 1, 0.0);
    g.at(0, 0) = 0.5 / 255.0;        // rounds up to byte 1
    g.at(0, 1) = 0.49 / 255.0;       // rounds down to 0
    g.at(0, 2) = 1.0;                // 255
    g.at(0, 3) = 2.0;                // clamped to 255
    const std::string path = tmp_path("rm_test.pgm");
    write_pnm(path, g);
    const Grid back = read_pnm(path);
    CHECK(back.at(0, 0) == 1.0 / 255.0);
    CHECK(back.at(0, 1) == 0.0);
    CHECK(back.at(0, 2) == 1.0);
    CHECK(back.at(0, 3) == 1.0);
    fs::remove(path);
}

TEST_CASE("PGM/PPM round-trip stays within half a quantization step") {
    Rng rng(22);
    for (int channels : {1, 3}) {
        Grid g(16, 16, channels);
        for (double& v : g.data) v = rng.uniform();
        const std::string path = tmp_path(channels == 1 ? "rm_rt.pgm" : "rm_rt.ppm");
        write_pnm(path, g);
        const Grid back = read_pnm(path);
        CHECK(max_abs_diff(g, back) <= 0.5 / 255.0 + 1e-12);
        fs::remove(path);
    }
}

TEST_CASE("value range mapping round-trips away from the clamp") {
    Rng rng(23);
    Grid g(8, 8);
    for (double& v : g.data) v = rng.uniform(kValueMin + 0.1, kValueMax - 0.1);
    CHECK(max_abs_diff(from_unit_range(to_unit_range(g)), g) < 1e-12);
}
