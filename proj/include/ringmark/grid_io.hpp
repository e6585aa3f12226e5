#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "ringmark/grid.hpp"

namespace ringmark {

// Diffusion states live roughly in [-2.5, 2.5] (mean amplitude 1 plus noise
// tails); exports and the [0,1]-domain attacks use this fixed affine map.
inline constexpr double kValueMin = -2.5;
inline constexpr double kValueMax = 2.5;

inline Grid to_unit_range(const Grid& g) {
    Grid out = g;
    for (double& v : out.data)
        v = std::clamp((v - kValueMin) / (kValueMax - kValueMin), 0.0, 1.0);
    return out;
}
inline Grid from_unit_range(const Grid& g) {
    Grid out = g;
    for (double& v : out.data) v = v * (kValueMax - kValueMin) + kValueMin;
    return out;
}

namespace detail {

inline void put_u32le(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
inline void put_f64le(std::ostream& os, double v) {
    uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}
inline double get_f64le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

} // namespace detail

// RGF1: magic "RGF1", u32le H, W, C, then H*W*C f64le row-major.
inline void write_rgf(const std::string& path, const Grid& g) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os.write("RGF1", 4);
    detail::put_u32le(os, static_cast<uint32_t>(g.height));
    detail::put_u32le(os, static_cast<uint32_t>(g.width));
    detail::put_u32le(os, static_cast<uint32_t>(g.channels));
    for (double v : g.data) detail::put_f64le(os, v);
    if (!os) throw IoError("write failed: " + path);
}

inline Grid read_rgf(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "RGF1", 4) != 0)
        throw IoError("not an RGF1 file: " + path);
    const uint32_t h = detail::get_u32le(is);
    const uint32_t w = detail::get_u32le(is);
    const uint32_t c = detail::get_u32le(is);
    if (!is || h == 0 || w == 0 || c == 0 || h > 1u << 16 || w > 1u << 16 || c > 64)
        throw IoError("bad RGF1 header: " + path);
    Grid g(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
    for (double& v : g.data) v = detail::get_f64le(is);
    if (!is) throw IoError("truncated RGF1 file: " + path);
    return g;
}

// 8-bit binary PGM (1 channel) / PPM (3 channels); [0,1] maps to [0,255]
// with round-half-up.
inline void write_pnm(const std::string& path, const Grid& unit) {
    if (unit.channels != 1 && unit.channels != 3)
        throw IoError("PNM export needs 1 or 3 channels");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os << (unit.channels == 1 ? "P5" : "P6") << "\n"
       << unit.width << " " << unit.height << "\n255\n";
    for (double v : unit.data) {
        const double c = std::clamp(v, 0.0, 1.0);
        const int byte = std::min(255, static_cast<int>(std::floor(c * 255.0 + 0.5)));
        os.put(static_cast<char>(byte));
    }
    if (!os) throw IoError("write failed: " + path);
}

inline Grid read_pnm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    std::string magic;
    is >> magic;
    if (magic != "P5" && magic != "P6") throw IoError("not a binary PGM/PPM: " + path);
    const int channels = magic == "P5" ? 1 : 3;
    int w = 0, h = 0, maxv = 0;
    // header tokens may be separated by comments
    auto next_int = [&is, &path]() {
        for (;;) {
            int ch = is.peek();
            if (ch == '#') { std::string line; std::getline(is, line); continue; }
            if (std::isspace(ch)) { is.get(); continue; }
            break;
        }
        int v;
        if (!(is >> v)) throw IoError("bad PNM header: " + path);
        return v;
    };
    w = next_int(); h = next_int(); maxv = next_int();
    if (maxv != 255) throw IoError("only maxval 255 PNM supported: " + path);
    is.get(); // single whitespace after maxval
    Grid g(h, w, channels);
    for (double& v : g.data) {
        const int byte = is.get();
        if (byte == EOF) throw IoError("truncated PNM: " + path);
        v = byte / 255.0;
    }
    return g;
}

} // namespace ringmark
