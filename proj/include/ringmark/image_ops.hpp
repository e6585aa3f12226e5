#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ringmark/dct.hpp"
#include "ringmark/grid.hpp"

namespace ringmark {

namespace detail {

// scipy-style 'reflect' border: d c b a | a b c d | d c b a
inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

inline std::vector<double> gaussian_kernel(double radius) {
    const double sigma = radius / 2.0;
    const int hw = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * hw + 1);
    double sum = 0.0;
    for (int i = -hw; i <= hw; ++i) {
        k[i + hw] = std::exp(-0.5 * (i / sigma) * (i / sigma));
        sum += k[i + hw];
    }
    for (double& v : k) v /= sum;
    return k;
}

} // namespace detail

// Separable Gaussian filter, sigma = radius/2, half-width ceil(3*sigma),
// reflect padding. Shape preserved.
inline Grid convolve_gaussian(const Grid& g, double radius) {
    if (!(radius > 0.0)) throw ConfigError("blur radius must be > 0");
    const auto k = detail::gaussian_kernel(radius);
    const int hw = static_cast<int>(k.size()) / 2;
    Grid tmp(g.height, g.width, g.channels);
    for (int c = 0; c < g.channels; ++c)
        for (int y = 0; y < g.height; ++y)
            for (int x = 0; x < g.width; ++x) {
                double acc = 0.0;
                for (int d = -hw; d <= hw; ++d)
                    acc += k[d + hw] * g.at(y, detail::reflect_index(x + d, g.width), c);
                tmp.at(y, x, c) = acc;
            }
    Grid out(g.height, g.width, g.channels);
    for (int c = 0; c < g.channels; ++c)
        for (int y = 0; y < g.height; ++y)
            for (int x = 0; x < g.width; ++x) {
                double acc = 0.0;
                for (int d = -hw; d <= hw; ++d)
                    acc += k[d + hw] * tmp.at(detail::reflect_index(y + d, g.height), x, c);
                out.at(y, x, c) = acc;
            }
    return out;
}

// Rotation about the DC pixel (H/2, W/2) with bilinear interpolation and
// toroidal sampling. The DC-pixel center plus wraparound make exact
// multiples of 90 degrees pure index permutations, matching the centered
// spectrum: rings permute without picking up per-bin phases, and chains of
// four 90-degree rotations are exact identities.
inline Grid rotate_bilinear(const Grid& g, double degrees) {
    const double th = degrees * std::numbers::pi / 180.0;
    const double ct = std::cos(th), st = std::sin(th);
    const double cy = g.height / 2, cx = g.width / 2;
    Grid out(g.height, g.width, g.channels);
    auto wrap = [](int i, int n) { return ((i % n) + n) % n; };

    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            // inverse map: sample the source at the un-rotated position
            const double dy = y - cy, dx = x - cx;
            const double sy = ct * dy + st * dx + cy;
            const double sx = -st * dy + ct * dx + cx;
            const int y0 = static_cast<int>(std::floor(sy));
            const int x0 = static_cast<int>(std::floor(sx));
            const double fy = sy - y0, fx = sx - x0;
            const int ya = wrap(y0, g.height), yb = wrap(y0 + 1, g.height);
            const int xa = wrap(x0, g.width), xb = wrap(x0 + 1, g.width);
            for (int c = 0; c < g.channels; ++c)
                out.at(y, x, c) = (1 - fy) * (1 - fx) * g.at(ya, xa, c) +
                                  (1 - fy) * fx * g.at(ya, xb, c) +
                                  fy * (1 - fx) * g.at(yb, xa, c) +
                                  fy * fx * g.at(yb, xb, c);
        }
    return out;
}

// Central crop of side floor(sqrt(keep_fraction) * H), then align-corners
// bilinear rescale back to the original shape.
inline Grid crop_rescale(const Grid& g, double keep_fraction) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw ConfigError("keep_fraction must be in (0, 1]");
    const int side = static_cast<int>(std::floor(std::sqrt(keep_fraction) * g.height));
    if (side < 4) throw ConfigError("crop smaller than 4 px");
    if (side == g.height && g.height == g.width) return g;
    const int r0 = (g.height - side) / 2, c0 = (g.width - side) / 2;
    Grid out(g.height, g.width, g.channels);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            const double sy = static_cast<double>(y) * (side - 1) / (g.height - 1);
            const double sx = static_cast<double>(x) * (side - 1) / (g.width - 1);
            const int y0 = std::min(static_cast<int>(sy), side - 2);
            const int x0 = std::min(static_cast<int>(sx), side - 2);
            const double fy = sy - y0, fx = sx - x0;
            for (int c = 0; c < g.channels; ++c) {
                const double v =
                    (1 - fy) * (1 - fx) * g.at(r0 + y0, c0 + x0, c) +
                    (1 - fy) * fx * g.at(r0 + y0, c0 + x0 + 1, c) +
                    fy * (1 - fx) * g.at(r0 + y0 + 1, c0 + x0, c) +
                    fy * fx * g.at(r0 + y0 + 1, c0 + x0 + 1, c);
                out.at(y, x, c) = v;
            }
        }
    return out;
}

namespace detail {

// standard JPEG luminance quantization table
inline const int JPEG_LUMA[8][8] = {
    {16, 11, 10, 16, 24, 40, 51, 61},   {12, 12, 14, 19, 26, 58, 60, 55},
    {14, 13, 16, 24, 40, 57, 69, 56},   {14, 17, 22, 29, 51, 87, 80, 62},
    {18, 22, 37, 56, 68, 109, 103, 77}, {24, 35, 55, 64, 81, 104, 113, 92},
    {49, 64, 78, 87, 103, 121, 120, 101}, {72, 92, 95, 98, 112, 100, 103, 99}};

inline void quality_table(int quality, double q[8][8]) {
    const double scale = quality < 50 ? 5000.0 / quality : 200.0 - 2.0 * quality;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            q[i][j] = std::clamp(std::floor((JPEG_LUMA[i][j] * scale + 50.0) / 100.0),
                                 1.0, 255.0);
}

} // namespace detail

// JPEG-like degradation: per 8x8 block, orthonormal DCT-II of the [0,255]
// level-shifted values, scalar quantization by the Annex-K scaled luminance
// table, inverse DCT, clamp to [0,1]. No entropy coding (lossless anyway).
inline Grid block_dct_quantize(const Grid& g, int quality) {
    if (quality < 1 || quality > 100) throw ConfigError("jpeg quality must be 1..100");
    if (g.height % 8 != 0 || g.width % 8 != 0)
        throw DimensionError("block_dct_quantize requires dimensions divisible by 8");
    double q[8][8];
    detail::quality_table(quality, q);
    Grid out(g.height, g.width, g.channels);
    for (int ch = 0; ch < g.channels; ++ch)
        for (int by = 0; by < g.height; by += 8)
            for (int bx = 0; bx < g.width; bx += 8) {
                double blk[8][8], coef[8][8];
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        blk[y][x] = g.at(by + y, bx + x, ch) * 255.0 - 128.0;
                detail::dct8x8(blk, coef, false);
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        coef[y][x] = std::round(coef[y][x] / q[y][x]) * q[y][x];
                detail::dct8x8(coef, blk, true);
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        out.at(by + y, bx + x, ch) =
                            std::clamp((blk[y][x] + 128.0) / 255.0, 0.0, 1.0);
            }
    return out;
}

} // namespace ringmark
