#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "ringmark/grid.hpp"

namespace ringmark {

// Orthonormal 2-D DCT-II basis field for frequency pair (u, v); unit L2 norm
// over the grid. Used both for the mixture means and the conditioning bias
// basis.
inline Grid dct_basis_field(int u, int v, int h, int w) {
    Grid out(h, w, 1);
    const double au = std::sqrt((u == 0 ? 1.0 : 2.0) / h);
    const double av = std::sqrt((v == 0 ? 1.0 : 2.0) / w);
    for (int y = 0; y < h; ++y) {
        const double fy = std::cos(std::numbers::pi * u * (2.0 * y + 1.0) / (2.0 * h));
        for (int x = 0; x < w; ++x) {
            const double fx = std::cos(std::numbers::pi * v * (2.0 * x + 1.0) / (2.0 * w));
            out.at(y, x) = au * av * fy * fx;
        }
    }
    return out;
}

namespace detail {

// 8x8 orthonormal DCT-II matrix (JPEG A.3.3 convention)
inline const std::array<std::array<double, 8>, 8>& dct8_matrix() {
    static const auto m = [] {
        std::array<std::array<double, 8>, 8> a{};
        for (int u = 0; u < 8; ++u) {
            const double cu = std::sqrt((u == 0 ? 1.0 : 2.0) / 8.0);
            for (int x = 0; x < 8; ++x)
                a[u][x] = cu * std::cos(std::numbers::pi * u * (2.0 * x + 1.0) / 16.0);
        }
        return a;
    }();
    return m;
}

inline void dct8x8(const double in[8][8], double out[8][8], bool inverse) {
    const auto& m = dct8_matrix();
    double tmp[8][8];
    // rows
    for (int r = 0; r < 8; ++r)
        for (int u = 0; u < 8; ++u) {
            double s = 0.0;
            for (int x = 0; x < 8; ++x)
                s += in[r][x] * (inverse ? m[x][u] : m[u][x]);
            tmp[r][u] = s;
        }
    // cols
    for (int c = 0; c < 8; ++c)
        for (int u = 0; u < 8; ++u) {
            double s = 0.0;
            for (int y = 0; y < 8; ++y)
                s += tmp[y][c] * (inverse ? m[y][u] : m[u][y]);
            out[u][c] = s;
        }
}

} // namespace detail
} // namespace ringmark
