#pragma once

// Shared independent oracles for the test suite. These deliberately avoid
// the library's fast paths: direct DFT sums, dense convolution, pairwise AUC
// counting.

#include <complex>
#include <numbers>
#include <vector>

#include "ringmark/grid.hpp"
#include "ringmark/rng.hpp"

namespace oracle {

using ringmark::Grid;
using cplx = std::complex<double>;

// O(N^2) centered 2-D DFT
inline std::vector<cplx> naive_dft2(const Grid& g) {
    const int h = g.height, w = g.width;
    std::vector<cplx> out(static_cast<size_t>(h) * w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int ku = r - h / 2, kv = c - w / 2;
            cplx acc = 0.0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double ang = -2.0 * std::numbers::pi *
                                       (static_cast<double>(ku) * y / h +
                                        static_cast<double>(kv) * x / w);
                    acc += g.at(y, x) * cplx(std::cos(ang), std::sin(ang));
                }
            out[static_cast<size_t>(r) * w + c] = acc;
        }
    return out;
}

inline int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// dense 2-D convolution with an outer-product Gaussian kernel, reflect border
inline Grid naive_gaussian_blur(const Grid& g, double radius) {
    const double sigma = radius / 2.0;
    const int hw = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * hw + 1);
    double sum = 0.0;
    for (int i = -hw; i <= hw; ++i) {
        k[i + hw] = std::exp(-0.5 * (i / sigma) * (i / sigma));
        sum += k[i + hw];
    }
    for (double& v : k) v /= sum;
    Grid out(g.height, g.width, g.channels);
    for (int c = 0; c < g.channels; ++c)
        for (int y = 0; y < g.height; ++y)
            for (int x = 0; x < g.width; ++x) {
                double acc = 0.0;
                for (int dy = -hw; dy <= hw; ++dy)
                    for (int dx = -hw; dx <= hw; ++dx)
                        acc += k[dy + hw] * k[dx + hw] *
                               g.at(reflect(y + dy, g.height), reflect(x + dx, g.width), c);
                out.at(y, x, c) = acc;
            }
    return out;
}

// pairwise Mann-Whitney counting (lower positive scores win)
inline std::pair<uint64_t, uint64_t> pairwise_auc_counts(const std::vector<double>& pos,
                                                         const std::vector<double>& neg) {
    uint64_t wins = 0, ties = 0;
    for (double p : pos)
        for (double n : neg) {
            if (p < n) ++wins;
            else if (p == n) ++ties;
        }
    return {2 * wins + ties, 2 * static_cast<uint64_t>(pos.size()) * neg.size()};
}

inline Grid random_grid(ringmark::Rng& rng, int h, int w, int c = 1) {
    Grid g(h, w, c);
    for (double& v : g.data) v = rng.normal();
    return g;
}

} // namespace oracle
