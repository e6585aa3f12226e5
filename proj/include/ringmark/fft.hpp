#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include "ringmark/grid.hpp"

namespace ringmark {

namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// iterative radix-2 Cooley-Tukey, in place; inverse = conjugate twiddles,
// caller handles normalization
inline void fft_pow2(std::complex<double>* a, int n, bool inverse) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / len * (inverse ? 1.0 : -1.0);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

inline void fft2_inplace(std::vector<std::complex<double>>& a, int h, int w,
                         bool inverse) {
    for (int r = 0; r < h; ++r) fft_pow2(a.data() + static_cast<size_t>(r) * w, w, inverse);
    std::vector<std::complex<double>> col(h);
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) col[r] = a[static_cast<size_t>(r) * w + c];
        fft_pow2(col.data(), h, inverse);
        for (int r = 0; r < h; ++r) a[static_cast<size_t>(r) * w + c] = col[r];
    }
}

} // namespace detail

// Forward 2-D DFT of a single-channel grid, centered so DC lands at
// (H/2, W/2). Unnormalized (Parseval: sum g^2 = sum |G|^2 / (H*W)).
inline SpectrumGrid fft2(const Grid& g) {
    if (g.channels != 1)
        throw DimensionError("fft2 expects a single-channel grid");
    if (!detail::is_pow2(g.height) || !detail::is_pow2(g.width))
        throw DimensionError("fft2 requires power-of-two dimensions");
    const int h = g.height, w = g.width;
    std::vector<std::complex<double>> a(static_cast<size_t>(h) * w);
    for (size_t i = 0; i < a.size(); ++i) a[i] = g.data[i];
    detail::fft2_inplace(a, h, w, false);
    SpectrumGrid s(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            // centered(r, c) = uncentered((r - H/2) mod H, (c - W/2) mod W)
            s.at(r, c) = a[static_cast<size_t>((r + h / 2) % h) * w + (c + w / 2) % w];
    return s;
}

// Inverse of fft2. The input must be Hermitian up to numerical noise; the
// imaginary residue (relative to peak magnitude) is reported through
// `imag_residue` and rejected above 1e-6.
inline Grid ifft2(const SpectrumGrid& s, double* imag_residue = nullptr) {
    const int h = s.height, w = s.width;
    if (!detail::is_pow2(h) || !detail::is_pow2(w))
        throw DimensionError("ifft2 requires power-of-two dimensions");
    std::vector<std::complex<double>> a(static_cast<size_t>(h) * w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            a[static_cast<size_t>((r + h / 2) % h) * w + (c + w / 2) % w] = s.at(r, c);
    detail::fft2_inplace(a, h, w, true);
    const double norm = 1.0 / (static_cast<double>(h) * w);
    Grid out(h, w, 1);
    double max_imag = 0.0, max_mag = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const std::complex<double> z = a[i] * norm;
        out.data[i] = z.real();
        max_imag = std::max(max_imag, std::abs(z.imag()));
        max_mag = std::max(max_mag, std::abs(z));
    }
    const double rel = max_mag > 0.0 ? max_imag / max_mag : 0.0;
    if (imag_residue) *imag_residue = rel;
    if (rel > 1e-6)
        throw SymmetryError("ifft2: spectrum is not Hermitian (imag residue " +
                            std::to_string(rel) + "); mirror bins missing?");
    return out;
}

} // namespace ringmark
