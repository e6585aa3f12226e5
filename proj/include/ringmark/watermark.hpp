#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "ringmark/denoiser.hpp"
#include "ringmark/fft.hpp"
#include "ringmark/grid.hpp"

namespace ringmark {

// Concentric-ring mask over the centered spectrum. Annuli of width 1 start
// at radius 1; the DC bin and the four self-conjugate Nyquist bins are
// excluded, and rings never leave the inscribed disk, so every masked bin
// has a proper conjugate mirror. Bins are stored as positive-half entries
// (lexicographically before their mirror) plus the mirror coordinates.
struct RingMask {
    struct Bin {
        int r, c;       // positive-half position
        int mr, mc;     // conjugate mirror
        int ring;
    };

    int height = 0, width = 0;
    std::vector<std::pair<int, int>> rings; // (radius_lo, radius_hi) per annulus
    std::vector<Bin> bins;                  // positive half, row-major order
    std::vector<int> ring_total_bins;       // both halves
    std::vector<int> ring_positive_bins;
    double coverage = 0.0;                  // achieved bin fraction

    int ring_count() const { return static_cast<int>(rings.size()); }
    int total_bins() const {
        int s = 0;
        for (int c : ring_total_bins) s += c;
        return s;
    }
};

// Build annuli outward from radius 1, stopping at the ring count whose
// achieved coverage is closest to the request. Rejects fractions at or above
// the inscribed-disk capacity.
inline RingMask build_ring_mask(int h, int w, double coverage_fraction) {
    if (h != w) throw DimensionError("ring mask requires a square grid");
    if (!detail::is_pow2(h)) throw DimensionError("ring mask requires power-of-two size");
    if (!(coverage_fraction > 0.0 && coverage_fraction < 1.0))
        throw ConfigError("coverage fraction must be in (0, 1)");

    const int max_radius = h / 2;
    const int max_ring = max_radius - 1; // rings [1,2) .. [max_radius-1, max_radius)
    std::vector<std::vector<RingMask::Bin>> ring_bins(max_ring);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double du = r - h / 2, dv = c - w / 2;
            const double rho = std::hypot(du, dv);
            if (rho < 1.0 || rho >= max_radius) continue;
            const int mr = (h - r) % h, mc = (w - c) % w;
            if (mr == r && mc == c) continue; // self-conjugate
            if (std::make_pair(r, c) >= std::make_pair(mr, mc)) continue;
            ring_bins[static_cast<int>(rho) - 1].push_back({r, c, mr, mc, 0});
        }

    // capacity check: all rings inside the inscribed disk
    int capacity = 0;
    for (const auto& rb : ring_bins) capacity += 2 * static_cast<int>(rb.size());
    const double cap_frac = static_cast<double>(capacity) / (static_cast<double>(h) * w);
    if (coverage_fraction >= cap_frac)
        throw ConfigError("coverage fraction exceeds inscribed-disk capacity (" +
                          std::to_string(cap_frac) + ")");

    int chosen = 1;
    {
        int cum = 0;
        double best = 2.0;
        for (int j = 0; j < max_ring; ++j) {
            cum += 2 * static_cast<int>(ring_bins[j].size());
            const double cov = static_cast<double>(cum) / (static_cast<double>(h) * w);
            const double d = std::abs(cov - coverage_fraction);
            if (d < best) {
                best = d;
                chosen = j + 1;
            }
        }
    }

    RingMask mask;
    mask.height = h;
    mask.width = w;
    int covered = 0;
    for (int j = 0; j < chosen; ++j) {
        mask.rings.emplace_back(j + 1, j + 2);
        mask.ring_positive_bins.push_back(static_cast<int>(ring_bins[j].size()));
        mask.ring_total_bins.push_back(2 * static_cast<int>(ring_bins[j].size()));
        covered += 2 * static_cast<int>(ring_bins[j].size());
        for (auto b : ring_bins[j]) {
            b.ring = j;
            mask.bins.push_back(b);
        }
    }
    std::sort(mask.bins.begin(), mask.bins.end(),
              [](const RingMask::Bin& a, const RingMask::Bin& b) {
                  return std::make_pair(a.r, a.c) < std::make_pair(b.r, b.c);
              });
    mask.coverage = static_cast<double>(covered) / (static_cast<double>(h) * w);
    return mask;
}

// Watermark content over a mask. Values are stored per positive-half bin so
// the optimizer can hold un-averaged state; ring_average collapses them to
// the per-ring values that constitute the sealed watermark.
struct WatermarkPattern {
    RingMask mask;
    std::vector<cplx> bin_values; // one per mask.bins entry

    static WatermarkPattern from_ring_values(RingMask m, std::vector<cplx> ring_values) {
        if (static_cast<int>(ring_values.size()) != m.ring_count())
            throw ConfigError("ring value count does not match mask");
        WatermarkPattern p;
        p.bin_values.resize(m.bins.size());
        for (size_t i = 0; i < m.bins.size(); ++i)
            p.bin_values[i] = ring_values[m.bins[i].ring];
        p.mask = std::move(m);
        return p;
    }

    // Per-ring means of the per-bin state. Rings whose bins already hold one
    // value return it bitwise, keeping averaged patterns byte-stable across
    // save/average round-trips.
    std::vector<cplx> ring_values() const {
        std::vector<cplx> first(mask.ring_count(), 0.0);
        std::vector<bool> uniform(mask.ring_count(), true), seen(mask.ring_count(), false);
        std::vector<cplx> acc(mask.ring_count(), 0.0);
        std::vector<int> cnt(mask.ring_count(), 0);
        for (size_t i = 0; i < mask.bins.size(); ++i) {
            const int j = mask.bins[i].ring;
            if (!seen[j]) {
                seen[j] = true;
                first[j] = bin_values[i];
            } else if (bin_values[i] != first[j]) {
                uniform[j] = false;
            }
            acc[j] += bin_values[i];
            cnt[j] += 1;
        }
        for (int j = 0; j < mask.ring_count(); ++j)
            acc[j] = uniform[j] ? first[j] : acc[j] / static_cast<double>(cnt[j]);
        return acc;
    }
};

inline WatermarkPattern ring_average(const WatermarkPattern& p) {
    return WatermarkPattern::from_ring_values(p.mask, p.ring_values());
}

// Overwrite every masked bin: positive half takes the pattern value, the
// mirror its conjugate. Output is real by construction; a residue above the
// ifft2 threshold signals a broken mask. Multi-channel grids carry the
// watermark in channel 0 only.
inline Grid inject(const Grid& x, const WatermarkPattern& p,
                   double* imag_residue = nullptr) {
    if (p.mask.bins.empty()) {
        if (imag_residue) *imag_residue = 0.0;
        return x;
    }
    if (x.height != p.mask.height || x.width != p.mask.width)
        throw DimensionError("inject: grid does not match mask");
    const Grid ch0 = x.channels == 1 ? x : x.channel(0);
    SpectrumGrid s = fft2(ch0);
    for (size_t i = 0; i < p.mask.bins.size(); ++i) {
        const auto& b = p.mask.bins[i];
        s.at(b.r, b.c) = p.bin_values[i];
        s.at(b.mr, b.mc) = std::conj(p.bin_values[i]);
    }
    Grid out0 = ifft2(s, imag_residue);
    if (x.channels == 1) return out0;
    Grid out = x;
    out.set_channel(0, out0);
    return out;
}

// Per-ring means over the positive half of the spectrum (channel 0).
inline std::vector<cplx> extract(const Grid& x, const RingMask& mask) {
    if (x.height != mask.height || x.width != mask.width)
        throw DimensionError("extract: grid does not match mask");
    const Grid ch0 = x.channels == 1 ? x : x.channel(0);
    const SpectrumGrid s = fft2(ch0);
    std::vector<cplx> acc(mask.ring_count(), 0.0);
    for (const auto& b : mask.bins) acc[b.ring] += s.at(b.r, b.c);
    for (int j = 0; j < mask.ring_count(); ++j)
        acc[j] /= static_cast<double>(mask.ring_positive_bins[j]);
    return acc;
}

// The sealed unit of persistence: optimized ring values, the hiding signal,
// the injection point, guidance scales and the schedule fingerprint.
struct WatermarkArtifact {
    WatermarkPattern pattern;
    Conditioning w_p;
    bool has_w_p = false;
    int t_injection = 240;
    GuidanceConfig guidance;
    std::string schedule_fingerprint;
    double requested_coverage = 0.0;
};

} // namespace ringmark
