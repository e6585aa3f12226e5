#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ringmark/diffusion.hpp"
#include "ringmark/watermark.hpp"

namespace ringmark {

// Bin-count-weighted mean modulus of the per-ring differences; equals the
// plain mean of |w_m - w'_m| over all masked bins for ring-constant content.
inline double l1_distance(const std::vector<cplx>& w, const std::vector<cplx>& w_prime,
                          const RingMask& mask) {
    if (w.size() != w_prime.size() ||
        static_cast<int>(w.size()) != mask.ring_count())
        throw ConfigError("l1_distance: ring count mismatch");
    double num = 0.0, den = 0.0;
    for (size_t j = 0; j < w.size(); ++j) {
        num += mask.ring_total_bins[j] * std::abs(w[j] - w_prime[j]);
        den += mask.ring_total_bins[j];
    }
    return num / den;
}

// Mann-Whitney counts: (2*wins + ties, 2*n*m) with "win" = positive scores
// lower than negative.
inline std::pair<uint64_t, uint64_t> auc_counts(const std::vector<double>& pos,
                                                const std::vector<double>& neg) {
    if (pos.empty() || neg.empty()) throw ConfigError("auc: empty score list");
    // sort-merge rank counting
    std::vector<double> p = pos, q = neg;
    std::sort(p.begin(), p.end());
    std::sort(q.begin(), q.end());
    uint64_t wins = 0, ties = 0;
    size_t lo = 0, eq = 0;
    for (double v : p) {
        while (lo < q.size() && q[lo] < v) ++lo;
        eq = lo;
        while (eq < q.size() && q[eq] == v) ++eq;
        wins += q.size() - eq;
        ties += eq - lo;
    }
    return {2 * wins + ties, 2 * static_cast<uint64_t>(pos.size()) * neg.size()};
}

// AUC with lower scores counting as positive; ties count one half. The
// rational u/d is rounded half-to-even onto the 2^-53 grid: complementary
// count pairs land on exactly complementary doubles, so
// auc(neg, pos) == 1 - auc(pos, neg) holds bit-exactly.
inline double auc_from_counts(uint64_t u, uint64_t d) {
    const unsigned __int128 num = static_cast<unsigned __int128>(u) << 53;
    uint64_t q = static_cast<uint64_t>(num / d);
    const unsigned __int128 r = num % d;
    if (2 * r > d || (2 * r == d && (q & 1))) ++q;
    return std::ldexp(static_cast<double>(q), -53);
}

inline double auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    const auto [u, d] = auc_counts(pos, neg);
    return auc_from_counts(u, d);
}

// Empirical FPR quantile of the clean-distance distribution.
inline double calibrate_threshold(std::vector<double> clean_distances,
                                  double target_fpr = 0.01) {
    if (clean_distances.size() < 100)
        throw ConfigError("calibrate_threshold: need at least 100 clean distances");
    if (!(target_fpr > 0.0 && target_fpr < 1.0))
        throw ConfigError("target_fpr must be in (0,1)");
    std::sort(clean_distances.begin(), clean_distances.end());
    const auto n = clean_distances.size();
    size_t idx = static_cast<size_t>(
        std::ceil(target_fpr * static_cast<double>(n)));
    idx = idx > 0 ? idx - 1 : 0;
    return clean_distances[std::min(idx, n - 1)];
}

// peak = 1; identical grids report +infinity
inline double psnr(const Grid& a, const Grid& b) {
    if (!a.same_shape(b)) throw DimensionError("psnr: shape mismatch");
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / m);
}

// SSIM, 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03, L=1, averaged
// over fully valid window positions. Multi-channel grids average channels.
inline double ssim(const Grid& a, const Grid& b) {
    if (!a.same_shape(b)) throw DimensionError("ssim: shape mismatch");
    constexpr int kWin = 11;
    constexpr double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
    if (a.height < kWin || a.width < kWin)
        throw DimensionError("ssim: grid smaller than the 11x11 window");
    static const auto win = [] {
        std::array<double, kWin * kWin> w{};
        double sum = 0.0;
        for (int y = 0; y < kWin; ++y)
            for (int x = 0; x < kWin; ++x) {
                const double dy = y - 5.0, dx = x - 5.0;
                w[y * kWin + x] = std::exp(-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5));
                sum += w[y * kWin + x];
            }
        for (double& v : w) v /= sum;
        return w;
    }();

    double total = 0.0;
    int count = 0;
    for (int c = 0; c < a.channels; ++c)
        for (int y0 = 0; y0 + kWin <= a.height; ++y0)
            for (int x0 = 0; x0 + kWin <= a.width; ++x0) {
                double ma = 0, mb = 0;
                for (int y = 0; y < kWin; ++y)
                    for (int x = 0; x < kWin; ++x) {
                        const double w = win[y * kWin + x];
                        ma += w * a.at(y0 + y, x0 + x, c);
                        mb += w * b.at(y0 + y, x0 + x, c);
                    }
                double va = 0, vb = 0, cov = 0;
                for (int y = 0; y < kWin; ++y)
                    for (int x = 0; x < kWin; ++x) {
                        const double w = win[y * kWin + x];
                        const double da = a.at(y0 + y, x0 + x, c) - ma;
                        const double db = b.at(y0 + y, x0 + x, c) - mb;
                        va += w * da * da;
                        vb += w * db * db;
                        cov += w * da * db;
                    }
                const double num = (2 * ma * mb + kC1) * (2 * cov + kC2);
                const double den = (ma * ma + mb * mb + kC1) * (va + vb + kC2);
                total += num / den;
                ++count;
            }
    return total / count;
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw ConfigError("spearman: need two equal-length series");
    auto ranks = [](const std::vector<double>& v) {
        const size_t n = v.size();
        std::vector<size_t> order(n);
        for (size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&v](size_t i, size_t j) { return v[i] < v[j]; });
        std::vector<double> r(n);
        size_t i = 0;
        while (i < n) {
            size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = 0.5 * (i + j) + 1.0;
            for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(xs), ry = ranks(ys);
    double mx = 0, my = 0;
    for (size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= rx.size();
    my /= ry.size();
    double num = 0, dx = 0, dy = 0;
    for (size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

struct DetectionRecord {
    std::string image_id;
    double distance = 0.0;
    bool watermarked_truth = false;
    bool decision = false;
};

struct DetectionReport {
    std::vector<DetectionRecord> per_image;
    double tau = 0.0;
    double auc = 0.0;
    double watermark_mse = 0.0; // mean L1 distance over watermarked images
};

// Decision pipeline: invert to the injection point with null conditioning,
// extract ring means, threshold the L1 distance.
inline std::pair<double, bool> verify(const Grid& image, const WatermarkArtifact& artifact,
                                      const NoiseSchedule& sched, const Denoiser& denoiser,
                                      double tau) {
    if (artifact.schedule_fingerprint != sched.fingerprint())
        throw FingerprintMismatch(
            "artifact was optimized against a different noise schedule");
    const Grid x_hat = invert(denoiser, sched, image, artifact.t_injection);
    const auto extracted = extract(x_hat, artifact.pattern.mask);
    const double d = l1_distance(artifact.pattern.ring_values(), extracted,
                                 artifact.pattern.mask);
    return {d, d <= tau};
}

} // namespace ringmark
