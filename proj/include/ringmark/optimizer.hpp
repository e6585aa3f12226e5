#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "ringmark/losses.hpp"
#include "ringmark/mixture.hpp"
#include "ringmark/rng.hpp"

namespace ringmark {

struct OptimizerConfig {
    double ret_weight = 1.0;    // alpha
    double cons_weight = 1.0;   // beta
    double norm_weight = 0.005; // lambda, reward on ||w_i||
    // Fixed-rate gradient descent, scaled to the 32x32 mean-squared losses
    // (rates orders of magnitude smaller leave the hiding signal inert).
    double lr_wi = 2.0;
    double lr_wp = 400.0;
    int rounds = 1000;
    int dataset_size = 50;
    int t_window_lo = 200;
    int t_window_hi = 300;
    double momentum = 0.0; // optional heavy-ball
};

struct TrainingLogRow {
    int round;
    int t;
    double loss_ret;
    double loss_cons;
    double w_norm;
    double bias_norm;
    double wall_ms;
};

struct OptimizeResult {
    WatermarkArtifact artifact;
    std::vector<TrainingLogRow> log;
};

namespace detail {

// Adjoint of the inject overwrite: with L(x*) and G = fft2(dL/dx*), the
// gradient for a positive-half bin value is 2 G[bin] / (H W) (the factor 2
// collects the conjugate mirror; G is Hermitian for real upstream
// gradients).
inline std::vector<cplx> inject_adjoint(const Grid& gx, const RingMask& mask) {
    const SpectrumGrid G = fft2(gx);
    const double inv_n = 1.0 / (static_cast<double>(gx.height) * gx.width);
    std::vector<cplx> out(mask.bins.size());
    for (size_t i = 0; i < mask.bins.size(); ++i)
        out[i] = 2.0 * inv_n * G.at(mask.bins[i].r, mask.bins[i].c);
    return out;
}

} // namespace detail

// Alternating adversarial optimization of the watermark values and the
// hiding conditioning. Each round draws a dataset image and a ladder
// timestep in the window, diffuses, injects, and takes one gradient step on
// w_i (ring-averaged afterwards) and one on w_p.
inline OptimizeResult optimize(const MixtureModel& model, const NoiseSchedule& sched,
                               const std::vector<std::pair<Grid, int>>& dataset,
                               const RingMask& mask, const OptimizerConfig& cfg,
                               const GuidanceConfig& guidance, int t_injection,
                               uint64_t seed) {
    if (dataset.empty()) throw ConfigError("optimize: dataset is empty");
    const std::vector<int> t_window =
        sched.ladder_window(cfg.t_window_lo, cfg.t_window_hi);
    if (t_window.empty())
        throw ConfigError("optimize: no ladder timestep inside the t window");

    MixtureDenoiser denoiser(model, sched);
    Rng rng(seed);
    const int n = model.size();
    const double inv_npix = 1.0 / (static_cast<double>(n) * n);

    // init: per-ring complex standard normal, expanded to per-bin state
    std::vector<cplx> ring_init(mask.ring_count());
    for (auto& v : ring_init) {
        const double re = rng.normal();
        const double im = rng.normal();
        v = cplx(re, im);
    }
    WatermarkPattern pattern = WatermarkPattern::from_ring_values(mask, ring_init);
    Conditioning w_p = model.null_embedding();

    std::vector<cplx> vel_w(pattern.bin_values.size(), 0.0);
    std::vector<double> vel_logits(w_p.logits.size(), 0.0);
    std::vector<double> vel_bias(w_p.bias_coeffs.size(), 0.0);

    OptimizeResult res;
    res.log.reserve(cfg.rounds);
    double initial_ret = -1.0;
    int high_ret_streak = 0;
    const auto t_start = std::chrono::steady_clock::now();

    for (int round = 0; round < cfg.rounds; ++round) {
        const auto& [x0, component] =
            dataset[static_cast<size_t>(rng.uniform_index(dataset.size()))];
        const int t = t_window[static_cast<size_t>(rng.uniform_index(t_window.size()))];
        const Grid noise = rng.normal_grid(n, n);
        const Grid x_t = forward_diffuse(x0, t, noise, sched);
        const Grid x_t_star = inject(x_t, pattern);
        const Conditioning cond = model.one_hot(component);

        const double ab = sched.alpha_bar(t);
        const double sa = std::sqrt(ab), s1a = std::sqrt(1.0 - ab);
        const double eta1 = guidance.eta1, eta2 = guidance.eta2;

        // forward terms shared by both losses
        const Grid e_c = denoiser.predict(x_t_star, t, &cond);
        const Grid e_wp = denoiser.predict(x_t_star, t, &w_p);
        const Grid e_u = denoiser.predict(x_t_star, t, nullptr);

        Grid x0_pred(n, n, 1);
        double lret = 0.0;
        for (size_t i = 0; i < x0_pred.data.size(); ++i) {
            const double e = eta1 * e_c.data[i] + eta2 * e_wp.data[i] +
                             (1.0 - eta1 - eta2) * e_u.data[i];
            x0_pred.data[i] = (x_t_star.data[i] - s1a * e) / sa;
            const double d = x0_pred.data[i] - x0.data[i];
            lret += d * d;
        }
        lret *= inv_npix;
        double lcons = mse(e_wp, e_u);

        // dL/dx* through the guided one-step prediction and the consistency
        // pair, assembled from denoiser vjps
        Grid v0(n, n, 1);
        for (size_t i = 0; i < v0.data.size(); ++i)
            v0.data[i] = 2.0 * inv_npix * (x0_pred.data[i] - x0.data[i]);
        const VjpResult j_c = denoiser.vjp(x_t_star, t, &cond, v0);
        const VjpResult j_wp = denoiser.vjp(x_t_star, t, &w_p, v0);
        const VjpResult j_u = denoiser.vjp(x_t_star, t, nullptr, v0);

        Grid vd(n, n, 1);
        for (size_t i = 0; i < vd.data.size(); ++i)
            vd.data[i] = 2.0 * inv_npix * (e_wp.data[i] - e_u.data[i]);
        const VjpResult j_wp2 = denoiser.vjp(x_t_star, t, &w_p, vd);
        const VjpResult j_u2 = denoiser.vjp(x_t_star, t, nullptr, vd);

        Grid gx(n, n, 1);
        for (size_t i = 0; i < gx.data.size(); ++i) {
            const double de_v0 = eta1 * j_c.x.data[i] + eta2 * j_wp.x.data[i] +
                                 (1.0 - eta1 - eta2) * j_u.x.data[i];
            const double gret = (v0.data[i] - s1a * de_v0) / sa;
            const double gcons = j_wp2.x.data[i] - j_u2.x.data[i];
            gx.data[i] = cfg.ret_weight * gret + cfg.cons_weight * gcons;
        }

        // --- w_i step (per bin), then ring averaging ---
        const std::vector<cplx> gw = detail::inject_adjoint(gx, mask);
        const double wnorm = watermark_norm(pattern);
        for (size_t i = 0; i < pattern.bin_values.size(); ++i) {
            cplx grad = gw[i];
            if (wnorm > 0.0)
                grad -= cfg.norm_weight * 2.0 * pattern.bin_values[i] / wnorm;
            vel_w[i] = cfg.momentum * vel_w[i] + grad;
            pattern.bin_values[i] -= cfg.lr_wi * vel_w[i];
        }
        pattern = ring_average(pattern);
        // averaged state stays ring-constant; guard the invariant (skipped
        // for non-finite values, which the divergence guard handles)
        {
            std::vector<const cplx*> first(mask.ring_count(), nullptr);
            for (size_t i = 0; i < pattern.bin_values.size(); ++i) {
                const int j = mask.bins[i].ring;
                const cplx& v = pattern.bin_values[i];
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) continue;
                if (!first[j])
                    first[j] = &v;
                else if (v != *first[j])
                    throw std::runtime_error("ring_average broke ring constancy");
            }
        }

        // --- w_p step ---
        const double cret = -s1a / sa * eta2;
        for (size_t i = 0; i < w_p.logits.size(); ++i) {
            const double g = cfg.ret_weight * cret * j_wp.cond.logits[i] +
                             cfg.cons_weight * j_wp2.cond.logits[i];
            vel_logits[i] = cfg.momentum * vel_logits[i] + g;
            w_p.logits[i] -= cfg.lr_wp * vel_logits[i];
        }
        for (size_t i = 0; i < w_p.bias_coeffs.size(); ++i) {
            const double g = cfg.ret_weight * cret * j_wp.cond.bias_coeffs[i] +
                             cfg.cons_weight * j_wp2.cond.bias_coeffs[i];
            vel_bias[i] = cfg.momentum * vel_bias[i] + g;
            w_p.bias_coeffs[i] -= cfg.lr_wp * vel_bias[i];
        }

        // divergence guard; non-finite losses count as high
        if (initial_ret < 0.0) initial_ret = lret;
        high_ret_streak = !(lret <= 10.0 * initial_ret) ? high_ret_streak + 1 : 0;
        if (high_ret_streak >= 50)
            throw DivergenceError("optimize diverged: loss_ret " + std::to_string(lret) +
                                  " > 10x initial " + std::to_string(initial_ret) +
                                  " for 50 rounds (round " + std::to_string(round) + ")");

        double bias_norm = 0.0;
        for (double b : w_p.bias_coeffs) bias_norm += b * b;
        const double wall =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                      t_start)
                .count();
        res.log.push_back({round, t, lret, lcons, watermark_norm(pattern),
                           std::sqrt(bias_norm), wall});
    }

    res.artifact.pattern = std::move(pattern);
    res.artifact.w_p = std::move(w_p);
    res.artifact.has_w_p = true;
    res.artifact.t_injection = t_injection;
    res.artifact.guidance = guidance;
    res.artifact.schedule_fingerprint = sched.fingerprint();
    return res;
}

} // namespace ringmark
