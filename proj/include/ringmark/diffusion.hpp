#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "ringmark/denoiser.hpp"
#include "ringmark/grid.hpp"
#include "ringmark/schedule.hpp"
#include "ringmark/watermark.hpp"

namespace ringmark {

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) noise
inline Grid forward_diffuse(const Grid& x0, int t, const Grid& noise,
                            const NoiseSchedule& sched) {
    if (t < 1 || t > sched.total_steps())
        throw ConfigError("forward_diffuse: t out of range");
    if (!x0.same_shape(noise))
        throw DimensionError("forward_diffuse: noise shape mismatch");
    const double ab = sched.alpha_bar(t);
    const double sa = std::sqrt(ab), s1a = std::sqrt(1.0 - ab);
    Grid out = x0;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = sa * x0.data[i] + s1a * noise.data[i];
    return out;
}

// One deterministic step t -> t_prev given a frozen noise prediction.
// Returns (x_prev, x0 estimate).
inline std::pair<Grid, Grid> ddim_step(const Grid& x_t, int t, int t_prev,
                                       const Grid& eps, const NoiseSchedule& sched) {
    if (t <= t_prev || t_prev < 0)
        throw ConfigError("ddim_step: need t > t_prev >= 0");
    if (!x_t.same_shape(eps)) throw DimensionError("ddim_step: eps shape mismatch");
    const double ab = sched.alpha_bar(t), abp = sched.alpha_bar(t_prev);
    const double sa = std::sqrt(ab), s1a = std::sqrt(1.0 - ab);
    const double sap = std::sqrt(abp), s1ap = std::sqrt(1.0 - abp);
    Grid x0(x_t.height, x_t.width, x_t.channels);
    Grid xp(x_t.height, x_t.width, x_t.channels);
    for (size_t i = 0; i < x0.data.size(); ++i) {
        const double e = eps.data[i];
        const double v0 = (x_t.data[i] - s1a * e) / sa;
        x0.data[i] = v0;
        xp.data[i] = sap * v0 + s1ap * e;
    }
    return {std::move(xp), std::move(x0)};
}

// One inversion step t_prev -> t given a frozen noise prediction; exact
// inverse of ddim_step under the same eps.
inline Grid ddim_invert_step_frozen(const Grid& x_prev, int t_prev, int t,
                                    const Grid& eps, const NoiseSchedule& sched) {
    if (t <= t_prev || t < 1) throw ConfigError("ddim_invert_step: need t > t_prev, t >= 1");
    const double ab = sched.alpha_bar(t), abp = sched.alpha_bar(t_prev);
    const double sa = std::sqrt(ab), s1a = std::sqrt(1.0 - ab);
    const double sap = std::sqrt(abp), s1ap = std::sqrt(1.0 - abp);
    Grid out(x_prev.height, x_prev.width, x_prev.channels);
    for (size_t i = 0; i < out.data.size(); ++i) {
        const double e = eps.data[i];
        const double x0 = (x_prev.data[i] - s1ap * e) / sap;
        out.data[i] = sa * x0 + s1a * e;
    }
    return out;
}

// Inversion step with the noise predicted from the lower state. The
// prediction is evaluated at (x_prev, t): lower state, target-step label --
// the sparse-ladder reading of the stride-1 inversion recurrence that keeps
// the evaluation label aligned with the generation side. Unconditional,
// unit guidance (verification never knows the prompt).
inline Grid ddim_invert_step(const Grid& x_prev, int t_prev, int t,
                             const Denoiser& d, const NoiseSchedule& sched) {
    const Grid eps = d.predict(x_prev, t, nullptr);
    return ddim_invert_step_frozen(x_prev, t_prev, t, eps, sched);
}

struct SampleOptions {
    const WatermarkArtifact* injection = nullptr;
    // when set, receives the state at every ladder point (post-injection at
    // the injection step), ending with the final x0
    std::vector<std::pair<int, Grid>>* trace = nullptr;
};

// Full DDIM ladder T -> 0. Standard CFG (eta1) before the injection point;
// once the watermark is written, the remaining steps use the three-term
// guidance with the artifact's hiding signal.
inline Grid sample(const Denoiser& d, const NoiseSchedule& sched,
                   const Grid& seed_noise, const Conditioning* cond,
                   const GuidanceConfig& g, const SampleOptions& opt = {}) {
    const auto ladder = sched.ladder();
    const WatermarkArtifact* inj = opt.injection;
    if (inj && !inj->pattern.mask.bins.empty() &&
        !sched.on_ladder_interior(inj->t_injection))
        throw ConfigError("t_injection must be a ladder-interior timestep");

    Grid x = seed_noise;
    bool injected = false;
    for (size_t i = 0; i + 1 < ladder.size(); ++i) {
        const int t = ladder[i], t_prev = ladder[i + 1];
        if (inj && !injected && t <= inj->t_injection) {
            x = inject(x, inj->pattern);
            injected = true;
        }
        if (opt.trace) opt.trace->emplace_back(t, x);
        Grid eps = injected
                       ? guided_epsilon(d, x, t, cond,
                                        inj->has_w_p ? &inj->w_p : nullptr,
                                        {g.eta1, inj->has_w_p ? g.eta2 : 0.0})
                       : guided_epsilon(d, x, t, cond, nullptr, {g.eta1, 0.0});
        x = ddim_step(x, t, t_prev, eps, sched).first;
    }
    if (opt.trace) opt.trace->emplace_back(0, x);
    check_finite(x, "sample");
    return x;
}

// Reconstruct x_hat at stop_t from a finished image by walking the ladder
// upward with null conditioning and unit guidance.
inline Grid invert(const Denoiser& d, const NoiseSchedule& sched, const Grid& x0,
                   int stop_t) {
    if (stop_t == 0) return x0;
    if (!sched.on_ladder(stop_t)) throw ConfigError("invert: stop_t not on ladder");
    const auto ladder = sched.ladder();
    Grid x = x0;
    for (size_t i = ladder.size() - 1; i > 0; --i) {
        const int t_prev = ladder[i], t = ladder[i - 1];
        if (t > stop_t) break;
        x = ddim_invert_step(x, t_prev, t, d, sched);
    }
    check_finite(x, "invert");
    return x;
}

} // namespace ringmark
