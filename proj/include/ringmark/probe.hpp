#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "ringmark/diffusion.hpp"
#include "ringmark/mixture.hpp"
#include "ringmark/rng.hpp"

namespace ringmark {

struct NoiseTermRow {
    int t;
    double uncond;
    double cond;
    double guidance;
    double full;
};

namespace detail {

inline double mean_abs(const Grid& g) {
    double s = 0.0;
    for (double v : g.data) s += std::abs(v);
    return s / static_cast<double>(g.data.size());
}

} // namespace detail

// Per-step magnitudes of the CFG decomposition Full = Uncond + s*(Cond -
// Uncond) along unwatermarked sampling, averaged over seeds. Aggregation is
// the mean absolute value over the grid.
inline std::vector<NoiseTermRow> noise_term_curves(const Denoiser& d,
                                                   const NoiseSchedule& sched, int size,
                                                   const Conditioning& cond,
                                                   double guidance_scale, int n_seeds,
                                                   uint64_t master_seed) {
    if (n_seeds < 1) throw ConfigError("noise_term_curves: need at least one seed");
    const auto ladder = sched.ladder();
    std::vector<NoiseTermRow> rows(ladder.size() - 1);
    for (size_t i = 0; i + 1 < ladder.size(); ++i) rows[i] = {ladder[i], 0, 0, 0, 0};

    for (int s = 0; s < n_seeds; ++s) {
        Rng rng(sub_seed(master_seed, static_cast<uint64_t>(s)));
        Grid x = rng.normal_grid(size, size);
        for (size_t i = 0; i + 1 < ladder.size(); ++i) {
            const int t = ladder[i], tp = ladder[i + 1];
            const Grid e_u = d.predict(x, t, nullptr);
            const Grid e_c = d.predict(x, t, &cond);
            Grid guid(e_u.height, e_u.width, 1);
            Grid full(e_u.height, e_u.width, 1);
            for (size_t k = 0; k < guid.data.size(); ++k) {
                guid.data[k] = guidance_scale * (e_c.data[k] - e_u.data[k]);
                full.data[k] = e_u.data[k] + guid.data[k];
            }
            rows[i].uncond += detail::mean_abs(e_u);
            rows[i].cond += detail::mean_abs(e_c);
            rows[i].guidance += detail::mean_abs(guid);
            rows[i].full += detail::mean_abs(full);
            x = ddim_step(x, t, tp, full, sched).first;
        }
    }
    for (auto& r : rows) {
        r.uncond /= n_seeds;
        r.cond /= n_seeds;
        r.guidance /= n_seeds;
        r.full /= n_seeds;
    }
    return rows;
}

// Knee of the |Guidance| curve: the first ladder step (descending t) from
// which every remaining per-step increase stays below 10% of the peak
// increase.
inline int detect_guidance_knee(const std::vector<NoiseTermRow>& rows) {
    if (rows.size() < 3) throw ConfigError("knee detection needs at least 3 rows");
    std::vector<double> inc(rows.size() - 1);
    double peak = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < rows.size(); ++i) {
        inc[i] = rows[i + 1].guidance - rows[i].guidance;
        peak = std::max(peak, inc[i]);
    }
    for (size_t i = 0; i < inc.size(); ++i) {
        bool flat = true;
        for (size_t j = i; j < inc.size(); ++j)
            if (inc[j] >= 0.1 * peak) {
                flat = false;
                break;
            }
        if (flat) return rows[i].t;
    }
    return rows.back().t;
}

struct PerturbationResponse {
    int t_perturb;
    double delta_uncond;
    double delta_guidance;
};

// Add a fixed ring-pattern field at perturb_t and accumulate the mean
// absolute change of the Uncondition and Guidance terms over the remaining
// steps, against the unperturbed twin run.
inline PerturbationResponse perturbation_response(const Denoiser& d,
                                                  const NoiseSchedule& sched,
                                                  const Conditioning& cond,
                                                  double guidance_scale, int perturb_t,
                                                  const RingMask& mask, double amplitude,
                                                  uint64_t seed) {
    if (perturb_t != 0 && !sched.on_ladder(perturb_t))
        throw ConfigError("perturbation_response: perturb_t not on ladder");
    // real perturbation carrier: unit value on every masked bin
    Grid pert(mask.height, mask.width, 1);
    {
        SpectrumGrid s(mask.height, mask.width);
        for (const auto& b : mask.bins) {
            s.at(b.r, b.c) = 1.0;
            s.at(b.mr, b.mc) = 1.0;
        }
        pert = ifft2(s);
    }

    Rng rng(seed);
    Grid xb = rng.normal_grid(mask.height, mask.width);
    Grid xs = xb;
    bool added = false;
    double du = 0.0, dg = 0.0;
    const auto ladder = sched.ladder();
    for (size_t i = 0; i + 1 < ladder.size(); ++i) {
        const int t = ladder[i], tp = ladder[i + 1];
        if (!added && perturb_t != 0 && t <= perturb_t) {
            for (size_t k = 0; k < xs.data.size(); ++k)
                xs.data[k] += amplitude * pert.data[k];
            added = true;
        }
        const Grid eub = d.predict(xb, t, nullptr);
        const Grid ecb = d.predict(xb, t, &cond);
        Grid fb(xb.height, xb.width, 1);
        for (size_t k = 0; k < fb.data.size(); ++k)
            fb.data[k] = eub.data[k] + guidance_scale * (ecb.data[k] - eub.data[k]);

        const Grid eus = d.predict(xs, t, nullptr);
        const Grid ecs = d.predict(xs, t, &cond);
        Grid fs(xs.height, xs.width, 1);
        for (size_t k = 0; k < fs.data.size(); ++k)
            fs.data[k] = eus.data[k] + guidance_scale * (ecs.data[k] - eus.data[k]);

        if (added) {
            double su = 0.0, sg = 0.0;
            for (size_t k = 0; k < eub.data.size(); ++k) {
                su += std::abs(eus.data[k] - eub.data[k]);
                sg += std::abs(guidance_scale * (ecs.data[k] - eus.data[k]) -
                               guidance_scale * (ecb.data[k] - eub.data[k]));
            }
            du += su / static_cast<double>(eub.data.size());
            dg += sg / static_cast<double>(eub.data.size());
        }
        xb = ddim_step(xb, t, tp, fb, sched).first;
        xs = ddim_step(xs, t, tp, fs, sched).first;
    }
    return {perturb_t, du, dg};
}

} // namespace ringmark
