#pragma once

#include <cmath>
#include <complex>

#include "ringmark/denoiser.hpp"
#include "ringmark/diffusion.hpp"
#include "ringmark/watermark.hpp"

namespace ringmark {

// Retention loss: one-step x0 prediction from the watermarked state under
// the full three-term guidance, squared-error against the clean image.
inline double loss_ret(const Grid& x_t_star, int t, const Grid& x0, const Denoiser& d,
                       const Conditioning* cond, const Conditioning* w_p,
                       const GuidanceConfig& g, const NoiseSchedule& sched) {
    const Grid eps = guided_epsilon(d, x_t_star, t, cond, w_p, g);
    const double ab = sched.alpha_bar(t);
    const double sa = std::sqrt(ab), s1a = std::sqrt(1.0 - ab);
    double acc = 0.0;
    for (size_t i = 0; i < x0.data.size(); ++i) {
        const double pred = (x_t_star.data[i] - s1a * eps.data[i]) / sa;
        const double dd = pred - x0.data[i];
        acc += dd * dd;
    }
    return acc / static_cast<double>(x0.data.size());
}

// Consistency loss: deviation of the hiding-signal prediction from the
// unconditional one; bounds the guidance strength.
inline double loss_cons(const Grid& x_t_star, int t, const Denoiser& d,
                        const Conditioning* w_p) {
    const Grid e_wp = d.predict(x_t_star, t, w_p);
    const Grid e_u = d.predict(x_t_star, t, nullptr);
    return mse(e_wp, e_u);
}

// L2 of the written spectral content: every masked bin (positive half and
// mirror) contributes |value|^2.
inline double watermark_norm(const WatermarkPattern& p) {
    double s = 0.0;
    for (const cplx& v : p.bin_values) s += std::norm(v);
    return std::sqrt(2.0 * s);
}

} // namespace ringmark
