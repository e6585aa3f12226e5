#pragma once

#include <functional>
#include <vector>

#include "ringmark/grid.hpp"

namespace ringmark {

// Conditioning vector: soft component-selection logits plus coefficients over
// a low-frequency spatial bias basis. The unconditional case is represented
// by a null pointer wherever a conditioning is passed.
struct Conditioning {
    std::vector<double> logits;
    std::vector<double> bias_coeffs;

    static Conditioning null_embedding(const std::vector<double>& log_priors,
                                       int n_bias) {
        Conditioning c;
        c.logits = log_priors;
        c.bias_coeffs.assign(n_bias, 0.0);
        return c;
    }
    // hard selection of one component (+/- 20 logits)
    static Conditioning one_hot(int k, int n_components, int n_bias,
                                double scale = 20.0) {
        Conditioning c;
        c.logits.assign(n_components, -scale);
        c.logits[k] = scale;
        c.bias_coeffs.assign(n_bias, 0.0);
        return c;
    }
};

struct GuidanceConfig {
    double eta1 = 7.5; // weight of the original condition
    double eta2 = 1.0; // weight of the hiding signal w_p
};

// vector-Jacobian products of a noise prediction
struct VjpResult {
    Grid x;            // v^T d(eps)/dx
    Conditioning cond; // v^T d(eps)/d(logits, bias); empty for NULL cond
};

class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual Grid predict(const Grid& x, int t, const Conditioning* cond) const = 0;
    virtual VjpResult vjp(const Grid& x, int t, const Conditioning* cond,
                          const Grid& v) const = 0;
};

// eta1*eps_cond + eta2*eps_wp + (1 - eta1 - eta2)*eps_uncond; a missing
// eps_wp is treated as eta2 = 0, which reduces to single-scale CFG.
inline Grid cfg_combine(const Grid& eps_cond, const Grid* eps_wp,
                        const Grid& eps_uncond, const GuidanceConfig& g) {
    const double eta2 = eps_wp ? g.eta2 : 0.0;
    Grid out(eps_cond.height, eps_cond.width, eps_cond.channels);
    for (size_t i = 0; i < out.data.size(); ++i) {
        double v = g.eta1 * eps_cond.data[i] +
                   (1.0 - g.eta1 - eta2) * eps_uncond.data[i];
        if (eps_wp) v += eta2 * eps_wp->data[i];
        out.data[i] = v;
    }
    return out;
}

// Evaluate the guided noise prediction, skipping evaluations whose weight is
// exactly zero (pure conditional at eta1=1, pure unconditional at eta1=0).
inline Grid guided_epsilon(const Denoiser& d, const Grid& x, int t,
                           const Conditioning* cond, const Conditioning* wp,
                           const GuidanceConfig& g) {
    const double eta2 = wp ? g.eta2 : 0.0;
    if (eta2 == 0.0) {
        if (g.eta1 == 1.0) return d.predict(x, t, cond);
        if (g.eta1 == 0.0) return d.predict(x, t, nullptr);
    }
    const Grid eps_cond = d.predict(x, t, cond);
    const Grid eps_uncond = d.predict(x, t, nullptr);
    if (eta2 == 0.0) return cfg_combine(eps_cond, nullptr, eps_uncond, g);
    const Grid eps_wp = d.predict(x, t, wp);
    return cfg_combine(eps_cond, &eps_wp, eps_uncond, g);
}

// adapter for test denoisers built from plain callables (no vjp support)
class FunctionDenoiser final : public Denoiser {
public:
    using Fn = std::function<Grid(const Grid&, int, const Conditioning*)>;
    explicit FunctionDenoiser(Fn fn) : fn_(std::move(fn)) {}
    Grid predict(const Grid& x, int t, const Conditioning* cond) const override {
        return fn_(x, t, cond);
    }
    VjpResult vjp(const Grid&, int, const Conditioning*, const Grid&) const override {
        throw std::runtime_error("FunctionDenoiser has no vjp");
    }

private:
    Fn fn_;
};

} // namespace ringmark
