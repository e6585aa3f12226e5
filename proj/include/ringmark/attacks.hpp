#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ringmark/diffusion.hpp"
#include "ringmark/grid_io.hpp"
#include "ringmark/image_ops.hpp"
#include "ringmark/rng.hpp"

namespace ringmark {

enum class AttackKind {
    identity,
    blur,
    noise,
    jpeg,
    brightness,
    rotation,
    crop,
    regenerate,
};

inline const char* attack_kind_name(AttackKind k) {
    switch (k) {
        case AttackKind::identity: return "identity";
        case AttackKind::blur: return "blur";
        case AttackKind::noise: return "noise";
        case AttackKind::jpeg: return "jpeg";
        case AttackKind::brightness: return "brightness";
        case AttackKind::rotation: return "rotation";
        case AttackKind::crop: return "crop";
        case AttackKind::regenerate: return "regenerate";
    }
    return "?";
}

inline AttackKind attack_kind_from_name(const std::string& s) {
    for (AttackKind k : {AttackKind::identity, AttackKind::blur, AttackKind::noise,
                         AttackKind::jpeg, AttackKind::brightness, AttackKind::rotation,
                         AttackKind::crop, AttackKind::regenerate})
        if (s == attack_kind_name(k)) return k;
    throw ConfigError("unknown attack kind: " + s);
}

// One transformation of the suite. Operates on [0,1]-range grids (the export
// representation). Stochastic kinds draw from `seed`; the deterministic
// variants (brightness "factor", rotation "angle") need none.
struct AttackSpec {
    AttackKind kind = AttackKind::identity;
    std::map<std::string, double> params;
    std::optional<uint64_t> seed;

    double param(const std::string& name, double fallback) const {
        auto it = params.find(name);
        return it == params.end() ? fallback : it->second;
    }
    bool has(const std::string& name) const { return params.count(name) > 0; }

    std::string label() const {
        return attack_kind_name(kind);
    }
};

// the stock six-transformation robustness suite
inline std::vector<AttackSpec> stock_attacks(uint64_t seed_base = 0) {
    std::vector<AttackSpec> v;
    v.push_back({AttackKind::blur, {{"radius", 4.0}}, {}});
    v.push_back({AttackKind::noise, {{"intensity", 0.10}}, seed_base + 1});
    v.push_back({AttackKind::jpeg, {{"quality", 25.0}}, {}});
    v.push_back({AttackKind::brightness, {{"strength", 6.0}}, seed_base + 2});
    v.push_back({AttackKind::rotation, {{"degrees", 75.0}}, seed_base + 3});
    v.push_back({AttackKind::crop, {{"keep", 0.75}}, {}});
    return v;
}

// regeneration needs the lab's own diffusion model
struct AttackContext {
    const Denoiser* denoiser = nullptr;
    const NoiseSchedule* schedule = nullptr;
};

namespace detail {

// jpeg and brightness operate on the 8-bit export representation; inputs
// that drifted outside [0,1] (e.g. a preceding noise attack) clamp first
inline Grid clamp_unit(const Grid& x) {
    Grid out = x;
    for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
    return out;
}

inline void validate_params(const AttackSpec& s) {
    auto only = [&s](std::initializer_list<const char*> allowed) {
        for (const auto& [k, v] : s.params) {
            bool ok = false;
            for (const char* a : allowed)
                if (k == a) ok = true;
            if (!ok)
                throw ConfigError(std::string("attack '") + s.label() +
                                  "': unknown parameter '" + k + "'");
        }
    };
    switch (s.kind) {
        case AttackKind::identity: only({}); break;
        case AttackKind::blur:
            only({"radius"});
            if (!(s.param("radius", 4.0) > 0.0)) throw ConfigError("blur radius must be > 0");
            break;
        case AttackKind::noise:
            only({"intensity"});
            if (s.param("intensity", 0.10) < 0.0)
                throw ConfigError("noise intensity must be >= 0");
            if (!s.seed) throw ConfigError("noise attack needs a seed");
            break;
        case AttackKind::jpeg: {
            only({"quality"});
            const double q = s.param("quality", 25.0);
            if (q < 1 || q > 100) throw ConfigError("jpeg quality must be 1..100");
            break;
        }
        case AttackKind::brightness:
            only({"strength", "factor"});
            if (!s.has("factor") && !s.seed)
                throw ConfigError("random brightness needs a seed");
            break;
        case AttackKind::rotation:
            only({"degrees", "angle"});
            if (!s.has("angle") && !s.seed)
                throw ConfigError("random rotation needs a seed");
            break;
        case AttackKind::crop: {
            only({"keep"});
            const double k = s.param("keep", 0.75);
            if (!(k > 0.0 && k <= 1.0)) throw ConfigError("crop keep must be in (0,1]");
            break;
        }
        case AttackKind::regenerate:
            only({"t"});
            break;
    }
}

} // namespace detail

inline Grid apply_attack(const Grid& x, const AttackSpec& spec,
                         const AttackContext& ctx = {}) {
    detail::validate_params(spec);
    switch (spec.kind) {
        case AttackKind::identity:
            return x;
        case AttackKind::blur:
            return convolve_gaussian(x, spec.param("radius", 4.0));
        case AttackKind::noise: {
            const double sigma = spec.param("intensity", 0.10); // of unit dynamic range
            Rng rng(*spec.seed);
            Grid out = x;
            for (double& v : out.data) v += sigma * rng.normal();
            return out;
        }
        case AttackKind::jpeg:
            return block_dct_quantize(detail::clamp_unit(x),
                                      static_cast<int>(spec.param("quality", 25.0)));
        case AttackKind::brightness: {
            double f;
            if (spec.has("factor")) {
                f = spec.param("factor", 1.0);
            } else {
                const double b = spec.param("strength", 6.0);
                Rng rng(*spec.seed);
                f = rng.uniform(std::max(0.0, 1.0 - b), 1.0 + b);
            }
            if (f < 0.0) throw ConfigError("brightness factor must be >= 0");
            Grid out = detail::clamp_unit(x);
            for (double& v : out.data) v = std::clamp(f * v, 0.0, 1.0);
            return out;
        }
        case AttackKind::rotation: {
            double angle;
            if (spec.has("angle")) {
                angle = spec.param("angle", 0.0);
            } else {
                // fixed magnitude, random sign
                const double mag = spec.param("degrees", 75.0);
                Rng rng(*spec.seed);
                angle = rng.uniform() < 0.5 ? mag : -mag;
            }
            return rotate_bilinear(x, angle);
        }
        case AttackKind::crop:
            return crop_rescale(x, spec.param("keep", 0.75));
        case AttackKind::regenerate: {
            if (!ctx.denoiser || !ctx.schedule)
                throw ConfigError("regenerate attack needs a denoiser context");
            const int t_r = static_cast<int>(spec.param("t", 200.0));
            if (!ctx.schedule->on_ladder(t_r) || t_r < 1)
                throw ConfigError("regenerate t must be a positive ladder timestep");
            if (!spec.seed) throw ConfigError("regenerate attack needs a seed");
            Rng rng(*spec.seed);
            Grid val = from_unit_range(x);
            Grid noise = rng.normal_grid(val.height, val.width, val.channels);
            Grid xt = forward_diffuse(val, t_r, noise, *ctx.schedule);
            // denoise back with null condition along the ladder tail
            const auto ladder = ctx.schedule->ladder();
            for (size_t i = 0; i + 1 < ladder.size(); ++i) {
                const int t = ladder[i], tp = ladder[i + 1];
                if (t > t_r) continue;
                const Grid eps = ctx.denoiser->predict(xt, t, nullptr);
                xt = ddim_step(xt, t, tp, eps, *ctx.schedule).first;
            }
            return to_unit_range(xt);
        }
    }
    throw ConfigError("unhandled attack kind");
}

// apply in list order
inline Grid compose_attacks(const Grid& x, const std::vector<AttackSpec>& specs,
                            const AttackContext& ctx = {}) {
    if (specs.empty()) throw ConfigError("compose: empty attack list");
    if (specs.size() > 6) throw ConfigError("compose: at most 6 attacks");
    Grid out = x;
    for (const auto& s : specs) out = apply_attack(out, s, ctx);
    return out;
}

// Table-3 protocol helper: k distinct kinds drawn uniformly from the
// six-attack suite, stochastic members re-seeded from the combo seed.
inline std::vector<AttackSpec> sample_attack_combo(int k, uint64_t seed) {
    if (k < 1 || k > 6) throw ConfigError("combo size must be 1..6");
    std::vector<AttackSpec> pool = stock_attacks();
    Rng rng(seed);
    std::vector<AttackSpec> out;
    for (int i = 0; i < k; ++i) {
        const size_t j = static_cast<size_t>(rng.uniform_index(pool.size()));
        AttackSpec s = pool[j];
        pool.erase(pool.begin() + static_cast<long>(j));
        if (s.seed) s.seed = rng.next_u64();
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace ringmark
