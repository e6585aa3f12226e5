#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ringmark/optimizer.hpp"
#include "ringmark/serialize.hpp"
#include "test_helpers.hpp"

using namespace ringmark;

namespace {

const NoiseSchedule& sched() {
    static const auto s = NoiseSchedule::linear(1000, 1e-4, 0.02, 50);
    return s;
}
const MixtureModel& model() {
    static const MixtureModel m(4, 0.7, 32);
    return m;
}
const std::vector<std::pair<Grid, int>>& dataset() {
    static const auto d = model().sample_dataset(20, 42);
    return d;
}
OptimizeResult run(OptimizerConfig cfg, uint64_t seed = 9) {
    const RingMask mask = build_ring_mask(32, 32, 0.70);
    return optimize(model(), sched(), dataset(), mask, cfg, {7.5, 1.0}, 240, seed);
}

} // namespace

TEST_CASE("all-zero weights leave the parameters untouched") {
    OptimizerConfig cfg;
    cfg.ret_weight = 0.0;
    cfg.cons_weight = 0.0;
    cfg.norm_weight = 0.0;
    cfg.rounds = 1;
    const auto one = run(cfg);
    cfg.rounds = 6;
    const auto six = run(cfg);
    CHECK(one.artifact.pattern.ring_values() == six.artifact.pattern.ring_values());
    CHECK(one.artifact.w_p.logits == six.artifact.w_p.logits);
    CHECK(one.artifact.w_p.bias_coeffs == six.artifact.w_p.bias_coeffs);
}

TEST_CASE("pure norm reward grows the watermark every round") {
    OptimizerConfig cfg;
    cfg.ret_weight = 0.0;
    cfg.cons_weight = 0.0;
    cfg.norm_weight = 0.005;
    cfg.rounds = 30;
    const auto res = run(cfg);
    for (size_t i = 1; i < res.log.size(); ++i)
        REQUIRE(res.log[i].w_norm > res.log[i - 1].w_norm);
}

TEST_CASE("full objective strengthens the watermark and the hiding works") {
    OptimizerConfig cfg;
    cfg.rounds = 300;
    const auto res = run(cfg);
    CHECK(res.log.back().w_norm > res.log.front().w_norm);

    // held-out batch: the optimized w_p must beat the null embedding on
    // retention at the same watermark
    const Conditioning null_emb = model().null_embedding();
    Rng rng(4242);
    double with_wp = 0.0, with_null = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto& [x0, k] = dataset()[i % dataset().size()];
        const Grid noise = rng.normal_grid(32, 32);
        const Grid x_t = forward_diffuse(x0, 240, noise, sched());
        const Grid x_star = inject(x_t, res.artifact.pattern);
        MixtureDenoiser d(model(), sched());
        const Conditioning cond = model().one_hot(k);
        with_wp += loss_ret(x_star, 240, x0, d, &cond, &res.artifact.w_p, {7.5, 1.0},
                            sched());
        with_null +=
            loss_ret(x_star, 240, x0, d, &cond, &null_emb, {7.5, 1.0}, sched());
    }
    INFO("held-out loss_ret with w_p " << with_wp / 20 << " vs null " << with_null / 20);
    CHECK(with_wp < with_null);
}

TEST_CASE("ring values stay ring-constant after every round") {
    OptimizerConfig cfg;
    cfg.rounds = 25;
    const auto res = run(cfg);
    const auto rv = res.artifact.pattern.ring_values();
    for (size_t i = 0; i < res.artifact.pattern.bin_values.size(); ++i)
        REQUIRE(res.artifact.pattern.bin_values[i] ==
                rv[res.artifact.pattern.mask.bins[i].ring]);
}

TEST_CASE("training stays stable over the final rounds") {
    OptimizerConfig cfg;
    cfg.rounds = 1000;
    const auto res = run(cfg);
    const int w = cfg.rounds / 5;
    double ma_prev = 0.0, ma_last = 0.0;
    for (int i = cfg.rounds - 2 * w; i < cfg.rounds - w; ++i)
        ma_prev += res.log[i].loss_ret;
    for (int i = cfg.rounds - w; i < cfg.rounds; ++i) ma_last += res.log[i].loss_ret;
    INFO("moving-average ratio " << ma_last / ma_prev);
    CHECK(ma_last <= 1.05 * ma_prev);
}

TEST_CASE("gradient steps match finite differences of the objective") {
    // one optimizer round's gradients, re-derived numerically
    const RingMask mask = build_ring_mask(32, 32, 0.3);
    MixtureDenoiser d(model(), sched());
    Rng rng(7);
    const auto& [x0, k] = dataset()[0];
    const Grid noise = rng.normal_grid(32, 32);
    const int t = 240;
    const Grid x_t = forward_diffuse(x0, t, noise, sched());
    const Conditioning cond = model().one_hot(k);
    Conditioning w_p = model().null_embedding();
    for (double& b : w_p.bias_coeffs) b = rng.normal();
    std::vector<cplx> rv(mask.ring_count());
    for (auto& v : rv) v = cplx(rng.normal(), rng.normal());

    const GuidanceConfig g{7.5, 1.0};
    auto objective = [&](const std::vector<cplx>& rings, const Conditioning& wp) {
        const Grid xs = inject(x_t, WatermarkPattern::from_ring_values(mask, rings));
        return loss_ret(xs, t, x0, d, &cond, &wp, g, sched()) +
               loss_cons(xs, t, d, &wp);
    };

    // analytic gradient via the optimizer's own path: alpha=beta=1, lambda=0
    const Grid x_star = inject(x_t, WatermarkPattern::from_ring_values(mask, rv));
    const Grid e_c = d.predict(x_star, t, &cond);
    const Grid e_wp = d.predict(x_star, t, &w_p);
    const Grid e_u = d.predict(x_star, t, nullptr);
    const double ab = sched().alpha_bar(t);
    const double sa = std::sqrt(ab), s1a = std::sqrt(1.0 - ab);
    Grid v0(32, 32), vd(32, 32);
    for (size_t i = 0; i < v0.data.size(); ++i) {
        const double e = g.eta1 * e_c.data[i] + g.eta2 * e_wp.data[i] +
                         (1.0 - g.eta1 - g.eta2) * e_u.data[i];
        const double pred = (x_star.data[i] - s1a * e) / sa;
        v0.data[i] = 2.0 / 1024.0 * (pred - x0.data[i]);
        vd.data[i] = 2.0 / 1024.0 * (e_wp.data[i] - e_u.data[i]);
    }
    const VjpResult j_c = d.vjp(x_star, t, &cond, v0);
    const VjpResult j_wp = d.vjp(x_star, t, &w_p, v0);
    const VjpResult j_u = d.vjp(x_star, t, nullptr, v0);
    const VjpResult j_wp2 = d.vjp(x_star, t, &w_p, vd);
    const VjpResult j_u2 = d.vjp(x_star, t, nullptr, vd);
    Grid gx(32, 32);
    for (size_t i = 0; i < gx.data.size(); ++i) {
        const double de = g.eta1 * j_c.x.data[i] + g.eta2 * j_wp.x.data[i] +
                          (1.0 - g.eta1 - g.eta2) * j_u.x.data[i];
        gx.data[i] = (v0.data[i] - s1a * de) / sa + (j_wp2.x.data[i] - j_u2.x.data[i]);
    }
    const auto gw = detail::inject_adjoint(gx, mask);

    // per-ring gradient = sum of bin gradients; check against FD on ring 0, 2
    const double h = 1e-5;
    for (int ring : {0, 2}) {
        cplx ring_grad(0.0, 0.0);
        for (size_t i = 0; i < mask.bins.size(); ++i)
            if (mask.bins[i].ring == ring) ring_grad += gw[i];
        auto bump = [&](cplx delta) {
            std::vector<cplx> r2 = rv;
            r2[ring] += delta;
            return objective(r2, w_p);
        };
        const double fd_re = (bump(cplx(h, 0)) - bump(cplx(-h, 0))) / (2 * h);
        const double fd_im = (bump(cplx(0, h)) - bump(cplx(0, -h))) / (2 * h);
        REQUIRE_THAT(ring_grad.real(),
                     Catch::Matchers::WithinAbs(fd_re, 1e-4 * std::abs(fd_re) + 1e-8));
        REQUIRE_THAT(ring_grad.imag(),
                     Catch::Matchers::WithinAbs(fd_im, 1e-4 * std::abs(fd_im) + 1e-8));
    }

    // w_p gradients
    const double cret = -s1a / sa * g.eta2;
    for (size_t jdx : {size_t(0), size_t(5)}) {
        const double analytic =
            cret * j_wp.cond.bias_coeffs[jdx] + j_wp2.cond.bias_coeffs[jdx];
        Conditioning wp_p = w_p, wp_m = w_p;
        wp_p.bias_coeffs[jdx] += h;
        wp_m.bias_coeffs[jdx] -= h;
        const double fd = (objective(rv, wp_p) - objective(rv, wp_m)) / (2 * h);
        REQUIRE_THAT(analytic,
                     Catch::Matchers::WithinAbs(fd, 1e-4 * std::abs(fd) + 1e-8));
    }
}

TEST_CASE("the divergence guard aborts runaway runs") {
    OptimizerConfig cfg;
    cfg.lr_wi = 1e9; // blows the watermark up immediately
    cfg.rounds = 200;
    CHECK_THROWS_AS(run(cfg), DivergenceError);
}

TEST_CASE("optimization is deterministic per seed") {
    OptimizerConfig cfg;
    cfg.rounds = 40;
    const auto a = run(cfg, 123);
    const auto b = run(cfg, 123);
    const auto c = run(cfg, 124);
    CHECK(artifact_to_json(a.artifact).dump() == artifact_to_json(b.artifact).dump());
    CHECK(artifact_to_json(a.artifact).dump() != artifact_to_json(c.artifact).dump());
}

TEST_CASE("momentum variant stays finite and differs from plain descent") {
    OptimizerConfig plain;
    plain.rounds = 30;
    OptimizerConfig heavy = plain;
    heavy.momentum = 0.9;
    const auto a = run(plain);
    const auto b = run(heavy);
    CHECK(a.artifact.pattern.ring_values() != b.artifact.pattern.ring_values());
    for (const cplx& v : b.artifact.pattern.ring_values())
        CHECK(std::isfinite(std::abs(v)));
}

TEST_CASE("empty dataset and empty window are rejected") {
    OptimizerConfig cfg;
    const RingMask mask = build_ring_mask(32, 32, 0.5);
    CHECK_THROWS_AS(
        optimize(model(), sched(), {}, mask, cfg, {7.5, 1.0}, 240, 1), ConfigError);
    cfg.t_window_lo = 201;
    cfg.t_window_hi = 219; // no ladder point inside
    CHECK_THROWS_AS(
        optimize(model(), sched(), dataset(), mask, cfg, {7.5, 1.0}, 240, 1),
        ConfigError);
}
