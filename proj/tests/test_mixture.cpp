#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ringmark/mixture.hpp"
#include "test_helpers.hpp"

using namespace ringmark;

namespace {
const NoiseSchedule& sched() {
    static const auto s = NoiseSchedule::linear(1000, 1e-4, 0.02, 50);
    return s;
}
} // namespace

TEST_CASE("single-component epsilon is affine in x") {
    MixtureModel m(1, 0.7, 16);
    Rng rng(1);
    const Grid x = oracle::random_grid(rng, 16, 16);
    const int t = 400;
    const double ab = sched().alpha_bar(t);
    const double s2 = ab * 0.49 + (1.0 - ab);
    const Grid eps = m.epsilon(x, t, sched(), nullptr);
    for (int y = 0; y < 16; ++y)
        for (int c = 0; c < 16; ++c) {
            const double expect = std::sqrt(1.0 - ab) *
                                  (x.at(y, c) - std::sqrt(ab) * m.mean(0).at(y, c)) / s2;
            REQUIRE_THAT(eps.at(y, c), Catch::Matchers::WithinAbs(expect, 1e-12));
        }
}

TEST_CASE("null conditioning equals log-prior logits with zero bias") {
    MixtureModel m(3, 0.7, 16, 1.0, {0.5, 0.3, 0.2});
    Rng rng(2);
    const Grid x = oracle::random_grid(rng, 16, 16);
    const Conditioning null_emb = m.null_embedding();
    const Grid a = m.epsilon(x, 500, sched(), nullptr);
    const Grid b = m.epsilon(x, 500, sched(), &null_emb);
    CHECK(max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("epsilon equals the scaled mixture score (finite differences)") {
    // explicit mixture density as the independent oracle
    MixtureModel m(3, 0.7, 16, 1.0, {0.5, 0.3, 0.2});
    const int t = 500;
    const double ab = sched().alpha_bar(t);
    const double s2 = ab * 0.49 + (1.0 - ab);
    const double sa = std::sqrt(ab);

    auto log_density = [&](const Grid& x) {
        double mx = -1e300;
        std::vector<double> lg(3);
        for (int k = 0; k < 3; ++k) {
            double d2 = 0.0;
            for (size_t i = 0; i < x.data.size(); ++i) {
                const double d = x.data[i] - sa * m.mean(k).data[i];
                d2 += d * d;
            }
            lg[k] = std::log(m.priors()[k]) - d2 / (2.0 * s2);
            mx = std::max(mx, lg[k]);
        }
        double acc = 0.0;
        for (double v : lg) acc += std::exp(v - mx);
        return mx + std::log(acc);
    };

    Rng rng(3);
    Grid x = oracle::random_grid(rng, 16, 16);
    const Grid eps = m.epsilon(x, t, sched(), nullptr);
    const double h = 1e-5;
    for (int probe = 0; probe < 50; ++probe) {
        const int y = static_cast<int>(rng.uniform_index(16));
        const int c = static_cast<int>(rng.uniform_index(16));
        Grid xp = x, xm = x;
        xp.at(y, c) += h;
        xm.at(y, c) -= h;
        const double score = (log_density(xp) - log_density(xm)) / (2.0 * h);
        const double expect = -std::sqrt(1.0 - ab) * score;
        REQUIRE_THAT(eps.at(y, c),
                     Catch::Matchers::WithinAbs(expect, 1e-4 * std::abs(expect) + 1e-6));
    }
}

TEST_CASE("vjp trivial cases") {
    MixtureModel m(1, 0.7, 16);
    Rng rng(4);
    const Grid x = oracle::random_grid(rng, 16, 16);
    const Grid v = oracle::random_grid(rng, 16, 16);
    const int t = 300;
    const double ab = sched().alpha_bar(t);
    const double s2 = ab * 0.49 + (1.0 - ab);

    // K = 1: d(eps)/dx is the constant scalar sqrt(1-ab)/s2
    const VjpResult r = m.epsilon_vjp(x, t, sched(), nullptr, v);
    const double scalar = std::sqrt(1.0 - ab) / s2;
    CHECK(max_abs_diff(r.x, scalar * v) < 1e-10);

    const Grid zero(16, 16);
    const VjpResult rz = m.epsilon_vjp(x, t, sched(), nullptr, zero);
    CHECK(rz.x.norm2() == 0.0);
}

TEST_CASE("vjp matches central finite differences") {
    MixtureModel m(3, 0.7, 16, 1.0, {0.5, 0.3, 0.2});
    Rng rng(5);
    const Grid x = oracle::random_grid(rng, 16, 16);
    Conditioning cond = m.one_hot(1);
    for (double& b : cond.bias_coeffs) b = 0.1 * rng.normal();
    const Grid v = oracle::random_grid(rng, 16, 16);
    const int t = 240;
    const VjpResult r = m.epsilon_vjp(x, t, sched(), &cond, v);
    const double h = 1e-5;

    for (int probe = 0; probe < 20; ++probe) {
        const int y = static_cast<int>(rng.uniform_index(16));
        const int c = static_cast<int>(rng.uniform_index(16));
        Grid xp = x, xm = x;
        xp.at(y, c) += h;
        xm.at(y, c) -= h;
        const double fd =
            dot(m.epsilon(xp, t, sched(), &cond) - m.epsilon(xm, t, sched(), &cond), v) /
            (2.0 * h);
        REQUIRE_THAT(r.x.at(y, c),
                     Catch::Matchers::WithinAbs(fd, 1e-5 * std::abs(fd) + 1e-7));
    }
    for (size_t j = 0; j < cond.logits.size(); ++j) {
        Conditioning cp = cond, cm = cond;
        cp.logits[j] += h;
        cm.logits[j] -= h;
        const double fd =
            dot(m.epsilon(x, t, sched(), &cp) - m.epsilon(x, t, sched(), &cm), v) /
            (2.0 * h);
        REQUIRE_THAT(r.cond.logits[j],
                     Catch::Matchers::WithinAbs(fd, 1e-5 * std::abs(fd) + 1e-7));
    }
    for (size_t j = 0; j < cond.bias_coeffs.size(); ++j) {
        Conditioning cp = cond, cm = cond;
        cp.bias_coeffs[j] += h;
        cm.bias_coeffs[j] -= h;
        const double fd =
            dot(m.epsilon(x, t, sched(), &cp) - m.epsilon(x, t, sched(), &cm), v) /
            (2.0 * h);
        REQUIRE_THAT(r.cond.bias_coeffs[j],
                     Catch::Matchers::WithinAbs(fd, 1e-5 * std::abs(fd) + 1e-7));
    }
}

TEST_CASE("one-hot conditioning reproduces the single component") {
    // prompt fidelity holds on the conditioned component's own marginal,
    // where the likelihood does not fight the prior
    MixtureModel m4(4, 0.7, 32);
    MixtureModel m1(1, 0.7, 32);
    Rng rng(6);
    const Conditioning hard = m4.one_hot(0);
    for (int t : {240, 500, 900}) {
        const double ab = sched().alpha_bar(t);
        Grid x = m4.mean(0);
        for (double& v : x.data)
            v = std::sqrt(ab) * v +
                std::sqrt(ab * 0.49 + (1.0 - ab)) * rng.normal();
        const Grid a = m4.epsilon(x, t, sched(), &hard);
        const Grid b = m1.epsilon(x, t, sched(), nullptr);
        REQUIRE(max_abs_diff(a, b) < 1e-6);
    }
}

TEST_CASE("dataset sampling: exact means at sigma0 = 0") {
    MixtureModel m(2, 0.0, 16);
    const auto data = m.sample_dataset(8, 99);
    for (const auto& [x, k] : data) CHECK(max_abs_diff(x, m.mean(k)) == 0.0);
}

TEST_CASE("dataset component counts stay within the binomial bound") {
    MixtureModel m(2, 0.3, 16);
    const auto data = m.sample_dataset(1000, 1234);
    int c0 = 0;
    for (const auto& [x, k] : data) c0 += k == 0 ? 1 : 0;
    const double sigma = std::sqrt(1000 * 0.25);
    CHECK(std::abs(c0 - 500.0) <= 3.0 * sigma);
}

TEST_CASE("dataset sampling is deterministic per seed") {
    MixtureModel m(4, 0.7, 16);
    const auto a = m.sample_dataset(5, 777);
    const auto b = m.sample_dataset(5, 777);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].second == b[i].second);
        CHECK(a[i].first.data == b[i].first.data);
    }
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(MixtureModel(0, 0.7, 16), ConfigError);
    CHECK_THROWS_AS(MixtureModel(2, -0.1, 16), ConfigError);
    CHECK_THROWS_AS(MixtureModel(2, 0.7, 16, 1.0, {0.9, 0.2}), ConfigError);
}
