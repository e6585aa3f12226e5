#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ringmark/grid.hpp"

namespace ringmark {

// splitmix64 finalizer; used to whiten sub-seed derivations
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Master-seed fan-out: every parallel stream (image index, dataset draw,
// attack instance) gets sub_seed(master, stream_id) so results do not depend
// on worker count or scheduling.
inline uint64_t sub_seed(uint64_t master, uint64_t stream_id) {
    return splitmix64(master ^ splitmix64(stream_id));
}

// Deterministic RNG. mt19937_64 is bit-exact across platforms; the normal
// sampler is a polar Box-Muller written out here because the std
// distributions are implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t uniform_index(uint64_t n) {
        // rejection sampling to kill modulo bias
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do { v = eng_(); } while (v >= limit);
        return v % n;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    Grid normal_grid(int h, int w, int c = 1) {
        Grid g(h, w, c);
        for (double& x : g.data) x = normal();
        return g;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace ringmark
