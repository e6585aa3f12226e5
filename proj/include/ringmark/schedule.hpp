#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "ringmark/errors.hpp"

namespace ringmark {

// Variance schedule plus the sampler's timestep ladder. alpha_bar(0) == 1 by
// convention; the ladder is S+1 strictly decreasing timesteps from T to 0.
class NoiseSchedule {
public:
    static NoiseSchedule linear(int total_steps, double beta_start, double beta_end,
                                int sampler_steps) {
        if (total_steps < 2) throw ConfigError("total_steps must be >= 2");
        if (!(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0))
            throw ConfigError("need 0 < beta_start < beta_end < 1");
        if (sampler_steps < 1 || sampler_steps > total_steps)
            throw ConfigError("sampler_steps out of range");
        NoiseSchedule s;
        s.total_steps_ = total_steps;
        s.beta_start_ = beta_start;
        s.beta_end_ = beta_end;
        s.beta_.resize(total_steps);
        s.alpha_bar_.resize(total_steps);
        double prod = 1.0;
        for (int t = 1; t <= total_steps; ++t) {
            const double b = beta_start + (beta_end - beta_start) *
                                              static_cast<double>(t - 1) /
                                              static_cast<double>(total_steps - 1);
            s.beta_[t - 1] = b;
            prod *= 1.0 - b;
            s.alpha_bar_[t - 1] = prod;
        }
        s.set_sampler_steps(sampler_steps);
        return s;
    }

    int total_steps() const { return total_steps_; }
    int sampler_steps() const { return sampler_steps_; }

    double beta(int t) const {
        if (t < 1 || t > total_steps_) throw ConfigError("beta: t out of range");
        return beta_[t - 1];
    }
    double alpha_bar(int t) const {
        if (t == 0) return 1.0;
        if (t < 1 || t > total_steps_) throw ConfigError("alpha_bar: t out of range");
        return alpha_bar_[t - 1];
    }

    std::span<const int> ladder() const { return ladder_; }

    bool on_ladder(int t) const {
        for (int v : ladder_)
            if (v == t) return true;
        return false;
    }
    bool on_ladder_interior(int t) const {
        return t != total_steps_ && t != 0 && on_ladder(t);
    }

    // same betas, different ladder resolution
    NoiseSchedule with_sampler_steps(int steps) const {
        NoiseSchedule s = *this;
        s.set_sampler_steps(steps);
        return s;
    }

    // ladder timesteps within [lo, hi], descending
    std::vector<int> ladder_window(int lo, int hi) const {
        std::vector<int> out;
        for (int t : ladder_)
            if (t >= lo && t <= hi) out.push_back(t);
        return out;
    }

    // FNV-1a over the defining parameters; artifacts refuse to verify against
    // a different schedule.
    std::string fingerprint() const {
        char buf[128];
        std::snprintf(buf, sizeof buf, "T=%d;b0=%.17g;b1=%.17g;S=%d", total_steps_,
                      beta_start_, beta_end_, sampler_steps_);
        uint64_t h = 1469598103934665603ULL;
        for (const char* p = buf; *p; ++p) {
            h ^= static_cast<unsigned char>(*p);
            h *= 1099511628211ULL;
        }
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
        return hex;
    }

    double beta_start() const { return beta_start_; }
    double beta_end() const { return beta_end_; }

private:
    void set_sampler_steps(int steps) {
        sampler_steps_ = steps;
        ladder_.resize(steps + 1);
        for (int i = 0; i <= steps; ++i)
            ladder_[i] = static_cast<int>(std::lround(
                static_cast<double>(total_steps_) * (steps - i) / steps));
        for (int i = 0; i + 1 <= steps; ++i)
            if (ladder_[i] <= ladder_[i + 1])
                throw ConfigError("ladder not strictly decreasing; too many sampler steps");
    }

    int total_steps_ = 0;
    int sampler_steps_ = 0;
    double beta_start_ = 0.0, beta_end_ = 0.0;
    std::vector<double> beta_;
    std::vector<double> alpha_bar_;
    std::vector<int> ladder_;
};

} // namespace ringmark
