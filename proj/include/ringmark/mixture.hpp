#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "ringmark/dct.hpp"
#include "ringmark/denoiser.hpp"
#include "ringmark/rng.hpp"
#include "ringmark/schedule.hpp"

namespace ringmark {

// Closed-form Gaussian-mixture data model standing in for a pretrained
// text-to-image network. Component means are low-frequency DCT patterns
// ("semantics"); the conditioning space is component logits plus a bias
// field over the first n_bias DCT basis functions.
class MixtureModel {
public:
    static constexpr int kDefaultBias = 16;

    MixtureModel(int n_components, double sigma0, int size, double amplitude = 1.0,
                 std::vector<double> priors = {}, int n_bias = kDefaultBias)
        : k_(n_components), sigma0_(sigma0), size_(size), n_bias_(n_bias) {
        if (k_ < 1) throw ConfigError("mixture needs at least one component");
        if (sigma0 < 0.0) throw ConfigError("sigma0 must be non-negative");
        if (priors.empty()) priors.assign(k_, 1.0 / k_);
        if (static_cast<int>(priors.size()) != k_)
            throw ConfigError("priors size mismatch");
        double s = 0.0;
        for (double p : priors) s += p;
        if (std::abs(s - 1.0) > 1e-12) throw ConfigError("priors must sum to 1");
        priors_ = std::move(priors);
        log_priors_.resize(k_);
        for (int i = 0; i < k_; ++i) log_priors_[i] = std::log(priors_[i]);

        // means: non-DC low-frequency DCT patterns in zigzag order, peak
        // amplitude `amplitude`
        static const int kZig[][2] = {{0, 1}, {1, 0}, {1, 1}, {0, 2}, {2, 0},
                                      {1, 2}, {2, 1}, {0, 3}, {3, 0}, {2, 2},
                                      {1, 3}, {3, 1}, {2, 3}, {3, 2}, {3, 3}};
        if (k_ > static_cast<int>(sizeof(kZig) / sizeof(kZig[0])))
            throw ConfigError("too many mixture components for the mean catalogue");
        for (int i = 0; i < k_; ++i) {
            Grid m = dct_basis_field(kZig[i][0], kZig[i][1], size, size);
            double peak = 0.0;
            for (double v : m.data) peak = std::max(peak, std::abs(v));
            for (double& v : m.data) v *= amplitude / peak;
            means_.push_back(std::move(m));
        }
        for (int j = 0; j < n_bias_; ++j)
            bias_basis_.push_back(dct_basis_field(j / 4, j % 4, size, size));
        inv_sqrt_n_ = 1.0 / std::sqrt(static_cast<double>(size) * size);
    }

    int components() const { return k_; }
    int size() const { return size_; }
    int n_bias() const { return n_bias_; }
    double sigma0() const { return sigma0_; }
    const std::vector<double>& priors() const { return priors_; }
    const std::vector<double>& log_priors() const { return log_priors_; }
    const Grid& mean(int k) const { return means_[k]; }
    const Grid& bias_field(int j) const { return bias_basis_[j]; }

    Conditioning null_embedding() const {
        return Conditioning::null_embedding(log_priors_, n_bias_);
    }
    Conditioning one_hot(int k) const {
        return Conditioning::one_hot(k, k_, n_bias_);
    }

    // Noise prediction: the diffused marginal of component k is
    // N(sqrt(ab)*mu_k, s^2 I) with s^2 = ab*sigma0^2 + (1-ab); eps is
    // -sqrt(1-ab) times the score of the mixture, plus the conditioning
    // bias field.
    Grid epsilon(const Grid& x, int t, const NoiseSchedule& sched,
                 const Conditioning* cond) const {
        const double ab = sched.alpha_bar(t);
        const double sa = std::sqrt(ab);
        const double s1a = std::sqrt(std::max(0.0, 1.0 - ab));
        const double s2 = ab * sigma0_ * sigma0_ + (1.0 - ab);

        Grid eps(x.height, x.width, 1);
        if (t > 0) { // at t = 0 there is no noise left to predict
            std::vector<double> gamma = responsibilities(x, t, sched, cond);
            for (size_t i = 0; i < eps.data.size(); ++i) {
                double m = 0.0;
                for (int k = 0; k < k_; ++k) m += gamma[k] * means_[k].data[i];
                eps.data[i] = s1a * (x.data[i] - sa * m) / s2;
            }
        }
        if (cond)
            for (int j = 0; j < n_bias_; ++j) {
                const double c = cond->bias_coeffs[j] * inv_sqrt_n_;
                if (c == 0.0) continue;
                for (size_t i = 0; i < eps.data.size(); ++i)
                    eps.data[i] += c * bias_basis_[j].data[i];
            }
        return eps;
    }

    // Exact v^T d(eps)/dx and v^T d(eps)/d(cond) via the responsibility
    // Jacobian; matches central finite differences (tested property).
    VjpResult epsilon_vjp(const Grid& x, int t, const NoiseSchedule& sched,
                          const Conditioning* cond, const Grid& v) const {
        const double ab = sched.alpha_bar(t);
        const double sa = std::sqrt(ab);
        const double s1a = std::sqrt(std::max(0.0, 1.0 - ab));
        const double s2 = ab * sigma0_ * sigma0_ + (1.0 - ab);
        if (t == 0) { // epsilon is the bias field alone
            VjpResult out0;
            out0.x = Grid(x.height, x.width, 1);
            if (cond) {
                out0.cond.logits.assign(k_, 0.0);
                out0.cond.bias_coeffs.resize(n_bias_);
                for (int j = 0; j < n_bias_; ++j)
                    out0.cond.bias_coeffs[j] = dot(v, bias_basis_[j]) * inv_sqrt_n_;
            }
            return out0;
        }

        std::vector<double> gamma = responsibilities(x, t, sched, cond);
        std::vector<double> vmu(k_);
        for (int k = 0; k < k_; ++k) vmu[k] = dot(v, means_[k]);

        // v^T d(mean responsibility-average)/dx
        // d(gamma_k)/dx = gamma_k (g_k - gbar), g_k = -(x - sa*mu_k)/s2
        VjpResult out;
        out.x = Grid(x.height, x.width, 1);
        std::vector<double> a(k_);
        double a_sum = 0.0;
        for (int k = 0; k < k_; ++k) {
            a[k] = gamma[k] * vmu[k];
            a_sum += a[k];
        }
        for (size_t i = 0; i < out.x.data.size(); ++i) {
            double vdm = 0.0, gbar = 0.0;
            for (int k = 0; k < k_; ++k) {
                const double gk = -(x.data[i] - sa * means_[k].data[i]) / s2;
                vdm += a[k] * gk;
                gbar += gamma[k] * gk;
            }
            vdm -= a_sum * gbar;
            out.x.data[i] = s1a / s2 * (v.data[i] - sa * vdm);
        }
        if (cond) {
            // logits: through p = softmax(logits) entering the responsibility
            // prior; r_k = v . d(eps)/d(gamma_k)
            std::vector<double> p = softmax(cond->logits);
            std::vector<double> r(k_), q(k_);
            double gr = 0.0;
            for (int k = 0; k < k_; ++k) {
                r[k] = -s1a * sa / s2 * vmu[k];
                gr += gamma[k] * r[k];
            }
            double q_sum = 0.0;
            for (int k = 0; k < k_; ++k) {
                q[k] = gamma[k] * (r[k] - gr);
                q_sum += q[k];
            }
            out.cond.logits.resize(k_);
            for (int k = 0; k < k_; ++k) out.cond.logits[k] = q[k] - p[k] * q_sum;
            out.cond.bias_coeffs.resize(n_bias_);
            for (int j = 0; j < n_bias_; ++j)
                out.cond.bias_coeffs[j] = dot(v, bias_basis_[j]) * inv_sqrt_n_;
        }
        return out;
    }

    // x0 = mu_k + sigma0 * z with k drawn by the priors
    std::vector<std::pair<Grid, int>> sample_dataset(int n, uint64_t seed) const {
        if (n < 1) throw ConfigError("dataset size must be >= 1");
        std::vector<std::pair<Grid, int>> out;
        out.reserve(n);
        Rng rng(seed);
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform();
            int k = 0;
            double acc = 0.0;
            for (; k < k_ - 1; ++k) {
                acc += priors_[k];
                if (u < acc) break;
            }
            Grid x = means_[k];
            for (double& v : x.data) v += sigma0_ * rng.normal();
            out.emplace_back(std::move(x), k);
        }
        return out;
    }

    static std::vector<double> softmax(const std::vector<double>& z) {
        double mx = z[0];
        for (double v : z) mx = std::max(mx, v);
        std::vector<double> e(z.size());
        double s = 0.0;
        for (size_t i = 0; i < z.size(); ++i) {
            e[i] = std::exp(z[i] - mx);
            s += e[i];
        }
        for (double& v : e) v /= s;
        return e;
    }

private:
    std::vector<double> responsibilities(const Grid& x, int t,
                                         const NoiseSchedule& sched,
                                         const Conditioning* cond) const {
        const double ab = sched.alpha_bar(t);
        const double sa = std::sqrt(ab);
        const double s2 = ab * sigma0_ * sigma0_ + (1.0 - ab);
        std::vector<double> lg(k_);
        for (int k = 0; k < k_; ++k) {
            double d2 = 0.0;
            for (size_t i = 0; i < x.data.size(); ++i) {
                const double d = x.data[i] - sa * means_[k].data[i];
                d2 += d * d;
            }
            lg[k] = -d2 / (2.0 * s2);
        }
        if (cond) {
            std::vector<double> p = softmax(cond->logits);
            for (int k = 0; k < k_; ++k) lg[k] += std::log(p[k] + 1e-300);
        } else {
            for (int k = 0; k < k_; ++k) lg[k] += log_priors_[k];
        }
        return softmax(lg);
    }

    int k_;
    double sigma0_;
    int size_;
    int n_bias_;
    double inv_sqrt_n_;
    std::vector<double> priors_, log_priors_;
    std::vector<Grid> means_;
    std::vector<Grid> bias_basis_;
};

// Denoiser facade over a model + schedule pair
class MixtureDenoiser final : public Denoiser {
public:
    MixtureDenoiser(const MixtureModel& model, const NoiseSchedule& sched)
        : model_(model), sched_(sched) {}

    Grid predict(const Grid& x, int t, const Conditioning* cond) const override {
        return model_.epsilon(x, t, sched_, cond);
    }
    VjpResult vjp(const Grid& x, int t, const Conditioning* cond,
                  const Grid& v) const override {
        return model_.epsilon_vjp(x, t, sched_, cond, v);
    }

private:
    const MixtureModel& model_;
    const NoiseSchedule& sched_;
};

} // namespace ringmark
