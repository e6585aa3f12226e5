#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "ringmark/errors.hpp"

namespace ringmark {

using cplx = std::complex<double>;

// Dense real field, row-major (y, x, channel), 64-bit values. Plays the role
// of images and diffusion states alike.
struct Grid {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<double> data;

    Grid() = default;
    Grid(int h, int w, int c = 1, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<size_t>(h) * w * c, fill) {
        if (h <= 0 || w <= 0 || c <= 0)
            throw DimensionError("grid dimensions must be positive");
    }

    double& at(int y, int x, int c = 0) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c = 0) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    size_t size() const { return data.size(); }
    bool same_shape(const Grid& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    Grid channel(int c) const {
        Grid out(height, width, 1);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                out.at(y, x) = at(y, x, c);
        return out;
    }
    void set_channel(int c, const Grid& src) {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                at(y, x, c) = src.at(y, x);
    }

    double min() const {
        double m = data.empty() ? 0.0 : data[0];
        for (double v : data) m = std::min(m, v);
        return m;
    }
    double max() const {
        double m = data.empty() ? 0.0 : data[0];
        for (double v : data) m = std::max(m, v);
        return m;
    }
    double mean() const {
        double s = 0.0;
        for (double v : data) s += v;
        return data.empty() ? 0.0 : s / static_cast<double>(data.size());
    }
    double channel_mean(int c) const {
        double s = 0.0;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) s += at(y, x, c);
        return s / (static_cast<double>(height) * width);
    }
    double norm2() const {
        double s = 0.0;
        for (double v : data) s += v * v;
        return std::sqrt(s);
    }
};

// Centered complex spectrum: DC sits at (H/2, W/2).
struct SpectrumGrid {
    int height = 0;
    int width = 0;
    std::vector<std::complex<double>> data;

    SpectrumGrid() = default;
    SpectrumGrid(int h, int w)
        : height(h), width(w), data(static_cast<size_t>(h) * w) {}

    std::complex<double>& at(int r, int c) {
        return data[static_cast<size_t>(r) * width + c];
    }
    std::complex<double> at(int r, int c) const {
        return data[static_cast<size_t>(r) * width + c];
    }

    // conjugate-mirror partner of a centered bin
    std::pair<int, int> mirror(int r, int c) const {
        return {(height - r) % height, (width - c) % width};
    }
    double max_magnitude() const {
        double m = 0.0;
        for (const auto& z : data) m = std::max(m, std::abs(z));
        return m;
    }
};

inline void check_finite(const Grid& g, const char* where) {
    for (double v : g.data)
        if (!std::isfinite(v))
            throw std::runtime_error(std::string("non-finite value after ") + where);
}

// elementwise helpers used all over the sampler and optimizer
inline Grid operator+(const Grid& a, const Grid& b) {
    Grid out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}
inline Grid operator-(const Grid& a, const Grid& b) {
    Grid out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}
inline Grid operator*(double s, const Grid& g) {
    Grid out = g;
    for (double& v : out.data) v *= s;
    return out;
}
inline Grid& operator+=(Grid& a, const Grid& b) {
    for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
    return a;
}
inline double dot(const Grid& a, const Grid& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}
inline double mse(const Grid& a, const Grid& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s / static_cast<double>(a.data.size());
}
inline double max_abs_diff(const Grid& a, const Grid& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

} // namespace ringmark
