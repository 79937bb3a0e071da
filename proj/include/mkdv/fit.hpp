#pragma once

// Small least-squares and series helpers shared by the diagnostics.

#include "mkdv/error.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace mkdv::fit {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double rms_residual = 0.0;
    std::size_t count = 0;
};

/// Weighted least squares y ~ a + b x. Weights default to 1.
inline LineFit line(std::span<const double> x, std::span<const double> y, std::span<const double> w = {}) {
    const std::size_t n = x.size();
    if (n != y.size() || (!w.empty() && w.size() != n)) throw DomainError("fit::line: size mismatch");
    if (n < 2) throw DomainError("fit::line: need at least two points");
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        sw += wi;
        sx += wi * x[i];
        sy += wi * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        sxx += wi * (x[i] - mx) * (x[i] - mx);
        sxy += wi * (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw DomainError("fit::line: abscissae are degenerate");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.count = n;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        const double r = y[i] - f.intercept - f.slope * x[i];
        ssr += wi * r * r;
    }
    f.rms_residual = std::sqrt(ssr / sw);
    if (n > 2) f.slope_stderr = std::sqrt(ssr / (static_cast<double>(n) - 2.0) / sxx);
    return f;
}

/// Slope of log y against log x over strictly positive samples.
inline LineFit loglog(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    return line(lx, ly);
}

/// Removes 2 pi jumps so that successive increments lie in (-pi, pi].
inline std::vector<double> unwrap(std::span<const double> phase) {
    std::vector<double> out(phase.begin(), phase.end());
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 1; i < out.size(); ++i) {
        double d = phase[i] - phase[i - 1];
        d -= two_pi * std::round(d / two_pi);
        out[i] = out[i - 1] + d;
    }
    return out;
}

inline double correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw DomainError("fit::correlation: size mismatch");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

/// Geometric ladder t_i = t_start r^i up to and including t_end.
inline std::vector<double> geometric_times(double t_start, double t_end, double ratio) {
    if (!(t_start > 0.0) || !(t_end >= t_start) || !(ratio > 1.0))
        throw DomainError("geometric_times: need 0 < t_start <= t_end and ratio > 1");
    std::vector<double> t;
    for (double s = t_start; s < t_end * (1.0 - 1e-12); s *= ratio) t.push_back(s);
    t.push_back(t_end);
    return t;
}

/// Linear interpolation on a uniform table; nullopt-free, caller checks range.
inline double lerp_uniform(std::span<const double> values, double x0, double dx, double x) {
    const double s = (x - x0) / dx;
    const auto n = values.size();
    if (s <= 0.0) return values.front();
    if (s >= static_cast<double>(n - 1)) return values.back();
    const auto i = static_cast<std::size_t>(s);
    const double f = s - static_cast<double>(i);
    return values[i] * (1.0 - f) + values[i + 1] * f;
}

}  // namespace mkdv::fit
