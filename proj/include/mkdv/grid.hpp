#pragma once

// Periodic spectral discretization of the real line.
//
// Conventions: the box is [-L, L) with n nodes x_j = -L + j*dx. Spectra are
// stored in half-complex (r2c) order m = 0..n/2, k_m = pi*m/L, and scaled so
// that u_hat(k) approximates the continuum transform  int u(x) e^{-i x k} dx.
// The inverse is (1/2L) sum_k u_hat(k) e^{i k x}, i.e. a Riemann sum for
// (1/2pi) int u_hat e^{i x xi} d xi.

#include "mkdv/error.hpp"
#include "mkdv/fft.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace mkdv {

using cplx = std::complex<double>;

/// The sign sigma in u_t + u_xxx/3 = sigma (u^3)_x. Only +1 and -1 exist.
class Sign {
public:
    explicit Sign(int s) : s_(s) {
        if (s != 1 && s != -1) throw DomainError("sigma must be +1 or -1");
    }
    static Sign plus() { return Sign(1); }
    static Sign minus() { return Sign(-1); }

    int value() const noexcept { return s_; }
    double real() const noexcept { return static_cast<double>(s_); }
    bool operator==(const Sign&) const = default;

private:
    int s_;
};

class Grid {
public:
    Grid(double half_width, std::size_t n) : L_(half_width), n_(n) {
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw DomainError("grid half-width must be positive and finite");
        if (n < 16 || (n & (n - 1)) != 0)
            throw DomainError("grid size must be a power of two >= 16, got " + std::to_string(n));
        dx_ = 2.0 * L_ / static_cast<double>(n_);
    }

    double half_width() const noexcept { return L_; }
    std::size_t size() const noexcept { return n_; }
    std::size_t spectrum_size() const noexcept { return n_ / 2 + 1; }
    double dx() const noexcept { return dx_; }
    double x(std::size_t j) const noexcept { return -L_ + static_cast<double>(j) * dx_; }

    /// Wavenumber of half-complex slot m (m = n/2 is the unpaired Nyquist mode).
    double k(std::size_t m) const noexcept { return std::numbers::pi * static_cast<double>(m) / L_; }
    double k_nyquist() const noexcept { return k(n_ / 2); }

    /// Full signed ladder k_j = pi j / L, j = -n/2 .. n/2-1, in ascending order.
    std::vector<double> wavenumbers() const {
        std::vector<double> out(n_);
        for (std::size_t i = 0; i < n_; ++i)
            out[i] = std::numbers::pi * (static_cast<double>(i) - static_cast<double>(n_ / 2)) / L_;
        return out;
    }

    std::vector<double> nodes() const {
        std::vector<double> out(n_);
        for (std::size_t j = 0; j < n_; ++j) out[j] = x(j);
        return out;
    }

    /// Per-thread transform plan for this grid size.
    fft::RealPlan& plan() const {
        thread_local std::map<std::size_t, std::unique_ptr<fft::RealPlan>> cache;
        auto& slot = cache[n_];
        if (!slot) slot = std::make_unique<fft::RealPlan>(n_);
        return *slot;
    }

private:
    double L_;
    std::size_t n_;
    double dx_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(double half_width, std::size_t n) {
    return std::make_shared<const Grid>(half_width, n);
}

/// Real field on a grid with a lazily computed spectrum.
class Field {
public:
    explicit Field(GridPtr g) : grid_(std::move(g)), u_(grid_->size(), 0.0) {}

    Field(GridPtr g, std::vector<double> samples) : grid_(std::move(g)), u_(std::move(samples)) {
        if (u_.size() != grid_->size()) throw DomainError("sample count does not match grid");
    }

    /// Builds a field from a (scaled) half-complex spectrum.
    static Field from_spectrum(GridPtr g, std::vector<cplx> spec) {
        if (spec.size() != g->spectrum_size()) throw DomainError("spectrum size does not match grid");
        Field f(g);
        std::vector<cplx> tmp(spec.size());
        const double scale = 1.0 / (2.0 * g->half_width());
        for (std::size_t m = 0; m < spec.size(); ++m) tmp[m] = spec[m] * (m % 2 ? -scale : scale);
        g->plan().backward(tmp, f.u_);
        f.spec_ = std::move(spec);
        f.valid_ = true;
        return f;
    }

    const Grid& grid() const noexcept { return *grid_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }
    std::size_t size() const noexcept { return u_.size(); }

    std::span<const double> samples() const noexcept { return u_; }
    double operator[](std::size_t j) const noexcept { return u_[j]; }

    /// Mutable access; drops the cached spectrum.
    std::span<double> samples_mut() noexcept {
        valid_ = false;
        return u_;
    }

    bool spectrum_cached() const noexcept { return valid_; }

    /// Scaled half-complex spectrum, computed on first use.
    const std::vector<cplx>& spectrum() const {
        if (!valid_) {
            spec_.resize(grid_->spectrum_size());
            grid_->plan().forward(u_, spec_);
            const double dx = grid_->dx();
            for (std::size_t m = 0; m < spec_.size(); ++m) spec_[m] *= (m % 2 ? -dx : dx);
            valid_ = true;
        }
        return spec_;
    }

    /// Trigonometric interpolant at an arbitrary (periodically wrapped) position.
    double evaluate_at(double x) const {
        const auto& s = spectrum();
        const std::size_t half = grid_->size() / 2;
        const double L = grid_->half_width();
        double acc = s[0].real();
        for (std::size_t m = 1; m < half; ++m) {
            const double kx = grid_->k(m) * x;
            acc += 2.0 * (s[m].real() * std::cos(kx) - s[m].imag() * std::sin(kx));
        }
        acc += s[half].real() * std::cos(grid_->k(half) * x);
        return acc / (2.0 * L);
    }

private:
    GridPtr grid_;
    std::vector<double> u_;
    mutable std::vector<cplx> spec_;
    mutable bool valid_ = false;
};

inline Field to_spectrum(const Field& f) {
    Field out = f;
    (void)out.spectrum();
    return out;
}

inline Field from_spectrum(const Field& f) {
    return Field::from_spectrum(f.grid_ptr(), f.spectrum());
}

/// Applies a per-mode multiplier m -> factor(m, k_m) to the spectrum.
template <class Multiplier>
Field apply_multiplier(const Field& f, Multiplier&& factor) {
    std::vector<cplx> s = f.spectrum();
    const Grid& g = f.grid();
    for (std::size_t m = 0; m < s.size(); ++m) s[m] *= factor(m, g.k(m));
    return Field::from_spectrum(f.grid_ptr(), std::move(s));
}

/// Exact linear KdV flow S(t): multiplier e^{i t k^3 / 3}. The unpaired
/// Nyquist mode has no real-valued rotation and is left unchanged.
inline Field airy_propagate(const Field& f, double t) {
    if (t == 0.0) return f;
    const std::size_t nyq = f.grid().size() / 2;
    return apply_multiplier(f, [&](std::size_t m, double k) -> cplx {
        if (m == nyq) return 1.0;
        return std::polar(1.0, t * k * k * k / 3.0);
    });
}

/// Multiplier (ik)^order for order 1..3; odd orders zero the Nyquist mode.
inline Field spectral_derivative(const Field& f, int order) {
    if (order < 1 || order > 3) throw DomainError("spectral derivative order must be 1, 2 or 3");
    const std::size_t nyq = f.grid().size() / 2;
    return apply_multiplier(f, [&](std::size_t m, double k) -> cplx {
        if (m == nyq && order % 2 == 1) return 0.0;
        return std::pow(cplx(0.0, k), order);
    });
}

/// 2/3-rule cutoff wavenumber.
inline double dealias_cutoff(const Grid& g) { return 2.0 / 3.0 * g.k_nyquist(); }

inline Field dealias(const Field& f) {
    const double kc = dealias_cutoff(f.grid());
    return apply_multiplier(f, [&](std::size_t, double k) -> cplx { return k > kc ? 0.0 : 1.0; });
}

struct ConservedTriple {
    double E0 = 0.0;  ///< int u dx
    double E1 = 0.0;  ///< int u^2 dx
    double E2 = 0.0;  ///< int u_x^2 + (3/2) sigma u^4 dx
};

inline ConservedTriple conserved(const Field& f, Sign sigma) {
    const double dx = f.grid().dx();
    const Field ux = spectral_derivative(f, 1);
    ConservedTriple c;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double u = f[j];
        const double u2 = u * u;
        c.E0 += u;
        c.E1 += u2;
        c.E2 += ux[j] * ux[j] + 1.5 * sigma.real() * u2 * u2;
    }
    c.E0 *= dx;
    c.E1 *= dx;
    c.E2 *= dx;
    return c;
}

inline double norm_l2(const Field& f) {
    double s = 0.0;
    for (double v : f.samples()) s += v * v;
    return std::sqrt(s * f.grid().dx());
}

inline double norm_inf(const Field& f) {
    double s = 0.0;
    for (double v : f.samples()) {
        if (std::isnan(v)) return v;
        s = std::max(s, std::abs(v));
    }
    return s;
}

/// Pointwise combination a*f + b*g on a shared grid.
inline Field axpby(double a, const Field& f, double b, const Field& g) {
    if (f.size() != g.size()) throw DomainError("fields live on different grids");
    std::vector<double> out(f.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = a * f[j] + b * g[j];
    return Field(f.grid_ptr(), std::move(out));
}

/// Samples a callable on the grid nodes.
template <class Fn>
Field sample(GridPtr g, Fn&& fn) {
    std::vector<double> out(g->size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = fn(g->x(j));
    return Field(std::move(g), std::move(out));
}

/// Reflection x -> -x on the grid (node j maps to node n-j mod n).
inline Field reflect(const Field& f) {
    const std::size_t n = f.size();
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = f[(n - j) % n];
    return Field(f.grid_ptr(), std::move(out));
}

}  // namespace mkdv
