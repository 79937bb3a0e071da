#pragma once

// Painleve II connection problem  y Q - Q_yy + 3 sigma Q^3 = 0.
// Integrates rightward from the oscillatory left asymptote and compares the
// decaying right tail with q_sigma(W) Ai(y).

#include "mkdv/error.hpp"
#include "mkdv/grid.hpp"
#include "mkdv/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace mkdv {

inline constexpr double left_asymptote_limit = -8.0;

/// Leading term of Q(y;W) for y <= -8 and its y-derivative. `phase_shift`
/// perturbs the phase and is used only by the shooting refinement.
inline std::pair<double, double> left_asymptote(double y, double W, Sign sigma, double phase_shift = 0.0) {
    if (y > left_asymptote_limit) throw DomainError("left_asymptote: y must be <= -8");
    if (W == 0.0) return {0.0, 0.0};
    const double pi = std::numbers::pi;
    const double a = -y;
    const double s = sigma.real();
    const double log_coef = 3.0 * s / (4.0 * pi) * W * W;
    const double alpha = -2.0 / 3.0 * a * std::sqrt(a) + pi / 4.0 + log_coef * 1.5 * std::log(a) +
                         s * special::theta_correction(W) + phase_shift;
    const double dalpha_da = -std::sqrt(a) + log_coef * 1.5 / a;
    const double amp = std::pow(a, -0.25) / std::sqrt(pi);
    const double q = amp * W * std::cos(alpha);
    const double dq_da = -0.25 / a * q - amp * W * std::sin(alpha) * dalpha_da;
    return {q, -dq_da};
}

struct PainleveOptions {
    double y_min = -40.0;
    double y_max = 6.0;
    double dy = 1e-3;
    bool shoot = true;  ///< refine the left phase so the Bi component vanishes at y = 3
    double shoot_point = 3.0;
};

struct PainleveSolution {
    double W = 0.0;
    Sign sigma = Sign::plus();
    double y_min = 0.0, y_max = 0.0, dy = 0.0;
    std::vector<double> Q, Qy;
    double max_residual = 0.0;  ///< five-point stencil, interior nodes
    double bi_raw = 0.0;  ///< pi W[Ai, Q](3) before refinement
    double bi_refined = 0.0;  ///< same after refinement
    double shoot_offset = 0.0;  ///< phase shift applied to the left data
    bool refined = false;

    std::size_t size() const noexcept { return Q.size(); }
    double y(std::size_t i) const noexcept { return y_min + static_cast<double>(i) * dy; }
    bool covers(double yy) const noexcept { return yy >= y_min && yy <= y_max; }

    /// Cubic Hermite interpolation from the stored (Q, Q_y) pairs.
    double value_at(double yy) const {
        if (!covers(yy)) throw DomainError("Painleve solution evaluated outside its y-grid");
        const double s = (yy - y_min) / dy;
        const auto i = std::min(static_cast<std::size_t>(s), size() - 2);
        const double f = s - static_cast<double>(i);
        const double h00 = (1 + 2 * f) * (1 - f) * (1 - f), h10 = f * (1 - f) * (1 - f);
        const double h01 = f * f * (3 - 2 * f), h11 = f * f * (f - 1);
        return h00 * Q[i] + h10 * dy * Qy[i] + h01 * Q[i + 1] + h11 * dy * Qy[i + 1];
    }

    /// Pointwise residual y Q - Q_yy + 3 sigma Q^3 with a five-point Q_yy.
    double residual_at(std::size_t i) const {
        if (i < 2 || i + 2 >= size()) return 0.0;
        const double qyy = (-Q[i - 2] + 16.0 * Q[i - 1] - 30.0 * Q[i] + 16.0 * Q[i + 1] - Q[i + 2]) / (12.0 * dy * dy);
        return y(i) * Q[i] - qyy + 3.0 * sigma.real() * Q[i] * Q[i] * Q[i];
    }
};

namespace detail {

inline void painleve_integrate(PainleveSolution& sol, double phase_shift, std::size_t last) {
    const std::size_t n = std::min(last + 1, sol.size());
    auto [q, p] = left_asymptote(sol.y_min, sol.W, sol.sigma, phase_shift);
    const double s3 = 3.0 * sol.sigma.real();
    const double h = sol.dy;
    auto acc = [&](double y, double Q) { return y * Q + s3 * Q * Q * Q; };
    const double bound = 1e6 * (1.0 + std::abs(sol.W));
    sol.Q[0] = q;
    sol.Qy[0] = p;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double y = sol.y(i);
        const double k1q = p, k1p = acc(y, q);
        const double k2q = p + 0.5 * h * k1p, k2p = acc(y + 0.5 * h, q + 0.5 * h * k1q);
        const double k3q = p + 0.5 * h * k2p, k3p = acc(y + 0.5 * h, q + 0.5 * h * k2q);
        const double k4q = p + h * k3p, k4p = acc(y + h, q + h * k3q);
        q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if (!std::isfinite(q) || std::abs(q) > bound)
            throw DivergenceError("Painleve II solution blows up near y = " + std::to_string(sol.y(i + 1)),
                                  sol.y(i + 1));
        sol.Q[i + 1] = q;
        sol.Qy[i + 1] = p;
    }
}

/// pi * Wronskian[Ai, Q] at node i: the Bi coefficient where Q is linear.
inline double bi_coefficient(const PainleveSolution& sol, std::size_t i) {
    const double y = sol.y(i);
    return std::numbers::pi * (special::airy_ai(y) * sol.Qy[i] - special::airy_ai_prime(y) * sol.Q[i]);
}

}  // namespace detail

inline PainleveSolution solve_painleve(double W, Sign sigma, const PainleveOptions& opt = {}) {
    if (opt.y_min > left_asymptote_limit) throw DomainError("solve_painleve: y_min must be <= -8");
    if (opt.y_max < 3.0) throw DomainError("solve_painleve: y_max must be >= 3");
    if (opt.y_max > special::airy_range) throw DomainError("solve_painleve: y_max beyond the Airy working range");
    if (!(opt.dy > 0.0)) throw DomainError("solve_painleve: dy must be positive");
    if (!std::isfinite(W)) throw DomainError("solve_painleve: W must be finite");
    (void)special::q_sigma(W, sigma);  // admissibility gate

    PainleveSolution sol;
    sol.W = W;
    sol.sigma = sigma;
    sol.y_min = opt.y_min;
    sol.dy = opt.dy;
    const auto steps = static_cast<std::size_t>(std::llround((opt.y_max - opt.y_min) / opt.dy));
    sol.y_max = opt.y_min + static_cast<double>(steps) * opt.dy;
    sol.Q.assign(steps + 1, 0.0);
    sol.Qy.assign(steps + 1, 0.0);
    if (W == 0.0) return sol;

    const auto probe = static_cast<std::size_t>(std::llround((opt.shoot_point - opt.y_min) / opt.dy));
    const std::size_t last = sol.size() - 1;
    // Trial integrations stop at the probe point: past it the Bi component of
    // a mistuned phase can drive the cubic term to blow-up.
    detail::painleve_integrate(sol, 0.0, probe);
    sol.bi_raw = detail::bi_coefficient(sol, probe);
    sol.bi_refined = sol.bi_raw;

    if (opt.shoot) {
        // Secant iteration on the phase shift; b(delta) is smooth and nearly
        // sinusoidal with period 2 pi, and the root sits close to delta = 0.
        double d0 = 0.0, b0 = sol.bi_raw;
        double d1 = 1e-3;
        detail::painleve_integrate(sol, d1, probe);
        double b1 = detail::bi_coefficient(sol, probe);
        const double tol = 1e-15 * std::max(std::abs(W), 1e-300);
        for (int it = 0; it < 60 && std::abs(b1) > tol && b1 != b0; ++it) {
            const double d2 = d1 - b1 * (d1 - d0) / (b1 - b0);
            d0 = d1;
            b0 = b1;
            d1 = d2;
            detail::painleve_integrate(sol, d1, probe);
            b1 = detail::bi_coefficient(sol, probe);
        }
        if (std::abs(b1) < std::abs(sol.bi_raw)) {
            sol.shoot_offset = d1;
            sol.bi_refined = b1;
            sol.refined = true;
        }
    }
    detail::painleve_integrate(sol, sol.shoot_offset, last);
    for (std::size_t i = 2; i + 2 < sol.size(); ++i)
        sol.max_residual = std::max(sol.max_residual, std::abs(sol.residual_at(i)));
    return sol;
}

struct RightMatch {
    double W = 0.0;
    Sign sigma = Sign::plus();
    double q_expected = 0.0;
    double q_observed = 0.0;  ///< Q/Ai at the window midpoint
    double deviation = 0.0;  ///< max |r - q| / |q| (absolute when q = 0)
    double y_lo = 3.0, y_hi = 6.0;
    std::vector<double> y, ratio;
};

inline RightMatch right_match(const PainleveSolution& sol, double y_lo = 3.0, double y_hi = 6.0) {
    if (sol.y_max < y_lo) throw DomainError("right_match: solution must extend to y >= 3");
    if (y_hi > 6.0 + 1e-12) throw DomainError("right_match: Ai underflow beyond y = 6");
    y_hi = std::min(y_hi, sol.y_max);
    RightMatch m;
    m.W = sol.W;
    m.sigma = sol.sigma;
    m.q_expected = special::q_sigma(sol.W, sol.sigma);
    m.y_lo = y_lo;
    m.y_hi = y_hi;
    const double scale = m.q_expected != 0.0 ? std::abs(m.q_expected) : 1.0;
    for (std::size_t i = 0; i < sol.size(); ++i) {
        const double y = sol.y(i);
        if (y < y_lo - 1e-12 || y > y_hi + 1e-12) continue;
        const double r = sol.Q[i] / special::airy_ai(y);
        m.y.push_back(y);
        m.ratio.push_back(r);
        m.deviation = std::max(m.deviation, std::abs(r - m.q_expected) / scale);
    }
    if (!m.ratio.empty()) m.q_observed = sol.value_at(0.5 * (y_lo + y_hi)) / special::airy_ai(0.5 * (y_lo + y_hi));
    return m;
}

}  // namespace mkdv
