#pragma once

// Airy Ai, complex log-gamma, and the Painleve II connection coefficients
//   theta(W^2) = (9 log 2 / 4 pi) W^2 - arg Gamma(3 i W^2 / 4 pi) - pi/2,
//   q_sigma(W) = sgn W ((2 sigma / 3)(1 - exp(-3 sigma W^2 / 2)))^{1/2}.

#include "mkdv/error.hpp"
#include "mkdv/grid.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

namespace mkdv::special {

inline constexpr double airy_range = 30.0;

namespace detail {

inline constexpr long double ai0 = 0.355028053887817239260063186004183176L;   // Ai(0)
inline constexpr long double aip0 = 0.258819403792806798405183560189203963L;  // -Ai'(0)

// Maclaurin series, accumulated in extended precision to contain the
// cancellation between the two solutions for |x| up to the switch point.
inline std::pair<double, double> airy_series(double x) {
    const long double x3 = static_cast<long double>(x) * x * x;
    long double f = 1.0L, g = x, fp = 0.0L, gp = 1.0L;
    long double tf = 1.0L, tg = x, tfp = 0.5L * x * x, tgp = 1.0L;
    fp = tfp;
    for (int k = 1; k < 200; ++k) {
        tf *= x3 / ((3.0L * k) * (3.0L * k - 1.0L));
        tg *= x3 / ((3.0L * k) * (3.0L * k + 1.0L));
        if (k >= 2) tfp *= x3 / ((3.0L * k - 3.0L) * (3.0L * k - 1.0L));
        tgp *= x3 / ((3.0L * k - 2.0L) * (3.0L * k));
        f += tf;
        g += tg;
        if (k >= 2) fp += tfp;
        gp += tgp;
        const long double scale = std::abs(f) + std::abs(g) + 1.0L;
        if (std::abs(tf) + std::abs(tg) + std::abs(tfp) + std::abs(tgp) < 1e-22L * scale) break;
    }
    const double ai = static_cast<double>(ai0 * f - aip0 * g);
    const double aip = static_cast<double>(ai0 * fp - aip0 * gp);
    return {ai, aip};
}

// u_k of the Airy asymptotic expansions; v_k = -(6k+1)/(6k-1) u_k.
inline std::array<double, 40> airy_u() {
    std::array<double, 40> u{};
    u[0] = 1.0;
    for (int k = 1; k < 40; ++k)
        u[k] = u[k - 1] * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k);
    return u;
}

inline double airy_v(const std::array<double, 40>& u, int k) {
    return k == 0 ? 1.0 : -(6.0 * k + 1.0) / (6.0 * k - 1.0) * u[k];
}

// Sums sum_k sign^k c_k / zeta^k until terms stop decreasing.
template <class Coef>
double asymptotic_sum(Coef&& c, double zeta, int parity, bool alternating) {
    double acc = 0.0, prev = std::numeric_limits<double>::infinity();
    for (int j = 0; 2 * j + parity < 40; ++j) {
        const int k = 2 * j + parity;
        const double term = c(k) / std::pow(zeta, k);
        if (std::abs(term) > prev) break;
        acc += ((alternating && j % 2) ? -term : term);
        prev = std::abs(term);
        if (prev < 1e-18 * std::abs(acc)) break;
    }
    return acc;
}

inline std::pair<double, double> airy_asymptotic(double x) {
    static const auto u = airy_u();
    const double pi = std::numbers::pi;
    if (x > 0.0) {
        const double zeta = 2.0 / 3.0 * x * std::sqrt(x);
        double su = 0.0, sv = 0.0, pu = 1e300, pv = 1e300;
        for (int k = 0; k < 40; ++k) {
            const double d = std::pow(zeta, k);
            const double tu = u[k] / d, tv = airy_v(u, k) / d;
            if (std::abs(tu) > pu || std::abs(tv) > pv) break;
            su += (k % 2 ? -tu : tu);
            sv += (k % 2 ? -tv : tv);
            pu = std::abs(tu);
            pv = std::abs(tv);
            if (pu < 1e-18) break;
        }
        const double e = std::exp(-zeta) / (2.0 * std::sqrt(pi));
        return {e * su / std::pow(x, 0.25), -e * std::pow(x, 0.25) * sv};
    }
    const double z = -x;
    const double zeta = 2.0 / 3.0 * z * std::sqrt(z);
    auto uc = [&](int k) { return u[k]; };
    auto vc = [&](int k) { return airy_v(u, k); };
    const double ue = asymptotic_sum(uc, zeta, 0, true), uo = asymptotic_sum(uc, zeta, 1, true);
    const double ve = asymptotic_sum(vc, zeta, 0, true), vo = asymptotic_sum(vc, zeta, 1, true);
    const double c = std::cos(zeta - pi / 4.0), s = std::sin(zeta - pi / 4.0);
    const double amp = 1.0 / std::sqrt(pi);
    const double ai = amp / std::pow(z, 0.25) * (c * ue + s * uo);
    const double aip = amp * std::pow(z, 0.25) * (s * ve - c * vo);
    return {ai, aip};
}

inline constexpr double series_switch = 7.0;

inline std::pair<double, double> airy_pair(double x) {
    if (!(std::abs(x) <= airy_range)) throw DomainError("airy_ai: argument outside |x| <= 30");
    return std::abs(x) <= series_switch ? airy_series(x) : airy_asymptotic(x);
}

}  // namespace detail

/// Airy function Ai on |x| <= 30, absolute error below 1e-10.
inline double airy_ai(double x) { return detail::airy_pair(x).first; }

/// Derivative Ai'(x) on the same range.
inline double airy_ai_prime(double x) { return detail::airy_pair(x).second; }

/// Principal branch of log Gamma (cut along the non-positive real axis).
/// Lanczos (g = 7) on Re z >= 1/2; the recurrence Gamma(z) = Gamma(z+1)/z
/// carries the left half-plane across without branch jumps.
inline cplx log_gamma(cplx z) {
    if (z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real()))
        throw DomainError("log_gamma: pole at non-positive integer");
    if (std::abs(z) > 1e6) throw DomainError("log_gamma: argument too large");
    cplx shift = 0.0;
    while (z.real() < 0.5) {
        shift += std::log(z);
        z += 1.0;
    }
    static constexpr std::array<double, 9> p = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    const double g = 7.0;
    const cplx w = z - 1.0;
    cplx a = p[0];
    for (int i = 1; i < 9; ++i) a += p[i] / (w + static_cast<double>(i));
    const cplx t = w + g + 0.5;
    const cplx lg = 0.5 * std::log(2.0 * std::numbers::pi) + (w + 0.5) * std::log(t) - t + std::log(a);
    return lg - shift;
}

/// Phase constant theta(W^2) of the Painleve II left asymptote.
inline double theta_correction(double W) {
    const double w2 = W * W;
    if (w2 == 0.0) return 0.0;
    const double pi = std::numbers::pi;
    const double arg_gamma = log_gamma(cplx(0.0, 3.0 * w2 / (4.0 * pi))).imag();
    return 9.0 * std::log(2.0) / (4.0 * pi) * w2 - arg_gamma - pi / 2.0;
}

/// Largest |W| accepted for sigma = -1.
inline constexpr double focusing_w_limit = 1.0;

/// Amplitude q_sigma(W) of the Painleve II right asymptote Q ~ q Ai(y).
inline double q_sigma(double W, Sign sigma) {
    if (sigma.value() == -1 && std::abs(W) > focusing_w_limit)
        throw DomainError("q_sigma: |W| > 1 is outside the admissible range for sigma = -1");
    if (W == 0.0) return 0.0;
    const double s = sigma.real();
    const double radicand = -(2.0 * s / 3.0) * std::expm1(-1.5 * s * W * W);
    return std::copysign(std::sqrt(radicand), W);
}

struct ConnectionCoefficients {
    double theta = 0.0;
    double q = 0.0;
    double W = 0.0;
    Sign sigma = Sign::plus();
};

inline ConnectionCoefficients connection(double W, Sign sigma) {
    return {theta_correction(W), q_sigma(W, sigma), W, sigma};
}

}  // namespace mkdv::special
