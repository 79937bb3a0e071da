#pragma once

// Wave packets Psi_v(t,x) = chi(lambda (x + t v)) e^{i phi(t,x)} along the rays
// x = -t v, the packet coefficient gamma(t,v) = int u conj(Psi_v) dx, and the
// cubic log-phase law gamma' = 3 i sigma t^{-1} |gamma|^2 gamma.

#include "mkdv/error.hpp"
#include "mkdv/evolve.hpp"
#include "mkdv/fit.hpp"
#include "mkdv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

namespace mkdv {

inline double phase_phi(double t, double x) {
    if (!(t > 0.0)) throw DomainError("phase_phi needs t > 0");
    const double a = std::abs(x);
    return -2.0 / 3.0 * a * std::sqrt(a) / std::sqrt(t) + std::numbers::pi / 4.0;
}

/// Bump c_p (1 - s^2)^p on [-1, 1] with unit integral (C^{p-1}).
struct Envelope {
    int power = 3;

    double norm() const {
        const double p = power;
        return std::tgamma(p + 1.5) / (std::sqrt(std::numbers::pi) * std::tgamma(p + 1.0));
    }
    double operator()(double s) const {
        if (std::abs(s) >= 1.0) return 0.0;
        return norm() * std::pow(1.0 - s * s, power);
    }
    double derivative(double s) const {
        if (std::abs(s) >= 1.0) return 0.0;
        return -2.0 * power * s * norm() * std::pow(1.0 - s * s, power - 1);
    }
};

struct PacketSpec {
    double v = 0.25;
    double gate = 4.0;  ///< membership constant c_Omega in t^{2/3} v >= c_Omega
    Envelope envelope{};

    double xi_v() const { return std::sqrt(v); }
    double lambda(double t) const { return 1.0 / (std::sqrt(t) * std::pow(v, 0.25)); }
    bool admitted(double t) const { return std::pow(t, 2.0 / 3.0) * v >= gate * (1.0 - 1e-12); }

    void check(double t, const Grid& g) const {
        if (!(v > 0.0)) throw DomainError("packet velocity must be positive");
        if (!(t > 0.0)) throw DomainError("packet time must be positive");
        if (envelope.power < 3) throw DomainError("packet envelope power must be at least 3");
        if (!admitted(t))
            throw DomainError("packet (t=" + std::to_string(t) + ", v=" + std::to_string(v) +
                              ") fails the membership gate");
        const double c = -t * v, w = 2.0 / lambda(t);
        if (c - w < -g.half_width() || c + w >= g.half_width())
            throw DomainError("packet support clipped by the box boundary");
    }

    /// Node range [first, last] covering the envelope support.
    std::pair<std::size_t, std::size_t> support(double t, const Grid& g) const {
        const double c = -t * v, w = 1.0 / lambda(t), L = g.half_width(), dx = g.dx();
        const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil((c - w + L) / dx)));
        const auto last = static_cast<std::size_t>(std::min(static_cast<double>(g.size() - 1), std::floor((c + w + L) / dx)));
        return {first, last};
    }
};

/// Psi_v(t, x_j) on every node (zero off the support).
inline std::vector<cplx> packet(double t, const PacketSpec& spec, const Grid& g) {
    spec.check(t, g);
    std::vector<cplx> out(g.size(), 0.0);
    const double lam = spec.lambda(t);
    const auto [a, b] = spec.support(t, g);
    for (std::size_t j = a; j <= b; ++j) {
        const double x = g.x(j);
        out[j] = spec.envelope(lam * (x + t * spec.v)) * std::polar(1.0, phase_phi(t, x));
    }
    return out;
}

/// gamma(t,v) = dx sum_j u_j conj(Psi_v)_j.
inline cplx gamma(const Field& u, double t, const PacketSpec& spec) {
    const Grid& g = u.grid();
    spec.check(t, g);
    const double lam = spec.lambda(t);
    const auto [a, b] = spec.support(t, g);
    cplx acc = 0.0;
    for (std::size_t j = a; j <= b; ++j) {
        const double x = g.x(j);
        acc += u[j] * spec.envelope(lam * (x + t * spec.v)) * std::polar(1.0, -phase_phi(t, x));
    }
    return acc * g.dx();
}

/// d/dt gamma evaluated from the equation itself:
///   int u conj(d_t Psi) dx - (1/3) int u_xxx conj(Psi) dx - int (sigma u^3 + F) conj(Psi_x) dx.
/// Needs u_xxx, so costs one spectral derivative unless it is supplied.
inline cplx gamma_dot_direct(const Field& u, double t, const PacketSpec& spec, Sign sigma,
                             const std::optional<Perturbation>& pert = std::nullopt,
                             const Field* uxxx_in = nullptr) {
    const Grid& g = u.grid();
    spec.check(t, g);
    std::optional<Field> own;
    if (!uxxx_in) own = spectral_derivative(u, 3);
    const Field& uxxx = uxxx_in ? *uxxx_in : *own;
    const double lam = spec.lambda(t), v = spec.v;
    const auto [a, b] = spec.support(t, g);
    cplx acc = 0.0;
    for (std::size_t j = a; j <= b; ++j) {
        const double x = g.x(j), ax = std::abs(x);
        const double s = lam * (x + t * v);
        const double chi = spec.envelope(s), dchi = spec.envelope.derivative(s);
        const cplx e = std::polar(1.0, phase_phi(t, x));
        const double phi_t = ax * std::sqrt(ax) / (3.0 * t * std::sqrt(t));
        const double phi_x = (x < 0.0 ? 1.0 : -1.0) * std::sqrt(ax / t);
        const cplx psi_t = (dchi * (lam * v - s / (2.0 * t)) + cplx(0.0, phi_t) * chi) * e;
        const cplx psi_x = (dchi * lam + cplx(0.0, phi_x) * chi) * e;
        const double uj = u[j];
        const double cube = sigma.real() * uj * uj * uj + (pert ? (*pert)(uj) : 0.0);
        acc += uj * std::conj(psi_t) - uxxx[j] / 3.0 * std::conj(e * chi) - cube * std::conj(psi_x);
    }
    return acc * g.dx();
}

/// Leading-order law 3 i sigma t^{-1} |gamma|^2 gamma.
inline cplx gamma_law(double t, cplx gam, Sign sigma) {
    return cplx(0.0, 3.0 * sigma.real() / t) * std::norm(gam) * gam;
}

struct GammaTrace {
    double v = 0.0;
    std::vector<double> t;
    std::vector<cplx> gamma;
    std::vector<double> modulus;
    std::vector<double> phase;  ///< unwrapped arg gamma
    std::vector<cplx> gamma_dot;  ///< nonuniform three-point differences
    std::vector<double> residual;  ///< |gamma_dot - law|
    std::vector<double> residual_direct;  ///< same with gamma_dot from the equation, if recorded
    double max_raw_increment = 0.0;  ///< largest |wrapped phase step|; must stay below pi
};

/// Derivative at t[i] of the quadratic through three neighbouring samples.
inline cplx three_point_derivative(std::span<const double> t, std::span<const cplx> f, std::size_t i) {
    const std::size_t n = t.size();
    if (n < 3) throw DomainError("three_point_derivative needs three samples");
    const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
    const double t0 = t[c - 1], t1 = t[c], t2 = t[c + 1], x = t[i];
    const double w0 = ((x - t1) + (x - t2)) / ((t0 - t1) * (t0 - t2));
    const double w1 = ((x - t0) + (x - t2)) / ((t1 - t0) * (t1 - t2));
    const double w2 = ((x - t0) + (x - t1)) / ((t2 - t0) * (t2 - t1));
    return w0 * f[c - 1] + w1 * f[c] + w2 * f[c + 1];
}

inline GammaTrace build_trace(double v, std::vector<double> times, std::vector<cplx> values, Sign sigma,
                              std::vector<cplx> direct = {}) {
    if (times.size() != values.size()) throw DomainError("trace: times and values differ in length");
    GammaTrace tr;
    tr.v = v;
    tr.t = std::move(times);
    tr.gamma = std::move(values);
    const std::size_t n = tr.t.size();
    std::vector<double> raw(n);
    tr.modulus.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        tr.modulus[i] = std::abs(tr.gamma[i]);
        raw[i] = std::arg(tr.gamma[i]);
    }
    tr.phase = fit::unwrap(raw);
    for (std::size_t i = 1; i < n; ++i)
        tr.max_raw_increment = std::max(tr.max_raw_increment, std::abs(tr.phase[i] - tr.phase[i - 1]));
    if (n >= 3) {
        tr.gamma_dot.resize(n);
        tr.residual.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            tr.gamma_dot[i] = three_point_derivative(tr.t, tr.gamma, i);
            tr.residual[i] = std::abs(tr.gamma_dot[i] - gamma_law(tr.t[i], tr.gamma[i], sigma));
        }
    }
    if (!direct.empty()) {
        if (direct.size() != n) throw DomainError("trace: direct derivative series has wrong length");
        tr.residual_direct.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            tr.residual_direct[i] = std::abs(direct[i] - gamma_law(tr.t[i], tr.gamma[i], sigma));
    }
    return tr;
}

/// Collects gamma for several velocities at a common time ladder through an
/// evolve observer. Every (t, v) pair must pass the gate.
class GammaProbe {
public:
    GammaProbe(std::vector<double> velocities, std::vector<double> times, Sign sigma, double gate = 4.0,
               Envelope env = {}, bool record_direct = true, std::optional<Perturbation> pert = std::nullopt)
        : times_(std::move(times)), sigma_(sigma), direct_(record_direct), pert_(pert) {
        for (double v : velocities) specs_.push_back(PacketSpec{v, gate, env});
        for (const auto& s : specs_)
            for (double t : times_)
                if (!s.admitted(t))
                    throw DomainError("probe (t=" + std::to_string(t) + ", v=" + std::to_string(s.v) +
                                      ") fails the membership gate");
        values_.assign(specs_.size(), {});
        dots_.assign(specs_.size(), {});
    }

    Observer observer() {
        return Observer{times_, [this](double t, const Field& u) { record(t, u); }};
    }

    void record(double t, const Field& u) {
        std::optional<Field> uxxx;
        if (direct_) uxxx = spectral_derivative(u, 3);
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            values_[i].push_back(gamma(u, t, specs_[i]));
            if (direct_) dots_[i].push_back(gamma_dot_direct(u, t, specs_[i], sigma_, pert_, &*uxxx));
        }
        recorded_.push_back(t);
    }

    std::vector<GammaTrace> traces() const {
        std::vector<GammaTrace> out;
        for (std::size_t i = 0; i < specs_.size(); ++i)
            out.push_back(build_trace(specs_[i].v, recorded_, values_[i], sigma_, direct_ ? dots_[i] : std::vector<cplx>{}));
        return out;
    }

    const std::vector<PacketSpec>& specs() const { return specs_; }

private:
    std::vector<double> times_;
    std::vector<double> recorded_;
    Sign sigma_;
    bool direct_;
    std::optional<Perturbation> pert_;
    std::vector<PacketSpec> specs_;
    std::vector<std::vector<cplx>> values_;
    std::vector<std::vector<cplx>> dots_;
};

struct PhaseFit {
    double slope = 0.0;
    double slope_stderr = 0.0;
    double intercept = 0.0;
    double mean_modulus_sq = 0.0;
    double predicted_slope = 0.0;  ///< 3 sigma <|gamma|^2>
    double consistency = 0.0;  ///< |slope - predicted| / |slope|
    double modulus_drift = 0.0;  ///< (max - min)/mean of |gamma|
};

/// Least-squares fit of the unwrapped phase against log(t xi_v^3). The
/// leading-order law integrates to a phase slope of 3 sigma |gamma|^2 in
/// log t, which the consistency statistic compares against.
inline PhaseFit ode_phase_solution(const GammaTrace& tr, Sign sigma) {
    if (tr.t.size() < 3) throw DomainError("phase fit needs at least three samples");
    if (tr.t.back() / tr.t.front() < std::pow(10.0, 1.5) * (1.0 - 1e-12))
        throw DomainError("phase fit needs the trace to span at least 1.5 decades");
    const double xi3 = std::pow(tr.v, 1.5);
    std::vector<double> lt(tr.t.size());
    for (std::size_t i = 0; i < lt.size(); ++i) lt[i] = std::log(tr.t[i] * xi3);
    const auto f = fit::line(lt, tr.phase);
    PhaseFit p;
    p.slope = f.slope;
    p.slope_stderr = f.slope_stderr;
    p.intercept = f.intercept;
    double lo = tr.modulus.front(), hi = lo, mean = 0.0;
    for (double m : tr.modulus) {
        p.mean_modulus_sq += m * m;
        mean += m;
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    p.mean_modulus_sq /= static_cast<double>(tr.modulus.size());
    mean /= static_cast<double>(tr.modulus.size());
    p.modulus_drift = mean > 0.0 ? (hi - lo) / mean : 0.0;
    p.predicted_slope = 3.0 * sigma.real() * p.mean_modulus_sq;
    p.consistency = p.slope != 0.0 ? std::abs(p.slope - p.predicted_slope) / std::abs(p.slope) : 0.0;
    return p;
}

struct GammaLawCheck {
    double t_lo = 0.0, t_hi = 0.0;
    double modulus_drift = 0.0;  ///< (max - min)/mean of |gamma| on the window
    bool direct = false;  ///< residual taken from the equation rather than differences
    std::optional<fit::LineFit> residual_fit;  ///< log-log fit of the residual; empty if degenerate
};

/// Modulus drift and residual decay exponent on [t_lo, t_hi]. Difference
/// residuals drop the one-sided end points.
inline GammaLawCheck gamma_law_check(const GammaTrace& tr, double t_lo, double t_hi) {
    GammaLawCheck c;
    c.t_lo = t_lo;
    c.t_hi = t_hi;
    c.direct = !tr.residual_direct.empty();
    const auto& res = c.direct ? tr.residual_direct : tr.residual;
    double lo = 0.0, hi = 0.0, mean = 0.0;
    std::size_t cnt = 0;
    std::vector<double> ft, fr;
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        if (tr.t[i] < t_lo * (1.0 - 1e-12) || tr.t[i] > t_hi * (1.0 + 1e-12)) continue;
        const double m = tr.modulus[i];
        lo = cnt ? std::min(lo, m) : m;
        hi = cnt ? std::max(hi, m) : m;
        mean += m;
        ++cnt;
        const bool interior = c.direct || (i > 0 && i + 1 < tr.t.size());
        if (interior && i < res.size()) {
            ft.push_back(tr.t[i]);
            fr.push_back(res[i]);
        }
    }
    if (cnt == 0) throw DomainError("gamma_law_check: no samples inside the window");
    mean /= static_cast<double>(cnt);
    c.modulus_drift = mean > 0.0 ? (hi - lo) / mean : 0.0;
    std::size_t positive = 0;
    for (double r : fr) positive += r > 0.0;
    if (positive >= 2) c.residual_fit = fit::loglog(ft, fr);
    return c;
}

}  // namespace mkdv
