#pragma once

// Asymptotic completeness: from prescribed real even data W(z) build the
// regularized profile 𝒲(t,z), the approximate solution
//   u_app(t,x) = t^{-1/3} Q(t^{-1/3} x; 𝒲(t, t^{-1/3} zeta(t^{-1/3} x))),
// and measure how far the nonlinear flow started from u_app(T0) drifts from it.

#include "mkdv/asymptotics.hpp"
#include "mkdv/error.hpp"
#include "mkdv/evolve.hpp"
#include "mkdv/fft.hpp"
#include "mkdv/grid.hpp"
#include "mkdv/painleve.hpp"
#include "mkdv/special.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <thread>
#include <tuple>
#include <vector>

namespace mkdv {

/// Even cutoff: 0 on |s| <= 1/2, 1 on |s| >= 1.
inline double chi_step(double s) { return 1.0 - lowpass_profile(2.0 * s); }

/// Even smoothing of |y|^{1/2}: (1/4)<16y>^{1/2} on |y| <= 1/2, |y|^{1/2} on
/// |y| >= 1, quintic Hermite in between (C^2 at both joints).
inline double zeta(double y) {
    const double a = std::abs(y);
    if (a >= 1.0) return std::sqrt(a);
    auto inner = [](double s) { return 0.25 * std::pow(1.0 + 256.0 * s * s, 0.25); };
    if (a <= 0.5) return inner(a);
    const double g = 65.0;  // 1 + 256 (1/2)^2
    const double f0 = inner(0.5);
    const double d0 = 32.0 * 0.5 * std::pow(g, -0.75);
    const double s0 = 32.0 * std::pow(g, -0.75) - 12288.0 * 0.25 * std::pow(g, -1.75);
    const double f1 = 1.0, d1 = 0.5, s1 = -0.25;
    const double h = 0.5;
    const double u = (a - 0.5) / h;
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
    const double H0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
    const double H1 = u - 6 * u3 + 8 * u4 - 3 * u5;
    const double H2 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5);
    const double H3 = 10 * u3 - 15 * u4 + 6 * u5;
    const double H4 = -4 * u3 + 7 * u4 - 3 * u5;
    const double H5 = 0.5 * (u3 - 2 * u4 + u5);
    return H0 * f0 + H1 * h * d0 + H2 * h * h * s0 + H3 * f1 + H4 * h * d1 + H5 * h * h * s1;
}

/// Real even scattering data sampled on z_j = -Z + j dz, j < n (n a power of two).
class PrescribedData {
public:
    PrescribedData(double half_width, std::vector<double> samples) : Z_(half_width), w_(std::move(samples)) {
        const std::size_t n = w_.size();
        if (!(Z_ > 0.0)) throw DomainError("prescribed data: half-width must be positive");
        if (n < 16 || (n & (n - 1)) != 0) throw DomainError("prescribed data: sample count must be a power of two >= 16");
        dz_ = 2.0 * Z_ / static_cast<double>(n);
        for (std::size_t j = 1; j < n; ++j)
            if (w_[j] != w_[n - j]) throw DomainError("prescribed data must be even on the grid");
        for (double v : w_)
            if (!std::isfinite(v)) throw DomainError("prescribed data must be finite");
        build_bands();
    }

    template <class Fn>
    static PrescribedData sample(double half_width, std::size_t n, Fn&& fn) {
        std::vector<double> w(n);
        const double dz = 2.0 * half_width / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) w[j] = fn(-half_width + static_cast<double>(j) * dz);
        for (std::size_t j = 1; j < n / 2; ++j) w[n - j] = w[j];  // enforce exact evenness
        return PrescribedData(half_width, std::move(w));
    }

    double half_width() const noexcept { return Z_; }
    double dz() const noexcept { return dz_; }
    std::size_t size() const noexcept { return w_.size(); }
    double z(std::size_t j) const noexcept { return -Z_ + static_cast<double>(j) * dz_; }
    std::span<const double> samples() const noexcept { return w_; }
    double max_abs() const {
        double m = 0.0;
        for (double v : w_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Band labels: 1 stands for the whole low band P_{<=1}; then 2, 4, ...
    const std::vector<double>& band_labels() const noexcept { return labels_; }
    const std::vector<std::vector<double>>& bands() const noexcept { return bands_; }

    /// Linear interpolation of band b at z; zero outside the sampled window.
    double band_at(std::size_t b, double zz) const { return interp(bands_[b], zz); }
    double value_at(double zz) const { return interp(w_, zz); }

    /// Discrete ||<D>^s W||_{H^1} + ||z <D>^s W||_{L^2}.
    double smallness(double exponent) const {
        const std::size_t n = w_.size();
        std::vector<cplx> in(n);
        for (std::size_t j = 0; j < n; ++j) in[j] = w_[j];
        auto spec = fft::forward_complex(in);
        std::vector<cplx> v(n), vz(n);
        for (std::size_t m = 0; m < n; ++m) {
            const double D = freq(m);
            const double f = std::pow(1.0 + D * D, exponent / 2.0) / static_cast<double>(n);
            v[m] = spec[m] * f;
            vz[m] = spec[m] * f * cplx(0.0, D);
        }
        auto back = inverse(v), back_z = inverse(vz);
        double a = 0.0, b = 0.0, c = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            a += std::norm(back[j]);
            b += std::norm(back_z[j]);
            c += z(j) * z(j) * std::norm(back[j]);
        }
        return std::sqrt((a + b) * dz_) + std::sqrt(c * dz_);
    }

private:
    double freq(std::size_t m) const {
        const std::size_t n = w_.size();
        const double k = std::numbers::pi / Z_;
        return k * (m <= n / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(n));
    }

    static std::vector<cplx> inverse(std::vector<cplx> spec) {
        for (auto& c : spec) c = std::conj(c);
        auto out = fft::forward_complex(spec);
        for (auto& c : out) c = std::conj(c);
        return out;
    }

    // Phases are relative to z = -Z; the projections only rescale modes, so
    // the offset cancels between forward and inverse transforms.
    void build_bands() {
        const std::size_t n = w_.size();
        std::vector<cplx> in(n);
        for (std::size_t j = 0; j < n; ++j) in[j] = w_[j];
        const auto spec = fft::forward_complex(in);
        const double dmax = std::numbers::pi / dz_;
        double top = 1.0;
        while (top < dmax) top *= 2.0;
        auto project = [&](auto&& mult) {
            std::vector<cplx> s(n);
            for (std::size_t m = 0; m < n; ++m) s[m] = spec[m] * mult(std::abs(freq(m))) / static_cast<double>(n);
            auto back = inverse(std::move(s));
            std::vector<double> r(n);
            for (std::size_t j = 0; j < n; ++j) r[j] = back[j].real();
            return r;
        };
        labels_.push_back(1.0);
        bands_.push_back(project([](double D) { return lowpass_profile(D); }));
        for (double N = 2.0; N <= top; N *= 2.0) {
            labels_.push_back(N);
            const bool last = N >= top;
            bands_.push_back(project([&](double D) {
                const double hi = last ? 1.0 : lowpass_profile(D / N);
                return hi - lowpass_profile(2.0 * D / N);
            }));
        }
    }

    double interp(const std::vector<double>& f, double zz) const {
        const double s = (zz + Z_) / dz_;
        if (s < 0.0 || s > static_cast<double>(f.size() - 1)) return 0.0;
        const auto i = std::min(static_cast<std::size_t>(s), f.size() - 2);
        const double a = s - static_cast<double>(i);
        return f[i] * (1.0 - a) + f[i + 1] * a;
    }

    double Z_;
    double dz_ = 0.0;
    std::vector<double> w_;
    std::vector<double> labels_;
    std::vector<std::vector<double>> bands_;
};

/// Applies W -> P_N W for every dyadic N; the bands sum back to W.
inline std::vector<std::vector<double>> dyadic_bands(const PrescribedData& W) { return W.bands(); }

/// 𝒲(t,z) = sum_{N <= t} chi_N(t,z) W_N(z), chi_N = chi(N^{-2} t^{2/3} <t^{1/3} z>) for N > 1.
inline double regularized_W(const PrescribedData& W, double t, double z) {
    if (!(t >= 1.0)) throw DomainError("regularized_W needs t >= 1");
    const auto& labels = W.band_labels();
    const double c = std::cbrt(t);
    const double arg = c * c * std::sqrt(1.0 + c * c * z * z);
    double acc = 0.0;
    for (std::size_t b = 0; b < labels.size(); ++b) {
        const double N = labels[b];
        if (N > t) break;
        const double cut = N <= 1.0 ? 1.0 : chi_step(arg / (N * N));
        if (cut != 0.0) acc += cut * W.band_at(b, z);
    }
    return acc;
}

struct QTableOptions {
    double w_max = 0.25;
    double dw = 0.005;
    PainleveOptions painleve{-40.0, 4.0, 1e-3, true, 3.0};
    std::size_t store_stride = 10;  ///< keep every stride-th integration node
    unsigned workers = 1;
};

struct QTableMeta {
    double w_max = 0.0, dw = 0.0, y_min = 0.0, y_max = 0.0, dy = 0.0;
    double max_residual = 0.0;
    double max_shoot_offset = 0.0;
    double max_right_deviation = 0.0;  ///< on [3, y_max]
    int sigma = 1;
};

/// Q(y; w) on w in [0, w_max] (odd extension to negative w). Inside
/// [y_min, y_max]: cubic Hermite in y, linear in w. Left of y_min the
/// leading asymptote (with the refined phase offset) continues each
/// solution; right of y_max, q_sigma(w) Ai(y), and zero past the Airy range.
class QTable {
public:
    QTable(Sign sigma, const QTableOptions& opt = {}) : sigma_(sigma), opt_(opt) {
        if (!(opt.dw > 0.0) || !(opt.w_max > 0.0)) throw DomainError("Q table: w spacing and range must be positive");
        if (opt.store_stride == 0) throw DomainError("Q table: store stride must be positive");
        (void)special::q_sigma(opt.w_max, sigma);
        const auto nw = static_cast<std::size_t>(std::ceil(opt.w_max / opt.dw - 1e-9)) + 1;
        ws_.resize(nw);
        for (std::size_t i = 0; i < nw; ++i) ws_[i] = static_cast<double>(i) * opt.dw;
        Q_.resize(nw);
        Qy_.resize(nw);
        shift_.assign(nw, 0.0);
        std::vector<double> resid(nw, 0.0), dev(nw, 0.0);
        auto work = [&](std::size_t i) {
            const auto sol = solve_painleve(ws_[i], sigma_, opt_.painleve);
            for (std::size_t k = 0; k < sol.size(); k += opt_.store_stride) {
                Q_[i].push_back(sol.Q[k]);
                Qy_[i].push_back(sol.Qy[k]);
            }
            shift_[i] = sol.shoot_offset;
            resid[i] = sol.max_residual;
            if (ws_[i] != 0.0) dev[i] = right_match(sol, 3.0, std::min(sol.y_max, 6.0)).deviation;
            if (i == 0) {
                y_min_ = sol.y_min;
                dy_ = sol.dy * static_cast<double>(opt_.store_stride);
                y_max_ = sol.y_min + dy_ * static_cast<double>((sol.size() - 1) / opt_.store_stride);
            }
        };
        work(0);
        const unsigned nt = std::max(1u, opt.workers);
        if (nt == 1) {
            for (std::size_t i = 1; i < nw; ++i) work(i);
        } else {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < nt; ++w)
                pool.emplace_back([&, w] {
                    for (std::size_t i = 1 + w; i < nw; i += nt) work(i);
                });
        }
        meta_ = {ws_.back(), opt.dw, y_min_, y_max_, dy_, 0.0, 0.0, 0.0, sigma.value()};
        for (std::size_t i = 0; i < nw; ++i) {
            meta_.max_residual = std::max(meta_.max_residual, resid[i]);
            meta_.max_shoot_offset = std::max(meta_.max_shoot_offset, std::abs(shift_[i]));
            meta_.max_right_deviation = std::max(meta_.max_right_deviation, dev[i]);
        }
    }

    const QTableMeta& meta() const noexcept { return meta_; }
    Sign sigma() const noexcept { return sigma_; }

    double operator()(double y, double w) const {
        const double a = std::abs(w);
        if (a > ws_.back() * (1.0 + 1e-12)) throw DomainError("Q table: w = " + std::to_string(w) + " outside the table");
        if (a == 0.0) return 0.0;
        const double sgn = w < 0.0 ? -1.0 : 1.0;
        if (y > y_max_) {
            if (y > special::airy_range) return 0.0;
            return special::q_sigma(w, sigma_) * special::airy_ai(y);
        }
        const double s = a / opt_.dw;
        const auto i = std::min(static_cast<std::size_t>(s), ws_.size() - 2);
        const double f = s - static_cast<double>(i);
        if (y < y_min_) {
            const double shift = shift_[i] * (1.0 - f) + shift_[i + 1] * f;
            return sgn * left_asymptote(y, a, sigma_, shift).first;
        }
        return sgn * (column(i, y) * (1.0 - f) + column(i + 1, y) * f);
    }

private:
    double column(std::size_t i, double y) const {
        const auto& q = Q_[i];
        const auto& p = Qy_[i];
        const double s = (y - y_min_) / dy_;
        const auto k = std::min(static_cast<std::size_t>(s), q.size() - 2);
        const double f = s - static_cast<double>(k);
        const double h00 = (1 + 2 * f) * (1 - f) * (1 - f), h10 = f * (1 - f) * (1 - f);
        const double h01 = f * f * (3 - 2 * f), h11 = f * f * (f - 1);
        return h00 * q[k] + h10 * dy_ * p[k] + h01 * q[k + 1] + h11 * dy_ * p[k + 1];
    }

    Sign sigma_;
    QTableOptions opt_;
    std::vector<double> ws_;
    std::vector<std::vector<double>> Q_, Qy_;
    std::vector<double> shift_;
    double y_min_ = 0.0, y_max_ = 0.0, dy_ = 0.0;
    QTableMeta meta_;
};

inline double u_app(double t, double x, const PrescribedData& W, const QTable& table) {
    if (!(t >= 1.0)) throw DomainError("u_app needs t >= 1");
    const double c = std::cbrt(t);
    const double y = x / c;
    const double w = regularized_W(W, t, zeta(y) / c);
    return table(y, w) / c;
}

inline Field u_app_field(GridPtr g, double t, const PrescribedData& W, const QTable& table) {
    return sample(std::move(g), [&](double x) { return u_app(t, x, W, table); });
}

struct MatchSample {
    double t = 0.0;
    double e_l2 = 0.0;
    double e_weighted_sup = 0.0;  ///< sup t^{1/3} <t^{-1/3} x>^{1/4} |u - u_app|
};

struct MatchReport {
    int sigma = 1;
    double T0 = 0.0;
    double horizon = 0.0;
    double uapp_norm = 0.0;  ///< ||u_app(T0)||_2
    std::vector<MatchSample> samples;
    QTableMeta table_meta;
    std::size_t steps = 0;
    DriftStats drift;
};

struct MatchOptions {
    double half_width = 4096.0;
    std::size_t n = 32768;
    double dt = 0.1;
    double cfl = 0.0125;
    std::size_t sample_count = 12;
};

inline MatchSample match_sample(double t, const Field& u, const PrescribedData& W, const QTable& table) {
    const Field app = u_app_field(u.grid_ptr(), t, W, table);
    const double c = std::cbrt(t);
    MatchSample m{t, 0.0, 0.0};
    double s2 = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double d = u[j] - app[j];
        const double z = u.grid().x(j) / c;
        s2 += d * d;
        m.e_weighted_sup = std::max(m.e_weighted_sup, c * std::pow(1.0 + z * z, 0.125) * std::abs(d));
    }
    m.e_l2 = std::sqrt(s2 * u.grid().dx());
    return m;
}

/// Starts the full equation from u_app(T0) and records the defect up to h T0.
inline MatchReport match_experiment(const PrescribedData& W, const QTable& table, double T0, double horizon,
                                    const MatchOptions& opt = {}) {
    if (!(T0 >= 50.0)) throw DomainError("match_experiment needs T0 >= 50");
    if (!(horizon > 1.0)) throw DomainError("match_experiment needs a horizon factor > 1");
    if (opt.sample_count < 1) throw DomainError("match_experiment needs at least one sample");
    const Sign sigma = table.sigma();
    auto g = make_grid(opt.half_width, opt.n);
    MatchReport rep;
    rep.sigma = sigma.value();
    rep.T0 = T0;
    rep.horizon = horizon;
    rep.table_meta = table.meta();

    // The spectral projection inside evolve() alters u_app(T0) by the
    // dealiased tail only; the defect at T0 is measured after it.
    const Field start = u_app_field(g, T0, W, table);
    rep.uapp_norm = norm_l2(start);

    EvolveConfig cfg;
    cfg.sigma = sigma;
    cfg.t0 = T0;
    cfg.t1 = horizon * T0;
    cfg.dt = opt.dt;
    cfg.dt_policy = DtPolicy::nonlinear_cfl;
    cfg.cfl = opt.cfl;
    cfg.vector_fields = false;
    for (std::size_t k = 0; k <= opt.sample_count; ++k)
        cfg.snapshot_times.push_back(T0 + (horizon - 1.0) * T0 * static_cast<double>(k) /
                                              static_cast<double>(opt.sample_count));
    auto res = evolve(SolverState{T0, start, 0, {}}, cfg, {},
                      [&](double t, const Field& u) { rep.samples.push_back(match_sample(t, u, W, table)); });
    rep.steps = res.state.steps;
    rep.drift = res.state.drift;
    return rep;
}

}  // namespace mkdv
