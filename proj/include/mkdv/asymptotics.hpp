#pragma once

// Space-time regions, the scattering profile W, leading-order predictions and
// the weighted error norms of the long-time asymptotics.

#include "mkdv/error.hpp"
#include "mkdv/fit.hpp"
#include "mkdv/grid.hpp"
#include "mkdv/painleve.hpp"
#include "mkdv/wavepacket.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace mkdv {

struct Snapshot {
    double t = 0.0;
    Field u;
};

enum class Region { decaying, selfsimilar, oscillatory, boundary };

inline const char* region_name(Region r) {
    switch (r) {
        case Region::decaying: return "decaying";
        case Region::selfsimilar: return "selfsimilar";
        case Region::oscillatory: return "oscillatory";
        default: return "boundary";
    }
}

/// Regions in s = t^{-1/3} x with threshold T = t^{2 rho}. Decaying and
/// oscillatory start at `band` times their constants; the gaps are boundary.
struct RegionPartition {
    double rho = 0.0;
    double c_plus = 1.0;
    double c_zero = 1.0;
    double c_minus = 1.0;
    double band = 2.0;

    void validate() const {
        if (!(rho >= 0.0 && rho <= 1.0 / 18.0)) throw DomainError("region exponent rho must lie in [0, 1/18]");
        if (!(c_plus > 0.0 && c_zero > 0.0 && c_minus > 0.0)) throw DomainError("region constants must be positive");
        if (!(band >= 1.0)) throw DomainError("region boundary factor must be >= 1");
    }

    Region classify(double t, double x) const {
        if (!(t >= 1.0)) throw DomainError("classify needs t >= 1");
        const double s = x / std::cbrt(t);
        const double T = std::pow(t, 2.0 * rho);
        if (std::abs(s) <= c_zero * T) return Region::selfsimilar;
        if (s >= band * c_plus * T) return Region::decaying;
        if (s <= -band * c_minus * T) return Region::oscillatory;
        return Region::boundary;
    }
};

inline Region classify(double t, double x, const RegionPartition& part) { return part.classify(t, x); }

/// Continuum transform int u e^{-i xi x} dx at an arbitrary frequency.
inline cplx fourier_at(const Field& u, double xi) {
    const Grid& g = u.grid();
    const double m = xi * g.half_width() / std::numbers::pi;
    const double mr = std::round(m);
    if (std::abs(m - mr) < 1e-9 && mr >= 0.0 && mr <= static_cast<double>(g.size() / 2))
        return u.spectrum()[static_cast<std::size_t>(mr)];
    cplx acc = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) acc += u[j] * std::polar(1.0, -xi * g.x(j));
    return acc * g.dx();
}

struct ScatteringProfile {
    Sign sigma = Sign::plus();
    std::vector<double> xi;  ///< ascending, positive
    std::vector<cplx> W;
    std::vector<double> slope;  ///< phase slope against log(t xi^3)
    std::vector<double> slope_consistency;  ///< |slope 4 pi / (3 sigma) - |W|^2| / |W|^2
    std::vector<double> fit_residual;  ///< weighted rms of the phase fit
    cplx W0 = 0.0;  ///< W(0) = int u_0
    double t_first = 0.0, t_last = 0.0;
    double gate = 4.0;

    /// Linear interpolation with W(-xi) = conj W(xi) and the W(0) slot.
    cplx evaluate(double q) const {
        if (xi.empty()) {
            if (q == 0.0) return W0;
            throw DomainError("scattering profile is empty");
        }
        const double a = std::abs(q);
        if (a > xi.back() * (1.0 + 1e-12)) throw DomainError("xi outside the profile range");
        cplx w;
        if (a <= xi.front()) {
            const double f = a / xi.front();
            w = W0 * (1.0 - f) + W.front() * f;
        } else {
            const auto it = std::upper_bound(xi.begin(), xi.end(), a);
            const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - xi.begin()), xi.size() - 1);
            const double f = (a - xi[i - 1]) / (xi[i] - xi[i - 1]);
            w = W[i - 1] * (1.0 - f) + W[i] * f;
        }
        return q < 0.0 ? std::conj(w) : w;
    }

    std::size_t peak_index() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < W.size(); ++i)
            if (std::abs(W[i]) > std::abs(W[best])) best = i;
        return best;
    }
};

/// Per-frequency phase/modulus fit of u_hat against the modified-scattering law.
struct ProfileFit {
    double xi = 0.0;
    cplx W = 0.0;
    double modulus_sq = 0.0;  ///< mean |u_hat|^2 over the last decade
    double slope = 0.0;
    double slope_stderr = 0.0;
    double consistency = 0.0;
    double fit_residual = 0.0;
    double modulus_drift = 0.0;  ///< (max - min)/max of |u_hat| over the last decade
};

inline ProfileFit fit_frequency(std::span<const double> t, std::span<const cplx> uhat, double xi, Sign sigma) {
    const std::size_t n = t.size();
    std::vector<double> lt(n), raw(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const cplx z = uhat[i] * std::polar(1.0, -t[i] * xi * xi * xi / 3.0);
        lt[i] = std::log(t[i] * xi * xi * xi);
        raw[i] = std::arg(z);
        w[i] = std::abs(z);
    }
    ProfileFit pf;
    pf.xi = xi;
    const double t_cut = t[n - 1] / 10.0 * (1.0 - 1e-12);
    double sum = 0.0, sum2 = 0.0, lo = 0.0, hi = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (t[i] < t_cut) continue;
        sum += w[i];
        sum2 += w[i] * w[i];
        lo = cnt ? std::min(lo, w[i]) : w[i];
        hi = cnt ? std::max(hi, w[i]) : w[i];
        ++cnt;
    }
    const double modulus = sum / static_cast<double>(cnt);
    pf.modulus_sq = sum2 / static_cast<double>(cnt);
    pf.modulus_drift = hi > 0.0 ? (hi - lo) / hi : 0.0;
    if (modulus == 0.0) return pf;
    const auto phase = fit::unwrap(raw);
    const auto f = fit::line(lt, phase, w);
    pf.slope = f.slope;
    pf.slope_stderr = f.slope_stderr;
    pf.fit_residual = f.rms_residual;
    pf.W = std::polar(modulus, f.intercept);
    pf.consistency = std::abs(f.slope * 4.0 * std::numbers::pi / (3.0 * sigma.real()) - pf.modulus_sq) / pf.modulus_sq;
    return pf;
}

/// Extracts W(xi) on a set of positive frequencies from a snapshot ladder.
inline ScatteringProfile extract_profile(std::span<const Snapshot> snaps, std::span<const double> xi_grid, Sign sigma,
                                         double initial_mass, double gate = 4.0) {
    if (snaps.size() < 3) throw DomainError("extract_profile needs at least three snapshots");
    for (std::size_t i = 1; i < snaps.size(); ++i)
        if (!(snaps[i].t > snaps[i - 1].t)) throw DomainError("extract_profile: snapshot times must increase");
    const double t0 = snaps.front().t, t1 = snaps.back().t;
    if (!(t0 > 0.0) || t1 / t0 < std::pow(10.0, 1.5) * (1.0 - 1e-12))
        throw DomainError("extract_profile: snapshots must span at least 1.5 decades");
    ScatteringProfile p;
    p.sigma = sigma;
    p.W0 = initial_mass;
    p.t_first = t0;
    p.t_last = t1;
    p.gate = gate;
    std::vector<double> ts(snaps.size());
    for (std::size_t i = 0; i < snaps.size(); ++i) ts[i] = snaps[i].t;
    std::vector<double> xs(xi_grid.begin(), xi_grid.end());
    std::sort(xs.begin(), xs.end());
    for (double xi : xs) {
        if (!(xi > 0.0)) throw DomainError("extract_profile: frequencies must be positive");
        if (std::pow(t0, 2.0 / 3.0) * xi * xi < gate)
            throw DomainError("extract_profile: xi = " + std::to_string(xi) +
                              " is outside the oscillatory frequency region at the earliest snapshot");
        std::vector<cplx> uh(snaps.size());
        for (std::size_t i = 0; i < snaps.size(); ++i) uh[i] = fourier_at(snaps[i].u, xi);
        const ProfileFit f = fit_frequency(ts, uh, xi, sigma);
        p.xi.push_back(xi);
        p.W.push_back(f.W);
        p.slope.push_back(f.slope);
        p.slope_consistency.push_back(f.consistency);
        p.fit_residual.push_back(f.fit_residual);
    }
    return p;
}

/// Leading oscillatory term at (t, x), x < 0.
inline double oscillatory_prediction(double t, double x, const ScatteringProfile& prof, Sign sigma) {
    if (!(t > 0.0) || !(x < 0.0)) throw DomainError("oscillatory_prediction needs t > 0 and x < 0");
    const double a = -x;
    const double xi = std::sqrt(a / t);
    const cplx w = prof.evaluate(xi);
    const double s = a / std::cbrt(t);
    const double amp = std::pow(t, -1.0 / 3.0) * std::pow(s, -0.25) / std::sqrt(std::numbers::pi);
    const double phase = phase_phi(t, x) + 3.0 * sigma.real() / (4.0 * std::numbers::pi) * std::norm(w) *
                                               std::log(a * std::sqrt(a) / std::sqrt(t));
    return amp * (std::polar(1.0, phase) * w).real();
}

/// t^{-1/3} Q(t^{-1/3} x).
inline double selfsimilar_prediction(double t, double x, const PainleveSolution& Q) {
    if (!(t > 0.0)) throw DomainError("selfsimilar_prediction needs t > 0");
    const double c = std::cbrt(t);
    const double y = x / c;
    if (!Q.covers(y)) throw DomainError("selfsimilar_prediction: t^{-1/3} x outside the Painleve grid");
    return Q.value_at(y) / c;
}

/// Fourier-side prediction e^{i t xi^3/3 + (3 i sigma/4 pi)|W|^2 log(t xi^3)} W(xi).
inline cplx frequency_prediction(double t, double xi, const ScatteringProfile& prof, Sign sigma) {
    const cplx w = prof.evaluate(xi);
    const double ph = t * xi * xi * xi / 3.0 +
                      3.0 * sigma.real() / (4.0 * std::numbers::pi) * std::norm(w) * std::log(t * xi * xi * xi);
    return std::polar(1.0, ph) * w;
}

struct RegionNorms {
    double oscillatory_linf = 0.0;  ///< || t^{1/3} s^{3/8} err ||_inf on Omega^-
    double oscillatory_l2 = 0.0;  ///< || t^{1/6} s^{1/4} err ||_2 on Omega^-
    double decaying_linf = 0.0;  ///< || t^{1/3} s^{3/4} u ||_inf on Omega^+
    double decaying_l2 = 0.0;  ///< || t^{1/6} s u ||_2 on Omega^+
    double boundary_linf = 0.0;  ///< unweighted sup of err on the boundary bands
    double frequency_linf = 0.0;  ///< || (t^{1/3} xi)^{1/4} err_xi ||_inf
    double frequency_l2 = 0.0;  ///< || t^{1/6} (t^{1/3} xi)^{1/2} err_xi ||_2
    std::size_t oscillatory_nodes = 0, decaying_nodes = 0, boundary_nodes = 0, frequency_nodes = 0;
};

/// Weighted norms of err = u - prediction on the oscillatory region, of u on
/// the decaying region, and (with a profile) of u_hat minus its prediction on
/// the frequency region t^{1/3} xi >= c t^rho inside the profile range.
inline RegionNorms region_error_norms(const Field& u, const Field& prediction, const RegionPartition& part, double t,
                                      const ScatteringProfile* profile = nullptr) {
    part.validate();
    if (u.size() != prediction.size() || u.grid().half_width() != prediction.grid().half_width())
        throw DomainError("region_error_norms: fields live on different grids");
    const Grid& g = u.grid();
    const double dx = g.dx();
    const double c = std::cbrt(t);
    RegionNorms r;
    double osc2 = 0.0, dec2 = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double x = g.x(j);
        const double s = std::abs(x) / c;
        const double err = u[j] - prediction[j];
        switch (part.classify(t, x)) {
            case Region::oscillatory: {
                r.oscillatory_linf = std::max(r.oscillatory_linf, c * std::pow(s, 0.375) * std::abs(err));
                const double w = std::pow(t, 1.0 / 6.0) * std::pow(s, 0.25) * err;
                osc2 += w * w;
                ++r.oscillatory_nodes;
                break;
            }
            case Region::decaying: {
                r.decaying_linf = std::max(r.decaying_linf, c * std::pow(s, 0.75) * std::abs(u[j]));
                const double w = std::pow(t, 1.0 / 6.0) * s * u[j];
                dec2 += w * w;
                ++r.decaying_nodes;
                break;
            }
            case Region::boundary:
                r.boundary_linf = std::max(r.boundary_linf, std::abs(err));
                ++r.boundary_nodes;
                break;
            case Region::selfsimilar: break;
        }
    }
    r.oscillatory_l2 = std::sqrt(osc2 * dx);
    r.decaying_l2 = std::sqrt(dec2 * dx);
    if (profile && !profile->xi.empty()) {
        const auto& spec = u.spectrum();
        const double dk = g.k(1);
        const double lo = part.band * part.c_minus * std::pow(t, part.rho) / c;
        double f2 = 0.0;
        for (std::size_t m = 1; m < spec.size(); ++m) {
            const double xi = g.k(m);
            if (xi < lo || xi < profile->xi.front() || xi > profile->xi.back()) continue;
            const cplx e = spec[m] - frequency_prediction(t, xi, *profile, profile->sigma);
            const double z = c * xi;
            r.frequency_linf = std::max(r.frequency_linf, std::pow(z, 0.25) * std::abs(e));
            const double w = std::pow(t, 1.0 / 6.0) * std::sqrt(z) * std::abs(e);
            f2 += w * w;
            ++r.frequency_nodes;
        }
        r.frequency_l2 = std::sqrt(f2 * dk);
    }
    return r;
}

struct DecayReport {
    std::vector<double> t;
    std::vector<double> sup;  ///< ||u||_inf
    std::vector<double> weighted_sup;  ///< sup t^{1/3} <s>^{1/4} |u|
    std::vector<double> weighted_sup_x;  ///< sup t^{2/3} <s>^{-1/4} |u_x|
    double max_weighted = 0.0;
    double max_weighted_x = 0.0;
    std::optional<fit::LineFit> sup_slope;  ///< empty when the run is degenerate
};

/// Adds one time slice to a decay report (the fit is left to decay_finish).
inline void decay_sample(DecayReport& r, double t, const Field& u) {
    if (!(t > 0.0)) throw DomainError("decay_check needs t > 0");
    const Field ux = spectral_derivative(u, 1);
    const double c = std::cbrt(t);
    double sup = 0.0, ws = 0.0, wx = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double z = u.grid().x(j) / c;
        const double br = std::pow(1.0 + z * z, 0.125);  // <z>^{1/4}
        sup = std::max(sup, std::abs(u[j]));
        ws = std::max(ws, c * br * std::abs(u[j]));
        wx = std::max(wx, c * c / br * std::abs(ux[j]));
    }
    r.t.push_back(t);
    r.sup.push_back(sup);
    r.weighted_sup.push_back(ws);
    r.weighted_sup_x.push_back(wx);
    r.max_weighted = std::max(r.max_weighted, ws);
    r.max_weighted_x = std::max(r.max_weighted_x, wx);
}

inline void decay_finish(DecayReport& r) {
    bool degenerate = r.t.size() < 2;
    for (double v : r.sup) degenerate = degenerate || !(v > 0.0);
    r.sup_slope.reset();
    if (!degenerate) r.sup_slope = fit::loglog(r.t, r.sup);
}

inline DecayReport decay_check(std::span<const Snapshot> snaps) {
    DecayReport r;
    for (const auto& s : snaps) decay_sample(r, s.t, s.u);
    decay_finish(r);
    return r;
}

/// Smooth low-pass profile: 1 on |s| <= 1, 0 on |s| >= 2.
inline double lowpass_profile(double s) {
    s = std::abs(s);
    if (s <= 1.0) return 1.0;
    if (s >= 2.0) return 0.0;
    auto f = [](double z) { return z > 0.0 ? std::exp(-1.0 / z) : 0.0; };
    const double a = f(2.0 - s), b = f(s - 1.0);
    return a / (a + b);
}

struct SelfSimilarOptions {
    double y_extent = 4.0;  ///< U is resampled on |y| <= y_extent
    std::size_t ny = 401;
    double window = 2.0;  ///< Cauchy and residual sup over |y| <= window
    double eta_max = 8.0;  ///< low-pass at y-frequency eta_max (zero beyond 2 eta_max)
};

struct SelfSimilarSample {
    double t = 0.0;
    std::vector<double> U;
    double residual = 0.0;  ///< sup |y U - U_yy + 3 sigma U^3| on the window
};

struct SelfSimilarReport {
    std::vector<double> y;
    std::vector<SelfSimilarSample> samples;
    std::vector<std::pair<double, double>> cauchy;  ///< (t, ||U(2t) - U(t)||_inf on the window)
};

/// U(t,y) = t^{1/3} u(t, t^{1/3} y), built from a low-passed field so that
/// high-frequency radiation crossing the window (including radiation that has
/// wrapped around the periodic box) does not enter the comparison.
inline SelfSimilarReport selfsimilar_trace(std::span<const Snapshot> snaps, Sign sigma, const SelfSimilarOptions& opt = {}) {
    if (opt.ny < 5 || !(opt.y_extent > 0.0) || !(opt.window > 0.0) || !(opt.eta_max > 0.0))
        throw DomainError("selfsimilar_trace: invalid options");
    SelfSimilarReport rep;
    rep.y.resize(opt.ny);
    for (std::size_t j = 0; j < opt.ny; ++j)
        rep.y[j] = -opt.y_extent + 2.0 * opt.y_extent * static_cast<double>(j) / static_cast<double>(opt.ny - 1);
    for (const auto& s : snaps) {
        if (!(s.t > 0.0)) throw DomainError("selfsimilar_trace needs t > 0");
        const Grid& g = s.u.grid();
        const double c = std::cbrt(s.t);
        std::vector<cplx> spec = s.u.spectrum();
        std::size_t mmax = 0;
        for (std::size_t m = 0; m < spec.size(); ++m) {
            spec[m] *= lowpass_profile(g.k(m) * c / opt.eta_max);
            if (spec[m] != 0.0) mmax = m;
        }
        mmax = std::min(mmax, g.size() / 2 - 1);
        SelfSimilarSample smp;
        smp.t = s.t;
        smp.U.resize(opt.ny);
        const double norm = 1.0 / (2.0 * g.half_width());
        for (std::size_t j = 0; j < opt.ny; ++j) {
            const double y = rep.y[j], x = c * y;
            double a = spec[0].real(), b = 0.0;
            for (std::size_t m = 1; m <= mmax; ++m) {
                const double k = g.k(m);
                const double e = (spec[m] * std::polar(1.0, k * x)).real();
                a += 2.0 * e;
                b -= 2.0 * k * k * e;
            }
            const double U = c * a * norm;
            const double Uyy = c * c * c * b * norm;
            smp.U[j] = U;
            if (std::abs(y) <= opt.window + 1e-12)
                smp.residual = std::max(smp.residual, std::abs(y * U - Uyy + 3.0 * sigma.real() * U * U * U));
        }
        rep.samples.push_back(std::move(smp));
    }
    for (std::size_t i = 0; i < rep.samples.size(); ++i) {
        for (std::size_t k = i + 1; k < rep.samples.size(); ++k) {
            if (std::abs(rep.samples[k].t / rep.samples[i].t - 2.0) > 1e-6) continue;
            double d = 0.0;
            for (std::size_t j = 0; j < opt.ny; ++j)
                if (std::abs(rep.y[j]) <= opt.window + 1e-12)
                    d = std::max(d, std::abs(rep.samples[k].U[j] - rep.samples[i].U[j]));
            rep.cauchy.emplace_back(rep.samples[i].t, d);
            break;
        }
    }
    return rep;
}

}  // namespace mkdv
