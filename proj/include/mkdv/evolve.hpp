#pragma once

// Nonlinear mKdV time integration: integrating-factor RK4 (Lawson) around
// the exact Airy multiplier, with a 2/3-dealiased pseudospectral cubic.

#include "mkdv/error.hpp"
#include "mkdv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mkdv {

/// Short-range perturbation F(u) = c |u|^{p-1} u, p > 3.
struct Perturbation {
    double p = 5.0;
    double c = 0.0;
    double operator()(double u) const { return c * std::pow(std::abs(u), p - 1.0) * u; }
};

enum class DtPolicy { fixed, nonlinear_cfl };

struct EvolveConfig {
    Sign sigma = Sign::plus();
    double t0 = 0.0;
    double t1 = 1.0;
    double dt = 1e-2;
    DtPolicy dt_policy = DtPolicy::fixed;
    double cfl = 0.5;
    std::optional<Perturbation> perturbation;
    std::vector<double> snapshot_times;
    std::size_t callback_stride = 0;  ///< trace row every this many steps; 0 = ends only
    bool sponge = false;
    double sponge_strength = 1.0;
    bool vector_fields = true;  ///< compute ||Lu||, ||Lambda u|| in trace rows

    void validate() const {
        if (!(t0 >= 0.0) || !(t1 > t0)) throw ConfigError("evolve: need t1 > t0 >= 0");
        if (!(dt > 0.0)) throw ConfigError("evolve: dt must be positive");
        if (perturbation && !(perturbation->p > 3.0)) throw ConfigError("evolve: perturbation exponent p must exceed 3");
        if (!(cfl > 0.0)) throw ConfigError("evolve: cfl must be positive");
        if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end()))
            throw ConfigError("evolve: snapshot_times must be sorted");
    }
};

struct DriftStats {
    ConservedTriple initial;
    double max_rel_E0 = 0.0;
    double max_rel_E1 = 0.0;
    double max_rel_E2 = 0.0;

    void update(const ConservedTriple& c) {
        auto rel = [](double now, double ref) {
            const double d = std::abs(now - ref);
            return ref != 0.0 ? d / std::abs(ref) : d;
        };
        max_rel_E0 = std::max(max_rel_E0, rel(c.E0, initial.E0));
        max_rel_E1 = std::max(max_rel_E1, rel(c.E1, initial.E1));
        max_rel_E2 = std::max(max_rel_E2, rel(c.E2, initial.E2));
    }
};

struct SolverState {
    double t = 0.0;
    Field u;
    std::size_t steps = 0;
    DriftStats drift;
};

/// del_x(sigma u^3 + F(u)): cube in physical space, dealias, differentiate.
inline Field nonlinearity(const Field& u, Sign sigma, const std::optional<Perturbation>& pert = std::nullopt) {
    std::vector<double> cube(u.size());
    for (std::size_t j = 0; j < cube.size(); ++j) {
        const double v = u[j];
        cube[j] = sigma.real() * v * v * v + (pert ? (*pert)(v) : 0.0);
    }
    const Field c(u.grid_ptr(), std::move(cube));
    const double kc = dealias_cutoff(u.grid());
    const std::size_t nyq = u.grid().size() / 2;
    return apply_multiplier(c, [&](std::size_t m, double k) -> cplx {
        if (m == nyq || k > kc) return 0.0;
        return cplx(0.0, k);
    });
}

/// ||Lu|| and ||Lambda u|| with L = S(t) x S(-t) = x - t d_xx and
/// Lambda u = Lu + 3 t sigma u^3. L is evaluated in its conjugated form so that
/// radiation which has wrapped around the periodic box is weighted by its
/// unwrapped position.
struct VectorFieldNorms {
    double norm_L = 0.0;
    double norm_Lambda = 0.0;
};

inline Field galilean_field(const Field& u, double t) {
    Field profile = airy_propagate(u, -t);
    auto s = profile.samples_mut();
    for (std::size_t j = 0; j < s.size(); ++j) s[j] *= u.grid().x(j);
    return airy_propagate(profile, t);
}

inline VectorFieldNorms vector_field_diagnostics(const Field& u, double t, Sign sigma) {
    if (!(t > 0.0)) throw DomainError("vector field diagnostics need t > 0");
    const Field Lu = galilean_field(u, t);
    double sL = 0.0, sLam = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double v = u[j];
        const double lam = Lu[j] + 3.0 * t * sigma.real() * v * v * v;
        sL += Lu[j] * Lu[j];
        sLam += lam * lam;
    }
    const double dx = u.grid().dx();
    return {std::sqrt(sL * dx), std::sqrt(sLam * dx)};
}

/// Integrating-factor RK4 stepper working on the half-complex spectrum.
class IfRk4 {
public:
    IfRk4(GridPtr grid, Sign sigma, std::optional<Perturbation> pert = std::nullopt)
        : grid_(std::move(grid)), sigma_(sigma), pert_(pert) {
        const std::size_t ns = grid_->spectrum_size();
        deriv_.resize(ns);
        const double kc = dealias_cutoff(*grid_);
        for (std::size_t m = 0; m < ns; ++m) {
            const double k = grid_->k(m);
            deriv_[m] = (m == ns - 1 || k > kc) ? cplx(0.0) : cplx(0.0, k);
        }
        phys_.resize(grid_->size());
        tmp_.resize(ns);
        for (auto* v : {&k1_, &k2_, &k3_, &k4_, &stage_}) v->resize(ns);
    }

    const Grid& grid() const { return *grid_; }

    /// Projects onto the retained (dealiased) band.
    void project(std::vector<cplx>& spec) const {
        for (std::size_t m = 0; m < spec.size(); ++m)
            if (deriv_[m] == cplx(0.0) && m != 0) spec[m] = 0.0;
    }

    /// N(u_hat) = ik * P(sigma u^3 + F(u))^ in scaled spectral form.
    void rhs(const std::vector<cplx>& spec, std::vector<cplx>& out) {
        const std::size_t ns = spec.size();
        const double scale = 1.0 / (2.0 * grid_->half_width());
        for (std::size_t m = 0; m < ns; ++m) tmp_[m] = spec[m] * (m % 2 ? -scale : scale);
        grid_->plan().backward(tmp_, phys_);
        double amp = 0.0;
        for (double v : phys_) amp = std::isnan(v) ? v : std::max(amp, std::abs(v));
        last_amp_ = amp;
        const double s = sigma_.real();
        for (double& v : phys_) v = s * v * v * v + (pert_ ? (*pert_)(v) : 0.0);
        grid_->plan().forward(phys_, out);
        const double dx = grid_->dx();
        for (std::size_t m = 0; m < ns; ++m) out[m] *= deriv_[m] * (m % 2 ? -dx : dx);
    }

    /// Sup norm of the state at the start of the most recent step.
    double last_amplitude() const noexcept { return start_amp_; }

    /// One Lawson-RK4 step of size h, in place.
    void step(std::vector<cplx>& u, double h) {
        const auto& [Eh, Eh2] = factors(h);
        const std::size_t ns = u.size();
        rhs(u, k1_);
        start_amp_ = last_amp_;
        for (std::size_t m = 0; m < ns; ++m) stage_[m] = Eh2[m] * (u[m] + 0.5 * h * k1_[m]);
        rhs(stage_, k2_);
        for (std::size_t m = 0; m < ns; ++m) stage_[m] = Eh2[m] * u[m] + 0.5 * h * k2_[m];
        rhs(stage_, k3_);
        for (std::size_t m = 0; m < ns; ++m) stage_[m] = Eh[m] * u[m] + h * Eh2[m] * k3_[m];
        rhs(stage_, k4_);
        for (std::size_t m = 0; m < ns; ++m)
            u[m] = Eh[m] * u[m] + h / 6.0 * (Eh[m] * k1_[m] + 2.0 * Eh2[m] * (k2_[m] + k3_[m]) + k4_[m]);
    }

private:
    struct Factors {
        std::vector<cplx> full, half;
    };

    std::pair<const std::vector<cplx>&, const std::vector<cplx>&> factors(double h) {
        for (auto& [key, f] : cache_)
            if (key == h) return {f.full, f.half};
        if (cache_.size() >= 4) cache_.erase(cache_.begin());
        Factors f;
        const std::size_t ns = grid_->spectrum_size();
        f.full.resize(ns);
        f.half.resize(ns);
        for (std::size_t m = 0; m < ns; ++m) {
            const double k = grid_->k(m);
            const double w = (m == ns - 1) ? 0.0 : k * k * k / 3.0;
            f.full[m] = std::polar(1.0, w * h);
            f.half[m] = std::polar(1.0, w * h / 2.0);
        }
        cache_.emplace_back(h, std::move(f));
        return {cache_.back().second.full, cache_.back().second.half};
    }

    GridPtr grid_;
    Sign sigma_;
    std::optional<Perturbation> pert_;
    std::vector<cplx> deriv_;
    std::vector<double> phys_;
    std::vector<cplx> tmp_, k1_, k2_, k3_, k4_, stage_;
    std::vector<std::pair<double, Factors>> cache_;
    double last_amp_ = 0.0;
    double start_amp_ = 0.0;
};

/// Single step on a SolverState (convenience wrapper around IfRk4).
inline SolverState step_ifrk4(const SolverState& s, double dt, Sign sigma,
                              const std::optional<Perturbation>& pert = std::nullopt) {
    IfRk4 stepper(s.u.grid_ptr(), sigma, pert);
    std::vector<cplx> spec = s.u.spectrum();
    const double before = norm_inf(s.u);
    stepper.step(spec, dt);
    SolverState out{s.t + dt, Field::from_spectrum(s.u.grid_ptr(), std::move(spec)), s.steps + 1, s.drift};
    const double after = norm_inf(out.u);
    if (!std::isfinite(after) || (before > 0.0 && after > 1e3 * before))
        throw DivergenceError("amplitude blow-up at t = " + std::to_string(out.t), out.t);
    return out;
}

struct TraceRow {
    double t, E0, E1, E2, Linf, L2, normL, normLambda;
};

/// Callback invoked with read-only snapshots at prescribed times.
struct Observer {
    std::vector<double> times;
    std::function<void(double, const Field&)> on_time;
};

struct EvolveResult {
    SolverState state;
    std::vector<TraceRow> trace;
};

inline TraceRow make_trace_row(double t, const Field& u, Sign sigma, bool vector_fields) {
    const ConservedTriple c = conserved(u, sigma);
    TraceRow r{t, c.E0, c.E1, c.E2, norm_inf(u), norm_l2(u), 0.0, 0.0};
    if (vector_fields && t > 0.0) {
        const auto vf = vector_field_diagnostics(u, t, sigma);
        r.normL = vf.norm_L;
        r.normLambda = vf.norm_Lambda;
    }
    return r;
}

/// Smooth absorbing profile supported in the outer 5% of the box.
inline std::vector<double> sponge_profile(const Grid& g, double strength) {
    std::vector<double> s(g.size(), 0.0);
    const double L = g.half_width();
    const double inner = 0.95 * L;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double d = (std::abs(g.x(j)) - inner) / (L - inner);
        if (d > 0.0) s[j] = strength * std::pow(std::sin(0.5 * std::numbers::pi * std::min(d, 1.0)), 2);
    }
    return s;
}

/// Integrates from s.t to cfg.t1. Observer and snapshot times are hit
/// exactly by shortening the step that would overshoot them.
inline EvolveResult evolve(SolverState s, const EvolveConfig& cfg, std::span<Observer> observers = {},
                           std::function<void(double, const Field&)> on_snapshot = {}) {
    cfg.validate();
    if (s.t < cfg.t0 || s.t > cfg.t1) throw DomainError("solver state time outside the configured span");
    IfRk4 stepper(s.u.grid_ptr(), cfg.sigma, cfg.perturbation);
    const GridPtr grid = s.u.grid_ptr();

    std::vector<cplx> spec = s.u.spectrum();
    stepper.project(spec);
    s.u = Field::from_spectrum(grid, spec);
    s.drift.initial = conserved(s.u, cfg.sigma);

    // Merged stop list: (time, observer index or -1 for snapshot).
    std::vector<std::pair<double, int>> stops;
    for (double t : cfg.snapshot_times)
        if (t >= s.t && t <= cfg.t1) stops.emplace_back(t, -1);
    for (std::size_t i = 0; i < observers.size(); ++i)
        for (double t : observers[i].times)
            if (t >= s.t && t <= cfg.t1) stops.emplace_back(t, static_cast<int>(i));
    std::stable_sort(stops.begin(), stops.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    const std::vector<double> sponge =
        cfg.sponge ? sponge_profile(*grid, cfg.sponge_strength) : std::vector<double>{};

    EvolveResult res{s, {}};
    res.trace.push_back(make_trace_row(s.t, s.u, cfg.sigma, cfg.vector_fields));

    const double u0_inf = std::max(norm_inf(s.u), std::numeric_limits<double>::min());
    std::size_t next_stop = 0;
    auto fire_stops = [&](double t, const Field& u) {
        while (next_stop < stops.size() && stops[next_stop].first <= t * (1.0 + 1e-14)) {
            const int who = stops[next_stop].second;
            if (who < 0) {
                if (on_snapshot) on_snapshot(t, u);
            } else if (observers[who].on_time) {
                observers[who].on_time(t, u);
            }
            ++next_stop;
        }
    };
    fire_stops(s.t, s.u);

    double t = s.t;
    std::size_t steps = s.steps;
    double amp_now = norm_inf(s.u);
    const double tol = 1e-12 * std::max(1.0, cfg.t1);
    while (t < cfg.t1 - tol) {
        double h = cfg.dt;
        if (cfg.dt_policy == DtPolicy::nonlinear_cfl) {
            const double bound = cfg.cfl / (dealias_cutoff(*grid) * std::max(3.0 * amp_now * amp_now, 1e-300));
            h = std::min(h, bound);
        }
        double target = cfg.t1;
        if (next_stop < stops.size()) target = std::min(target, stops[next_stop].first);
        bool hit = false;
        if (t + h >= target - tol) {
            h = target - t;
            hit = true;
        }
        stepper.step(spec, h);
        amp_now = stepper.last_amplitude();
        t = hit ? target : t + h;
        ++steps;

        const bool stride_row = cfg.callback_stride > 0 && steps % cfg.callback_stride == 0;
        const bool at_stop = next_stop < stops.size() && stops[next_stop].first <= t * (1.0 + 1e-14);
        const bool at_end = t >= cfg.t1 - tol;
        if (!sponge.empty() || stride_row || at_stop || at_end || steps % 64 == 0) {
            Field u = Field::from_spectrum(grid, spec);
            if (!sponge.empty()) {
                auto w = u.samples_mut();
                for (std::size_t j = 0; j < w.size(); ++j) w[j] *= 1.0 - h * sponge[j];
                spec = u.spectrum();
            }
            const double amp = norm_inf(u);
            if (!std::isfinite(amp) || amp > 1e3 * u0_inf)
                throw DivergenceError("amplitude blow-up at t = " + std::to_string(t), t);
            if (stride_row || at_end) {
                res.trace.push_back(make_trace_row(t, u, cfg.sigma, cfg.vector_fields));
                s.drift.update({res.trace.back().E0, res.trace.back().E1, res.trace.back().E2});
            }
            if (at_stop) {
                s.drift.update(conserved(u, cfg.sigma));
                fire_stops(t, u);
            }
        }
    }
    s.t = cfg.t1;
    s.steps = steps;
    s.u = Field::from_spectrum(grid, spec);
    s.drift.update(conserved(s.u, cfg.sigma));
    res.state = std::move(s);
    return res;
}

enum class InitialKind { gaussian, sech, soliton, custom };

struct InitialSpec {
    InitialKind kind = InitialKind::gaussian;
    double amplitude = 0.0;  ///< epsilon; for soliton, the wavenumber k
    double width = 1.0;
    double center = 0.0;
    std::vector<double> samples;  ///< custom only
};

struct InitialData {
    Field u;
    double h11_size = 0.0;  ///< ||<x>u|| + ||u|| + ||u_x||
};

inline double h11_size(const Field& u) {
    const Field ux = spectral_derivative(u, 1);
    double a = 0.0, b = 0.0, c = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double x = u.grid().x(j);
        a += (1.0 + x * x) * u[j] * u[j];
        b += u[j] * u[j];
        c += ux[j] * ux[j];
    }
    const double dx = u.grid().dx();
    return std::sqrt(a * dx) + std::sqrt(b * dx) + std::sqrt(c * dx);
}

inline InitialData initial_data(GridPtr g, const InitialSpec& spec, Sign sigma) {
    if (!std::isfinite(spec.amplitude) || !std::isfinite(spec.width) || !std::isfinite(spec.center))
        throw DomainError("initial data parameters must be finite");
    if (spec.kind != InitialKind::custom && !(spec.width > 0.0))
        throw DomainError("initial data width must be positive");
    Field u(g);
    switch (spec.kind) {
        case InitialKind::gaussian:
            u = sample(g, [&](double x) {
                const double z = (x - spec.center) / spec.width;
                return spec.amplitude * std::exp(-z * z);
            });
            break;
        case InitialKind::sech:
            u = sample(g, [&](double x) { return spec.amplitude / std::cosh((x - spec.center) / spec.width); });
            break;
        case InitialKind::soliton: {
            if (sigma.value() != -1) throw DomainError("solitons exist only for sigma = -1");
            const double k = spec.amplitude;
            u = sample(g, [&](double x) { return std::sqrt(2.0 / 3.0) * k / std::cosh(k * (x - spec.center)); });
            break;
        }
        case InitialKind::custom:
            u = Field(g, spec.samples);
            break;
    }
    const double size = h11_size(u);
    return {std::move(u), size};
}

/// Exact sigma = -1 soliton sqrt(2/3) k sech(k (x - c - k^2 t / 3)).
inline double soliton_profile(double x, double t, double k, double center = 0.0) {
    return std::sqrt(2.0 / 3.0) * k / std::cosh(k * (x - center - k * k * t / 3.0));
}

}  // namespace mkdv
