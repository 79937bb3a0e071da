#pragma once

// Mode drivers: each reads an ExperimentConfig and writes its declared
// outputs plus manifest.json into one directory.

#include "mkdv/asymptotics.hpp"
#include "mkdv/completeness.hpp"
#include "mkdv/config.hpp"
#include "mkdv/evolve.hpp"
#include "mkdv/fit.hpp"
#include "mkdv/io.hpp"
#include "mkdv/painleve.hpp"
#include "mkdv/special.hpp"
#include "mkdv/wavepacket.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace mkdv {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_divergence = 3, exit_io = 4 };

struct RunOptions {
    std::filesystem::path out = "out";
    bool emit_plot_data = false;
    unsigned workers = 1;
};

/// --workers wins; then MKDV_WORKERS; then 1.
inline unsigned resolve_workers(std::optional<long long> cli) {
    long long w = 1;
    if (cli) {
        w = *cli;
    } else if (const char* env = std::getenv("MKDV_WORKERS"); env && *env) {
        char* end = nullptr;
        w = std::strtoll(env, &end, 10);
        if (*end != '\0') throw ConfigError("MKDV_WORKERS: expected a positive integer");
    }
    if (w < 1 || w > 256) throw ConfigError("workers must lie in [1, 256]");
    return static_cast<unsigned>(w);
}

namespace detail {

inline std::string tag(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::string indexed(const std::string& stem, std::size_t i, const std::string& ext) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    return stem + buf + ext;
}

class Sink {
public:
    Sink(io::OutputDir& dir, bool plot) : dir_(dir), plot_(plot) {}

    void csv(const std::string& rel, const io::Csv& c) {
        dir_.write_csv(rel, c);
        if (!plot_) return;
        std::string dat = "# ";
        for (char ch : c.str()) dat.push_back(ch == ',' ? ' ' : ch);
        auto stem = rel.substr(0, rel.rfind('.'));
        std::replace(stem.begin(), stem.end(), '/', '_');
        dir_.write("plot/" + stem + ".dat", dat);
    }
    void json(const std::string& rel, const io::json& j) { dir_.write_json(rel, j); }
    void snapshot(const std::string& rel, const Field& u, double t, Sign s) { dir_.write_snapshot(rel, u, t, s); }
    io::OutputDir& dir() { return dir_; }

private:
    io::OutputDir& dir_;
    bool plot_;
};

inline io::json grid_json(const GridSpec& g) { return {{"L", g.L}, {"n", g.n}}; }

inline io::json drift_json(const DriftStats& d) {
    return {{"E0", d.max_rel_E0}, {"E1", d.max_rel_E1}, {"E2", d.max_rel_E2}};
}

inline io::json fit_json(const std::optional<fit::LineFit>& f) {
    if (!f) return nullptr;
    return {{"slope", f->slope}, {"slope_stderr", f->slope_stderr}, {"intercept", f->intercept},
            {"rms_residual", f->rms_residual}, {"count", f->count}};
}

inline io::Csv trace_csv(const std::vector<TraceRow>& rows) {
    io::Csv c({"t", "E0", "E1", "E2", "Linf", "L2", "normL", "normLambda"});
    for (const auto& r : rows) c.row({r.t, r.E0, r.E1, r.E2, r.Linf, r.L2, r.normL, r.normLambda});
    return c;
}

inline InitialData make_initial(const ExperimentConfig& cfg) {
    return initial_data(make_grid(cfg.grid.L, cfg.grid.n), cfg.initial, cfg.sigma);
}

inline EvolveConfig evolve_config(const ExperimentConfig& cfg, double t_end) {
    EvolveConfig e = cfg.evolve;
    e.sigma = cfg.sigma;
    e.t1 = std::max(e.t1, t_end);
    return e;
}

/// Runs the nonlinear flow from the initial data to t_end and hands the
/// requested times to `on_time`.
inline EvolveResult evolve_with(const ExperimentConfig& cfg, std::vector<double> times, double t_end,
                                const std::function<void(double, const Field&)>& on_time) {
    const auto init = make_initial(cfg);
    EvolveConfig e = evolve_config(cfg, t_end);
    e.snapshot_times.clear();
    std::vector<Observer> obs{Observer{std::move(times), on_time}};
    return evolve(SolverState{e.t0, init.u, 0, {}}, e, obs);
}

inline void run_evolve(const ExperimentConfig& cfg, Sink& out) {
    const auto init = make_initial(cfg);
    EvolveConfig e = evolve_config(cfg, cfg.evolve.t1);
    std::size_t k = 0;
    io::json snaps = io::json::array();
    auto res = evolve(SolverState{e.t0, init.u, 0, {}}, e, {}, [&](double t, const Field& u) {
        const auto name = indexed("snapshots/snapshot_", k++, ".bin");
        out.snapshot(name, u, t, cfg.sigma);
        snaps.push_back({{"t", t}, {"file", name}});
    });
    out.csv("trace.csv", trace_csv(res.trace));
    // Fixed steps are checked by rerunning at dt/2.
    io::json halving = nullptr;
    if (e.dt_policy == DtPolicy::fixed) {
        EvolveConfig h = e;
        h.dt = e.dt / 2.0;
        h.snapshot_times.clear();
        h.callback_stride = 0;
        const auto fine = evolve(SolverState{h.t0, init.u, 0, {}}, h);
        const double d = norm_l2(axpby(1.0, res.state.u, -1.0, fine.state.u));
        const double ref = norm_l2(fine.state.u);
        halving = {{"dt_half", h.dt}, {"relative_l2_difference", ref > 0.0 ? d / ref : d}};
    }
    out.json("summary.json", {{"mode", "evolve"},
                              {"sigma", cfg.sigma.value()},
                              {"grid", grid_json(cfg.grid)},
                              {"t_final", res.state.t},
                              {"steps", res.state.steps},
                              {"h11_size", init.h11_size},
                              {"max_relative_drift", drift_json(res.state.drift)},
                              {"halving_check", halving},
                              {"snapshots", snaps}});
}

inline void run_linear(const ExperimentConfig& cfg, Sink& out) {
    const auto init = make_initial(cfg);
    const auto times = fit::geometric_times(cfg.linear.t_start, cfg.linear.t_end, cfg.linear.ratio);
    DecayReport rep;
    for (double t : times) decay_sample(rep, t, airy_propagate(init.u, t));
    decay_finish(rep);
    io::Csv c({"t", "Linf", "weighted_sup", "weighted_sup_x"});
    for (std::size_t i = 0; i < rep.t.size(); ++i) c.row({rep.t[i], rep.sup[i], rep.weighted_sup[i], rep.weighted_sup_x[i]});
    out.csv("linear_decay.csv", c);
    io::json snaps = io::json::array();
    for (std::size_t i = 0; i < cfg.evolve.snapshot_times.size(); ++i) {
        const double t = cfg.evolve.snapshot_times[i];
        const auto name = indexed("snapshots/linear_", i, ".bin");
        out.snapshot(name, airy_propagate(init.u, t), t, cfg.sigma);
        snaps.push_back({{"t", t}, {"file", name}});
    }
    out.json("linear.json", {{"mode", "linear"},
                             {"grid", grid_json(cfg.grid)},
                             {"t_start", cfg.linear.t_start},
                             {"t_end", cfg.linear.t_end},
                             {"sup_fit", fit_json(rep.sup_slope)},
                             {"max_weighted_sup", rep.max_weighted},
                             {"max_weighted_sup_x", rep.max_weighted_x},
                             {"snapshots", snaps}});
}

inline void run_probe(const ExperimentConfig& cfg, Sink& out) {
    const auto& p = cfg.probe;
    const auto times = fit::geometric_times(p.t_start, p.t_end, p.ratio);
    GammaProbe probe(p.velocities, times, cfg.sigma, p.gate, Envelope{p.envelope_power}, p.record_direct,
                     cfg.evolve.perturbation);
    {
        // Membership and box checks before the (long) evolution starts.
        const auto g = make_grid(cfg.grid.L, cfg.grid.n);
        const double vmax = *std::max_element(p.velocities.begin(), p.velocities.end());
        if (cfg.grid.L < 1.2 * vmax * p.t_end)
            throw ConfigError("$.grid.L: probe rays need L >= 1.2 v_max t_end = " + tag(1.2 * vmax * p.t_end));
        for (double v : p.velocities)
            for (double t : {times.front(), times.back()}) PacketSpec{v, p.gate, Envelope{p.envelope_power}}.check(t, *g);
    }
    auto res = evolve_with(cfg, times, p.t_end, [&](double t, const Field& u) { probe.record(t, u); });
    io::json summary = io::json::array();
    for (const auto& tr : probe.traces()) {
        io::Csv c({"t", "re_gamma", "im_gamma", "abs_gamma", "arg_unwrapped", "residual_abs"});
        const auto& r = tr.residual_direct.empty() ? tr.residual : tr.residual_direct;
        for (std::size_t i = 0; i < tr.t.size(); ++i)
            c.row({tr.t[i], tr.gamma[i].real(), tr.gamma[i].imag(), tr.modulus[i], tr.phase[i], i < r.size() ? r[i] : 0.0});
        out.csv("gamma_v" + tag(tr.v) + ".csv", c);
        const auto chk = gamma_law_check(tr, p.t_start, p.t_end);
        io::json phase = nullptr;
        if (tr.t.back() / tr.t.front() >= std::pow(10.0, 1.5) * (1.0 - 1e-12)) {
            const auto pf = ode_phase_solution(tr, cfg.sigma);
            phase = {{"slope", pf.slope}, {"slope_stderr", pf.slope_stderr}, {"predicted_slope", pf.predicted_slope},
                     {"consistency", pf.consistency}};
        }
        summary.push_back({{"v", tr.v},
                           {"modulus_drift", chk.modulus_drift},
                           {"residual_source", chk.direct ? "equation" : "differences"},
                           {"residual_fit", fit_json(chk.residual_fit)},
                           {"max_raw_phase_increment", tr.max_raw_increment},
                           {"phase_fit", phase}});
    }
    out.json("probe.json", {{"mode", "probe"},
                            {"sigma", cfg.sigma.value()},
                            {"grid", grid_json(cfg.grid)},
                            {"t_start", p.t_start},
                            {"t_end", p.t_end},
                            {"gate", p.gate},
                            {"envelope_power", p.envelope_power},
                            {"max_relative_drift", drift_json(res.state.drift)},
                            {"velocities", summary}});
}

inline std::vector<double> xi_grid(const ProfileSpec& p) {
    std::vector<double> xs;
    for (std::size_t i = 0; i < p.xi_count; ++i)
        xs.push_back(p.xi_count == 1 ? p.xi_min
                                     : p.xi_min + (p.xi_max - p.xi_min) * static_cast<double>(i) /
                                                      static_cast<double>(p.xi_count - 1));
    return xs;
}

inline void run_profile(const ExperimentConfig& cfg, Sink& out) {
    const auto& p = cfg.profile;
    const auto times = fit::geometric_times(p.t_start, p.t_end, p.ratio);
    const auto xs = xi_grid(p);
    for (double xi : xs)
        if (std::pow(times.front(), 2.0 / 3.0) * xi * xi < p.gate)
            throw ConfigError("$.profile.xi_min: frequency " + tag(xi) + " fails the gate at t_start");
    std::vector<Snapshot> snaps;
    const auto init = make_initial(cfg);
    double mass = 0.0;
    for (double v : init.u.samples()) mass += v;
    mass *= init.u.grid().dx();
    auto res = evolve_with(cfg, times, p.t_end, [&](double t, const Field& u) { snaps.push_back({t, u}); });
    const auto prof = extract_profile(snaps, xs, cfg.sigma, mass, p.gate);

    io::Csv c({"xi", "re_W", "im_W", "abs_W", "slope_consistency", "fit_residual"});
    for (std::size_t i = 0; i < prof.xi.size(); ++i)
        c.row({prof.xi[i], prof.W[i].real(), prof.W[i].imag(), std::abs(prof.W[i]), prof.slope_consistency[i],
               prof.fit_residual[i]});
    out.csv("profile.csv", c);

    const std::size_t pk = prof.peak_index();
    std::vector<double> ts;
    std::vector<cplx> uh;
    for (const auto& s : snaps) {
        ts.push_back(s.t);
        uh.push_back(fourier_at(s.u, prof.xi[pk]));
    }
    const auto peak = fit_frequency(ts, uh, prof.xi[pk], cfg.sigma);

    // Physical-side norms at the last snapshot, on the part of the
    // oscillatory region whose stationary frequency lies in the profiled band.
    const auto& last = snaps.back();
    std::vector<double> pred(last.u.size());
    for (std::size_t j = 0; j < pred.size(); ++j) {
        const double x = last.u.grid().x(j);
        const double xi = x < 0.0 ? std::sqrt(-x / last.t) : 0.0;
        pred[j] = (x < 0.0 && xi >= prof.xi.front() && xi <= prof.xi.back())
                      ? oscillatory_prediction(last.t, x, prof, cfg.sigma)
                      : last.u[j];
    }
    const auto norms = region_error_norms(last.u, Field(last.u.grid_ptr(), pred), cfg.regions, last.t, &prof);

    out.json("profile.json", {{"mode", "profile"},
                              {"sigma", cfg.sigma.value()},
                              {"grid", grid_json(cfg.grid)},
                              {"time_window", {p.t_start, p.t_end}},
                              {"snapshot_count", snaps.size()},
                              {"gate", p.gate},
                              {"gate_rule", "t^(2/3) xi^2 >= gate at the earliest snapshot"},
                              {"W0", prof.W0.real()},
                              {"peak", {{"xi", peak.xi},
                                        {"abs_W", std::abs(peak.W)},
                                        {"slope", peak.slope},
                                        {"slope_stderr", peak.slope_stderr},
                                        {"consistency", peak.consistency},
                                        {"modulus_drift_last_decade", peak.modulus_drift}}},
                              {"regions", {{"rho", cfg.regions.rho},
                                           {"c_plus", cfg.regions.c_plus},
                                           {"c_zero", cfg.regions.c_zero},
                                           {"c_minus", cfg.regions.c_minus},
                                           {"band", cfg.regions.band}}},
                              {"norms_at_t_end", {{"oscillatory_linf", norms.oscillatory_linf},
                                                  {"oscillatory_l2", norms.oscillatory_l2},
                                                  {"decaying_linf", norms.decaying_linf},
                                                  {"decaying_l2", norms.decaying_l2},
                                                  {"boundary_linf", norms.boundary_linf},
                                                  {"frequency_linf", norms.frequency_linf},
                                                  {"frequency_l2", norms.frequency_l2}}},
                              {"max_relative_drift", drift_json(res.state.drift)}});
}

inline void run_painleve(const ExperimentConfig& cfg, Sink& out) {
    const auto& p = cfg.painleve;
    const auto sol = solve_painleve(*p.W, cfg.sigma, p.options);
    io::Csv c({"y", "Q", "Qy", "residual"});
    for (std::size_t i = 0; i < sol.size(); ++i) c.row({sol.y(i), sol.Q[i], sol.Qy[i], sol.residual_at(i)});
    out.csv("painleve.csv", c);
    const auto m = right_match(sol, p.match_lo, p.match_hi);
    out.json("match.json", {{"W", m.W},
                            {"sigma", m.sigma.value()},
                            {"q_expected", m.q_expected},
                            {"q_observed", m.q_observed},
                            {"deviation", m.deviation},
                            {"window", {m.y_lo, m.y_hi}},
                            {"max_residual", sol.max_residual},
                            {"shoot_offset", sol.shoot_offset},
                            {"bi_raw", sol.bi_raw},
                            {"bi_refined", sol.bi_refined},
                            {"theta", special::theta_correction(*p.W)},
                            {"w_gate", cfg.sigma.value() == -1 ? io::json(1.0) : io::json(nullptr)}});
}

inline void run_selfsimilar(const ExperimentConfig& cfg, Sink& out) {
    const auto& p = cfg.selfsimilar;
    std::vector<Snapshot> snaps;
    auto res = evolve_with(cfg, p.times, p.times.back(), [&](double t, const Field& u) { snaps.push_back({t, u}); });
    const auto rep = selfsimilar_trace(snaps, cfg.sigma, p.options);
    std::vector<std::string> head{"y"};
    for (const auto& s : rep.samples) head.push_back("U_t" + tag(s.t));
    io::Csv c(head);
    for (std::size_t i = 0; i < rep.y.size(); ++i) {
        std::vector<double> row{rep.y[i]};
        for (const auto& s : rep.samples) row.push_back(s.U[i]);
        c.row(row);
    }
    out.csv("selfsimilar.csv", c);
    io::json res_j = io::json::array(), cau = io::json::array();
    for (const auto& s : rep.samples) res_j.push_back({{"t", s.t}, {"residual", s.residual}});
    for (const auto& [t, d] : rep.cauchy) cau.push_back({{"t", t}, {"difference", d}});
    auto decreasing = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] < v[i - 1])) return false;
        return v.size() >= 2;
    };
    std::vector<double> rs, cs;
    for (const auto& s : rep.samples) rs.push_back(s.residual);
    for (const auto& pr : rep.cauchy) cs.push_back(pr.second);
    out.json("selfsimilar.json", {{"mode", "selfsimilar"},
                                  {"sigma", cfg.sigma.value()},
                                  {"grid", grid_json(cfg.grid)},
                                  {"window", p.options.window},
                                  {"eta_max", p.options.eta_max},
                                  {"residuals", res_j},
                                  {"cauchy", cau},
                                  {"residual_decreasing", decreasing(rs)},
                                  {"cauchy_decreasing", decreasing(cs)},
                                  {"max_relative_drift", drift_json(res.state.drift)}});
}

inline PrescribedData prescribed_data(const PrescribedSpec& s) {
    const double a = s.amplitude, w = s.width;
    return PrescribedData::sample(s.half_width, s.n, [&](double z) { return a * std::exp(-z * z / (w * w)); });
}

inline io::json table_json(const QTableMeta& m) {
    return {{"w_max", m.w_max}, {"dw", m.dw}, {"y_min", m.y_min}, {"y_max", m.y_max}, {"dy", m.dy},
            {"max_residual", m.max_residual}, {"max_shoot_offset", m.max_shoot_offset},
            {"max_right_deviation", m.max_right_deviation}, {"sigma", m.sigma},
            {"interpolation", "cubic Hermite in y, linear in w"},
            {"extension", "left asymptote below y_min, q_sigma(w) Ai(y) above y_max"}};
}

inline QTableOptions table_options(const ExperimentConfig& cfg, unsigned workers) {
    QTableOptions q = cfg.qtable;
    q.workers = workers;
    return q;
}

inline void run_appdata(const ExperimentConfig& cfg, Sink& out, unsigned workers) {
    const auto W = prescribed_data(cfg.prescribed);
    const QTable table(cfg.sigma, table_options(cfg, workers));
    std::vector<std::string> head{"z", "W"};
    for (double N : W.band_labels()) head.push_back(N <= 1.0 ? "W_le1" : "W_" + tag(N));
    io::Csv bands(head);
    for (std::size_t j = 0; j < W.size(); ++j) {
        std::vector<double> row{W.z(j), W.samples()[j]};
        for (const auto& b : W.bands()) row.push_back(b[j]);
        bands.row(row);
    }
    out.csv("bands.csv", bands);

    std::vector<std::string> rh{"z"};
    for (double t : cfg.appdata.times) rh.push_back("Wreg_t" + tag(t));
    io::Csv reg(rh);
    for (std::size_t j = 0; j < W.size(); ++j) {
        std::vector<double> row{W.z(j)};
        for (double t : cfg.appdata.times) row.push_back(regularized_W(W, t, W.z(j)));
        reg.row(row);
    }
    out.csv("regularized.csv", reg);

    const auto g = make_grid(cfg.grid.L, cfg.grid.n);
    io::json snaps = io::json::array();
    for (std::size_t i = 0; i < cfg.appdata.times.size(); ++i) {
        const double t = cfg.appdata.times[i];
        const Field u = u_app_field(g, t, W, table);
        const auto name = indexed("snapshots/u_app_", i, ".bin");
        out.snapshot(name, u, t, cfg.sigma);
        snaps.push_back({{"t", t}, {"file", name}, {"L2", norm_l2(u)}, {"Linf", norm_inf(u)}});
    }
    const double eps = W.max_abs();
    const double expo = cfg.prescribed.smallness_C * eps * eps;
    io::json labels = io::json::array();
    for (double N : W.band_labels()) labels.push_back(N);
    out.json("appdata.json", {{"mode", "appdata"},
                              {"sigma", cfg.sigma.value()},
                              {"prescribed", {{"amplitude", cfg.prescribed.amplitude},
                                              {"width", cfg.prescribed.width},
                                              {"half_width", cfg.prescribed.half_width},
                                              {"n", cfg.prescribed.n}}},
                              {"smallness", {{"exponent", expo}, {"C", cfg.prescribed.smallness_C}, {"value", W.smallness(expo)}}},
                              {"band_labels", labels},
                              {"table_meta", table_json(table.meta())},
                              {"snapshots", snaps}});
}

inline io::json match_json(const MatchReport& r) {
    io::json e = io::json::array();
    for (const auto& s : r.samples) e.push_back({s.t, s.e_l2, s.e_weighted_sup});
    return {{"sigma", r.sigma},
            {"T0", r.T0},
            {"horizon", r.horizon},
            {"e_samples", e},
            {"e_samples_columns", {"t", "e_L2", "e_weighted_sup"}},
            {"uapp_norm_T0", r.uapp_norm},
            {"steps", r.steps},
            {"max_relative_drift", drift_json(r.drift)},
            {"table_meta", table_json(r.table_meta)}};
}

/// Runs f(i) for i < n on at most `workers` threads; the first exception
/// (by index) is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& f) {
    std::vector<std::exception_ptr> errs(n);
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                f(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    const unsigned nt = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
    if (nt <= 1) {
        body();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < nt; ++w) pool.emplace_back(body);
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

inline void run_complete(const ExperimentConfig& cfg, Sink& out, unsigned workers) {
    const auto W = prescribed_data(cfg.prescribed);
    const QTable table(cfg.sigma, table_options(cfg, workers));
    const auto& c = cfg.complete;
    std::vector<MatchReport> reps(c.T0.size());
    parallel_for(c.T0.size(), workers, [&](std::size_t i) { reps[i] = match_experiment(W, table, c.T0[i], c.horizon, c.match); });
    io::json finals = io::json::array();
    for (std::size_t i = 0; i < reps.size(); ++i) {
        out.json("complete_T0_" + tag(reps[i].T0) + ".json", match_json(reps[i]));
        io::Csv csv({"t", "e_L2", "e_weighted_sup"});
        for (const auto& s : reps[i].samples) csv.row({s.t, s.e_l2, s.e_weighted_sup});
        out.csv("complete_T0_" + tag(reps[i].T0) + ".csv", csv);
        const double e = reps[i].samples.back().e_l2;
        io::json row = {{"T0", reps[i].T0}, {"e_horizon", e}};
        if (i > 0) {
            const double prev = reps[i - 1].samples.back().e_l2;
            row["ratio_to_previous"] = prev > 0.0 ? io::json(e / prev) : io::json(nullptr);
        }
        finals.push_back(row);
    }
    out.json("complete.json", {{"mode", "complete"},
                               {"sigma", cfg.sigma.value()},
                               {"horizon", c.horizon},
                               {"grid", {{"L", c.match.half_width}, {"n", c.match.n}}},
                               {"prescribed", {{"amplitude", cfg.prescribed.amplitude}, {"width", cfg.prescribed.width}}},
                               {"e_at_horizon", finals},
                               {"table_meta", table_json(table.meta())}});
}

}  // namespace detail

inline void run_experiment(const ExperimentConfig& cfg, const RunOptions& opt);

namespace detail {

inline void run_sweep(const ExperimentConfig& cfg, io::OutputDir& dir, const RunOptions& opt) {
    const auto& runs = cfg.sweep;
    std::vector<std::string> status(runs.size()), message(runs.size());
    std::vector<int> codes(runs.size(), exit_ok);
    std::vector<std::unique_ptr<io::OutputDir>> dirs(runs.size());
    parallel_for(runs.size(), opt.workers, [&](std::size_t i) {
        RunOptions sub{dir.root() / "runs" / runs[i].name, opt.emit_plot_data, 1};
        try {
            const auto child = parse_config_json(runs[i].config);
            run_experiment(child, sub);
            status[i] = "ok";
        } catch (const ConfigError& e) {
            status[i] = "config_error", message[i] = e.what(), codes[i] = exit_config;
        } catch (const DomainError& e) {
            status[i] = "config_error", message[i] = e.what(), codes[i] = exit_config;
        } catch (const DivergenceError& e) {
            status[i] = "divergence", message[i] = e.what(), codes[i] = exit_divergence;
        } catch (const IoError& e) {
            status[i] = "io_error", message[i] = e.what(), codes[i] = exit_io;
        }
    });
    io::json rows = io::json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        rows.push_back({{"name", runs[i].name}, {"status", status[i]}, {"message", message[i]}});
        const auto sub = dir.root() / "runs" / runs[i].name;
        if (std::filesystem::exists(sub / "manifest.json")) dir.adopt_manifest("runs/" + runs[i].name, sub);
    }
    dir.write_json("sweep.json", {{"mode", "sweep"}, {"runs", rows}});
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const std::string what = "sweep run \"" + runs[i].name + "\" failed: " + message[i];
        if (codes[i] == exit_config) throw ConfigError(what);
        if (codes[i] == exit_divergence) throw DivergenceError(what, 0.0);
        if (codes[i] == exit_io) throw IoError(what);
    }
}

}  // namespace detail

/// Executes one experiment and writes manifest.json last.
inline void run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
    io::OutputDir dir(opt.out);
    detail::Sink out(dir, opt.emit_plot_data);
    out.json("config.json", cfg.source);
    const std::string& m = cfg.mode;
    if (m == "evolve") detail::run_evolve(cfg, out);
    else if (m == "linear") detail::run_linear(cfg, out);
    else if (m == "probe") detail::run_probe(cfg, out);
    else if (m == "profile") detail::run_profile(cfg, out);
    else if (m == "painleve") detail::run_painleve(cfg, out);
    else if (m == "selfsimilar") detail::run_selfsimilar(cfg, out);
    else if (m == "appdata") detail::run_appdata(cfg, out, opt.workers);
    else if (m == "complete") detail::run_complete(cfg, out, opt.workers);
    else if (m == "sweep") detail::run_sweep(cfg, dir, opt);
    else throw ConfigError("$.mode: unknown mode \"" + m + "\"");
    dir.finish();
}

}  // namespace mkdv
