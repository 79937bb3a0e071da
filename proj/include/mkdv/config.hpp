#pragma once

// Experiment configuration: strict JSON schema with field-path diagnostics.
// Every section is optional and defaulted; unknown keys are rejected.

#include "mkdv/asymptotics.hpp"
#include "mkdv/completeness.hpp"
#include "mkdv/error.hpp"
#include "mkdv/evolve.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mkdv {

using json = nlohmann::json;

inline constexpr int config_version = 1;

inline constexpr std::array<const char*, 9> mode_names = {"evolve",  "linear",      "probe",   "profile", "painleve",
                                                          "selfsimilar", "appdata", "complete", "sweep"};

struct GridSpec {
    double L = 2048.0;
    std::size_t n = 16384;
};

struct ProbeSpec {
    std::vector<double> velocities{0.25};
    double t_start = 200.0, t_end = 2000.0, ratio = 1.02;
    double gate = 4.0;
    int envelope_power = 3;
    bool record_direct = true;
};

struct ProfileSpec {
    double xi_min = 0.52, xi_max = 1.0;
    std::size_t xi_count = 25;
    double t_start = 60.0, t_end = 2000.0, ratio = 1.02;
    double gate = 4.0;
};

struct PainleveSpec {
    std::optional<double> W;
    PainleveOptions options{};
    double match_lo = 3.0, match_hi = 5.0;
};

struct SelfSimilarSpec {
    std::vector<double> times{250.0, 500.0, 1000.0, 2000.0};
    SelfSimilarOptions options{};
};

struct LinearSpec {
    double t_start = 10.0, t_end = 1e4, ratio = 1.2589254117941673;  // ten per decade
};

struct PrescribedSpec {
    double amplitude = 0.2;
    double width = 0.5;  ///< W(z) = amplitude exp(-z^2 / width^2)
    double half_width = 16.0;
    std::size_t n = 4096;
    double smallness_C = 1.0;
};

struct CompleteSpec {
    std::vector<double> T0{100.0, 200.0, 400.0};
    double horizon = 4.0;
    MatchOptions match{};
};

struct AppdataSpec {
    std::vector<double> times{100.0, 400.0};
};

struct SweepRun {
    std::string name;
    json config;  ///< merged base + overrides, parsed when the run starts
};

struct ExperimentConfig {
    int version = config_version;
    std::string mode;
    Sign sigma = Sign::plus();
    GridSpec grid;
    EvolveConfig evolve;
    InitialSpec initial{InitialKind::gaussian, 0.2, 1.0, 0.0, {}};
    ProbeSpec probe;
    ProfileSpec profile;
    PainleveSpec painleve;
    SelfSimilarSpec selfsimilar;
    RegionPartition regions;
    LinearSpec linear;
    PrescribedSpec prescribed;
    QTableOptions qtable;
    CompleteSpec complete;
    AppdataSpec appdata;
    std::vector<SweepRun> sweep;
    json source;  ///< the document this config was parsed from
};

namespace detail {

/// Typed access to one JSON object; remembers consumed keys so that
/// done() can reject the rest with their full paths.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& k) const { return j_.contains(k); }
    std::string at(const std::string& k) const { return path_ + "." + k; }

    double num(const std::string& k, double def) {
        if (!take(k)) return def;
        const auto& v = j_[k];
        if (!v.is_number()) throw ConfigError(at(k) + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(at(k) + ": must be finite");
        return d;
    }
    double positive(const std::string& k, double def) {
        const double d = num(k, def);
        if (!(d > 0.0)) throw ConfigError(at(k) + ": must be positive");
        return d;
    }
    long long integer(const std::string& k, long long def) {
        if (!take(k)) return def;
        const auto& v = j_[k];
        if (!v.is_number_integer()) throw ConfigError(at(k) + ": expected an integer");
        return v.get<long long>();
    }
    std::size_t count(const std::string& k, std::size_t def) {
        const long long v = integer(k, static_cast<long long>(def));
        if (v < 0) throw ConfigError(at(k) + ": must be non-negative");
        return static_cast<std::size_t>(v);
    }
    bool flag(const std::string& k, bool def) {
        if (!take(k)) return def;
        if (!j_[k].is_boolean()) throw ConfigError(at(k) + ": expected true or false");
        return j_[k].get<bool>();
    }
    std::string text(const std::string& k, const std::string& def) {
        if (!take(k)) return def;
        if (!j_[k].is_string()) throw ConfigError(at(k) + ": expected a string");
        return j_[k].get<std::string>();
    }
    std::vector<double> list(const std::string& k, std::vector<double> def) {
        if (!take(k)) return def;
        const auto& v = j_[k];
        if (!v.is_array()) throw ConfigError(at(k) + ": expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(at(k) + "[" + std::to_string(i) + "]: expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }
    std::optional<Section> sub(const std::string& k) {
        if (!take(k)) return std::nullopt;
        return Section(j_[k], at(k));
    }
    const json& raw(const std::string& k) {
        static const json null_value;
        return take(k) ? j_[k] : null_value;
    }

    void done() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(at(it.key()) + ": unknown key");
    }

private:
    bool take(const std::string& k) {
        seen_.insert(k);
        return j_.contains(k) && !j_[k].is_null();
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void require_sorted_positive(const std::vector<double>& v, const std::string& path) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0) || !std::isfinite(v[i])) throw ConfigError(path + ": times must be positive");
        if (i && !(v[i] > v[i - 1])) throw ConfigError(path + ": times must be strictly increasing");
    }
}

inline void parse_grid(Section s, GridSpec& g) {
    g.L = s.positive("L", g.L);
    g.n = s.count("n", g.n);
    if (g.n < 16 || (g.n & (g.n - 1)) != 0) throw ConfigError(s.at("n") + ": must be a power of two >= 16");
    s.done();
}

inline void parse_evolve(Section s, EvolveConfig& e) {
    e.t0 = s.num("t0", e.t0);
    e.t1 = s.num("t1", e.t1);
    e.dt = s.positive("dt", e.dt);
    const std::string pol = s.text("dt_policy", e.dt_policy == DtPolicy::fixed ? "fixed" : "nonlinear_cfl");
    if (pol == "fixed") e.dt_policy = DtPolicy::fixed;
    else if (pol == "nonlinear_cfl") e.dt_policy = DtPolicy::nonlinear_cfl;
    else throw ConfigError(s.at("dt_policy") + ": expected \"fixed\" or \"nonlinear_cfl\"");
    e.cfl = s.positive("cfl", e.cfl);
    if (auto p = s.sub("perturbation")) {
        Perturbation pert;
        pert.p = p->num("p", pert.p);
        pert.c = p->num("c", pert.c);
        if (!(pert.p > 3.0)) throw ConfigError(p->at("p") + ": exponent must exceed 3");
        p->done();
        e.perturbation = pert;
    }
    e.snapshot_times = s.list("snapshot_times", e.snapshot_times);
    for (std::size_t i = 1; i < e.snapshot_times.size(); ++i)
        if (!(e.snapshot_times[i] > e.snapshot_times[i - 1]))
            throw ConfigError(s.at("snapshot_times") + ": must be strictly increasing");
    e.callback_stride = s.count("callback_stride", e.callback_stride);
    e.sponge = s.flag("sponge", e.sponge);
    e.sponge_strength = s.positive("sponge_strength", e.sponge_strength);
    e.vector_fields = s.flag("vector_fields", e.vector_fields);
    s.done();
    if (!(e.t0 >= 0.0) || !(e.t1 > e.t0)) throw ConfigError(s.at("t1") + ": need t1 > t0 >= 0");
}

inline void parse_initial(Section s, InitialSpec& in) {
    const std::string kind = s.text("kind", "gaussian");
    if (kind == "gaussian") in.kind = InitialKind::gaussian;
    else if (kind == "sech") in.kind = InitialKind::sech;
    else if (kind == "soliton") in.kind = InitialKind::soliton;
    else throw ConfigError(s.at("kind") + ": expected gaussian, sech or soliton");
    in.amplitude = s.num("amplitude", in.amplitude);
    in.width = s.positive("width", in.width);
    in.center = s.num("center", in.center);
    s.done();
}

inline void parse_probe(Section s, ProbeSpec& p) {
    p.velocities = s.list("velocities", p.velocities);
    if (p.velocities.empty()) throw ConfigError(s.at("velocities") + ": must not be empty");
    for (double v : p.velocities)
        if (!(v > 0.0)) throw ConfigError(s.at("velocities") + ": velocities must be positive");
    p.t_start = s.positive("t_start", p.t_start);
    p.t_end = s.positive("t_end", p.t_end);
    p.ratio = s.num("ratio", p.ratio);
    if (!(p.ratio > 1.0)) throw ConfigError(s.at("ratio") + ": must exceed 1");
    if (!(p.t_end > p.t_start)) throw ConfigError(s.at("t_end") + ": must exceed t_start");
    p.gate = s.positive("gate", p.gate);
    p.envelope_power = static_cast<int>(s.integer("envelope_power", p.envelope_power));
    if (p.envelope_power < 3) throw ConfigError(s.at("envelope_power") + ": must be >= 3");
    p.record_direct = s.flag("record_direct", p.record_direct);
    s.done();
}

inline void parse_profile(Section s, ProfileSpec& p) {
    p.xi_min = s.positive("xi_min", p.xi_min);
    p.xi_max = s.positive("xi_max", p.xi_max);
    p.xi_count = s.count("xi_count", p.xi_count);
    if (!(p.xi_max >= p.xi_min)) throw ConfigError(s.at("xi_max") + ": must be >= xi_min");
    if (p.xi_count < 1 || (p.xi_count == 1 && p.xi_max != p.xi_min))
        throw ConfigError(s.at("xi_count") + ": need at least two frequencies for a range");
    p.t_start = s.positive("t_start", p.t_start);
    p.t_end = s.positive("t_end", p.t_end);
    p.ratio = s.num("ratio", p.ratio);
    if (!(p.ratio > 1.0)) throw ConfigError(s.at("ratio") + ": must exceed 1");
    if (!(p.t_end > p.t_start)) throw ConfigError(s.at("t_end") + ": must exceed t_start");
    p.gate = s.positive("gate", p.gate);
    s.done();
}

inline void parse_painleve(Section s, PainleveSpec& p) {
    if (s.has("W")) p.W = s.num("W", 0.0);
    else (void)s.num("W", 0.0);
    auto& o = p.options;
    o.y_min = s.num("y_min", o.y_min);
    o.y_max = s.num("y_max", o.y_max);
    o.dy = s.positive("dy", o.dy);
    o.shoot = s.flag("shoot", o.shoot);
    o.shoot_point = s.num("shoot_point", o.shoot_point);
    p.match_lo = s.num("match_lo", p.match_lo);
    p.match_hi = s.num("match_hi", p.match_hi);
    s.done();
    if (o.y_min > left_asymptote_limit) throw ConfigError(s.at("y_min") + ": must be <= -8");
    if (o.y_max < 3.0 || o.y_max > special::airy_range) throw ConfigError(s.at("y_max") + ": must lie in [3, 30]");
    if (!(p.match_hi > p.match_lo) || p.match_lo < 3.0 || p.match_hi > 6.0)
        throw ConfigError(s.at("match_hi") + ": match window must satisfy 3 <= match_lo < match_hi <= 6");
}

inline void parse_selfsimilar(Section s, SelfSimilarSpec& p) {
    p.times = s.list("times", p.times);
    require_sorted_positive(p.times, s.at("times"));
    auto& o = p.options;
    o.y_extent = s.positive("y_extent", o.y_extent);
    o.ny = s.count("ny", o.ny);
    o.window = s.positive("window", o.window);
    o.eta_max = s.positive("eta_max", o.eta_max);
    s.done();
    if (o.ny < 5 || o.ny % 2 == 0) throw ConfigError(s.at("ny") + ": must be odd and >= 5");
    if (o.window > o.y_extent) throw ConfigError(s.at("window") + ": must not exceed y_extent");
}

inline void parse_regions(Section s, RegionPartition& r) {
    r.rho = s.num("rho", r.rho);
    r.c_plus = s.positive("c_plus", r.c_plus);
    r.c_zero = s.positive("c_zero", r.c_zero);
    r.c_minus = s.positive("c_minus", r.c_minus);
    r.band = s.num("band", r.band);
    s.done();
    try {
        r.validate();
    } catch (const DomainError& e) {
        throw ConfigError(s.at("rho") + ": " + e.what());
    }
}

inline void parse_linear(Section s, LinearSpec& p) {
    p.t_start = s.positive("t_start", p.t_start);
    p.t_end = s.positive("t_end", p.t_end);
    p.ratio = s.num("ratio", p.ratio);
    s.done();
    if (!(p.ratio > 1.0)) throw ConfigError(s.at("ratio") + ": must exceed 1");
    if (!(p.t_end > p.t_start)) throw ConfigError(s.at("t_end") + ": must exceed t_start");
}

inline void parse_prescribed(Section s, PrescribedSpec& p) {
    const std::string kind = s.text("kind", "gaussian");
    if (kind != "gaussian") throw ConfigError(s.at("kind") + ": only gaussian prescribed data is supported");
    p.amplitude = s.num("amplitude", p.amplitude);
    p.width = s.positive("width", p.width);
    p.half_width = s.positive("half_width", p.half_width);
    p.n = s.count("n", p.n);
    p.smallness_C = s.num("smallness_C", p.smallness_C);
    s.done();
    if (p.n < 16 || (p.n & (p.n - 1)) != 0) throw ConfigError(s.at("n") + ": must be a power of two >= 16");
}

inline void parse_qtable(Section s, QTableOptions& q) {
    q.w_max = s.positive("w_max", q.w_max);
    q.dw = s.positive("dw", q.dw);
    q.painleve.y_min = s.num("y_min", q.painleve.y_min);
    q.painleve.y_max = s.num("y_max", q.painleve.y_max);
    q.painleve.dy = s.positive("dy", q.painleve.dy);
    q.store_stride = s.count("stride", q.store_stride);
    s.done();
    if (q.store_stride == 0) throw ConfigError(s.at("stride") + ": must be positive");
    if (q.painleve.y_min > left_asymptote_limit) throw ConfigError(s.at("y_min") + ": must be <= -8");
    if (q.painleve.y_max < 3.0 || q.painleve.y_max > 6.0) throw ConfigError(s.at("y_max") + ": must lie in [3, 6]");
}

inline void parse_complete(Section s, CompleteSpec& c) {
    c.T0 = s.list("T0", c.T0);
    require_sorted_positive(c.T0, s.at("T0"));
    for (double t : c.T0)
        if (t < 50.0) throw ConfigError(s.at("T0") + ": every T0 must be >= 50");
    c.horizon = s.num("horizon", c.horizon);
    if (!(c.horizon > 1.0)) throw ConfigError(s.at("horizon") + ": must exceed 1");
    c.match.half_width = s.positive("L", c.match.half_width);
    c.match.n = s.count("n", c.match.n);
    c.match.dt = s.positive("dt", c.match.dt);
    c.match.cfl = s.positive("cfl", c.match.cfl);
    c.match.sample_count = s.count("samples", c.match.sample_count);
    s.done();
    if (c.match.n < 16 || (c.match.n & (c.match.n - 1)) != 0)
        throw ConfigError(s.at("n") + ": must be a power of two >= 16");
    if (c.match.sample_count < 1) throw ConfigError(s.at("samples") + ": must be positive");
}

inline void parse_appdata(Section s, AppdataSpec& a) {
    a.times = s.list("times", a.times);
    require_sorted_positive(a.times, s.at("times"));
    for (double t : a.times)
        if (t < 1.0) throw ConfigError(s.at("times") + ": times must be >= 1");
    s.done();
}

inline bool valid_run_name(const std::string& n) {
    if (n.empty() || n.size() > 64) return false;
    return std::all_of(n.begin(), n.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; });
}

}  // namespace detail

inline ExperimentConfig parse_config_json(const json& root, const std::optional<std::string>& mode_override = {}) {
    detail::Section s(root, "$");
    ExperimentConfig cfg;
    cfg.source = root;
    std::string mode = s.text("mode", "");
    if (mode.empty()) {
        if (!mode_override) throw ConfigError("mode missing");
        mode = *mode_override;
    } else if (mode_override && *mode_override != mode) {
        throw ConfigError("$.mode: config says \"" + mode + "\" but the command line asks for \"" + *mode_override + "\"");
    }
    if (std::find_if(mode_names.begin(), mode_names.end(), [&](const char* m) { return mode == m; }) == mode_names.end())
        throw ConfigError("$.mode: unknown mode \"" + mode + "\"");
    cfg.mode = mode;

    cfg.version = static_cast<int>(s.integer("version", config_version));
    if (cfg.version != config_version)
        throw ConfigError("$.version: unsupported version " + std::to_string(cfg.version));

    if (s.has("sigma")) {
        const auto& v = s.raw("sigma");
        if (!v.is_number() || (v.get<double>() != 1.0 && v.get<double>() != -1.0))
            throw ConfigError("$.sigma: sigma must be ±1");
        cfg.sigma = Sign(static_cast<int>(v.get<double>()));
    } else {
        (void)s.raw("sigma");
    }
    cfg.evolve.sigma = cfg.sigma;
    cfg.evolve.t1 = 10.0;

    if (auto g = s.sub("grid")) detail::parse_grid(*g, cfg.grid);
    if (auto e = s.sub("evolve")) detail::parse_evolve(*e, cfg.evolve);
    if (auto i = s.sub("initial")) detail::parse_initial(*i, cfg.initial);
    if (auto p = s.sub("probe")) detail::parse_probe(*p, cfg.probe);
    if (auto p = s.sub("profile")) detail::parse_profile(*p, cfg.profile);
    if (auto p = s.sub("painleve")) detail::parse_painleve(*p, cfg.painleve);
    if (auto p = s.sub("selfsimilar")) detail::parse_selfsimilar(*p, cfg.selfsimilar);
    if (auto p = s.sub("regions")) detail::parse_regions(*p, cfg.regions);
    if (auto p = s.sub("linear")) detail::parse_linear(*p, cfg.linear);
    if (auto p = s.sub("prescribed")) detail::parse_prescribed(*p, cfg.prescribed);
    if (auto p = s.sub("qtable")) detail::parse_qtable(*p, cfg.qtable);
    if (auto p = s.sub("complete")) detail::parse_complete(*p, cfg.complete);
    if (auto p = s.sub("appdata")) detail::parse_appdata(*p, cfg.appdata);
    if (auto p = s.sub("sweep")) {
        json base = json::object();
        if (p->has("base")) {
            base = p->raw("base");
            if (!base.is_object()) throw ConfigError(p->at("base") + ": expected an object");
        } else {
            (void)p->raw("base");
        }
        const json& runs = p->raw("runs");
        if (!runs.is_array() || runs.empty()) throw ConfigError(p->at("runs") + ": expected a non-empty array");
        std::set<std::string> names;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const std::string at = p->at("runs") + "[" + std::to_string(i) + "]";
            detail::Section r(runs[i], at);
            SweepRun run;
            run.name = r.text("name", "");
            if (!detail::valid_run_name(run.name)) throw ConfigError(r.at("name") + ": expected a name of [A-Za-z0-9_-]");
            if (!names.insert(run.name).second) throw ConfigError(r.at("name") + ": duplicate run name");
            run.config = base;
            if (r.has("overrides")) {
                const json& o = r.raw("overrides");
                if (!o.is_object()) throw ConfigError(r.at("overrides") + ": expected an object");
                run.config.merge_patch(o);
            } else {
                (void)r.raw("overrides");
            }
            r.done();
            const json mode_field = run.config.value("mode", json("")).is_string() ? run.config.value("mode", json("")) : json("");
            if (mode_field == "sweep") throw ConfigError(r.at("overrides") + ": nested sweeps are not allowed");
            // Fail early: every run must be a valid config on its own.
            try {
                (void)parse_config_json(run.config);
            } catch (const ConfigError& e) {
                throw ConfigError(at + ": " + e.what());
            }
            cfg.sweep.push_back(std::move(run));
        }
        p->done();
    }
    s.done();

    if (cfg.mode == "painleve" && !cfg.painleve.W) throw ConfigError("$.painleve.W: required for painleve mode");
    if (cfg.mode == "sweep" && cfg.sweep.empty()) throw ConfigError("$.sweep: required for sweep mode");
    return cfg;
}

inline ExperimentConfig parse_config(std::string_view text, const std::optional<std::string>& mode_override = {}) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config_json(root, mode_override);
}

}  // namespace mkdv
