#include "mkdv/evolve.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace mkdv;

namespace {

double rel_l2(const Field& a, const Field& b) {
    return norm_l2(axpby(1.0, a, -1.0, b)) / norm_l2(b);
}

Field run(const Field& u0, Sign s, double t1, double dt, std::optional<Perturbation> pert = std::nullopt) {
    EvolveConfig cfg;
    cfg.sigma = s;
    cfg.t1 = t1;
    cfg.dt = dt;
    cfg.perturbation = pert;
    cfg.vector_fields = false;
    return evolve(SolverState{0.0, u0, 0, {}}, cfg).state.u;
}

Field gaussian(GridPtr g, double amp, double width = 1.0) {
    return initial_data(std::move(g), {InitialKind::gaussian, amp, width, 0.0, {}}, Sign::plus()).u;
}

}  // namespace

TEST(Nonlinearity, SineCube) {
    auto g = make_grid(std::numbers::pi, 64);
    const Field u = sample(g, [](double x) { return std::sin(x); });
    const Field n = nonlinearity(u, Sign::plus());
    for (std::size_t j = 0; j < n.size(); ++j) {
        const double x = g->x(j);
        EXPECT_NEAR(n[j], 0.75 * (std::cos(x) - std::cos(3.0 * x)), 1e-12);
    }
    const Field m = nonlinearity(u, Sign::minus());
    EXPECT_NEAR(m[5], -n[5], 1e-15);
}

TEST(Evolve, SolitonTravels) {
    auto g = make_grid(50.0, 1024);
    const double k = 1.0;
    const Sign s = Sign::minus();
    const Field u0 = initial_data(g, {InitialKind::soliton, k, 1.0, -5.0, {}}, s).u;
    const Field u = run(u0, s, 2.0, 1e-3);
    const Field exact = sample(g, [&](double x) { return soliton_profile(x, 2.0, k, -5.0); });
    EXPECT_LT(rel_l2(u, exact), 1e-6);
}

TEST(Evolve, SolitonRequiresDefocusingSign) {
    auto g = make_grid(50.0, 1024);
    EXPECT_THROW(initial_data(g, {InitialKind::soliton, 1.0, 1.0, 0.0, {}}, Sign::plus()), DomainError);
    EXPECT_THROW(initial_data(g, {InitialKind::gaussian, 1.0, 0.0, 0.0, {}}, Sign::plus()), DomainError);
    EXPECT_THROW(Sign(0), DomainError);
}

TEST(Evolve, SechMass) {
    auto g = make_grid(60.0, 2048);
    for (double a : {0.3, 1.2}) {
        const Field u = initial_data(g, {InitialKind::sech, a, 1.0, 0.0, {}}, Sign::plus()).u;
        EXPECT_NEAR(conserved(u, Sign::plus()).E1, 2.0 * a * a, 1e-10);
    }
}

TEST(Evolve, FourthOrderInTime) {
    auto g = make_grid(20.0, 256);
    const Field u0 = gaussian(g, 0.8);
    const Field ref = run(u0, Sign::plus(), 1.0, 1.0 / 5120.0);
    std::vector<double> err;
    for (double dt : {1.0 / 160.0, 1.0 / 320.0, 1.0 / 640.0}) err.push_back(rel_l2(run(u0, Sign::plus(), 1.0, dt), ref));
    for (std::size_t i = 1; i < err.size(); ++i) {
        const double order = std::log2(err[i - 1] / err[i]);
        EXPECT_GT(order, 3.6) << i << " " << err[i - 1] << " " << err[i];
        EXPECT_LT(order, 4.6) << i << " " << err[i - 1] << " " << err[i];
    }
}

TEST(Evolve, TimeReversalThroughReflection) {
    // u(-x, -t) is again a solution, so reflect-evolve-reflect undoes a run.
    auto g = make_grid(30.0, 512);
    const Field u0 = gaussian(g, 0.7);
    for (Sign s : {Sign::plus(), Sign::minus()}) {
        const Field u1 = run(u0, s, 2.0, 2e-3);
        const Field back = reflect(run(reflect(u1), s, 2.0, 2e-3));
        EXPECT_LT(rel_l2(back, u0), 1e-9);
    }
}

TEST(Evolve, ConservationLaws) {
    auto g = make_grid(100.0, 2048);
    const Field u0 = gaussian(g, 0.5);
    for (Sign s : {Sign::plus(), Sign::minus()}) {
        EvolveConfig cfg;
        cfg.sigma = s;
        cfg.t1 = 20.0;
        cfg.dt = 5e-3;
        cfg.callback_stride = 100;
        cfg.vector_fields = false;
        const auto res = evolve(SolverState{0.0, u0, 0, {}}, cfg);
        const auto& d = res.state.drift;
        EXPECT_LT(std::abs(res.trace.back().E0 - d.initial.E0), 1e-13);
        EXPECT_LT(d.max_rel_E1, 1e-10);
        EXPECT_LT(d.max_rel_E2, 1e-8);
        EXPECT_GT(res.trace.size(), 10u);
    }
}

TEST(Evolve, PerturbationKeepsMassAndChangesSolution) {
    auto g = make_grid(40.0, 512);
    const Field u0 = gaussian(g, 0.9);
    const Perturbation p{5.0, 0.5};
    const Field a = run(u0, Sign::plus(), 3.0, 2e-3, p);
    const Field b = run(u0, Sign::plus(), 3.0, 2e-3);
    EXPECT_NEAR(conserved(a, Sign::plus()).E1, conserved(u0, Sign::plus()).E1, 1e-10);
    EXPECT_GT(rel_l2(a, b), 1e-3);
    EXPECT_NEAR(p(-2.0), -0.5 * 32.0, 1e-12);

    EvolveConfig bad;
    bad.perturbation = Perturbation{3.0, 1.0};
    EXPECT_THROW(evolve(SolverState{0.0, u0, 0, {}}, bad), ConfigError);
}

TEST(Evolve, BlowUpIsReported) {
    auto g = make_grid(20.0, 256);
    const Field u0 = gaussian(g, 20.0, 0.3);
    EXPECT_THROW(run(u0, Sign::minus(), 50.0, 0.2), DivergenceError);
}

TEST(Evolve, RejectsBadConfigs) {
    auto g = make_grid(20.0, 256);
    const Field u0 = gaussian(g, 0.1);
    EvolveConfig c;
    c.t1 = 0.0;
    EXPECT_THROW(evolve(SolverState{0.0, u0, 0, {}}, c), ConfigError);
    c.t1 = 1.0;
    c.dt = -1.0;
    EXPECT_THROW(evolve(SolverState{0.0, u0, 0, {}}, c), ConfigError);
    c.dt = 0.1;
    c.snapshot_times = {0.5, 0.2};
    EXPECT_THROW(evolve(SolverState{0.0, u0, 0, {}}, c), ConfigError);
}

TEST(Evolve, SnapshotsAndObserversHitExactTimes) {
    auto g = make_grid(20.0, 256);
    const Field u0 = gaussian(g, 0.3);
    EvolveConfig c;
    c.t1 = 1.0;
    c.dt = 0.07;
    c.snapshot_times = {0.25, 0.5};
    std::vector<double> seen, obs;
    Observer o{{0.1, 0.9}, [&](double t, const Field&) { obs.push_back(t); }};
    std::vector<Observer> os{o};
    evolve(SolverState{0.0, u0, 0, {}}, c, os, [&](double t, const Field&) { seen.push_back(t); });
    ASSERT_EQ(seen.size(), 2u);
    EXPECT_DOUBLE_EQ(seen[0], 0.25);
    EXPECT_DOUBLE_EQ(seen[1], 0.5);
    ASSERT_EQ(obs.size(), 2u);
    EXPECT_DOUBLE_EQ(obs[1], 0.9);
}

TEST(VectorFields, GalileanNormIsConstantForLinearFlow) {
    auto g = make_grid(1024.0, 8192);
    const Field u0 = gaussian(g, 1.0);
    double x2 = 0.0;
    for (std::size_t j = 0; j < u0.size(); ++j) x2 += std::pow(g->x(j) * u0[j], 2);
    const double ref = std::sqrt(x2 * g->dx());
    for (double t : {0.5, 5.0, 50.0}) {
        const auto v = vector_field_diagnostics(airy_propagate(u0, t), t, Sign::plus());
        EXPECT_NEAR(v.norm_L, ref, 1e-9 * ref) << t;
    }
    EXPECT_THROW(vector_field_diagnostics(u0, 0.0, Sign::plus()), DomainError);
}

TEST(VectorFields, ScalingFieldGrowsSlowlyForSmallData) {
    auto g = make_grid(2048.0, 16384);
    const Field u0 = gaussian(g, 0.1);
    EvolveConfig cfg;
    cfg.sigma = Sign::plus();
    cfg.t1 = 50.0;
    cfg.dt = 0.02;
    cfg.callback_stride = 250;
    const auto res = evolve(SolverState{0.0, u0, 0, {}}, cfg);
    std::vector<double> lt, ln;
    for (const auto& r : res.trace)
        if (r.t >= 5.0) {
            lt.push_back(std::log(r.t));
            ln.push_back(std::log(r.normLambda));
        }
    ASSERT_GE(lt.size(), 3u);
    const double slope = (ln.back() - ln.front()) / (lt.back() - lt.front());
    EXPECT_LT(std::abs(slope), 0.05);
}
