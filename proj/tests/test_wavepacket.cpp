#include "mkdv/wavepacket.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace mkdv;
using std::numbers::pi;

namespace {

Field ones(GridPtr g) {
    return sample(std::move(g), [](double) { return 1.0; });
}

std::vector<double> ladder(double a, double b, std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(n - 1));
    return t;
}

}  // namespace

TEST(Phase, Values) {
    EXPECT_NEAR(phase_phi(1.0, -1.0), -2.0 / 3.0 + pi / 4.0, 1e-15);
    EXPECT_NEAR(phase_phi(4.0, 9.0), -9.0 + pi / 4.0, 1e-14);
    EXPECT_DOUBLE_EQ(phase_phi(2.0, -3.0), phase_phi(2.0, 3.0));
    EXPECT_DOUBLE_EQ(phase_phi(5.0, 0.0), pi / 4.0);
    EXPECT_THROW(phase_phi(0.0, 1.0), DomainError);
}

TEST(Envelope, UnitMassAndDerivative) {
    for (int p : {3, 4, 6}) {
        const Envelope e{p};
        const int n = 20000;
        double s = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double x = -1.0 + 2.0 * i / n;
            s += (i == 0 || i == n ? 0.5 : 1.0) * e(x);
        }
        EXPECT_NEAR(s * 2.0 / n, 1.0, 1e-9) << p;
        const double h = 1e-6;
        for (double x : {-0.7, 0.1, 0.55}) EXPECT_NEAR(e.derivative(x), (e(x + h) - e(x - h)) / (2 * h), 1e-6);
        EXPECT_EQ(e(1.0), 0.0);
        EXPECT_EQ(e(-1.5), 0.0);
    }
}

TEST(Packet, CentroidWidthAndNormalization) {
    auto g = make_grid(2048.0, 32768);
    const PacketSpec spec{0.25, 4.0, {}};
    for (double t : {100.0, 1000.0, 4000.0}) {
        const auto psi = packet(t, spec, *g);
        double m0 = 0.0, m1 = 0.0, lo = 1e300, hi = -1e300;
        for (std::size_t j = 0; j < psi.size(); ++j) {
            const double a = std::abs(psi[j]);
            if (a == 0.0) continue;
            m0 += a;
            m1 += a * g->x(j);
            lo = std::min(lo, g->x(j));
            hi = std::max(hi, g->x(j));
        }
        EXPECT_NEAR(m1 / m0, -t * spec.v, 1e-6 * t) << t;
        EXPECT_NEAR(m0 * g->dx(), 1.0 / spec.lambda(t), 1e-6 / spec.lambda(t)) << t;
        EXPECT_LE(hi - lo, 2.0 / spec.lambda(t));
        EXPECT_GT(hi - lo, 2.0 / spec.lambda(t) - 2.0 * g->dx());
    }
    EXPECT_NEAR(spec.lambda(400.0), 1.0 / (20.0 * std::sqrt(0.5)), 1e-15);
}

TEST(Packet, LocalizedInFrequency) {
    auto g = make_grid(4096.0, 1 << 16);
    const PacketSpec spec{0.25, 4.0, {}};
    const double t = 2000.0;
    const auto psi = packet(t, spec, *g);
    std::vector<double> re(psi.size()), im(psi.size());
    for (std::size_t j = 0; j < psi.size(); ++j) {
        re[j] = psi[j].real();
        im[j] = psi[j].imag();
    }
    const Field fr(g, re), fi(g, im);
    const auto& R = fr.spectrum();
    const auto& I = fi.spectrum();
    const double lam = spec.lambda(t), xi = spec.xi_v();
    double total = 0.0, outside = 0.0;
    for (std::size_t m = 0; m < R.size(); ++m) {
        const double k = g->k(m);
        const double pos = std::norm(R[m] + cplx(0, 1) * I[m]);
        const double neg = std::norm(std::conj(R[m]) + cplx(0, 1) * std::conj(I[m]));
        total += pos + neg;
        if (std::abs(k - xi) > 8.0 * lam) outside += pos;
        if (std::abs(-k - xi) > 8.0 * lam) outside += neg;
    }
    EXPECT_LT(outside / total, 1e-3);
}

TEST(Packet, GateAndBox) {
    auto g = make_grid(256.0, 2048);
    const PacketSpec spec{0.25, 4.0, {}};
    EXPECT_FALSE(spec.admitted(50.0));
    EXPECT_TRUE(spec.admitted(64.0));
    EXPECT_THROW(packet(50.0, spec, *g), DomainError);
    EXPECT_THROW(packet(2000.0, spec, *g), DomainError);
    EXPECT_THROW(packet(100.0, PacketSpec{0.25, 4.0, Envelope{2}}, *g), DomainError);
    EXPECT_THROW(packet(100.0, PacketSpec{-0.25, 4.0, {}}, *g), DomainError);
    EXPECT_THROW(GammaProbe({0.25}, {50.0, 100.0}, Sign::plus()), DomainError);
}

TEST(Gamma, LinearInData) {
    auto g = make_grid(512.0, 4096);
    const PacketSpec spec{0.25, 4.0, {}};
    const Field a = sample(g, [](double x) { return std::exp(-x * x / 900.0) * std::cos(0.5 * x); });
    const Field b = sample(g, [](double x) { return std::sin(0.3 * x) / (1.0 + x * x / 100.0); });
    const double t = 300.0;
    const cplx lhs = gamma(axpby(2.0, a, -0.5, b), t, spec);
    const cplx rhs = 2.0 * gamma(a, t, spec) - 0.5 * gamma(b, t, spec);
    EXPECT_LT(std::abs(lhs - rhs), 1e-13 * (1.0 + std::abs(lhs)));
    // A constant field sees the envelope mass against an oscillating phase.
    EXPECT_LT(std::abs(gamma(ones(g), t, spec)), 1.0 / spec.lambda(t));
}

TEST(Gamma, LawAndDerivative) {
    const cplx gm(0.3, -0.4);
    const cplx law = gamma_law(10.0, gm, Sign::minus());
    EXPECT_NEAR(law.real(), -0.03, 1e-15);
    EXPECT_NEAR(law.imag(), -0.0225, 1e-15);
    EXPECT_NEAR(std::abs(law), 3.0 * 0.25 * 0.5 / 10.0, 1e-15);
    const std::vector<double> t{1.0, 1.5, 2.5, 4.0};
    std::vector<cplx> f;
    for (double s : t) f.emplace_back(s * s - 2.0 * s, 3.0 * s);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const cplx d = three_point_derivative(t, f, i);
        EXPECT_NEAR(d.real(), 2.0 * t[i] - 2.0, 1e-12);
        EXPECT_NEAR(d.imag(), 3.0, 1e-12);
    }
}

TEST(Gamma, DirectDerivativeMatchesDifferences) {
    auto g = make_grid(512.0, 4096);
    const Sign s = Sign::plus();
    const PacketSpec spec{0.25, 4.0, {}};
    const Field u0 = sample(g, [](double x) { return 0.5 * std::exp(-x * x); });
    EvolveConfig cfg;
    cfg.sigma = s;
    cfg.t1 = 70.02;
    cfg.dt = 0.005;
    cfg.vector_fields = false;
    const double h = 0.02;
    cfg.snapshot_times = {70.0 - h, 70.0, 70.0 + h};
    std::vector<Field> snaps;
    evolve(SolverState{0.0, u0, 0, {}}, cfg, {}, [&](double, const Field& u) { snaps.push_back(u); });
    ASSERT_EQ(snaps.size(), 3u);
    const cplx fd = (gamma(snaps[2], 70.0 + h, spec) - gamma(snaps[0], 70.0 - h, spec)) / (2.0 * h);
    const cplx direct = gamma_dot_direct(snaps[1], 70.0, spec, s);
    EXPECT_LT(std::abs(fd - direct), 1e-5 * std::abs(gamma(snaps[1], 70.0, spec)));
}

TEST(PhaseFit, RecoversSyntheticSlope) {
    const double v = 0.25, A = 0.3;
    for (Sign s : {Sign::plus(), Sign::minus()}) {
        const double beta = 3.0 * s.real() * A * A;
        const auto t = ladder(100.0, 10000.0, 120);
        std::vector<cplx> gm;
        for (double x : t) gm.push_back(std::polar(A, beta * std::log(x * std::pow(v, 1.5)) + 0.7));
        const auto tr = build_trace(v, t, gm, s);
        const auto p = ode_phase_solution(tr, s);
        EXPECT_NEAR(p.slope, beta, 1e-10);
        EXPECT_NEAR(p.intercept, 0.7, 1e-9);
        EXPECT_LT(p.consistency, 1e-9);
        EXPECT_LT(p.modulus_drift, 1e-14);
        const auto c = gamma_law_check(tr, 200.0, 2000.0);
        EXPECT_LT(c.modulus_drift, 1e-14);
        EXPECT_FALSE(c.direct);
        ASSERT_TRUE(c.residual_fit.has_value());
        // Three-point error on a geometric ladder: h^2 |gamma'''| ~ t^2 t^-3.
        EXPECT_NEAR(c.residual_fit->slope, -1.0, 0.05);
    }
}

TEST(PhaseFit, Preconditions) {
    const auto t = ladder(100.0, 1000.0, 20);
    std::vector<cplx> gm(t.size(), cplx(0.1, 0.0));
    const auto tr = build_trace(0.25, t, gm, Sign::plus());
    EXPECT_THROW(ode_phase_solution(tr, Sign::plus()), DomainError);
    EXPECT_THROW(gamma_law_check(tr, 5000.0, 6000.0), DomainError);
    EXPECT_THROW(build_trace(0.25, t, {}, Sign::plus()), DomainError);
}

TEST(PhaseFit, LinearFlowHasFlatPhase) {
    // Free evolution: gamma tends to a constant, so the phase slope vanishes.
    auto g = make_grid(65536.0, 1 << 17);
    const Field u0 = sample(g, [](double x) { return 0.2 * std::exp(-x * x / 16.0); });
    const Sign s = Sign::plus();
    const auto times = ladder(1000.0, 1000.0 * std::pow(10.0, 1.5), 60);
    GammaProbe probe({0.25}, times, s, 4.0, {}, false);
    for (double t : times) probe.record(t, airy_propagate(u0, t));
    const auto tr = probe.traces().front();
    const auto p = ode_phase_solution(tr, s);
    EXPECT_LT(std::abs(p.slope), 0.01) << p.mean_modulus_sq;
    EXPECT_LT(p.modulus_drift, 0.02);
    EXPECT_LT(tr.max_raw_increment, pi);
}
