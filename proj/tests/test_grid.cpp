#include "mkdv/grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace mkdv;
using std::numbers::pi;

namespace {

Field random_field(GridPtr g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    return sample(std::move(g), [&](double) { return d(rng); });
}

double max_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

}  // namespace

TEST(Grid, Construction) {
    const Grid g(pi, 16);
    EXPECT_DOUBLE_EQ(g.dx(), 2.0 * pi / 16.0);
    const auto k = g.wavenumbers();
    for (std::size_t i = 0; i < k.size(); ++i) EXPECT_NEAR(k[i], static_cast<double>(i) - 8.0, 1e-14);
    EXPECT_NEAR(Grid(200.0, 8192).dx(), 0.0488, 1e-4);
    EXPECT_EQ(Grid(3.0, 64).dx() * 64.0, 6.0);
    EXPECT_THROW(Grid(-1.0, 16), DomainError);
    EXPECT_THROW(Grid(1.0, 24), DomainError);
    EXPECT_THROW(Grid(1.0, 8), DomainError);
}

TEST(Grid, WavenumbersAntisymmetricExceptNyquist) {
    const Grid g(10.0, 64);
    const auto k = g.wavenumbers();
    EXPECT_DOUBLE_EQ(k[0], -g.k_nyquist());
    for (std::size_t i = 1; i < 64; ++i) EXPECT_DOUBLE_EQ(k[i], -k[64 - i]);
}

TEST(Spectrum, RoundTripRandom) {
    auto g = make_grid(7.0, 256);
    for (unsigned seed : {1u, 2u, 3u}) {
        const Field f = random_field(g, seed);
        const Field back = from_spectrum(to_spectrum(f));
        EXPECT_LT(max_diff(f, back) / norm_inf(f), 1e-12);
    }
}

TEST(Spectrum, ZeroAndCosine) {
    auto g = make_grid(pi, 32);
    const Field z(g);
    for (const auto& c : z.spectrum()) EXPECT_EQ(std::abs(c), 0.0);
    const Field f = sample(g, [](double x) { return std::cos(3.0 * x); });
    const auto& s = f.spectrum();
    for (std::size_t m = 0; m < s.size(); ++m) {
        if (m == 3) EXPECT_NEAR(std::abs(s[m]), pi, 1e-12);
        else EXPECT_LT(std::abs(s[m]), 1e-12);
    }
}

TEST(Spectrum, GaussianMatchesContinuousTransform) {
    auto g = make_grid(40.0, 2048);
    const Field f = sample(g, [](double x) { return std::exp(-x * x); });
    const auto& s = f.spectrum();
    for (std::size_t m = 0; m < s.size(); ++m) {
        const double xi = g->k(m);
        if (xi > 5.0) break;
        EXPECT_NEAR(s[m].real(), std::sqrt(pi) * std::exp(-xi * xi / 4.0), 1e-8);
        EXPECT_NEAR(s[m].imag(), 0.0, 1e-8);
    }
}

TEST(Spectrum, EvaluateAtNodesAndBetween) {
    auto g = make_grid(20.0, 256);
    const Field f = sample(g, [](double x) { return std::exp(-x * x / 4.0); });
    EXPECT_NEAR(f.evaluate_at(g->x(37)), f[37], 1e-12);
    EXPECT_NEAR(f.evaluate_at(0.123), std::exp(-0.123 * 0.123 / 4.0), 1e-10);
}

TEST(Airy, CosineRotatesByOneRadian) {
    auto g = make_grid(pi, 32);
    const Field f = sample(g, [](double x) { return std::cos(x); });
    const Field out = airy_propagate(f, 3.0);
    for (std::size_t j = 0; j < out.size(); ++j) EXPECT_NEAR(out[j], std::cos(g->x(j) + 1.0), 1e-13);
    EXPECT_LT(max_diff(airy_propagate(f, 0.0), f), 1e-15);
}

TEST(Airy, GaussianAgainstQuadrature) {
    // (1/pi) int_0^inf sqrt(pi) e^{-k^2/4} cos(x k + t k^3/3) dk, 40 digits.
    struct Ref {
        double t, x, u;
    };
    const Ref refs[] = {{1, -3, -0.30201774872774244627}, {1, 0, 0.60691347494412271172},
                        {1, 2, 0.093723072405218080483},  {10, -10, 0.22491470197966625763},
                        {10, 0, 0.29149430392898128961},  {3, -5, -0.31665008331904299295}};
    auto g = make_grid(2000.0, 1 << 16);
    const Field f = sample(g, [](double x) { return std::exp(-x * x); });
    for (const auto& r : refs) EXPECT_NEAR(airy_propagate(f, r.t).evaluate_at(r.x), r.u, 1e-10) << r.t << " " << r.x;
}

TEST(Airy, ModulusAndConservation) {
    auto g = make_grid(50.0, 1024);
    const Field f = random_field(g, 7);
    const Field out = airy_propagate(f, 12.5);
    for (std::size_t m = 0; m < f.spectrum().size(); ++m)
        EXPECT_NEAR(std::abs(out.spectrum()[m]), std::abs(f.spectrum()[m]), 1e-13 * (1.0 + std::abs(f.spectrum()[m])));
    const auto a = conserved(f, Sign::plus()), b = conserved(out, Sign::plus());
    EXPECT_NEAR(a.E0, b.E0, 1e-12 * std::abs(a.E1));
    EXPECT_NEAR(a.E1, b.E1, 1e-12 * a.E1);
}

TEST(Airy, GroupProperty) {
    auto g = make_grid(30.0, 512);
    const Field f = sample(g, [](double x) { return std::exp(-x * x) * (1.0 + x); });
    const Field a = airy_propagate(airy_propagate(f, 1.7), 2.6);
    const Field b = airy_propagate(f, 4.3);
    EXPECT_LT(max_diff(a, b), 1e-12);
}

TEST(Airy, DispersiveDecayOfNarrowGaussian) {
    auto g = make_grid(8192.0, 1 << 17);
    const Field f = sample(g, [](double x) { return std::exp(-4.0 * x * x); });
    double lo = 1e300, hi = 0.0;
    for (double t : {100.0, 400.0, 1600.0}) {
        const double s = norm_inf(airy_propagate(f, t)) * std::cbrt(t);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    EXPECT_LT(hi / lo, 1.5);
}

TEST(Derivative, SineAndConstants) {
    auto g = make_grid(pi, 64);
    const Field f = sample(g, [](double x) { return std::sin(2.0 * x); });
    const Field d = spectral_derivative(f, 1);
    for (std::size_t j = 0; j < d.size(); ++j) EXPECT_NEAR(d[j], 2.0 * std::cos(2.0 * g->x(j)), 1e-10);
    const Field c = sample(g, [](double) { return 3.0; });
    for (int order : {1, 2, 3}) EXPECT_LT(norm_inf(spectral_derivative(c, order)), 1e-12);
    EXPECT_THROW(spectral_derivative(c, 4), DomainError);
    EXPECT_THROW(spectral_derivative(c, 0), DomainError);
}

TEST(Derivative, GaussianThirdDerivative) {
    auto g = make_grid(40.0, 2048);
    const Field f = sample(g, [](double x) { return std::exp(-x * x); });
    const Field d = spectral_derivative(f, 3);
    for (std::size_t j = 0; j < d.size(); ++j) {
        const double x = g->x(j);
        EXPECT_NEAR(d[j], (-8.0 * x * x * x + 12.0 * x) * std::exp(-x * x), 1e-8);
    }
}

TEST(Derivative, NyquistZeroedForOddOrders) {
    auto g = make_grid(pi, 16);
    const Field f = sample(g, [](double x) { return std::cos(8.0 * x); });  // pure Nyquist
    EXPECT_LT(norm_inf(spectral_derivative(f, 1)), 1e-12);
    EXPECT_LT(norm_inf(spectral_derivative(f, 3)), 1e-12);
    EXPECT_NEAR(norm_inf(spectral_derivative(f, 2)), 64.0, 1e-10);
}

TEST(Dealias, Projection) {
    auto g = make_grid(pi, 64);
    const Field top = sample(g, [](double x) { return std::cos(32.0 * x); });
    EXPECT_LT(norm_inf(dealias(top)), 1e-13);
    const Field low = sample(g, [](double x) { return 1.0 + std::cos(5.0 * x); });
    EXPECT_LT(max_diff(dealias(low), low), 1e-13);
    const Field w = random_field(g, 11);
    const Field p = dealias(w);
    EXPECT_LE(norm_l2(p), norm_l2(w));
    const double cut = dealias_cutoff(*g);
    for (std::size_t m = 0; m < p.spectrum().size(); ++m) {
        if (g->k(m) > cut) EXPECT_EQ(std::abs(p.spectrum()[m]), 0.0);
        else EXPECT_NEAR(std::abs(p.spectrum()[m] - w.spectrum()[m]), 0.0, 1e-12);
    }
}

TEST(Conserved, SechIntegrals) {
    auto g = make_grid(40.0, 2048);
    const Field z(g);
    const auto c0 = conserved(z, Sign::plus());
    EXPECT_EQ(c0.E0, 0.0);
    EXPECT_EQ(c0.E1, 0.0);
    EXPECT_EQ(c0.E2, 0.0);
    const Field f = sample(g, [](double x) { return 1.0 / std::cosh(x); });
    const auto c = conserved(f, Sign::plus());
    EXPECT_NEAR(c.E0, pi, 1e-10);
    EXPECT_NEAR(c.E1, 2.0, 1e-10);
    EXPECT_NEAR(c.E2, 8.0 / 3.0, 1e-8);
    EXPECT_NEAR(conserved(f, Sign::minus()).E2, 2.0 / 3.0 - 2.0, 1e-8);
}

TEST(Field, ReflectAndAxpby) {
    auto g = make_grid(5.0, 64);
    const Field f = sample(g, [](double x) { return std::exp(-(x - 1.0) * (x - 1.0)); });
    const Field r = reflect(f);
    for (std::size_t j = 1; j < 64; ++j) EXPECT_DOUBLE_EQ(r[j], f[64 - j]);
    const Field s = axpby(2.0, f, -1.0, f);
    EXPECT_LT(max_diff(s, f), 1e-15);
    EXPECT_THROW(Field(g, std::vector<double>(10)), DomainError);
}
