#include "mkdv/completeness.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mkdv;

namespace {

PrescribedData gaussian_data(double amp, std::size_t n = 4096, double Z = 16.0) {
    return PrescribedData::sample(Z, n, [&](double z) { return amp * std::exp(-z * z / 0.25); });
}

double d1(double (*f)(double), double x, double h) { return (f(x + h) - f(x - h)) / (2.0 * h); }
double d2(double (*f)(double), double x, double h) { return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h); }

const QTable& small_table(Sign s) {
    static const QTable plus = [] {
        QTableOptions o;
        o.w_max = 0.25;
        o.workers = 4;
        return QTable(Sign::plus(), o);
    }();
    static const QTable minus = [] {
        QTableOptions o;
        o.w_max = 0.25;
        o.workers = 4;
        return QTable(Sign::minus(), o);
    }();
    return s.value() == 1 ? plus : minus;
}

}  // namespace

TEST(Zeta, EndpointValues) {
    EXPECT_DOUBLE_EQ(zeta(0.0), 0.25);
    EXPECT_DOUBLE_EQ(zeta(4.0), 2.0);
    EXPECT_DOUBLE_EQ(zeta(-4.0), 2.0);
    EXPECT_DOUBLE_EQ(zeta(-0.3), zeta(0.3));
    EXPECT_NEAR(zeta(0.25), 0.25 * std::pow(17.0, 0.25), 1e-15);
}

TEST(Zeta, SmoothAtJoints) {
    for (double j : {0.5, 1.0}) {
        const double h = 1e-4;
        EXPECT_NEAR(zeta(j - 1e-12), zeta(j + 1e-12), 1e-10) << j;
        const double left1 = (zeta(j) - zeta(j - h)) / h, right1 = (zeta(j + h) - zeta(j)) / h;
        EXPECT_NEAR(left1, right1, 1e-2) << j;
        EXPECT_NEAR(d1(zeta, j - 3 * h, h), d1(zeta, j + 3 * h, h), 1e-2) << j;
        const double hs = 1e-3;
        EXPECT_NEAR(d2(zeta, j - 2 * hs, hs), d2(zeta, j + 2 * hs, hs), 0.1) << j;
    }
    // Derivative continuity to 1e-4 from one-sided second-order stencils.
    for (double j : {0.5, 1.0}) {
        const double h = 1e-5;
        const double left = (3 * zeta(j) - 4 * zeta(j - h) + zeta(j - 2 * h)) / (2 * h);
        const double right = (-3 * zeta(j) + 4 * zeta(j + h) - zeta(j + 2 * h)) / (2 * h);
        EXPECT_NEAR(left, right, 1e-4) << j;
    }
}

TEST(Cutoff, Step) {
    EXPECT_EQ(chi_step(0.0), 0.0);
    EXPECT_EQ(chi_step(0.5), 0.0);
    EXPECT_EQ(chi_step(-0.4), 0.0);
    EXPECT_EQ(chi_step(1.0), 1.0);
    EXPECT_EQ(chi_step(-3.0), 1.0);
    EXPECT_NEAR(chi_step(0.75), 0.5, 1e-15);
}

TEST(Prescribed, Validation) {
    std::vector<double> odd(64, 0.0);
    odd[5] = 1.0;
    EXPECT_THROW(PrescribedData(8.0, odd), DomainError);
    EXPECT_THROW(PrescribedData(8.0, std::vector<double>(48, 0.0)), DomainError);
    EXPECT_THROW(PrescribedData(-1.0, std::vector<double>(64, 0.0)), DomainError);
    const auto W = gaussian_data(0.2);
    EXPECT_DOUBLE_EQ(W.max_abs(), 0.2);
    EXPECT_NEAR(W.value_at(0.3), 0.2 * std::exp(-0.36), 1e-5);
    EXPECT_EQ(W.value_at(100.0), 0.0);
}

TEST(Bands, SumToData) {
    const auto W = gaussian_data(0.2);
    const auto& bands = dyadic_bands(W);
    ASSERT_EQ(bands.size(), W.band_labels().size());
    EXPECT_EQ(W.band_labels().front(), 1.0);
    EXPECT_GE(W.band_labels().back(), std::numbers::pi / W.dz());
    double err = 0.0;
    for (std::size_t j = 0; j < W.size(); ++j) {
        double s = 0.0;
        for (const auto& b : bands) s += b[j];
        err = std::max(err, std::abs(s - W.samples()[j]));
    }
    EXPECT_LT(err, 1e-10);
}

TEST(Bands, SeparatedBandsAreOrthogonal) {
    const auto W = PrescribedData::sample(16.0, 4096, [](double z) { return std::exp(-z * z) * std::cos(3.0 * z); });
    const auto& b = W.bands();
    double total = 0.0;
    for (double v : W.samples()) total += v * v;
    for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t k = i + 2; k < b.size(); ++k) {
            double ip = 0.0;
            for (std::size_t j = 0; j < W.size(); ++j) ip += b[i][j] * b[k][j];
            EXPECT_LT(std::abs(ip), 1e-12 * total) << i << " " << k;
        }
}

TEST(Smallness, LinearAndZero) {
    const auto Z = gaussian_data(0.0);
    EXPECT_EQ(Z.smallness(0.04), 0.0);
    const double a = gaussian_data(0.1).smallness(0.04), b = gaussian_data(0.2).smallness(0.04);
    EXPECT_NEAR(b, 2.0 * a, 1e-12);
    EXPECT_GT(gaussian_data(0.2).smallness(0.5), b);
}

TEST(Regularized, LowTimesKeepOnlyTheLowBand) {
    const auto W = gaussian_data(0.2);
    for (double z : {0.0, 0.1, -0.4}) EXPECT_DOUBLE_EQ(regularized_W(W, 1.5, z), W.band_at(0, z));
    EXPECT_THROW(regularized_W(W, 0.5, 0.0), DomainError);
}

TEST(Regularized, EventuallyEqualsData) {
    const auto W = gaussian_data(0.2);
    const double top = W.band_labels().back();
    for (double z : {0.5, -1.0}) {
        const double t = top * top / std::abs(z) * 1.01;
        EXPECT_NEAR(regularized_W(W, t, z), W.value_at(z), 1e-10) << z;
        EXPECT_DOUBLE_EQ(regularized_W(W, t, z), regularized_W(W, 2.0 * t, z)) << z;
    }
}

TEST(Regularized, ZeroDataStaysZero) {
    const auto W = gaussian_data(0.0);
    const auto& tab = small_table(Sign::plus());
    for (double t : {1.0, 50.0, 1e4})
        for (double z : {0.0, 0.3, -2.0}) EXPECT_EQ(regularized_W(W, t, z), 0.0);
    for (double x : {-50.0, 0.0, 10.0}) EXPECT_EQ(u_app(100.0, x, W, tab), 0.0);
}

TEST(QTable, MatchesDirectSolves) {
    for (Sign s : {Sign::plus(), Sign::minus()}) {
        const auto& tab = small_table(s);
        EXPECT_LT(tab.meta().max_residual, 1e-6);
        EXPECT_LT(tab.meta().max_right_deviation, 0.02);
        EXPECT_EQ(tab.meta().sigma, s.value());
        for (double w : {0.1, 0.2}) {
            const auto sol = solve_painleve(w, s, PainleveOptions{-40.0, 4.0, 1e-3, true, 3.0});
            for (double y : {-35.0, -12.3, 0.0, 2.7}) EXPECT_NEAR(tab(y, w), sol.value_at(y), 1e-8) << y << " " << w;
        }
        // Between columns: linear in w, so the error is second order in dw.
        const auto mid = solve_painleve(0.1025, s, PainleveOptions{-40.0, 4.0, 1e-3, true, 3.0});
        for (double y : {-20.0, -3.0, 1.0}) EXPECT_NEAR(tab(y, 0.1025), mid.value_at(y), 2e-4) << y;
    }
}

TEST(QTable, OddExtensionAndRanges) {
    const auto& tab = small_table(Sign::plus());
    for (double y : {-60.0, -10.0, 0.0, 3.5, 8.0}) EXPECT_DOUBLE_EQ(tab(y, -0.13), -tab(y, 0.13)) << y;
    EXPECT_EQ(tab(0.0, 0.0), 0.0);
    EXPECT_NEAR(tab(8.0, 0.2), special::q_sigma(0.2, Sign::plus()) * special::airy_ai(8.0), 1e-20);
    EXPECT_EQ(tab(31.0, 0.2), 0.0);
    const double ymin = tab.meta().y_min;
    EXPECT_NEAR(tab(ymin - 1e-9, 0.2), tab(ymin, 0.2), 1e-4);
    const double ymax = tab.meta().y_max;
    EXPECT_NEAR(tab(ymax + 1e-9, 0.2), tab(ymax, 0.2), 0.02 * std::abs(tab(ymax, 0.2)));
    EXPECT_THROW(tab(0.0, 0.3), DomainError);
}

TEST(Approximation, OddInData) {
    const auto& tab = small_table(Sign::minus());
    const auto Wp = gaussian_data(0.2), Wm = gaussian_data(-0.2);
    for (double t : {60.0, 500.0})
        for (double x : {-80.0, -7.0, 0.0, 4.0}) EXPECT_DOUBLE_EQ(u_app(t, x, Wm, tab), -u_app(t, x, Wp, tab));
    EXPECT_THROW(u_app(0.5, 0.0, Wp, tab), DomainError);
}

TEST(Approximation, WeightedEnvelopeBounded) {
    const auto& tab = small_table(Sign::plus());
    const auto W = gaussian_data(0.2);
    auto g = make_grid(2048.0, 16384);
    for (double t : {100.0, 400.0, 1600.0}) {
        const Field u = u_app_field(g, t, W, tab);
        const double c = std::cbrt(t);
        double ws = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) {
            const double s = g->x(j) / c;
            ws = std::max(ws, c * std::pow(1.0 + s * s, 0.125) * std::abs(u[j]));
        }
        EXPECT_LT(ws, 2.0 * W.max_abs()) << t;
        EXPECT_GT(ws, 0.1 * W.max_abs()) << t;
    }
}

TEST(Match, ShortRunStaysClose) {
    const auto& tab = small_table(Sign::plus());
    const auto W = gaussian_data(0.2);
    MatchOptions o;
    o.half_width = 1024.0;
    o.n = 8192;
    o.sample_count = 2;
    const auto rep = match_experiment(W, tab, 50.0, 2.0, o);
    ASSERT_EQ(rep.samples.size(), 3u);
    EXPECT_DOUBLE_EQ(rep.samples.back().t, 100.0);
    EXPECT_GT(rep.uapp_norm, 0.0);
    for (const auto& s : rep.samples) EXPECT_LT(s.e_l2, 0.5 * rep.uapp_norm) << s.t;
    EXPECT_LT(rep.samples.front().e_l2, 0.05 * rep.uapp_norm);
    EXPECT_LT(rep.drift.max_rel_E1, 1e-10);
    EXPECT_THROW(match_experiment(W, tab, 20.0, 2.0, o), DomainError);
    EXPECT_THROW(match_experiment(W, tab, 60.0, 1.0, o), DomainError);
}
