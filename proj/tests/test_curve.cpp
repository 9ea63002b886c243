#include <gtest/gtest.h>

#include <random>

#include "dhb/curve.hpp"

using namespace dhb;

namespace {

TimeGrid paper_grid() { return TimeGrid::annual(4.0, 5, 1.0 / 32.0); }

// Annual grid with T_0 = 0 and unit accruals everywhere, e = 6.
TimeGrid unit_grid() { return TimeGrid({0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0}, 1.0 / 32.0); }

// Eq. 3 read off an independent forward sum: S = (P^u - P^e) / sum delta P.
double swap_rate_oracle(const std::vector<double>& P, const std::vector<double>& delta, std::size_t j) {
    double a = 0.0;
    for (std::size_t v = j + 1; v < P.size(); ++v) a += delta[v - 1] * P[v];
    return (P[j] - P.back()) / a;
}

}  // namespace

TEST(Curve, ZeroRatesGiveUnitDiscountAndCountingAnnuity) {
    const std::vector<double> r(5, 0.0);
    const auto c = reconstruct_curve(r, unit_grid(), 1);
    for (int u = 1; u <= 6; ++u) EXPECT_DOUBLE_EQ(c.P(u), 1.0);
    for (int u = 1; u <= 5; ++u) EXPECT_DOUBLE_EQ(c.A(u), 6.0 - u);
}

TEST(Curve, OneStepBootstrap) {
    const std::vector<double> r{0.02};
    const auto c = reconstruct_curve(r, unit_grid(), 5);
    EXPECT_DOUBLE_EQ(c.A(5), 1.0);
    EXPECT_DOUBLE_EQ(c.P(5), 1.02);
    EXPECT_DOUBLE_EQ(c.P(6), 1.0);
}

TEST(Curve, FlatCurveRoundTripAndParSwaps) {
    const std::vector<double> r(5, 0.02);
    const auto g = paper_grid();
    const auto c = reconstruct_curve(r, g, 1);
    std::vector<double> delta;
    for (int u = 1; u < 6; ++u) delta.push_back(g.accrual(u));
    for (int u = 1; u < 6; ++u) {
        EXPECT_NEAR(implied_swap_rate(c, u), 0.02, 1e-12);
        EXPECT_NEAR(swap_value(c, u, 0.02), 0.0, 1e-15);
    }
    std::vector<double> P(c.discount.begin(), c.discount.end());
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(swap_rate_oracle(P, delta, j), 0.02, 1e-12);
}

TEST(Curve, SwapValueDirect) {
    CurveState c;
    c.first = 1;
    c.terminal = 2;
    c.discount = {1.0, 1.0};
    c.annuity = {5.0};
    c.rates = {0.0};
    EXPECT_DOUBLE_EQ(swap_value(c, 1, 0.02), 0.1);
}

TEST(Curve, RoundTripOnRandomRateVectors) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-0.03, 0.10);
    std::uniform_int_distribution<int> first(1, 5);
    const auto g = paper_grid();
    for (int trial = 0; trial < 1000; ++trial) {
        const int i = first(rng);
        std::vector<double> r(static_cast<std::size_t>(6 - i));
        for (auto& v : r) v = unif(rng);
        const auto c = reconstruct_curve(r, g, i);
        for (int u = i; u < 6; ++u) ASSERT_NEAR(implied_swap_rate(c, u), r[static_cast<std::size_t>(u - i)], 1e-12);
    }
}

TEST(Curve, AnnuityStrictlyDecreasing) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(-0.01, 0.08);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> r(5);
        for (auto& v : r) v = unif(rng);
        const auto c = reconstruct_curve(r, paper_grid(), 1);
        for (int u = 1; u < 5; ++u) EXPECT_GT(c.A(u), c.A(u + 1));
    }
}

TEST(Curve, SwapValueLinearInStrike) {
    const std::vector<double> r{0.01, 0.015, 0.02, 0.025, 0.03};
    const auto c = reconstruct_curve(r, paper_grid(), 1);
    for (int u = 1; u < 6; ++u) {
        const double v0 = swap_value(c, u, 0.0), v1 = swap_value(c, u, 0.01), v2 = swap_value(c, u, 0.03);
        EXPECT_NEAR(v1 - v0, 0.01 * c.A(u), 1e-15);
        EXPECT_NEAR(v2 - v0, 0.03 * c.A(u), 1e-15);
    }
}

TEST(Curve, Errors) {
    const auto g = paper_grid();
    const std::vector<double> bad{0.02, std::nan(""), 0.02, 0.02, 0.02};
    EXPECT_THROW(reconstruct_curve(bad, g, 1), InvalidArgument);
    const std::vector<double> wrong_size{0.02, 0.02};
    EXPECT_THROW(reconstruct_curve(wrong_size, g, 1), InvalidArgument);
    const std::vector<double> extreme{0.02, 0.02, 0.02, 0.02, -1.5};
    EXPECT_THROW(reconstruct_curve(extreme, g, 1), DegenerateCurve);
    const auto c = reconstruct_curve(std::vector<double>(5, 0.02), g, 1);
    EXPECT_THROW(swap_value(c, 6, 0.02), InvalidArgument);
    EXPECT_THROW(swap_value(c, 0, 0.02), InvalidArgument);
}

TEST(Curve, AnnuityJacobianMatchesFiniteDifferences) {
    const std::vector<double> r{0.01, 0.015, 0.02, 0.025, 0.03};
    const auto g = paper_grid();
    const auto c = reconstruct_curve(r, g, 1);
    const auto J = annuity_jacobian(c, g);
    const double h = 1e-6;
    for (std::size_t m = 0; m < 5; ++m) {
        auto up = r, dn = r;
        up[m] += h;
        dn[m] -= h;
        const auto cu = reconstruct_curve(up, g, 1), cd = reconstruct_curve(dn, g, 1);
        for (std::size_t j = 0; j < 5; ++j) {
            const double fd = (cu.annuity[j] - cd.annuity[j]) / (2 * h);
            EXPECT_NEAR(J[j * 5 + m], fd, 1e-8) << "j=" << j << " m=" << m;
        }
    }
}
