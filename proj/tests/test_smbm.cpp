#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <filesystem>

#include "dhb/config.hpp"
#include "dhb/curve.hpp"
#include "dhb/reference.hpp"
#include "dhb/scenario_io.hpp"
#include "dhb/smbm.hpp"

using namespace dhb;

namespace {

SmbmParams paper_params() { return default_config().params(); }

// Identity correlation on every period of the paper schedule.
SmbmParams with_correlation(SmbmParams p, const std::function<void(CorrelationPeriod&)>& edit) {
    auto periods = p.schedule.periods();
    for (auto& per : periods) edit(per);
    p.schedule = CorrelationSchedule(std::move(periods));
    return p;
}

struct MeanSe {
    double mean, se;
};

MeanSe mean_se(const std::vector<double>& v) {
    double s = 0.0, s2 = 0.0;
    for (double x : v) {
        s += x;
        s2 += x * x;
    }
    const double n = static_cast<double>(v.size());
    const double m = s / n;
    return {m, std::sqrt(std::max(0.0, s2 / n - m * m) / (n - 1.0))};
}

// Relative swap value U^{u,e,K} on path p at slice k, recomputed from states.
double swap_on_path(const ScenarioSet& sc, int p, int k, int u, double K) {
    const int first = sc.first_defined(k);
    std::vector<double> r;
    for (int v = first; v < sc.grid.terminal_index(); ++v) r.push_back(sc.S(p, k, v));
    return swap_value(reconstruct_curve(r, sc.grid, first), u, K);
}

}  // namespace

TEST(ForwardVariance, InitialValue) {
    const auto p = paper_params();
    for (int u = 1; u <= 5; ++u) EXPECT_DOUBLE_EQ(forward_variance(p, u, 0.0, 0.0, 3.0), p.xi0_of(u));
}

TEST(ForwardVariance, SpotSliceWithoutMeanReversion) {
    const auto p = paper_params();
    for (double x : {-1.0, 0.0, 0.7})
        for (double t : {0.5, 2.0, 6.0}) {
            const double w = p.omega_of(2);
            EXPECT_NEAR(forward_variance(p, 2, x, t, t), p.xi0_of(2) * std::exp(w * x - 0.5 * w * w * t), 1e-18);
            EXPECT_DOUBLE_EQ(forward_variance(p, 2, x, t, t), spot_variance(p, 2, x, t));
        }
}

TEST(ForwardVariance, ZeroVolOfVolIsFlat) {
    auto p = paper_params();
    for (auto& w : p.omega) w = 0.0;
    for (double x : {-2.0, 0.0, 3.0}) EXPECT_DOUBLE_EQ(forward_variance(p, 3, x, 1.5, 4.0), p.xi0_of(3));
}

TEST(ForwardVariance, MeanReversionDamping) {
    auto p = paper_params();
    p.kappa[0] = 0.7;
    const double t = 1.2, T = 3.0, x = 0.4, w = p.omega[0];
    const double d = std::exp(-0.7 * (T - t));
    const double var = (1.0 - std::exp(-2.0 * 0.7 * t)) / (2.0 * 0.7);
    EXPECT_NEAR(forward_variance(p, 1, x, t, T), p.xi0[0] * std::exp(w * d * x - 0.5 * w * w * d * d * var), 1e-18);
    EXPECT_THROW(forward_variance(p, 1, x, 2.0, 1.0), InvalidArgument);
}

TEST(CorrelationSchedule, PaperBlocksArePsdWithShrinkingSize) {
    const auto p = paper_params();
    const std::vector<int> sizes{10, 8, 6, 4, 2};
    ASSERT_EQ(p.schedule.periods().size(), sizes.size());
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        const auto& c = p.schedule.periods()[k].corr;
        ASSERT_EQ(c.rows(), sizes[k]);
        EXPECT_NEAR((c - c.transpose()).cwiseAbs().maxCoeff(), 0.0, 0.0);
        for (Eigen::Index a = 0; a < c.rows(); ++a) EXPECT_EQ(c(a, a), 1.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
    }
}

TEST(CorrelationSchedule, RejectsNonPsd) {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, 1.5, 1.5, 1.0;
    CorrelationPeriod per;
    per.start = 0.0;
    per.end = 1.0;
    per.rates = {1};
    per.corr = c;
    EXPECT_THROW(CorrelationSchedule({per}), InvalidArgument);
}

TEST(TerminalDrifts, LastRateIsDriftless) {
    const auto p = paper_params();
    MarketState st{7.5, 5, {0.03}, {0.2}};
    const auto d = terminal_drifts(st, p);
    EXPECT_EQ(d.s[0], 0.0);
    EXPECT_EQ(d.x[0], 0.0);
}

TEST(TerminalDrifts, SingleCorrelationTermMatchesFiniteDifference) {
    // Only rho(W^1, W^3) and rho(Z^1, W^3) nonzero: drift of rate 1 reduces to
    // one term of the covariation with log A^{1,e}.
    const double r13 = 0.6, rz13 = -0.3;
    auto p = with_correlation(paper_params(), [&](CorrelationPeriod& per) {
        const int n = per.n();
        per.corr = Eigen::MatrixXd::Identity(2 * n, 2 * n);
        const int a = per.slot(1), b = per.slot(3);
        if (a >= 0 && b >= 0) {
            per.corr(a, b) = per.corr(b, a) = r13;
            per.corr(n + a, b) = per.corr(b, n + a) = rz13;
        }
    });
    MarketState st{1.0, 1, {0.015, 0.02, 0.025, 0.03, 0.035}, {0.1, -0.2, 0.3, 0.0, 0.05}};
    const auto d = terminal_drifts(st, p);

    const double h = 1e-7;
    auto logA1 = [&](double s3) {
        auto s = st.s;
        s[2] = s3;
        return std::log(reconstruct_curve(s, p.grid, 1).A(1));
    };
    const double dlogA = (logA1(st.s[2] + h) - logA1(st.s[2] - h)) / (2 * h);
    const double v1 = std::sqrt(spot_variance(p, 1, st.x[0], st.t));
    const double v3 = std::sqrt(spot_variance(p, 3, st.x[2], st.t));
    EXPECT_NEAR(d.s[0], -v1 * r13 * v3 * dlogA, 1e-12);
    EXPECT_NEAR(d.x[0], -rz13 * v3 * dlogA, 1e-9);
    // Own term vanishes: A^{1,e} does not depend on S^{1,e}.
    auto s = st.s;
    s[0] += 0.01;
    EXPECT_DOUBLE_EQ(reconstruct_curve(s, p.grid, 1).A(1), reconstruct_curve(st.s, p.grid, 1).A(1));
}

TEST(Simulate, ShapeAndDeterminism) {
    const auto p = paper_params();
    const auto a = simulate(p, 64, 99);
    const auto b = simulate(p, 64, 99);
    EXPECT_EQ(a.n_slices(), 257);
    EXPECT_EQ(a.data.size(), 64u * 257u * 10u);
    EXPECT_EQ(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)), 0);
    const auto c = simulate(p, 64, 100);
    EXPECT_NE(a.data, c.data);
}

TEST(Simulate, PaperPathCountGives257Slices) {
    const auto sc = simulate(paper_params(), 4096, 1);
    EXPECT_EQ(sc.n_paths, 4096);
    EXPECT_EQ(sc.n_slices(), 257);
}

TEST(Simulate, AliveSetShrinksMonotonically) {
    const auto p = paper_params();
    const auto sc = simulate(p, 8, 5);
    for (int path = 0; path < sc.n_paths; ++path)
        for (int u = 1; u <= 5; ++u)
            for (int k = 0; k < sc.n_slices(); ++k) {
                const bool defined = std::isfinite(sc.S(path, k, u)) && std::isfinite(sc.X(path, k, u));
                EXPECT_EQ(defined, k <= p.grid.step_of(u)) << "u=" << u << " k=" << k;
            }
    for (int k = 1; k < sc.n_slices(); ++k) EXPECT_GE(sc.first_defined(k), sc.first_defined(k - 1));
}

TEST(Simulate, RejectsGridNotAligned) {
    auto cfg = default_config();
    cfg.dt = 0.3;
    EXPECT_THROW((void)cfg.params(), InvalidArgument);
}

TEST(Simulate, GaussianLimitVariance) {
    auto p = paper_params();
    for (auto& w : p.omega) w = 0.0;
    const auto sc = simulate(p, 4096, 17);
    const int k = p.grid.step_of(1);
    std::vector<double> v;
    for (int path = 0; path < sc.n_paths; ++path) v.push_back(sc.S(path, k, 1));
    const auto ms = mean_se(v);
    double m4 = 0.0, var = 0.0;
    for (double x : v) {
        var += (x - ms.mean) * (x - ms.mean);
        m4 += std::pow(x - ms.mean, 4);
    }
    const double n = static_cast<double>(v.size());
    var /= n - 1.0;
    m4 /= n;
    const double se_var = std::sqrt((m4 - var * var) / n);
    EXPECT_NEAR(var, p.xi0_of(1) * p.grid.date(1), 3.0 * se_var);
}

TEST(Simulate, SwapValuesAreMartingales) {
    const auto p = paper_params();
    const auto sc = simulate(p, 4096, 2024);
    const double K = 0.02;
    int tests = 0, exceed = 0;
    for (int u = 1; u <= 5; ++u) {
        const int last = p.grid.step_of(u);
        std::vector<double> prev(static_cast<std::size_t>(sc.n_paths)), start(prev.size()), inc(prev.size());
        for (int path = 0; path < sc.n_paths; ++path) prev[static_cast<std::size_t>(path)] = start[static_cast<std::size_t>(path)] = swap_on_path(sc, path, 0, u, K);
        for (int k = 1; k <= last; ++k) {
            for (int path = 0; path < sc.n_paths; ++path) {
                const double v = swap_on_path(sc, path, k, u, K);
                inc[static_cast<std::size_t>(path)] = v - prev[static_cast<std::size_t>(path)];
                prev[static_cast<std::size_t>(path)] = v;
            }
            const auto ms = mean_se(inc);
            ++tests;
            if (std::abs(ms.mean) > 3.0 * ms.se) ++exceed;
        }
        for (std::size_t i = 0; i < prev.size(); ++i) inc[i] = prev[i] - start[i];
        const auto cum = mean_se(inc);
        EXPECT_LE(std::abs(cum.mean), 3.0 * cum.se) << "cumulative, u=" << u;
    }
    // Per-step: with ~1000 two-sided 3-SE tests a few chance exceedances are
    // expected (p = 0.27% each); a drift error shows up as a systematic excess.
    const double expected = 0.0027 * tests;
    EXPECT_LE(exceed, static_cast<int>(expected + 4.0 * std::sqrt(expected) + 1.0)) << exceed << " of " << tests;
}

TEST(ScenarioIo, RoundTripIsBitExact) {
    const auto sc = simulate(paper_params(), 16, 3);
    const auto bytes = encode_scenarios(sc, 0xabcdefULL);
    const auto back = decode_scenarios(bytes);
    EXPECT_EQ(back.config_fingerprint, 0xabcdefULL);
    EXPECT_EQ(back.set.seed, sc.seed);
    EXPECT_EQ(back.set.params_fingerprint, sc.params_fingerprint);
    EXPECT_EQ(encode_scenarios(back.set, 0xabcdefULL), bytes);
    auto cut = bytes;
    cut.resize(cut.size() - 8);
    EXPECT_THROW(decode_scenarios(cut), IoError);
}

TEST(Reference, ReversedCorrelationsAndHalvedVolOfVol) {
    const auto p = paper_params();
    const auto q = reversed_rate_vol_params(p);
    EXPECT_DOUBLE_EQ(q.omega_of(1), 0.42015);
    const auto& per0 = q.schedule.periods()[0];
    EXPECT_DOUBLE_EQ(per0.rho_zw(0, 0), 0.114);
    EXPECT_DOUBLE_EQ(per0.corr(0, 5), 0.114);
    EXPECT_DOUBLE_EQ(per0.rho_ww(0, 1), p.schedule.periods()[0].rho_ww(0, 1));
    EXPECT_DOUBLE_EQ(per0.rho_zz(0, 1), p.schedule.periods()[0].rho_zz(0, 1));
}

TEST(Reference, RecalibratedSwaptionPricesMatch) {
    const auto p = paper_params();
    ReferenceOptions opt;
    opt.n_inner = 40000;
    const auto ref = make_reference_scenarios(p, 64, 9, opt);
    ASSERT_EQ(ref.target_price.size(), 5u);
    std::vector<double> r0(5, 0.02);
    const auto c0 = reconstruct_curve(r0, p.grid, 1);
    for (int i = 1; i <= 5; ++i) {
        // Solver residual.
        EXPECT_LE(std::abs(ref.achieved_price[static_cast<std::size_t>(i - 1)] - ref.target_price[static_cast<std::size_t>(i - 1)]), 1e-5);
        // Independent oracle: plain nested MC under both parameter sets.
        const auto before = price_nested_mc(RateModel::from(p, i), 0.02, p.x0_of(i), 0.0, 0.02, 100000, 77);
        const auto after = price_nested_mc(RateModel::from(ref.params, i), 0.02, ref.params.x0_of(i), 0.0, 0.02, 100000, 78);
        const double diff = c0.A(i) * (after.value - before.value);
        const double se = c0.A(i) * std::hypot(before.std_error, after.std_error);
        EXPECT_LE(std::abs(diff), std::max(1e-5, 3.0 * se)) << "rate " << i << " diff bp " << 1e4 * diff;
    }
    EXPECT_EQ(ref.scenarios.n_paths, 64);
    EXPECT_EQ(ref.scenarios.params_fingerprint, ref.params.fingerprint());
}
