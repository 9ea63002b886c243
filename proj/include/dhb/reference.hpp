#pragma once

#include <cmath>
#include <sstream>

#include "dhb/smbm.hpp"
#include "dhb/swaption.hpp"

namespace dhb {

// t = 0 value of Psi for rate i started at X_0 = x, by the conditional
// Gaussian estimator with a fixed seed, so it is a smooth deterministic
// function of x.
class InitialPsi {
public:
    InitialPsi(const SmbmParams& p, int i, double strike, int n_inner, std::uint64_t seed, double dt)
        : m_(RateModel::from(p, i)), s0_(p.s0_of(i)), strike_(strike), n_inner_(n_inner), seed_(seed), dt_(dt) {
        if (m_.kappa == 0.0) {
            auto rng = make_stream(seed_, static_cast<std::uint64_t>(i), 0x726566ULL);
            ref_ = sample_mixing(m_, 0.0, 0.0, n_inner_, rng, dt_);
        }
    }

    [[nodiscard]] double operator()(double x) const {
        const double mny = strike_ - s0_;
        if (m_.kappa == 0.0) {
            // J and sqrt(V) scale by e^{omega x / 2}
            const double a = std::exp(0.5 * m_.omega * x);
            return std::max(mny, 0.0) + a * mixing_time_value(ref_, mny / a);
        }
        auto rng = make_stream(seed_, static_cast<std::uint64_t>(m_.rate), 0x726566ULL);
        const auto smp = sample_mixing(m_, x, 0.0, n_inner_, rng, dt_);
        return std::max(mny, 0.0) + mixing_time_value(smp, mny);
    }

private:
    RateModel m_;
    double s0_, strike_;
    int n_inner_;
    std::uint64_t seed_;
    double dt_;
    MixingSamples ref_;
};

struct ReferenceResult {
    SmbmParams params;
    ScenarioSet scenarios;
    std::vector<double> target_price;    // O^{i,e,K}_0 of the original parameters
    std::vector<double> achieved_price;  // same under the modified parameters
};

struct ReferenceOptions {
    double strike = 0.02;
    int n_inner = 100000;
    std::uint64_t pricing_seed = 1;
    double dt_inner = 1.0 / 32.0;
    double tolerance = 1e-5;  // 0.1 bp of notional, relative price units
    double x_lo = -10.0, x_hi = 10.0;
};

// Reversed rate-vol correlations and halved vol-of-vol, with X_0 re-solved
// per rate by bisection so that the t = 0 coterminal swaption prices match.
inline ReferenceResult make_reference_scenarios(const SmbmParams& original, int n_paths, std::uint64_t seed,
                                                const ReferenceOptions& opt = {}) {
    original.validate();
    ReferenceResult res;
    res.params = reversed_rate_vol_params(original);
    const int e = original.terminal();
    std::vector<double> r0;
    for (int u = 1; u < e; ++u) r0.push_back(original.s0_of(u));
    const auto c0 = reconstruct_curve(r0, original.grid, 1);
    for (int i = 1; i < e; ++i) {
        const double ann = c0.A(i);
        const InitialPsi before(original, i, opt.strike, opt.n_inner, opt.pricing_seed, opt.dt_inner);
        const double target = ann * before(original.x0_of(i));
        const InitialPsi after(res.params, i, opt.strike, opt.n_inner, opt.pricing_seed, opt.dt_inner);
        auto f = [&](double x) { return ann * after(x) - target; };
        double lo = opt.x_lo, hi = opt.x_hi;
        const double flo = f(lo), fhi = f(hi);
        if (!(flo < 0.0 && fhi > 0.0)) {
            std::ostringstream os;
            os << "make_reference_scenarios: X_0 root for rate " << i << " not bracketed on [" << lo << ", " << hi
               << "]: residuals " << flo << ", " << fhi << " (target " << target << ")";
            throw InvalidArgument(os.str());
        }
        double x = 0.5 * (lo + hi), fx = f(x);
        for (int it = 0; it < 200 && std::abs(fx) > 0.01 * opt.tolerance; ++it) {
            if (fx > 0.0) hi = x;
            else lo = x;
            x = 0.5 * (lo + hi);
            fx = f(x);
        }
        DHB_REQUIRE(std::abs(fx) <= opt.tolerance, InvalidArgument,
                    "make_reference_scenarios: bisection for rate " + std::to_string(i) + " did not converge");
        res.params.x0[static_cast<std::size_t>(i - 1)] = x;
        res.target_price.push_back(target);
        res.achieved_price.push_back(target + fx);
    }
    res.params.validate();
    res.scenarios = simulate(res.params, n_paths, seed);
    return res;
}

}  // namespace dhb
