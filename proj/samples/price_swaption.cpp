// Prices the t = 0 coterminal receiver swaptions of the default setup with the
// nested Monte Carlo oracle and compares them with a freshly built surface.
//
//   price_swaption [n_inner]

#include <cstdio>
#include <cstdlib>

#include "dhb/config.hpp"
#include "dhb/curve.hpp"
#include "dhb/swaption.hpp"

int main(int argc, char** argv) {
    const int n_inner = argc > 1 ? std::atoi(argv[1]) : 20000;
    const auto cfg = dhb::default_config();
    const auto params = cfg.params();
    std::vector<double> s0;
    for (int u = 1; u < params.terminal(); ++u) s0.push_back(params.s0_of(u));
    const auto curve = dhb::reconstruct_curve(s0, params.grid, 1);

    auto opt = cfg.surface;
    opt.n_inner = n_inner;
    std::printf("%4s %10s %12s %10s %12s\n", "i", "annuity", "mc (bp)", "se (bp)", "surface (bp)");
    for (int i = 1; i < params.terminal(); ++i) {
        const auto model = dhb::RateModel::from(params, i);
        const auto mc = dhb::price_nested_mc(model, params.s0_of(i), params.x0_of(i), 0.0, cfg.strike, n_inner, 7);
        const auto spec = dhb::default_surface_spec(params, i, cfg.strike, cfg.seed_surface, opt);
        const auto surf = dhb::build_surface(params, spec);
        const double a = curve.A(i);
        std::printf("%4d %10.4f %12.2f %10.2f %12.2f\n", i, a, 1e4 * a * mc.value, 1e4 * a * mc.std_error,
                    1e4 * surf.price(curve, params.s0_of(i), params.x0_of(i), 0.0));
    }
    return 0;
}
