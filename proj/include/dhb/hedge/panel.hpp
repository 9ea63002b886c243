#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dhb/curve.hpp"
#include "dhb/hedge/strategy.hpp"
#include "dhb/parallel.hpp"
#include "dhb/smbm.hpp"
#include "dhb/swaption.hpp"

namespace dhb {

class SurfaceSet {
public:
    SurfaceSet() = default;
    explicit SurfaceSet(std::vector<SwaptionSurface> s) : surfaces_(std::move(s)) {}

    void add(SwaptionSurface s) { surfaces_.push_back(std::move(s)); }
    [[nodiscard]] const std::vector<SwaptionSurface>& all() const { return surfaces_; }

    [[nodiscard]] const SwaptionSurface* find(int rate, double strike) const {
        for (const auto& s : surfaces_)
            if (s.spec().rate == rate && std::abs(s.spec().strike - strike) < 1e-12) return &s;
        return nullptr;
    }
    [[nodiscard]] const SwaptionSurface& at(int rate, double strike) const {
        const auto* s = find(rate, strike);
        if (!s) throw MissingArtifact("no swaption surface for rate " + std::to_string(rate) + " strike " + std::to_string(strike));
        return *s;
    }

private:
    std::vector<SwaptionSurface> surfaces_;
};

// Relative prices of the strategy's hedge assets on every path and grid
// slice. Column layout per (path, slice): swaps U^{1..R} first, then the
// swaptions O^{1..R, k_j} strike by strike. Columns of matured assets hold 0.
struct HedgeAssetPanel {
    TimeGrid grid;
    int n_paths = 0;
    Strategy strategy;
    std::uint64_t scenario_fingerprint = 0;
    std::vector<double> data;
    std::vector<double> payoff;     // [p][i-1]: O^{i,e,K}(T_i) = A~ (K - S)^+
    std::vector<double> o0;         // O^{u,e,K}_0 from the trade-strike surfaces
    long out_of_hull = 0;           // surface lookups clamped to the grid hull

    [[nodiscard]] int n_rates() const { return grid.n_rates(); }
    [[nodiscard]] int n_slices() const { return grid.n_steps() + 1; }
    [[nodiscard]] int n_strikes() const { return static_cast<int>(strategy.hedge_strikes.size()); }
    [[nodiscard]] int n_assets() const { return n_rates() * (1 + n_strikes()); }
    [[nodiscard]] int swap_col(int u) const { return u - 1; }
    [[nodiscard]] int swaption_col(int u, int j) const { return n_rates() * (1 + j) + u - 1; }
    [[nodiscard]] int trade_strike_index() const {
        for (int j = 0; j < n_strikes(); ++j)
            if (strategy.hedge_strikes[static_cast<std::size_t>(j)] == strategy.trade_strike) return j;
        return -1;
    }
    [[nodiscard]] std::size_t at(int p, int k, int col) const {
        return (static_cast<std::size_t>(p) * static_cast<std::size_t>(n_slices()) + static_cast<std::size_t>(k)) *
                   static_cast<std::size_t>(n_assets()) +
               static_cast<std::size_t>(col);
    }
    [[nodiscard]] const double* row(int p, int k) const { return data.data() + at(p, k, 0); }
    [[nodiscard]] double swap(int p, int k, int u) const { return data[at(p, k, swap_col(u))]; }
    [[nodiscard]] double swaption(int p, int k, int u, int j) const { return data[at(p, k, swaption_col(u, j))]; }
    [[nodiscard]] double exercise_value(int p, int i) const {
        return payoff[static_cast<std::size_t>(p) * static_cast<std::size_t>(n_rates()) + static_cast<std::size_t>(i - 1)];
    }
    [[nodiscard]] double max_o0() const {
        double m = -std::numeric_limits<double>::infinity();
        for (double v : o0) m = std::max(m, v);
        return m;
    }
};

inline std::uint64_t scenario_fingerprint(const ScenarioSet& s) {
    Fingerprint fp;
    fp.add(s.params_fingerprint).add(s.seed).add(static_cast<std::uint64_t>(s.n_paths));
    s.grid.hash(fp);
    return fp.value();
}

inline HedgeAssetPanel build_panel(const ScenarioSet& sc, const SurfaceSet& surfaces, const Strategy& strategy) {
    strategy.validate();
    const TimeGrid& g = sc.grid;
    const int e = g.terminal_index(), R = g.n_rates();
    const double K = strategy.trade_strike;

    HedgeAssetPanel pan;
    pan.grid = g;
    pan.n_paths = sc.n_paths;
    pan.strategy = strategy;
    pan.scenario_fingerprint = scenario_fingerprint(sc);
    pan.data.assign(static_cast<std::size_t>(sc.n_paths) * static_cast<std::size_t>(pan.n_slices()) *
                        static_cast<std::size_t>(pan.n_assets()),
                    0.0);
    pan.payoff.assign(static_cast<std::size_t>(sc.n_paths) * static_cast<std::size_t>(R), 0.0);

    std::vector<std::vector<const SwaptionSurface*>> surf(static_cast<std::size_t>(pan.n_strikes()));
    for (int j = 0; j < pan.n_strikes(); ++j)
        for (int u = 1; u < e; ++u)
            surf[static_cast<std::size_t>(j)].push_back(&surfaces.at(u, strategy.hedge_strikes[static_cast<std::size_t>(j)]));

    // t = 0 prices of the trade-strike swaptions, shared by all paths.
    {
        std::vector<double> r0(static_cast<std::size_t>(R));
        for (int u = 1; u < e; ++u) r0[static_cast<std::size_t>(u - 1)] = sc.S(0, 0, u);
        const auto c0 = reconstruct_curve(r0, g, 1);
        for (int u = 1; u < e; ++u) pan.o0.push_back(surfaces.at(u, K).price(c0, sc.S(0, 0, u), sc.X(0, 0, u), 0.0));
    }

    std::vector<long> hull(static_cast<std::size_t>(sc.n_paths), 0);
    parallel_for(static_cast<std::size_t>(sc.n_paths), [&](std::size_t b, std::size_t end) {
        std::vector<double> rates;
        for (std::size_t pp = b; pp < end; ++pp) {
            const int p = static_cast<int>(pp);
            for (int k = 0; k < pan.n_slices(); ++k) {
                const int first = sc.first_defined(k);
                const double t = g.time(k);
                rates.clear();
                for (int u = first; u < e; ++u) rates.push_back(sc.S(p, k, u));
                const auto c = reconstruct_curve(rates, g, first);
                double* row = pan.data.data() + pan.at(p, k, 0);
                for (int u = first; u < e; ++u) {
                    const double s = c.S(u), a = c.A(u);
                    row[pan.swap_col(u)] = a * (K - s);
                    for (int j = 0; j < pan.n_strikes(); ++j) {
                        const auto v = surf[static_cast<std::size_t>(j)][static_cast<std::size_t>(u - 1)]->eval(s, sc.X(p, k, u), t);
                        hull[pp] += v.out_of_hull;
                        row[pan.swaption_col(u, j)] = a * v.value;
                    }
                    if (k == g.step_of(u))
                        pan.payoff[pp * static_cast<std::size_t>(R) + static_cast<std::size_t>(u - 1)] = a * std::max(K - s, 0.0);
                }
            }
        }
    });
    for (long h : hull) pan.out_of_hull += h;
    return pan;
}

}  // namespace dhb
