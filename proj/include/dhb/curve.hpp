#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dhb/error.hpp"
#include "dhb/time_grid.hpp"

// Relative discount curve implied by a strip of coterminal swap rates.
//
// Everything here is expressed relative to the terminal bond P^e, so
// P~^e = 1 and the curve follows from S^{u,e} = (P~^u - 1) / A~^{u,e} by a
// backward bootstrap.

namespace dhb {

namespace curve_detail {

// Local indexing: j = 0..n-1 maps to rate index u = first + j. `discount` has
// n + 1 entries (the last one is P~^e = 1), `annuity` has n.
inline void bootstrap(std::span<const double> rates, std::span<const double> accruals,
                      std::span<double> discount, std::span<double> annuity) {
    const std::size_t n = rates.size();
    discount[n] = 1.0;
    double acc = 0.0;
    for (std::size_t j = n; j-- > 0;) {
        acc += accruals[j] * discount[j + 1];
        annuity[j] = acc;
        discount[j] = 1.0 + rates[j] * acc;
    }
}

// d annuity[j] / d rates[m], row-major n x n. Only m > j is nonzero.
inline void annuity_jacobian(std::span<const double> rates, std::span<const double> accruals,
                             std::span<const double> annuity, std::span<double> d_annuity,
                             std::span<double> d_discount_scratch) {
    const std::size_t n = rates.size();
    auto dA = [&](std::size_t j, std::size_t m) -> double& { return d_annuity[j * n + m]; };
    auto dP = [&](std::size_t j, std::size_t m) -> double& { return d_discount_scratch[j * n + m]; };
    for (std::size_t m = 0; m < n; ++m) {
        dA(n - 1, m) = 0.0;
        dP(n - 1, m) = (m == n - 1 ? annuity[n - 1] : 0.0);
    }
    for (std::size_t j = n - 1; j-- > 0;) {
        for (std::size_t m = 0; m < n; ++m) {
            dA(j, m) = dA(j + 1, m) + accruals[j] * dP(j + 1, m);
            dP(j, m) = (m == j ? annuity[j] : 0.0) + rates[j] * dA(j, m);
        }
    }
}

}  // namespace curve_detail

struct CurveState {
    int first = 1;     // lowest alive rate index i
    int terminal = 2;  // e
    std::vector<double> discount;  // P~^u, u = first..terminal
    std::vector<double> annuity;   // A~^{u,e}, u = first..terminal-1
    std::vector<double> rates;     // S^{u,e}, u = first..terminal-1

    [[nodiscard]] double P(int u) const { return discount.at(static_cast<std::size_t>(u - first)); }
    [[nodiscard]] double A(int u) const { return annuity.at(static_cast<std::size_t>(u - first)); }
    [[nodiscard]] double S(int u) const { return rates.at(static_cast<std::size_t>(u - first)); }
    [[nodiscard]] bool contains(int u) const { return u >= first && u < terminal; }
};

inline std::vector<double> accruals_from(const TimeGrid& grid, int first) {
    std::vector<double> d;
    for (int u = first; u < grid.terminal_index(); ++u) d.push_back(grid.accrual(u));
    return d;
}

// rates[k] = S^{first + k, e} for k = 0..e-first-1.
inline CurveState reconstruct_curve(std::span<const double> rates, const TimeGrid& grid, int first) {
    const int e = grid.terminal_index();
    DHB_REQUIRE(first >= 1 && first < e, InvalidArgument, "reconstruct_curve: need 1 <= i < e");
    DHB_REQUIRE(rates.size() == static_cast<std::size_t>(e - first), InvalidArgument,
                "reconstruct_curve: expected " + std::to_string(e - first) + " rates");
    for (double s : rates) {
        DHB_REQUIRE(std::isfinite(s), InvalidArgument, "reconstruct_curve: non-finite swap rate");
    }
    CurveState c;
    c.first = first;
    c.terminal = e;
    c.rates.assign(rates.begin(), rates.end());
    c.discount.resize(rates.size() + 1);
    c.annuity.resize(rates.size());
    auto acc = accruals_from(grid, first);
    curve_detail::bootstrap(rates, acc, c.discount, c.annuity);
    for (std::size_t j = 0; j < c.discount.size(); ++j) {
        if (!(c.discount[j] > 0.0)) {
            throw DegenerateCurve("reconstruct_curve: non-positive relative discount factor P~^" +
                                  std::to_string(first + static_cast<int>(j)));
        }
    }
    return c;
}

// Swap rate recomputed from the curve, S = (P~^u - P~^e) / A~^{u,e}.
inline double implied_swap_rate(const CurveState& c, int u) {
    return (c.P(u) - c.P(c.terminal)) / c.A(u);
}

// Relative value of the receiver swap U^{u,e,K} = A~^{u,e} (K - S^{u,e}).
inline double swap_value(const CurveState& c, int u, double strike) {
    DHB_REQUIRE(c.contains(u), InvalidArgument,
                "swap_value: index " + std::to_string(u) + " outside alive range");
    return c.A(u) * (strike - c.S(u));
}

// d A~^{u,e} / d S^{m,e}, (e-first) x (e-first) row-major in local indices.
inline std::vector<double> annuity_jacobian(const CurveState& c, const TimeGrid& grid) {
    const std::size_t n = c.rates.size();
    std::vector<double> dA(n * n), scratch(n * n);
    auto acc = accruals_from(grid, c.first);
    curve_detail::annuity_jacobian(c.rates, acc, c.annuity, dA, scratch);
    return dA;
}

}  // namespace dhb
