#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "dhb/error.hpp"

namespace dhb::nn {

// Empirical CVaR_alpha(X) of P&L samples X: the exact integral of the
// empirical loss quantile function over the worst (1 - alpha) mass.
// If grad is non-null it receives dCVaR/dX_j (a subgradient at ties).
inline double cvar(std::span<const double> x, double alpha, std::vector<double>* grad = nullptr) {
    DHB_REQUIRE(!x.empty(), InvalidArgument, "cvar: empty sample");
    DHB_REQUIRE(alpha >= 0.0 && alpha < 1.0, InvalidArgument, "cvar: alpha must lie in [0, 1)");
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Ascending P&L = descending loss; stable so ties resolve by index.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    double tail = (1.0 - alpha) * static_cast<double>(n);
    const double rounded = std::round(tail);
    if (std::abs(tail - rounded) < 1e-9 * static_cast<double>(n)) tail = rounded;
    const auto full = static_cast<std::size_t>(std::floor(tail));
    const double frac = tail - static_cast<double>(full);
    if (grad) grad->assign(n, 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < full; ++k) {
        acc += -x[order[k]];
        if (grad) (*grad)[order[k]] = -1.0 / tail;
    }
    if (frac > 0.0 && full < n) {
        acc += -frac * x[order[full]];
        if (grad) (*grad)[order[full]] = -frac / tail;
    }
    return acc / tail;
}

}  // namespace dhb::nn
