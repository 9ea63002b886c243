#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "dhb/error.hpp"

namespace dhb {

struct MaxPolicy {
    std::vector<double> q;  // short weights over the alive swaptions i..e-1
    bool exercise = false;  // meaningful only at t = T_i
};

// Short the most valuable alive swaption (lowest index on ties); exercise at
// T_i iff swaption i attains the maximum.
inline MaxPolicy smax_policy(std::span<const double> prices) {
    DHB_REQUIRE(!prices.empty(), InvalidArgument, "smax_policy: empty alive set");
    std::size_t best = 0;
    for (std::size_t u = 1; u < prices.size(); ++u)
        if (prices[u] > prices[best]) best = u;
    MaxPolicy out;
    out.q.assign(prices.size(), 0.0);
    out.q[best] = 1.0;
    out.exercise = best == 0;
    return out;
}

// q_u = w_u prod_{k<u} (1 - w_k) over the alive set; w is clipped to [0, 1]
// and the last entry must be 1, so q lies on the unit simplex.
inline std::vector<double> os_weights(std::span<const double> w) {
    DHB_REQUIRE(!w.empty(), InvalidArgument, "os_weights: empty alive set");
    DHB_REQUIRE(w.back() == 1.0, InvalidArgument, "os_weights: the last weight must be 1");
    std::vector<double> q(w.size());
    double rest = 1.0;
    for (std::size_t u = 0; u < w.size(); ++u) {
        const double c = std::clamp(w[u], 0.0, 1.0);
        q[u] = c * rest;
        rest *= 1.0 - c;
    }
    return q;
}

}  // namespace dhb
