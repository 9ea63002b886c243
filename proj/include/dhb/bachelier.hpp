#pragma once

#include <cmath>
#include <numbers>

// Normal-model (Bachelier) helpers in "moneyness" form: the receiver payoff
// (K - S_T)^+ with S_T = s + N(0, v) has value B(K - s, v).

namespace dhb::bachelier {

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// phi(d) - d * Phi(-d) for d >= 0, accurate in the far tail.
inline double unit_time_value(double d) {
    if (d < 7.0) return norm_pdf(d) - d * norm_cdf(-d);
    // asymptotic expansion phi(d)/d^2 * sum (-1)^k (2k+1)!! / d^(2k)
    const double inv = 1.0 / (d * d);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        double next = -term * (2.0 * k + 1.0) * inv;
        if (std::abs(next) >= std::abs(term) || std::abs(next) < 1e-18) break;
        term = next;
        sum += term;
    }
    return norm_pdf(d) * inv * sum;
}

// Time value B(-|m|, sd^2) of an option with distance |m| from the money.
inline double time_value(double m, double sd) {
    if (sd <= 0.0) return 0.0;
    return sd * unit_time_value(std::abs(m) / sd);
}

// Receiver value E[(m - sd * N)^+] with m = K - s.
inline double price(double m, double sd) {
    if (sd <= 0.0) return m > 0.0 ? m : 0.0;
    return (m > 0.0 ? m : 0.0) + time_value(m, sd);
}

// Standard deviation sd with time_value(m, sd) == tv. Returns a negative value
// when tv is not representable (zero, negative or non-finite).
inline double implied_sd(double m, double tv) {
    if (!(tv > 0.0) || !std::isfinite(tv)) return -1.0;
    const double a = std::abs(m);
    if (a == 0.0) return tv / norm_pdf(0.0);
    // f(sd) = time_value(a, sd) is increasing; bracket in log space.
    double lo = 1e-300, hi = std::max(tv / norm_pdf(0.0), a) * 4.0;
    while (time_value(a, hi) < tv) hi *= 4.0;
    double x = std::sqrt(std::max(lo, 1e-300) * hi);
    // Start from the ATM guess when it is inside the bracket.
    double guess = tv / norm_pdf(0.0);
    if (guess > lo && guess < hi) x = guess;
    for (int it = 0; it < 200; ++it) {
        double f = time_value(a, x) - tv;
        if (f > 0.0) hi = x; else lo = x;
        double vega = norm_pdf(a / x);
        double next = vega > 0.0 ? x - f / vega : -1.0;
        if (!(next > lo && next < hi)) next = (lo > 1e-200) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * x) return next;
        x = next;
    }
    return x;
}

}  // namespace dhb::bachelier
