#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dhb/bachelier.hpp"
#include "dhb/binary_io.hpp"
#include "dhb/curve.hpp"
#include "dhb/interp.hpp"
#include "dhb/parallel.hpp"
#include "dhb/smbm.hpp"

// Coterminal European swaptions under the single-rate model of S^{i,e}.
//
// Psi(s, x, t) = E^{A^{i,e}}[(K - S_{T_i})^+ | S_t = s, X_t = x] in rate units;
// the relative swaption price is A~^{i,e}_t * Psi. Two independent estimators:
//  * price_nested_mc: plain Euler on (S, X) with antithetic pairs (the oracle);
//  * the surface builder: conditional-Gaussian estimator. Given the Z path,
//    S_T - s is N(J, V) with J = sum rho sqrt(xi) dZ and
//    V = sum (1 - rho^2) xi dt, so only the variance driver is sampled.

namespace dhb {

// Single-rate view of the SMBM parameters for rate i.
struct RateModel {
    int rate = 1;
    double maturity = 0.0;
    double xi0 = 0.0, omega = 0.0, kappa = 0.0;
    std::vector<double> period_end;  // rho(W^i, Z^i) is piecewise constant
    std::vector<double> period_rho;

    static RateModel from(const SmbmParams& p, int i) {
        DHB_REQUIRE(i >= 1 && i < p.terminal(), InvalidArgument, "RateModel: rate index out of range");
        RateModel m;
        m.rate = i;
        m.maturity = p.grid.date(i);
        m.xi0 = p.xi0_of(i);
        m.omega = p.omega_of(i);
        m.kappa = p.kappa_of(i);
        for (const auto& per : p.schedule.periods()) {
            if (per.start >= m.maturity) break;
            int a = per.slot(i);
            DHB_REQUIRE(a >= 0, InvalidArgument, "RateModel: rate not alive before its maturity");
            m.period_end.push_back(per.end);
            m.period_rho.push_back(per.rho_zw(a, a));
        }
        return m;
    }

    [[nodiscard]] double rho(double t) const {
        for (std::size_t k = 0; k < period_end.size(); ++k)
            if (t < period_end[k]) return period_rho[k];
        return period_rho.back();
    }
    [[nodiscard]] double spot_variance(double x, double t) const {
        return xi0 * std::exp(omega * x - 0.5 * omega * omega * ou_variance(kappa, t));
    }
};

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

inline int inner_steps(double horizon, double dt) {
    return std::max(1, static_cast<int>(std::ceil(horizon / dt - 1e-9)));
}

// Plain nested Monte Carlo under the annuity measure: zero drift on S, only
// the own rate-vol correlation. n_inner is rounded up to an even number of
// antithetic pairs.
inline MonteCarloEstimate price_nested_mc(const RateModel& m, double s, double x, double t, double strike,
                                          int n_inner, std::uint64_t seed, double dt = 1.0 / 32.0) {
    DHB_REQUIRE(t >= 0.0 && t <= m.maturity + 1e-12, InvalidArgument,
                "price_nested_mc: t must lie in [0, T_i]");
    if (m.maturity - t <= 1e-12) return {std::max(strike - s, 0.0), 0.0};
    DHB_REQUIRE(n_inner >= 2, InvalidArgument, "price_nested_mc: need at least two paths");
    const int n_pairs = (n_inner + 1) / 2;
    const int n = inner_steps(m.maturity - t, dt);
    const double h = (m.maturity - t) / n, sh = std::sqrt(h);

    std::vector<double> rho(static_cast<std::size_t>(n)), rho_perp(static_cast<std::size_t>(n)),
        comp(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double u = t + k * h;
        rho[static_cast<std::size_t>(k)] = m.rho(u);
        rho_perp[static_cast<std::size_t>(k)] = std::sqrt(1.0 - rho[static_cast<std::size_t>(k)] * rho[static_cast<std::size_t>(k)]);
        comp[static_cast<std::size_t>(k)] = -0.5 * m.omega * m.omega * ou_variance(m.kappa, u);
    }
    auto rng = make_stream(seed, 0x6f7261636c65ULL);
    std::normal_distribution<double> gauss;
    double sum = 0.0, sum2 = 0.0;
    const double sq_xi0 = std::sqrt(m.xi0);
    for (int p = 0; p < n_pairs; ++p) {
        double s1 = s, x1 = x, s2 = s, x2 = x;
        for (int k = 0; k < n; ++k) {
            const double z1 = gauss(rng), z2 = gauss(rng);
            const auto kk = static_cast<std::size_t>(k);
            const double v1 = sq_xi0 * std::exp(0.5 * (m.omega * x1 + comp[kk]));
            const double v2 = sq_xi0 * std::exp(0.5 * (m.omega * x2 + comp[kk]));
            const double dw = rho[kk] * z1 + rho_perp[kk] * z2;
            s1 += v1 * sh * dw;
            s2 -= v2 * sh * dw;
            x1 += -m.kappa * x1 * h + sh * z1;
            x2 += -m.kappa * x2 * h - sh * z1;
        }
        const double pay = 0.5 * (std::max(strike - s1, 0.0) + std::max(strike - s2, 0.0));
        sum += pay;
        sum2 += pay * pay;
    }
    const double mean = sum / n_pairs;
    const double var = std::max(0.0, sum2 / n_pairs - mean * mean) * n_pairs / std::max(1, n_pairs - 1);
    return {mean, std::sqrt(var / n_pairs)};
}

// Conditional-Gaussian samples (J_p, V_p) from (x, t) to maturity, with J
// re-centred to exact zero mean (put-call parity holds in-sample).
// Per inner path: correlated Gaussian part j and residual standard deviation
// v. c1 = v^2 - E[v^2] and c2 = j^2 - E[j^2] are control variates with exact
// means under the discrete scheme; cov is their sample covariance.
struct MixingSamples {
    std::vector<double> j, v, c1, c2;
    double c1_mean = 0.0, c2_mean = 0.0;
    double cov11 = 0.0, cov12 = 0.0, cov22 = 0.0;
};

inline MixingSamples sample_mixing(const RateModel& m, double x, double t, int n_inner, std::mt19937_64& rng,
                                   double dt) {
    const int n_pairs = (n_inner + 1) / 2;
    const int n = inner_steps(m.maturity - t, dt);
    const double h = (m.maturity - t) / n, sh = std::sqrt(h);
    std::vector<double> rho(static_cast<std::size_t>(n)), comp(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double u = t + k * h;
        rho[static_cast<std::size_t>(k)] = m.rho(u);
        comp[static_cast<std::size_t>(k)] = -0.5 * m.omega * m.omega * ou_variance(m.kappa, u);
    }
    std::normal_distribution<double> gauss;
    MixingSamples out;
    out.j.resize(static_cast<std::size_t>(2 * n_pairs));
    out.v.resize(static_cast<std::size_t>(2 * n_pairs));
    for (int p = 0; p < n_pairs; ++p) {
        double x1 = x, x2 = x, j1 = 0.0, j2 = 0.0, v1 = 0.0, v2 = 0.0;
        for (int k = 0; k < n; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const double z = gauss(rng);
            const double xi1 = m.xi0 * std::exp(m.omega * x1 + comp[kk]);
            const double xi2 = m.xi0 * std::exp(m.omega * x2 + comp[kk]);
            const double r = rho[kk], q = 1.0 - r * r;
            j1 += r * std::sqrt(xi1) * sh * z;
            j2 -= r * std::sqrt(xi2) * sh * z;
            v1 += q * xi1 * h;
            v2 += q * xi2 * h;
            x1 += -m.kappa * x1 * h + sh * z;
            x2 += -m.kappa * x2 * h - sh * z;
        }
        out.j[static_cast<std::size_t>(2 * p)] = j1;
        out.j[static_cast<std::size_t>(2 * p + 1)] = j2;
        out.v[static_cast<std::size_t>(2 * p)] = v1;
        out.v[static_cast<std::size_t>(2 * p + 1)] = v2;
    }
    // E[xi_k]: X_k is Gaussian under the Euler recursion.
    double ev = 0.0, ej2 = 0.0, mx = x, vx = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double exi = m.xi0 * std::exp(m.omega * mx + comp[kk] + 0.5 * m.omega * m.omega * vx);
        ev += (1.0 - rho[kk] * rho[kk]) * exi * h;
        ej2 += rho[kk] * rho[kk] * exi * h;
        mx *= 1.0 - m.kappa * h;
        vx = vx * (1.0 - m.kappa * h) * (1.0 - m.kappa * h) + h;
    }
    const std::size_t N = out.j.size();
    out.c1.resize(N);
    out.c2.resize(N);
    for (std::size_t p = 0; p < N; ++p) {
        out.c1[p] = out.v[p] - ev;
        out.c2[p] = out.j[p] * out.j[p] - ej2;
    }
    double mean = 0.0;
    for (double a : out.j) mean += a;
    mean /= static_cast<double>(N);
    for (double& a : out.j) a -= mean;
    for (double& a : out.v) a = std::sqrt(a);  // keep standard deviations
    for (std::size_t p = 0; p < N; ++p) {
        out.c1_mean += out.c1[p];
        out.c2_mean += out.c2[p];
    }
    out.c1_mean /= static_cast<double>(N);
    out.c2_mean /= static_cast<double>(N);
    for (std::size_t p = 0; p < N; ++p) {
        const double a = out.c1[p] - out.c1_mean, b = out.c2[p] - out.c2_mean;
        out.cov11 += a * a;
        out.cov12 += a * b;
        out.cov22 += b * b;
    }
    out.cov11 /= static_cast<double>(N);
    out.cov12 /= static_cast<double>(N);
    out.cov22 /= static_cast<double>(N);
    return out;
}

// In-sample time value Psi(m) - m^+ for moneyness m = K - s.
// Control-variate adjusted with in-sample regression coefficients; falls
// back to the plain mean when the control variates are degenerate or the
// adjusted value is not positive (far wings).
inline double mixing_time_value(const MixingSamples& smp, double m) {
    const double a = -std::abs(m), sign = m >= 0.0 ? 1.0 : -1.0;
    const std::size_t N = smp.j.size();
    double acc = 0.0, y1 = 0.0, y2 = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
        const double y = bachelier::price(a + sign * smp.j[p], smp.v[p]);
        acc += y;
        y1 += y * smp.c1[p];
        y2 += y * smp.c2[p];
    }
    const double n = static_cast<double>(N), ybar = acc / n;
    const double s1 = y1 / n - ybar * smp.c1_mean, s2 = y2 / n - ybar * smp.c2_mean;
    const double det = smp.cov11 * smp.cov22 - smp.cov12 * smp.cov12;
    if (!(det > 1e-12 * smp.cov11 * smp.cov22)) return ybar;
    const double b1 = (smp.cov22 * s1 - smp.cov12 * s2) / det, b2 = (smp.cov11 * s2 - smp.cov12 * s1) / det;
    const double adj = ybar - b1 * smp.c1_mean - b2 * smp.c2_mean;
    return adj > 0.0 ? adj : ybar;
}

// The rate axis is scaled moneyness u = (K - s) / w(x, t) with
// w = sqrt(spot variance(x, t) * (T_i - t)); xi0/omega/kappa fix w.
struct SurfaceSpec {
    int rate = 1;
    double strike = 0.02;
    std::vector<double> m_nodes, x_nodes, t_nodes;
    double xi0 = 0.0, omega = 0.0, kappa = 0.0;
    int n_inner = 100000;
    std::uint64_t seed = 1;
    double dt_inner = 1.0 / 32.0;

    [[nodiscard]] double maturity() const { return t_nodes.back(); }
    [[nodiscard]] double spot_variance(double x, double t) const {
        return xi0 * std::exp(omega * x - 0.5 * omega * omega * ou_variance(kappa, t));
    }
    // Moneyness scale w(x, t); zero at maturity.
    [[nodiscard]] double width(double x, double t) const {
        return std::sqrt(spot_variance(x, t) * std::max(maturity() - t, 0.0));
    }

    void validate(const RateModel& m) const {
        interp::require_increasing(m_nodes, "SurfaceSpec moneyness axis");
        interp::require_increasing(x_nodes, "SurfaceSpec x-axis");
        interp::require_increasing(t_nodes, "SurfaceSpec t-axis");
        DHB_REQUIRE(t_nodes.front() >= 0.0, InvalidArgument, "SurfaceSpec: t-axis must start at or after 0");
        DHB_REQUIRE(t_nodes.back() == m.maturity, InvalidArgument, "SurfaceSpec: t-axis must end at T_i");
        DHB_REQUIRE(xi0 == m.xi0 && omega == m.omega && kappa == m.kappa, InvalidArgument,
                    "SurfaceSpec: moneyness scale does not match the rate model");
        DHB_REQUIRE(n_inner >= 2, InvalidArgument, "SurfaceSpec: n_inner must be >= 2");
        DHB_REQUIRE(dt_inner > 0.0, InvalidArgument, "SurfaceSpec: dt_inner must be positive");
    }
};

struct SurfaceGridOptions {
    int m_nodes = 41;
    double m_width_sd = 6.0;
    int x_nodes = 21;
    double x_width_sd = 5.0;
    int t_per_year = 8;
    // Extra t-nodes at T_i - h for each h, where the smile moves fastest.
    std::vector<double> near_maturity{1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0};
    int n_inner = 100000;
    double dt_inner = 1.0 / 32.0;
};

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = a + (b - a) * k / (n - 1);
    return v;
}

inline SurfaceSpec default_surface_spec(const SmbmParams& p, int i, double strike, std::uint64_t seed,
                                        const SurfaceGridOptions& opt = {}) {
    const double T = p.grid.date(i);
    SurfaceSpec spec;
    spec.rate = i;
    spec.strike = strike;
    spec.seed = seed;
    spec.n_inner = opt.n_inner;
    spec.dt_inner = opt.dt_inner;
    spec.xi0 = p.xi0_of(i);
    spec.omega = p.omega_of(i);
    spec.kappa = p.kappa_of(i);
    spec.m_nodes = linspace(-opt.m_width_sd, opt.m_width_sd, opt.m_nodes);
    const double xw = opt.x_width_sd * std::sqrt(ou_variance(p.kappa_of(i), T));
    spec.x_nodes = linspace(p.x0_of(i) - xw, p.x0_of(i) + xw, opt.x_nodes);
    std::vector<double> t{0.0, T};
    for (const auto& per : p.schedule.periods())
        if (per.end < T) t.push_back(per.end);
    const int n_year = static_cast<int>(std::floor(T * opt.t_per_year + 1e-9));
    for (int k = 1; k < n_year; ++k) t.push_back(static_cast<double>(k) / opt.t_per_year);
    for (double h : opt.near_maturity)
        if (h < T) t.push_back(T - h);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), t.end());
    spec.t_nodes = std::move(t);
    return spec;
}

struct SurfaceValue {
    double value = 0.0;
    bool out_of_hull = false;
};

// Tensor-product surface for Psi on (u, x, t). Node values are stored as-is;
// the interpolant acts on g = log(sigma_N / sqrt(spot variance)), the
// Bachelier-implied normal vol relative to the spot vol: C2 cubic in (u, x),
// linear in t, mapped back through the Bachelier formula. That keeps the
// surface exact at nodes, non-negative, and equal to intrinsic at maturity.
class SwaptionSurface {
public:
    SwaptionSurface() = default;

    SwaptionSurface(SurfaceSpec spec, std::uint64_t params_fp, std::vector<double> node_values,
                    std::vector<double> node_log_vol)
        : spec_(std::move(spec)), params_fp_(params_fp), values_(std::move(node_values)),
          log_vol_(std::move(node_log_vol)) {
        const std::size_t nm = spec_.m_nodes.size(), nx = spec_.x_nodes.size(), nt = spec_.t_nodes.size();
        DHB_REQUIRE(values_.size() == nt * nm * nx && log_vol_.size() == nt * nm * nx, InvalidArgument,
                    "SwaptionSurface: node array size mismatch");
        slices_.reserve(nt);
        for (std::size_t k = 0; k < nt; ++k) {
            std::vector<double> f(log_vol_.begin() + static_cast<std::ptrdiff_t>(k * nm * nx),
                                  log_vol_.begin() + static_cast<std::ptrdiff_t>((k + 1) * nm * nx));
            slices_.emplace_back(spec_.m_nodes, spec_.x_nodes, std::move(f));
        }
    }

    [[nodiscard]] const SurfaceSpec& spec() const { return spec_; }
    [[nodiscard]] std::uint64_t params_fingerprint() const { return params_fp_; }
    [[nodiscard]] double maturity() const { return spec_.maturity(); }
    [[nodiscard]] std::size_t node_index(std::size_t it, std::size_t im, std::size_t ix) const {
        return (it * spec_.m_nodes.size() + im) * spec_.x_nodes.size() + ix;
    }
    [[nodiscard]] double node_value(std::size_t it, std::size_t im, std::size_t ix) const {
        return values_[node_index(it, im, ix)];
    }
    // Rate level of a node.
    [[nodiscard]] double node_s(std::size_t it, std::size_t im, std::size_t ix) const {
        return spec_.strike - spec_.m_nodes[im] * spec_.width(spec_.x_nodes[ix], spec_.t_nodes[it]);
    }
    [[nodiscard]] const std::vector<double>& node_values() const { return values_; }
    [[nodiscard]] const std::vector<double>& node_log_vol() const { return log_vol_; }

    [[nodiscard]] SurfaceValue eval(double s, double x, double t) const {
        const auto& M = spec_.m_nodes;
        const auto& X = spec_.x_nodes;
        const auto& T = spec_.t_nodes;
        SurfaceValue out;
        out.out_of_hull = x < X.front() || x > X.back() || t < T.front() || t > T.back() || !std::isfinite(s) ||
                          !std::isfinite(x);
        const double tc = std::clamp(t, T.front(), T.back());
        const double m = spec_.strike - s;
        const double tau = T.back() - tc;
        if (tau <= 0.0) {
            out.value = std::max(m, 0.0);
            return out;
        }
        const double xc = std::clamp(x, X.front(), X.back());
        const double w = spec_.width(xc, tc);
        const double u = m / w;
        out.out_of_hull = out.out_of_hull || u < M.front() || u > M.back();
        const double uc = std::clamp(u, M.front(), M.back());
        const std::size_t k = interp::locate(T, tc);
        const double a = (tc - T[k]) / (T[k + 1] - T[k]);
        const double g = (1.0 - a) * slices_[k](uc, xc) + a * slices_[k + 1](uc, xc);
        out.value = std::max(0.0, bachelier::price(m, w * std::exp(g)));
        return out;
    }

    // Relative price A~^{i,e} * Psi.
    [[nodiscard]] double price(const CurveState& curve, double s, double x, double t) const {
        return curve.A(spec_.rate) * eval(s, x, t).value;
    }

private:
    SurfaceSpec spec_;
    std::uint64_t params_fp_ = 0;
    std::vector<double> values_;
    std::vector<double> log_vol_;
    std::vector<interp::BicubicHermite> slices_;
};

namespace surface_detail {

// Replace unusable implied vols (time value underflow) with the nearest
// usable node along u; rows with none fall back to the spot vol (g = 0).
inline void fill_log_vol(std::vector<double>& lv, std::size_t nm, std::size_t nx, std::size_t it) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
        auto idx = [&](std::size_t im) { return (it * nm + im) * nx + ix; };
        for (std::size_t im = 0; im < nm; ++im) {
            if (std::isfinite(lv[idx(im)])) continue;
            double best = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t off = 1; off < nm && !std::isfinite(best); ++off) {
                if (im >= off && std::isfinite(lv[idx(im - off)])) best = lv[idx(im - off)];
                else if (im + off < nm && std::isfinite(lv[idx(im + off)])) best = lv[idx(im + off)];
            }
            lv[idx(im)] = std::isfinite(best) ? best : 0.0;
        }
    }
}

}  // namespace surface_detail

// Builds one surface per strike for rate spec.rate. On the scaled axis the
// time value does not depend on the strike, so all strikes share one set of
// node time values. The maturity slice is set to intrinsic.
inline std::vector<SwaptionSurface> build_surfaces(const SmbmParams& params, const SurfaceSpec& tmpl,
                                                   std::span<const double> strikes) {
    const RateModel m = RateModel::from(params, tmpl.rate);
    tmpl.validate(m);
    DHB_REQUIRE(!strikes.empty(), InvalidArgument, "build_surfaces: no strikes");
    const auto& M = tmpl.m_nodes;
    const auto& X = tmpl.x_nodes;
    const auto& T = tmpl.t_nodes;
    const std::size_t nm = M.size(), nx = X.size(), nt = T.size(), nk = strikes.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> tv(nt * nm * nx, 0.0), log_vol(nt * nm * nx, nan);
    auto idx = [&](std::size_t it, std::size_t im, std::size_t ix) { return (it * nm + im) * nx + ix; };

    parallel_for(nt, [&](std::size_t b, std::size_t e) {
        for (std::size_t it = b; it < e; ++it) {
            const double t = T[it];
            if (m.maturity - t <= 0.0) {
                for (std::size_t i = idx(it, 0, 0); i < idx(it + 1, 0, 0); ++i) log_vol[i] = 0.0;
                continue;
            }
            auto node = [&](std::size_t im, std::size_t ix, double w, double value) {
                tv[idx(it, im, ix)] = value;
                const double sd = bachelier::implied_sd(M[im] * w, value);
                log_vol[idx(it, im, ix)] = sd > 0.0 ? std::log(sd / w) : nan;
            };
            if (m.kappa == 0.0) {
                // x enters only through e^{omega x}: J, sqrt(V) and w all scale
                // by e^{omega x / 2}, so one sample at x = 0 serves every x-node
                // with identical g.
                auto rng = make_stream(tmpl.seed, static_cast<std::uint64_t>(tmpl.rate), it);
                const auto smp = sample_mixing(m, 0.0, t, tmpl.n_inner, rng, tmpl.dt_inner);
                const double w0 = tmpl.width(0.0, t);
                for (std::size_t im = 0; im < nm; ++im) {
                    const double v0 = mixing_time_value(smp, M[im] * w0);
                    for (std::size_t ix = 0; ix < nx; ++ix) {
                        const double a = std::exp(0.5 * m.omega * X[ix]);
                        node(im, ix, a * w0, a * v0);
                    }
                }
            } else {
                for (std::size_t ix = 0; ix < nx; ++ix) {
                    auto rng = make_stream(tmpl.seed, static_cast<std::uint64_t>(tmpl.rate), it);
                    const auto smp = sample_mixing(m, X[ix], t, tmpl.n_inner, rng, tmpl.dt_inner);
                    const double w = tmpl.width(X[ix], t);
                    for (std::size_t im = 0; im < nm; ++im) node(im, ix, w, mixing_time_value(smp, M[im] * w));
                }
            }
            surface_detail::fill_log_vol(log_vol, nm, nx, it);
        }
    });

    const std::uint64_t fp = params.fingerprint();
    std::vector<SwaptionSurface> out;
    for (std::size_t ik = 0; ik < nk; ++ik) {
        SurfaceSpec spec = tmpl;
        spec.strike = strikes[ik];
        std::vector<double> values(nt * nm * nx);
        for (std::size_t it = 0; it < nt; ++it)
            for (std::size_t im = 0; im < nm; ++im)
                for (std::size_t ix = 0; ix < nx; ++ix) {
                    const double mny = M[im] * spec.width(X[ix], T[it]);
                    values[idx(it, im, ix)] = std::max(mny, 0.0) + tv[idx(it, im, ix)];
                }
        out.emplace_back(std::move(spec), fp, std::move(values), log_vol);
    }
    return out;
}

inline SwaptionSurface build_surface(const SmbmParams& params, const SurfaceSpec& spec) {
    const double k[1] = {spec.strike};
    return std::move(build_surfaces(params, spec, k).front());
}

inline constexpr char kSurfaceMagic[9] = "DHBSURF1";
inline constexpr std::uint64_t kSurfaceVersion = 2;

inline std::vector<char> encode_surface(const SwaptionSurface& s) {
    io::Writer w;
    io::write_header(w, kSurfaceMagic, kSurfaceVersion);
    const auto& sp = s.spec();
    w.u64(static_cast<std::uint64_t>(sp.rate));
    w.f64(sp.strike);
    w.u64(s.params_fingerprint());
    w.array(sp.m_nodes);
    w.array(sp.x_nodes);
    w.array(sp.t_nodes);
    w.f64(sp.xi0);
    w.f64(sp.omega);
    w.f64(sp.kappa);
    w.u64(static_cast<std::uint64_t>(sp.n_inner));
    w.u64(sp.seed);
    w.f64(sp.dt_inner);
    w.array(s.node_values());
    w.array(s.node_log_vol());
    return w.buffer();
}

inline SwaptionSurface decode_surface(std::vector<char> bytes) {
    io::Reader r(std::move(bytes));
    io::check_header(r, kSurfaceMagic, kSurfaceVersion, "surface file");
    SurfaceSpec sp;
    sp.rate = static_cast<int>(r.u64());
    sp.strike = r.f64();
    const auto fp = r.u64();
    sp.m_nodes = r.array<double>();
    sp.x_nodes = r.array<double>();
    sp.t_nodes = r.array<double>();
    sp.xi0 = r.f64();
    sp.omega = r.f64();
    sp.kappa = r.f64();
    sp.n_inner = static_cast<int>(r.u64());
    sp.seed = r.u64();
    sp.dt_inner = r.f64();
    auto vals = r.array<double>();
    auto lv = r.array<double>();
    if (!r.at_end()) throw IoError("surface file: trailing bytes");
    return SwaptionSurface(std::move(sp), fp, std::move(vals), std::move(lv));
}

// File name keyed by (rate, strike, params fingerprint).
inline std::string surface_file_name(int rate, double strike, std::uint64_t params_fp) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "surface_i%d_K%.6f_%s.srf", rate, strike, to_hex(params_fp).c_str());
    return buf;
}

}  // namespace dhb
