#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dhb/curve.hpp"
#include "dhb/error.hpp"
#include "dhb/fingerprint.hpp"
#include "dhb/parallel.hpp"
#include "dhb/time_grid.hpp"

// Swap Market Bergomi Model for a strip of coterminal swap rates.
//
// Each pair (S^{i,e}, X^{i,e}) follows, under its own annuity measure,
//   dS = sqrt(xi_t^{i,e,t}) dW,   dX = -kappa X dt + dZ,
//   xi_t^{i,e,T} = xi_0 exp(omega e^{-kappa(T-t)} X_t
//                           - 1/2 omega^2 e^{-2 kappa (T-t)} Var_0(X_t)).
// The joint model lives under the terminal measure (numeraire P^e); the
// change of measure adds the drifts computed by terminal_drifts().

namespace dhb {

// Local correlation of the alive drivers on [start, end). Factor order is
// (W^{r_0}, ..., W^{r_{n-1}}, Z^{r_0}, ..., Z^{r_{n-1}}) for rates r.
struct CorrelationPeriod {
    double start = 0.0;
    double end = 0.0;
    std::vector<int> rates;
    Eigen::MatrixXd corr;

    [[nodiscard]] int n() const { return static_cast<int>(rates.size()); }
    // Position of rate u in `rates`, or -1.
    [[nodiscard]] int slot(int u) const {
        for (int j = 0; j < n(); ++j)
            if (rates[static_cast<std::size_t>(j)] == u) return j;
        return -1;
    }
    [[nodiscard]] double rho_ww(int a, int b) const { return corr(a, b); }
    [[nodiscard]] double rho_zw(int a, int b) const { return corr(n() + a, b); }
    [[nodiscard]] double rho_zz(int a, int b) const { return corr(n() + a, n() + b); }
};

class CorrelationSchedule {
public:
    static constexpr double kPsdTolerance = 1e-10;
    static constexpr double kRidge = 1e-10;

    CorrelationSchedule() = default;

    explicit CorrelationSchedule(std::vector<CorrelationPeriod> periods) : periods_(std::move(periods)) {
        DHB_REQUIRE(!periods_.empty(), InvalidArgument, "CorrelationSchedule: no periods");
        for (std::size_t p = 0; p < periods_.size(); ++p) {
            auto& per = periods_[p];
            const std::string where = "correlation period " + std::to_string(p);
            DHB_REQUIRE(per.end > per.start, InvalidArgument, where + ": empty interval");
            if (p > 0) {
                DHB_REQUIRE(per.start == periods_[p - 1].end, InvalidArgument,
                            where + ": periods must be contiguous");
            }
            const auto m = static_cast<Eigen::Index>(2 * per.rates.size());
            DHB_REQUIRE(per.corr.rows() == m && per.corr.cols() == m, InvalidArgument,
                        where + ": matrix must be " + std::to_string(m) + "x" + std::to_string(m));
            for (Eigen::Index a = 0; a < m; ++a) {
                DHB_REQUIRE(std::abs(per.corr(a, a) - 1.0) < 1e-12, InvalidArgument,
                            where + ": diagonal must be 1");
                for (Eigen::Index b = 0; b < a; ++b) {
                    DHB_REQUIRE(per.corr(a, b) == per.corr(b, a), InvalidArgument,
                                where + ": matrix must be symmetric");
                    DHB_REQUIRE(std::abs(per.corr(a, b)) <= 1.0, InvalidArgument,
                                where + ": entries must lie in [-1, 1]");
                }
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(per.corr, Eigen::EigenvaluesOnly);
            DHB_REQUIRE(eig.eigenvalues().minCoeff() >= -kPsdTolerance, InvalidArgument,
                        where + ": matrix is not positive semidefinite (min eigenvalue " +
                            std::to_string(eig.eigenvalues().minCoeff()) + ")");
            Eigen::LLT<Eigen::MatrixXd> llt(per.corr);
            if (llt.info() != Eigen::Success) {
                Eigen::MatrixXd ridged = per.corr;
                ridged.diagonal().array() += kRidge;
                llt.compute(ridged);
                DHB_REQUIRE(llt.info() == Eigen::Success, InvalidArgument,
                            where + ": Cholesky failed even with ridge");
            }
            chol_.push_back(llt.matrixL());
        }
    }

    [[nodiscard]] const std::vector<CorrelationPeriod>& periods() const { return periods_; }

    [[nodiscard]] std::size_t index_at(double t) const {
        for (std::size_t p = 0; p < periods_.size(); ++p) {
            if (t < periods_[p].end) {
                DHB_REQUIRE(t >= periods_[p].start, InvalidArgument,
                            "CorrelationSchedule: time " + std::to_string(t) + " before first period");
                return p;
            }
        }
        throw InvalidArgument("CorrelationSchedule: time " + std::to_string(t) + " after last period");
    }
    [[nodiscard]] const CorrelationPeriod& at(double t) const { return periods_[index_at(t)]; }
    [[nodiscard]] const Eigen::MatrixXd& cholesky(std::size_t p) const { return chol_.at(p); }

    // Own rate-vol correlation rho(W^u, Z^u) in force at time t.
    [[nodiscard]] double rho_sx_own(int u, double t) const {
        const auto& per = at(t);
        int a = per.slot(u);
        DHB_REQUIRE(a >= 0, InvalidArgument, "rate " + std::to_string(u) + " not alive at t=" + std::to_string(t));
        return per.rho_zw(a, a);
    }

    void hash(Fingerprint& fp) const {
        for (const auto& p : periods_) {
            fp.add(p.start).add(p.end);
            for (int r : p.rates) fp.add(r);
            fp.add(std::span<const double>(p.corr.data(), static_cast<std::size_t>(p.corr.size())));
        }
    }

private:
    std::vector<CorrelationPeriod> periods_;
    std::vector<Eigen::MatrixXd> chol_;
};

// Per-rate parameters are stored in vectors indexed by u - 1 (u = 1..e-1).
struct SmbmParams {
    TimeGrid grid;
    std::vector<double> s0;
    std::vector<double> x0;
    std::vector<double> xi0;    // flat initial forward variance, rate^2 / year
    std::vector<double> omega;  // vol-of-vol
    std::vector<double> kappa;  // mean reversion, 1 / year
    CorrelationSchedule schedule;

    [[nodiscard]] int n_rates() const { return grid.n_rates(); }
    [[nodiscard]] int terminal() const { return grid.terminal_index(); }

    void validate() const {
        const auto n = static_cast<std::size_t>(n_rates());
        for (const auto* v : {&s0, &x0, &xi0, &omega, &kappa}) {
            DHB_REQUIRE(v->size() == n, InvalidArgument,
                        "SmbmParams: per-rate vectors must have " + std::to_string(n) + " entries");
            for (double x : *v) DHB_REQUIRE(std::isfinite(x), InvalidArgument, "SmbmParams: non-finite entry");
        }
        for (std::size_t i = 0; i < n; ++i) {
            DHB_REQUIRE(xi0[i] > 0.0, InvalidArgument, "SmbmParams: xi0 must be > 0");
            DHB_REQUIRE(omega[i] >= 0.0, InvalidArgument, "SmbmParams: omega must be >= 0");
            DHB_REQUIRE(kappa[i] >= 0.0, InvalidArgument, "SmbmParams: kappa must be >= 0");
        }
        // The schedule must cover [0, T_{e-1}) with exactly the alive rates.
        const auto& per = schedule.periods();
        DHB_REQUIRE(!per.empty() && per.front().start == 0.0, InvalidArgument,
                    "SmbmParams: correlation schedule must start at 0");
        DHB_REQUIRE(per.back().end >= grid.horizon(), InvalidArgument,
                    "SmbmParams: correlation schedule must cover the simulation horizon");
        for (int k = 0; k < grid.n_steps(); ++k) {
            const auto& p = schedule.at(grid.time(k));
            std::vector<int> alive;
            for (int u = 1; u < terminal(); ++u)
                if (grid.alive_on_step(u, k)) alive.push_back(u);
            DHB_REQUIRE(p.rates == alive, InvalidArgument,
                        "SmbmParams: correlation period at t=" + std::to_string(grid.time(k)) +
                            " does not match the alive rate set");
        }
    }

    [[nodiscard]] std::uint64_t fingerprint() const {
        Fingerprint fp;
        fp.add(std::string_view("smbm-v1"));
        grid.hash(fp);
        fp.add(std::span<const double>(s0)).add(std::span<const double>(x0)).add(std::span<const double>(xi0));
        fp.add(std::span<const double>(omega)).add(std::span<const double>(kappa));
        schedule.hash(fp);
        return fp.value();
    }

    [[nodiscard]] double s0_of(int u) const { return s0.at(static_cast<std::size_t>(u - 1)); }
    [[nodiscard]] double x0_of(int u) const { return x0.at(static_cast<std::size_t>(u - 1)); }
    [[nodiscard]] double xi0_of(int u) const { return xi0.at(static_cast<std::size_t>(u - 1)); }
    [[nodiscard]] double omega_of(int u) const { return omega.at(static_cast<std::size_t>(u - 1)); }
    [[nodiscard]] double kappa_of(int u) const { return kappa.at(static_cast<std::size_t>(u - 1)); }
};

// Var_0(X_t) of the unit-vol OU process started at a fixed point.
inline double ou_variance(double kappa, double t) {
    if (kappa * t < 1e-12) return t;
    return -std::expm1(-2.0 * kappa * t) / (2.0 * kappa);
}

inline double forward_variance(const SmbmParams& p, int u, double x, double t, double T) {
    DHB_REQUIRE(T >= t && t >= 0.0, InvalidArgument, "forward_variance: need 0 <= t <= T");
    const double w = p.omega_of(u), k = p.kappa_of(u);
    const double damp = std::exp(-k * (T - t));
    return p.xi0_of(u) * std::exp(w * damp * x - 0.5 * w * w * damp * damp * ou_variance(k, t));
}

// Spot slice xi_t^{u,e,t}, the instantaneous variance driving S^{u,e}.
inline double spot_variance(const SmbmParams& p, int u, double x, double t) {
    const double w = p.omega_of(u);
    return p.xi0_of(u) * std::exp(w * x - 0.5 * w * w * ou_variance(p.kappa_of(u), t));
}

struct MarketState {
    double t = 0.0;
    int first = 1;          // lowest alive rate index
    std::vector<double> s;  // S^{u,e} for u = first..e-1
    std::vector<double> x;  // X^{u,e} for u = first..e-1
};

struct Drifts {
    std::vector<double> s;  // dt-coefficient added to dS^{u}
    std::vector<double> x;  // dt-coefficient added to dX^{u} (on top of -kappa X)
};

namespace smbm_detail {

// Scratch buffers for the drift computation on n alive rates.
struct DriftWorkspace {
    std::vector<double> acc, disc, ann, dA, dP, vol;
    void resize(std::size_t n) {
        disc.resize(n + 1);
        ann.resize(n);
        dA.resize(n * n);
        dP.resize(n * n);
        vol.resize(n);
    }
};

// Terminal-measure drifts. For alive rate a (local index),
//   drift_S[a] = -sqrt(xi_a) sum_b rho(W_a, W_b) sqrt(xi_b) dlogA_a/dS_b
//   drift_X[a] = -sum_b rho(Z_a, W_b) sqrt(xi_b) dlogA_a/dS_b
// from dW^{A_a} = dW^{P_e} - d<W, log A~_a> (Girsanov with density A~_a).
inline void drifts(const CorrelationPeriod& per, std::span<const double> accruals, std::span<const double> s,
                   std::span<const double> sqrt_xi, DriftWorkspace& ws, std::span<double> drift_s,
                   std::span<double> drift_x) {
    const std::size_t n = s.size();
    ws.resize(n);
    curve_detail::bootstrap(s, accruals, ws.disc, ws.ann);
    for (std::size_t j = 0; j <= n; ++j) {
        if (!(ws.disc[j] > 0.0)) throw DegenerateCurve("terminal drift: non-positive discount factor");
    }
    curve_detail::annuity_jacobian(s, accruals, ws.ann, ws.dA, ws.dP);
    for (std::size_t a = 0; a < n; ++a) {
        double cw = 0.0, cz = 0.0;
        const double inv_ann = 1.0 / ws.ann[a];
        for (std::size_t b = a + 1; b < n; ++b) {
            const double g = ws.dA[a * n + b] * inv_ann * sqrt_xi[b];
            cw += per.rho_ww(static_cast<int>(a), static_cast<int>(b)) * g;
            cz += per.rho_zw(static_cast<int>(a), static_cast<int>(b)) * g;
        }
        drift_s[a] = -sqrt_xi[a] * cw;
        drift_x[a] = -cz;
    }
}

}  // namespace smbm_detail

inline Drifts terminal_drifts(const MarketState& state, const SmbmParams& params) {
    const int e = params.terminal();
    const auto n = static_cast<std::size_t>(e - state.first);
    DHB_REQUIRE(n >= 1 && state.s.size() == n && state.x.size() == n, InvalidArgument,
                "terminal_drifts: state does not match alive set");
    const auto& per = params.schedule.at(state.t);
    DHB_REQUIRE(per.n() == static_cast<int>(n) && per.rates.front() == state.first, InvalidArgument,
                "terminal_drifts: correlation period does not match alive set");
    auto acc = accruals_from(params.grid, state.first);
    std::vector<double> sq(n);
    for (std::size_t a = 0; a < n; ++a) {
        sq[a] = std::sqrt(spot_variance(params, state.first + static_cast<int>(a), state.x[a], state.t));
    }
    Drifts d{std::vector<double>(n), std::vector<double>(n)};
    smbm_detail::DriftWorkspace ws;
    smbm_detail::drifts(per, acc, state.s, sq, ws, d.s, d.x);
    return d;
}

// Simulated trajectories on the uniform grid. Layout is path-major:
// value(p, k, f) with f = 0..n-1 for S^{1..e-1} and f = n..2n-1 for X^{1..e-1}.
// Rate u carries its last value at k = step_of(u) and NaN afterwards.
struct ScenarioSet {
    TimeGrid grid;
    int n_paths = 0;
    std::uint64_t seed = 0;
    std::uint64_t params_fingerprint = 0;
    std::vector<double> data;

    [[nodiscard]] int n_rates() const { return grid.n_rates(); }
    [[nodiscard]] int n_slices() const { return grid.n_steps() + 1; }
    [[nodiscard]] std::size_t stride_path() const {
        return static_cast<std::size_t>(n_slices()) * static_cast<std::size_t>(2 * n_rates());
    }
    [[nodiscard]] std::size_t offset(int p, int k) const {
        return static_cast<std::size_t>(p) * stride_path() +
               static_cast<std::size_t>(k) * static_cast<std::size_t>(2 * n_rates());
    }
    [[nodiscard]] double S(int p, int k, int u) const { return data[offset(p, k) + static_cast<std::size_t>(u - 1)]; }
    [[nodiscard]] double X(int p, int k, int u) const {
        return data[offset(p, k) + static_cast<std::size_t>(n_rates() + u - 1)];
    }
    // Lowest rate index with a defined value at slice k.
    [[nodiscard]] int first_defined(int k) const {
        int u = 1;
        while (u < grid.terminal_index() && grid.step_of(u) < k) ++u;
        return u;
    }
};

// Euler-Maruyama under the terminal measure. Each path draws from its own
// substream of `seed`, so the output does not depend on the worker count.
inline ScenarioSet simulate(const SmbmParams& params, int n_paths, std::uint64_t seed) {
    params.validate();
    DHB_REQUIRE(n_paths >= 1, InvalidArgument, "simulate: n_paths must be >= 1");
    const TimeGrid& g = params.grid;
    const int e = g.terminal_index(), nr = g.n_rates(), n_steps = g.n_steps();
    const double dt = g.dt(), sdt = std::sqrt(dt);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    ScenarioSet out;
    out.grid = g;
    out.n_paths = n_paths;
    out.seed = seed;
    out.params_fingerprint = params.fingerprint();
    out.data.assign(static_cast<std::size_t>(n_paths) * out.stride_path(), nan);

    // Per-step lookups shared by all paths.
    std::vector<std::size_t> period_of(static_cast<std::size_t>(n_steps));
    std::vector<int> first_of(static_cast<std::size_t>(n_steps));
    for (int k = 0; k < n_steps; ++k) {
        period_of[static_cast<std::size_t>(k)] = params.schedule.index_at(g.time(k));
        first_of[static_cast<std::size_t>(k)] = params.schedule.periods()[period_of[static_cast<std::size_t>(k)]].rates.front();
    }
    std::vector<std::vector<double>> accruals(static_cast<std::size_t>(e));
    for (int f = 1; f < e; ++f) accruals[static_cast<std::size_t>(f)] = accruals_from(g, f);

    parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t b, std::size_t end) {
        std::normal_distribution<double> gauss;
        smbm_detail::DriftWorkspace ws;
        std::vector<double> s(static_cast<std::size_t>(nr)), x(static_cast<std::size_t>(nr));
        std::vector<double> eps, z, sq, ds, dx;
        for (std::size_t p = b; p < end; ++p) {
            auto rng = make_stream(seed, p);
            for (int u = 1; u < e; ++u) {
                s[static_cast<std::size_t>(u - 1)] = params.s0_of(u);
                x[static_cast<std::size_t>(u - 1)] = params.x0_of(u);
            }
            auto store = [&](int k) {
                double* row = out.data.data() + out.offset(static_cast<int>(p), k);
                for (int u = 1; u < e; ++u) {
                    if (g.step_of(u) >= k) {
                        row[u - 1] = s[static_cast<std::size_t>(u - 1)];
                        row[nr + u - 1] = x[static_cast<std::size_t>(u - 1)];
                    }
                }
            };
            store(0);
            for (int k = 0; k < n_steps; ++k) {
                const auto pi = period_of[static_cast<std::size_t>(k)];
                const auto& per = params.schedule.periods()[pi];
                const auto& L = params.schedule.cholesky(pi);
                const int first = first_of[static_cast<std::size_t>(k)];
                const auto n = static_cast<std::size_t>(e - first);
                const double t = g.time(k);
                eps.resize(2 * n);
                z.resize(2 * n);
                sq.resize(n);
                ds.resize(n);
                dx.resize(n);
                for (auto& v : eps) v = gauss(rng);
                for (std::size_t a = 0; a < 2 * n; ++a) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c <= a; ++c)
                        acc += L(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) * eps[c];
                    z[a] = acc;
                }
                const std::span<const double> sa(s.data() + first - 1, n);
                for (std::size_t a = 0; a < n; ++a) {
                    const int u = first + static_cast<int>(a);
                    sq[a] = std::sqrt(spot_variance(params, u, x[static_cast<std::size_t>(u - 1)], t));
                }
                try {
                    smbm_detail::drifts(per, accruals[static_cast<std::size_t>(first)], sa, sq, ws, ds, dx);
                } catch (const DegenerateCurve& err) {
                    throw DegenerateCurve(std::string("simulate: seed ") + std::to_string(seed) + ", path " +
                                          std::to_string(p) + ", t = " + std::to_string(t) + ": " + err.what());
                }
                for (std::size_t a = 0; a < n; ++a) {
                    const auto u = static_cast<std::size_t>(first - 1) + a;
                    const double kap = params.kappa[u];
                    s[u] += ds[a] * dt + sq[a] * sdt * z[a];
                    x[u] += (-kap * x[u] + dx[a]) * dt + sdt * z[n + a];
                }
                store(k + 1);
            }
        }
    });
    return out;
}

// Cross-parameter variant: rate-vol correlation blocks negated, vol-of-vol
// halved. X_0 is left untouched; recalibrating it needs swaption prices.
inline SmbmParams reversed_rate_vol_params(const SmbmParams& p) {
    SmbmParams q = p;
    std::vector<CorrelationPeriod> periods = p.schedule.periods();
    for (auto& per : periods) {
        const int n = per.n();
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                per.corr(n + a, b) = -per.corr(n + a, b);
                per.corr(a, n + b) = -per.corr(a, n + b);
            }
    }
    q.schedule = CorrelationSchedule(std::move(periods));
    for (auto& w : q.omega) w *= 0.5;
    return q;
}

}  // namespace dhb
