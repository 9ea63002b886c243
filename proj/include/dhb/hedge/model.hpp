#pragma once

#include <optional>
#include <vector>

#include "dhb/hedge/features.hpp"
#include "dhb/hedge/policy.hpp"
#include "dhb/nn/cvar.hpp"

namespace dhb {

// N^{CH,i} and N^{E,i} with their frozen input standardisation.
struct Component {
    int index = 0;
    std::optional<nn::Mlp> hedge;
    nn::Standardizer hedge_norm;
    std::optional<nn::Mlp> exercise;
    nn::Standardizer exercise_norm;
    bool trained = false;
};

struct BermudanModel {
    Strategy strategy;
    TimeGrid grid;
    double alpha = 0.0;
    std::uint64_t scenario_fingerprint = 0;
    std::uint64_t config_fingerprint = 0;
    std::uint64_t train_seed = 0;
    std::vector<Component> components;  // components[i-1] is C^i

    [[nodiscard]] int n_rates() const { return grid.n_rates(); }
    [[nodiscard]] const Component& component(int i) const { return components.at(static_cast<std::size_t>(i - 1)); }
    [[nodiscard]] Component& component(int i) { return components.at(static_cast<std::size_t>(i - 1)); }

    [[nodiscard]] long n_trainable_params() const {
        long n = 0;
        for (const auto& c : components) {
            if (c.hedge) n += c.hedge->n_params();
            if (c.exercise) n += c.exercise->n_params();
        }
        return n;
    }

    static BermudanModel empty(const Strategy& s, const TimeGrid& g, double alpha) {
        BermudanModel m;
        m.strategy = s;
        m.grid = g;
        m.alpha = alpha;
        for (int i = 1; i <= g.n_rates(); ++i) m.components.push_back(Component{i, {}, {}, {}, {}, false});
        // Components that need no training are complete from the start.
        for (auto& c : m.components)
            if (!s.trainable() || (s.tag == StrategyTag::OS && c.index == g.n_rates())) c.trained = true;
        return m;
    }

    void check_compatible(const HedgeAssetPanel& pan) const {
        if (pan.strategy.tag != strategy.tag || pan.strategy.hedge_strikes != strategy.hedge_strikes ||
            pan.strategy.trade_strike != strategy.trade_strike)
            throw FingerprintMismatch("panel strategy does not match the model");
        if (pan.grid.dates() != grid.dates() || pan.grid.dt() != grid.dt())
            throw FingerprintMismatch("panel time grid does not match the model");
        for (const auto& c : components) {
            if (c.hedge && c.hedge_norm.mean.size() != hedge_feature_dim(pan, c.index))
                throw FingerprintMismatch("hedge feature width does not match the model normalisation");
            if (c.exercise && c.exercise_norm.mean.size() != exercise_feature_dim(pan, c.index))
                throw FingerprintMismatch("exercise feature width does not match the model normalisation");
        }
    }
};

namespace model_detail {

constexpr Eigen::Index kEvalChunk = 32768;

// Eval-mode forward over many columns, chunked to bound memory. Eval mode
// treats columns independently, so chunking does not change the result.
inline nn::Matrix forward_eval(const nn::Mlp& net, const nn::Standardizer& norm, const nn::Matrix& x) {
    auto& mut = const_cast<nn::Mlp&>(net);  // eval forward does not modify state
    nn::Matrix out(net.spec().outputs, x.cols());
    for (Eigen::Index c = 0; c < x.cols(); c += kEvalChunk) {
        const Eigen::Index w = std::min(kEvalChunk, x.cols() - c);
        out.middleCols(c, w) = mut.forward(norm.apply(x.middleCols(c, w)), nn::kEval);
    }
    return out;
}

// Same, on inputs that are already standardised.
inline nn::Matrix forward_eval(nn::Mlp& net, const nn::Matrix& x) {
    nn::Matrix out(net.spec().outputs, x.cols());
    for (Eigen::Index c = 0; c < x.cols(); c += kEvalChunk) {
        const Eigen::Index w = std::min(kEvalChunk, x.cols() - c);
        out.middleCols(c, w) = net.forward(x.middleCols(c, w), nn::kEval);
    }
    return out;
}

}  // namespace model_detail

// Raw N^{CH,i} outputs on all (path, step < T_i) columns for the given paths.
inline nn::Matrix component_outputs(const BermudanModel& m, const HedgeAssetPanel& pan, int i,
                                    std::span<const int> paths) {
    const auto& c = m.component(i);
    DHB_REQUIRE(c.hedge.has_value(), MissingArtifact, "component " + std::to_string(i) + " has no hedge network");
    return model_detail::forward_eval(*c.hedge, c.hedge_norm, hedge_feature_matrix(pan, i, paths));
}

// Path-wise record of a model on a panel: hedge gains of N^{BH,i} per step
// and exercise probabilities.
struct ModelTrace {
    int n_paths = 0;
    int n_rates = 0;
    int from = 1;                                // components >= from are present
    std::vector<int> steps;                      // steps[i-1] = step_of(i)
    std::vector<std::vector<double>> bh_gain;    // [i-1][p * step_of(i) + k]
    std::vector<std::vector<double>> os_weight;  // S_OS: clipped w_i(p, k), same layout
    std::vector<double> exercise;                // [p * R + i - 1]

    [[nodiscard]] double gain(int i, int p, int k) const {
        return bh_gain[static_cast<std::size_t>(i - 1)]
                      [static_cast<std::size_t>(p) * static_cast<std::size_t>(steps[static_cast<std::size_t>(i - 1)]) +
                       static_cast<std::size_t>(k)];
    }
    [[nodiscard]] double prob(int p, int i) const {
        return exercise[static_cast<std::size_t>(p) * static_cast<std::size_t>(n_rates) + static_cast<std::size_t>(i - 1)];
    }
};

struct TraceOptions {
    bool hard_exercise = false;  // threshold N^E at 0.5
    // Replace every exercise probability (tests of the recursion).
    std::optional<double> forced_exercise;
};

// Builds the trace for components from..R (all must be trained).
inline ModelTrace compute_trace(const BermudanModel& m, const HedgeAssetPanel& pan, int from = 1,
                                const TraceOptions& opt = {}) {
    m.check_compatible(pan);
    const int R = pan.n_rates(), N = pan.n_paths;
    for (int i = from; i <= R; ++i)
        DHB_REQUIRE(m.component(i).trained, MissingArtifact,
                    "component " + std::to_string(i) + " is not trained");
    ModelTrace tr;
    tr.n_paths = N;
    tr.n_rates = R;
    tr.from = from;
    for (int i = 1; i <= R; ++i) tr.steps.push_back(pan.grid.step_of(i));
    tr.bh_gain.resize(static_cast<std::size_t>(R));
    tr.os_weight.resize(static_cast<std::size_t>(R));
    tr.exercise.assign(static_cast<std::size_t>(N) * static_cast<std::size_t>(R), 0.0);
    std::vector<int> all(static_cast<std::size_t>(N));
    for (int p = 0; p < N; ++p) all[static_cast<std::size_t>(p)] = p;
    const auto tag = pan.strategy.tag;
    const int jk = pan.trade_strike_index();
    auto idx = [&](int i, int p, int k) {
        return static_cast<std::size_t>(p) * static_cast<std::size_t>(tr.steps[static_cast<std::size_t>(i - 1)]) +
               static_cast<std::size_t>(k);
    };

    if (tag == StrategyTag::OS) {
        for (int i = from; i <= R; ++i) {
            auto& w = tr.os_weight[static_cast<std::size_t>(i - 1)];
            const int nk = tr.steps[static_cast<std::size_t>(i - 1)];
            if (i == R) {
                w.assign(static_cast<std::size_t>(N) * static_cast<std::size_t>(nk), 1.0);
                continue;
            }
            const auto out = component_outputs(m, pan, i, all);
            w.resize(static_cast<std::size_t>(out.cols()));
            for (Eigen::Index c = 0; c < out.cols(); ++c) w[static_cast<std::size_t>(c)] = std::clamp(out(0, c), 0.0, 1.0);
        }
    }

    for (int i = R; i >= from; --i) {
        const int nk = tr.steps[static_cast<std::size_t>(i - 1)];
        auto& g = tr.bh_gain[static_cast<std::size_t>(i - 1)];
        g.assign(static_cast<std::size_t>(N) * static_cast<std::size_t>(nk), 0.0);
        if (tag == StrategyTag::Max) {
            std::vector<double> prices;
            for (int p = 0; p < N; ++p)
                for (int k = 0; k < nk; ++k) {
                    prices.clear();
                    for (int u = i; u <= R; ++u) prices.push_back(pan.swaption(p, k, u, jk));
                    const auto pol = smax_policy(prices);
                    double acc = 0.0;
                    for (int u = i; u <= R; ++u)
                        acc -= pol.q[static_cast<std::size_t>(u - i)] * increment(pan, p, k, pan.swaption_col(u, jk));
                    g[idx(i, p, k)] = acc;
                }
        } else if (tag == StrategyTag::OS) {
            // H^i = sum_u q^i_u O^u with q^i = w_i e_i + (1 - w_i) q^{i+1}.
            std::vector<double> q(static_cast<std::size_t>(R + 1));
            for (int p = 0; p < N; ++p)
                for (int k = 0; k < nk; ++k) {
                    double rest = 1.0, acc = 0.0;
                    for (int u = i; u <= R; ++u) {
                        const double wu = tr.os_weight[static_cast<std::size_t>(u - 1)][idx(u, p, k)];
                        const double qu = (u == R ? 1.0 : wu) * rest;
                        rest *= 1.0 - (u == R ? 1.0 : wu);
                        acc -= qu * increment(pan, p, k, pan.swaption_col(u, jk));
                    }
                    g[idx(i, p, k)] = acc;
                }
        } else {
            const auto out = component_outputs(m, pan, i, all);
            for (int p = 0; p < N; ++p)
                for (int k = 0; k < nk; ++k) {
                    const auto c = static_cast<Eigen::Index>(idx(i, p, k));
                    double acc = 0.0;
                    for (Eigen::Index j = 0; j < out.rows(); ++j)
                        acc += out(j, c) * increment(pan, p, k, output_column(pan, i, static_cast<int>(j)));
                    if (i < R) acc += tr.gain(i + 1, p, k);
                    g[idx(i, p, k)] = acc;
                }
        }
    }

    for (int i = from; i <= R; ++i) {
        std::vector<double> e(static_cast<std::size_t>(N), 1.0);
        if (i < R) {
            if (tag == StrategyTag::Max) {
                for (int p = 0; p < N; ++p) {
                    std::vector<double> prices;
                    const int k = pan.grid.step_of(i);
                    for (int u = i; u <= R; ++u) prices.push_back(pan.swaption(p, k, u, jk));
                    e[static_cast<std::size_t>(p)] = smax_policy(prices).exercise ? 1.0 : 0.0;
                }
            } else {
                const auto& c = m.component(i);
                DHB_REQUIRE(c.exercise.has_value(), MissingArtifact,
                            "component " + std::to_string(i) + " has no exercise network");
                const auto out = model_detail::forward_eval(*c.exercise, c.exercise_norm, exercise_feature_matrix(pan, i, all));
                for (int p = 0; p < N; ++p) e[static_cast<std::size_t>(p)] = out(0, p);
            }
            if (opt.hard_exercise)
                for (double& v : e) v = v >= 0.5 ? 1.0 : 0.0;
            if (opt.forced_exercise)
                for (double& v : e) v = *opt.forced_exercise;
        }
        for (int p = 0; p < N; ++p)
            tr.exercise[static_cast<std::size_t>(p) * static_cast<std::size_t>(R) + static_cast<std::size_t>(i - 1)] =
                e[static_cast<std::size_t>(p)];
    }
    return tr;
}

// V^{Cont,i} on path p: V^{Cont,R} = 0 and
// V^{Cont,i} = E_{i+1} O^{i+1} + (1 - E_{i+1}) V^{Cont,i+1} + sum_{[T_i, T_{i+1})} BH_{i+1} dI.
inline double continuation_value(const ModelTrace& tr, const HedgeAssetPanel& pan, int p, int i) {
    const int R = tr.n_rates;
    DHB_REQUIRE(i >= tr.from - 1 && i <= R, MissingArtifact,
                "continuation value needs components above " + std::to_string(i));
    double v = 0.0;
    for (int u = R; u > i; --u) {
        const double e = tr.prob(p, u);
        double seg = 0.0;
        for (int k = pan.grid.step_of(u - 1); k < pan.grid.step_of(u); ++k) seg += tr.gain(u, p, k);
        v = e * pan.exercise_value(p, u) + (1.0 - e) * v + seg;
    }
    return v;
}

struct PnlSample {
    std::vector<double> pl;          // total hedged P&L, relative units
    std::vector<double> payoff_leg;  // exercise-weighted swaption payoffs
    std::vector<double> hedge_leg;   // hedge gains weighted by survival
};

// Rolls every path over [0, T_R]; the soft exercise weights compose exactly
// like the continuation-value recursion, PL = payoff leg + hedge leg.
inline PnlSample hedged_pnl(const ModelTrace& tr, const HedgeAssetPanel& pan) {
    DHB_REQUIRE(tr.from == 1, MissingArtifact, "hedged_pnl needs every component");
    const int R = tr.n_rates;
    PnlSample out;
    out.pl.resize(static_cast<std::size_t>(tr.n_paths));
    out.payoff_leg.resize(out.pl.size());
    out.hedge_leg.resize(out.pl.size());
    for (int p = 0; p < tr.n_paths; ++p) {
        double surv = 1.0, pay = 0.0, hedge = 0.0;
        for (int i = 1; i <= R; ++i) {
            double seg = 0.0;
            for (int k = pan.grid.step_of(i - 1); k < pan.grid.step_of(i); ++k) seg += tr.gain(i, p, k);
            hedge += surv * seg;
            const double e = tr.prob(p, i);
            pay += surv * e * pan.exercise_value(p, i);
            surv *= 1.0 - e;
        }
        out.payoff_leg[static_cast<std::size_t>(p)] = pay;
        out.hedge_leg[static_cast<std::size_t>(p)] = hedge;
        out.pl[static_cast<std::size_t>(p)] = pay + hedge;
    }
    return out;
}

// V = -CVaR_alpha(PL), taking pi(0) = 0.
inline double indifference_price(std::span<const double> pl, double alpha) { return -nn::cvar(pl, alpha); }

// Net position of N^{BH,i} at step k on path p, one entry per panel column
// (positive = long). Requires k < step_of(i).
inline std::vector<double> hedge_position(const BermudanModel& m, const HedgeAssetPanel& pan, int p, int k, int i) {
    m.check_compatible(pan);
    const int R = pan.n_rates(), jk = pan.trade_strike_index();
    DHB_REQUIRE(i >= 1 && i <= R && k >= 0 && k < pan.grid.step_of(i), InvalidArgument,
                "hedge_position: need t_k < T_i");
    std::vector<double> pos(static_cast<std::size_t>(pan.n_assets()), 0.0);
    auto single = [&](int u) {
        const auto& c = m.component(u);
        nn::Matrix x(hedge_feature_dim(pan, u), 1);
        hedge_features(pan, u, p, k, x.data());
        return model_detail::forward_eval(*c.hedge, c.hedge_norm, x);
    };
    switch (pan.strategy.tag) {
        case StrategyTag::Max: {
            std::vector<double> prices;
            for (int u = i; u <= R; ++u) prices.push_back(pan.swaption(p, k, u, jk));
            const auto pol = smax_policy(prices);
            for (int u = i; u <= R; ++u) pos[static_cast<std::size_t>(pan.swaption_col(u, jk))] = -pol.q[static_cast<std::size_t>(u - i)];
            break;
        }
        case StrategyTag::OS: {
            std::vector<double> w;
            for (int u = i; u < R; ++u) w.push_back(single(u)(0, 0));
            w.push_back(1.0);
            const auto q = os_weights(w);
            for (int u = i; u <= R; ++u) pos[static_cast<std::size_t>(pan.swaption_col(u, jk))] = -q[static_cast<std::size_t>(u - i)];
            break;
        }
        default:
            for (int u = i; u <= R; ++u) {
                const auto out = single(u);
                for (Eigen::Index j = 0; j < out.rows(); ++j)
                    pos[static_cast<std::size_t>(output_column(pan, u, static_cast<int>(j)))] += out(j, 0);
            }
    }
    return pos;
}

}  // namespace dhb
