#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>

#include "dhb/hedge/model.hpp"
#include "dhb/nn/adam.hpp"
#include "dhb/nn/train_config.hpp"

namespace dhb {

// Everything the loss of component i needs, per path, with the downstream
// model frozen. Hedge gain of N^{CH,i} on column (p, k) is out . di.
struct ComponentData {
    int i = 0;
    int nk = 0;          // steps before T_i
    nn::Matrix xh;       // hedge features, d_h x (N * nk)
    nn::Matrix di;       // signed increments, n_out x (N * nk)
    nn::Matrix xe;       // exercise features, d_e x N (empty at i = R)
    std::vector<double> vc, oi, f;  // V^{Cont,i}, O^i(T_i), frozen N^{BH,i+1} gain on [0, T_i)
};

inline ComponentData build_component_data(const BermudanModel& m, const HedgeAssetPanel& pan, int i) {
    const int R = pan.n_rates(), N = pan.n_paths;
    ComponentData d;
    d.i = i;
    d.nk = pan.grid.step_of(i);
    std::vector<int> all(static_cast<std::size_t>(N));
    std::iota(all.begin(), all.end(), 0);
    d.xh = hedge_feature_matrix(pan, i, all);
    if (i < R) d.xe = exercise_feature_matrix(pan, i, all);
    ModelTrace tr;
    if (i < R) tr = compute_trace(m, pan, i + 1);
    const int n_out = hedge_output_dim(pan, i);
    d.di.resize(n_out, static_cast<Eigen::Index>(N) * d.nk);
    d.vc.assign(static_cast<std::size_t>(N), 0.0);
    d.f.assign(static_cast<std::size_t>(N), 0.0);
    d.oi.resize(static_cast<std::size_t>(N));
    const int jk = pan.trade_strike_index();
    for (int p = 0; p < N; ++p) {
        d.oi[static_cast<std::size_t>(p)] = pan.exercise_value(p, i);
        if (i < R) d.vc[static_cast<std::size_t>(p)] = continuation_value(tr, pan, p, i);
        for (int k = 0; k < d.nk; ++k) {
            const Eigen::Index c = static_cast<Eigen::Index>(p) * d.nk + k;
            const double down = i < R ? tr.gain(i + 1, p, k) : 0.0;
            d.f[static_cast<std::size_t>(p)] += down;
            if (pan.strategy.tag == StrategyTag::OS) {
                // short w units of G^i = O^i - H^{i+1}
                d.di(0, c) = -increment(pan, p, k, pan.swaption_col(i, jk)) - down;
            } else {
                for (int j = 0; j < n_out; ++j) d.di(j, c) = increment(pan, p, k, output_column(pan, i, j));
            }
        }
    }
    return d;
}

struct ComponentReport {
    int index = 0;
    int epochs_run = 0;
    double eval_cvar_initial = 0.0;   // zero hedge, exercise probability 1/2
    double eval_cvar_baseline = 0.0;  // zero hedge, always exercise
    double eval_cvar_best = 0.0;
    int best_epoch = -1;              // -1: an initial candidate was kept
};

using TrainLog = std::function<void(const std::string&)>;

namespace train_detail {

inline nn::MlpSpec net_spec(const nn::TrainConfig& cfg, int in, int out, nn::Head head) {
    nn::MlpSpec s;
    s.inputs = in;
    s.outputs = out;
    s.hidden_layers = cfg.hidden_layers;
    s.width = cfg.width;
    s.head = head;
    s.dropout = cfg.dropout;
    return s;
}

inline void split_paths(int n, const nn::TrainConfig& cfg, std::vector<int>& fit, std::vector<int>& eval) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = make_stream(cfg.seed, 0x73706c6974ULL);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto n_eval = static_cast<std::size_t>(std::ceil(cfg.eval_fraction * n));
    DHB_REQUIRE(n_eval >= 1 && n_eval < perm.size(), InvalidArgument, "train: too few paths for the evaluation split");
    eval.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_eval));
    fit.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_eval), perm.end());
    std::sort(eval.begin(), eval.end());
}

inline nn::Matrix gather_blocks(const nn::Matrix& x, std::span<const int> paths, int width) {
    nn::Matrix out(x.rows(), static_cast<Eigen::Index>(paths.size()) * width);
    for (std::size_t a = 0; a < paths.size(); ++a)
        out.middleCols(static_cast<Eigen::Index>(a) * width, width) =
            x.middleCols(static_cast<Eigen::Index>(paths[a]) * width, width);
    return out;
}

}  // namespace train_detail

// P&L of component i per path: E (O^i - V^Cont) + V^Cont + F + sum_k out . di.
inline std::vector<double> component_pnl(const ComponentData& d, std::span<const int> paths, const nn::Matrix& out_h,
                                         const nn::Matrix* out_e) {
    std::vector<double> pl(paths.size());
    for (std::size_t a = 0; a < paths.size(); ++a) {
        const auto p = static_cast<std::size_t>(paths[a]);
        double gain = 0.0;
        if (out_h.rows() > 0) {
            const auto blk = static_cast<Eigen::Index>(a) * d.nk;
            const auto src = static_cast<Eigen::Index>(p) * d.nk;
            gain = (out_h.middleCols(blk, d.nk).array() * d.di.middleCols(src, d.nk).array()).sum();
        }
        const double e = out_e ? (*out_e)(0, static_cast<Eigen::Index>(a)) : 1.0;
        pl[a] = e * (d.oi[p] - d.vc[p]) + d.vc[p] + d.f[p] + gain;
    }
    return pl;
}

// Trains N^{CH,i} (and N^{E,i} for i < R) against CVaR_alpha of the
// component P&L in basis points. Early stopping keeps the parameters with
// the best evaluation-split CVaR, the two untrained starting points included.
inline Component train_component(const BermudanModel& m, const HedgeAssetPanel& pan, int i,
                                 const nn::TrainConfig& cfg, ComponentReport* report = nullptr,
                                 const TrainLog& log = {}) {
    cfg.validate();
    m.check_compatible(pan);
    const int R = pan.n_rates();
    DHB_REQUIRE(i >= 1 && i <= R, InvalidArgument, "train_component: index out of range");
    for (int u = i + 1; u <= R; ++u)
        DHB_REQUIRE(m.component(u).trained, MissingArtifact,
                    "train_component: downstream component " + std::to_string(u) + " is not trained");
    Component comp{i, {}, {}, {}, {}, true};
    if (!pan.strategy.trainable() || (pan.strategy.tag == StrategyTag::OS && i == R)) return comp;

    const auto d = build_component_data(m, pan, i);
    std::vector<int> fit, ev;
    train_detail::split_paths(pan.n_paths, cfg, fit, ev);
    const bool has_ex = i < R;
    constexpr double kBp = 1e4;

    // Normalisation from the fit split only.
    comp.hedge_norm = nn::Standardizer::fit(train_detail::gather_blocks(d.xh, fit, d.nk));
    const nn::Matrix xh = comp.hedge_norm.apply(d.xh);
    nn::Matrix xe;
    if (has_ex) {
        comp.exercise_norm = nn::Standardizer::fit(train_detail::gather_blocks(d.xe, fit, 1));
        xe = comp.exercise_norm.apply(d.xe);
    }

    const std::uint64_t base = cfg.seed ^ (static_cast<std::uint64_t>(i) << 32);
    nn::Mlp hedge(train_detail::net_spec(cfg, static_cast<int>(xh.rows()), static_cast<int>(d.di.rows()), nn::Head::Linear),
                  splitmix64(base + 1));
    std::optional<nn::Mlp> ex;
    if (has_ex)
        ex.emplace(train_detail::net_spec(cfg, static_cast<int>(xe.rows()), 1, nn::Head::Sigmoid), splitmix64(base + 2));

    const nn::Matrix xh_eval = train_detail::gather_blocks(xh, ev, d.nk);
    const nn::Matrix xe_eval = has_ex ? train_detail::gather_blocks(xe, ev, 1) : nn::Matrix();
    auto eval_cvar = [&](nn::Mlp& h, std::optional<nn::Mlp>& e) {
        const nn::Matrix oh = model_detail::forward_eval(h, xh_eval);
        nn::Matrix oe;
        if (e) oe = model_detail::forward_eval(*e, xe_eval);
        auto pl = component_pnl(d, ev, oh, e ? &oe : nullptr);
        for (double& v : pl) v *= kBp;
        return nn::cvar(pl, cfg.alpha);
    };

    ComponentReport rep;
    rep.index = i;
    rep.eval_cvar_initial = eval_cvar(hedge, ex);
    nn::Mlp best_h = hedge;
    std::optional<nn::Mlp> best_e = ex;
    double best = rep.eval_cvar_initial;
    rep.eval_cvar_baseline = rep.eval_cvar_initial;
    if (ex) {
        // Always-exercise point: output weights are zero at start, so a large
        // bias makes N^E = 1 to machine precision.
        std::optional<nn::Mlp> always = ex;
        always->params()[always->out_b()] = 40.0;
        rep.eval_cvar_baseline = eval_cvar(hedge, always);
        if (rep.eval_cvar_baseline < best) {
            best = rep.eval_cvar_baseline;
            best_e = always;
        }
    }

    nn::AdamState st_h(hedge.n_params());
    std::optional<nn::AdamState> st_e;
    if (ex) st_e.emplace(ex->n_params());
    auto rng = make_stream(cfg.seed, 0x747261696eULL, static_cast<std::uint64_t>(i));
    int since = 0;
    std::vector<int> order = fit;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int n_batches = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_paths)) {
            const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_paths));
            if (b1 - b0 < 2) break;
            const std::span<const int> bp(order.data() + b0, b1 - b0);
            nn::Mlp::Tape th, te;
            const nn::Matrix oh = hedge.forward(train_detail::gather_blocks(xh, bp, d.nk), nn::kTrain, &rng, &th);
            nn::Matrix oe;
            if (ex) oe = ex->forward(train_detail::gather_blocks(xe, bp, 1), nn::kTrain, &rng, &te);
            auto pl = component_pnl(d, bp, oh, ex ? &oe : nullptr);
            for (double& v : pl) v *= kBp;
            std::vector<double> g;
            const double loss = nn::cvar(pl, cfg.alpha, &g);
            if (!std::isfinite(loss))
                throw TrainingDiverged("component " + std::to_string(i) + ": non-finite loss at epoch " +
                                       std::to_string(epoch));
            loss_sum += loss;
            ++n_batches;
            nn::Matrix dh(oh.rows(), oh.cols());
            nn::Matrix de(1, static_cast<Eigen::Index>(bp.size()));
            for (std::size_t a = 0; a < bp.size(); ++a) {
                const auto p = static_cast<std::size_t>(bp[a]);
                const double s = kBp * g[a];
                dh.middleCols(static_cast<Eigen::Index>(a) * d.nk, d.nk) =
                    s * d.di.middleCols(static_cast<Eigen::Index>(p) * d.nk, d.nk);
                de(0, static_cast<Eigen::Index>(a)) = s * (d.oi[p] - d.vc[p]);
            }
            nn::Vector gh = nn::Vector::Zero(hedge.n_params());
            hedge.backward(th, dh, gh);
            nn::adam_step(hedge.params(), gh, st_h, cfg.adam);
            if (ex) {
                nn::Vector ge = nn::Vector::Zero(ex->n_params());
                ex->backward(te, de, ge);
                nn::adam_step(ex->params(), ge, *st_e, cfg.adam);
            }
        }
        const double ec = eval_cvar(hedge, ex);
        if (!std::isfinite(ec))
            throw TrainingDiverged("component " + std::to_string(i) + ": non-finite evaluation CVaR at epoch " +
                                   std::to_string(epoch));
        rep.epochs_run = epoch + 1;
        if (log)
            log("component " + std::to_string(i) + " epoch " + std::to_string(epoch) + " fit " +
                std::to_string(n_batches ? loss_sum / n_batches : 0.0) + " eval " + std::to_string(ec));
        if (ec < best) {
            best = ec;
            best_h = hedge;
            best_e = ex;
            rep.best_epoch = epoch;
            since = 0;
        } else if (++since >= cfg.patience) {
            break;
        }
    }
    rep.eval_cvar_best = best;
    if (report) *report = rep;
    comp.hedge = std::move(best_h);
    comp.exercise = std::move(best_e);
    return comp;
}

struct TrainResult {
    BermudanModel model;
    std::vector<ComponentReport> reports;
};

// Components R, R-1, ..., 1, each trained against the frozen result of the
// ones after it.
inline TrainResult train_bermudan(const HedgeAssetPanel& pan, const nn::TrainConfig& cfg, const TrainLog& log = {}) {
    cfg.validate();
    TrainResult res;
    res.model = BermudanModel::empty(pan.strategy, pan.grid, cfg.alpha);
    res.model.scenario_fingerprint = pan.scenario_fingerprint;
    res.model.train_seed = cfg.seed;
    for (int i = pan.n_rates(); i >= 1; --i) {
        if (res.model.component(i).trained) continue;
        ComponentReport rep;
        res.model.component(i) = train_component(res.model, pan, i, cfg, &rep, log);
        res.reports.push_back(rep);
    }
    return res;
}

inline constexpr char kModelMagic[9] = "DHBMODL1";
inline constexpr std::uint64_t kModelVersion = 1;

inline std::vector<char> encode_model(const BermudanModel& m) {
    io::Writer w;
    io::write_header(w, kModelMagic, kModelVersion);
    w.u64(static_cast<std::uint64_t>(m.strategy.tag));
    w.f64(m.strategy.trade_strike);
    w.array(m.strategy.hedge_strikes);
    w.array(m.grid.dates());
    w.f64(m.grid.dt());
    w.f64(m.alpha);
    w.u64(m.scenario_fingerprint);
    w.u64(m.config_fingerprint);
    w.u64(m.train_seed);
    w.u64(m.components.size());
    for (const auto& c : m.components) {
        w.u64(static_cast<std::uint64_t>(c.index));
        w.u64(c.trained ? 1 : 0);
        w.u64(c.hedge ? 1 : 0);
        if (c.hedge) {
            c.hedge->save(w);
            c.hedge_norm.save(w);
        }
        w.u64(c.exercise ? 1 : 0);
        if (c.exercise) {
            c.exercise->save(w);
            c.exercise_norm.save(w);
        }
    }
    return w.buffer();
}

inline BermudanModel decode_model(std::vector<char> bytes) {
    io::Reader r(std::move(bytes));
    io::check_header(r, kModelMagic, kModelVersion, "model checkpoint");
    BermudanModel m;
    const auto tag = r.u64();
    if (tag > static_cast<std::uint64_t>(StrategyTag::IplusSM)) throw IoError("model checkpoint: bad strategy tag");
    m.strategy.tag = static_cast<StrategyTag>(tag);
    m.strategy.trade_strike = r.f64();
    m.strategy.hedge_strikes = r.array<double>();
    auto dates = r.array<double>();
    const double dt = r.f64();
    m.grid = TimeGrid(std::move(dates), dt);
    m.alpha = r.f64();
    m.scenario_fingerprint = r.u64();
    m.config_fingerprint = r.u64();
    m.train_seed = r.u64();
    const auto n = r.u64();
    if (n != static_cast<std::uint64_t>(m.grid.n_rates())) throw IoError("model checkpoint: component count mismatch");
    for (std::uint64_t k = 0; k < n; ++k) {
        Component c;
        c.index = static_cast<int>(r.u64());
        c.trained = r.u64() == 1;
        if (r.u64() == 1) {
            c.hedge = nn::Mlp::load(r);
            c.hedge_norm = nn::Standardizer::load(r);
        }
        if (r.u64() == 1) {
            c.exercise = nn::Mlp::load(r);
            c.exercise_norm = nn::Standardizer::load(r);
        }
        m.components.push_back(std::move(c));
    }
    if (!r.at_end()) throw IoError("model checkpoint: trailing bytes");
    return m;
}

}  // namespace dhb
