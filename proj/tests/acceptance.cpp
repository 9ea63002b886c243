// Acceptance suite. Prints one PASS / FAIL line per criterion (INFO for
// criteria the selected profile reports but does not enforce) and exits
// non-zero if any enforced criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "dhb/bachelier.hpp"
#include "dhb/pipeline.hpp"

using namespace dhb;
namespace pl = dhb::pipeline;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kBp = 1e-4;

// ---------------------------------------------------------------- profiles

struct Profile {
    std::string name;
    RunConfig cfg;
    double value_band = 15.0;     // criteria 2-3, bp
    double switch_band = 3.0;     // criterion 3 switch value, bp
    bool enforce_study = true;    // criteria 5, 6 and the retraining slack of 4
    bool resume = true;           // reuse trained models with a matching fingerprint
    double pipeline_budget = 0;   // s, whole pipeline (ci)
    double run_budget = 0;        // s, one (strategy, alpha) training run (full)
    double study_budget = 0;      // s, all training runs (full)
};

Profile make_profile(const std::string& name) {
    Profile p;
    p.name = name;
    p.cfg = default_config();
    if (name == "full") {
        p.run_budget = 2 * 3600.0;
        p.study_budget = 12 * 3600.0;
        return p;
    }
    if (name != "ci") throw InvalidArgument("unknown profile '" + name + "' (expected ci or full)");
    auto& c = p.cfg;
    c.dt = 1.0 / 8.0;
    c.n_train = c.n_test = c.n_reference = 1024;
    c.surface.n_inner = 50000;
    c.surface.dt_inner = 1.0 / 8.0;
    c.train.epochs = 50;
    c.train.patience = 50;
    p.value_band = 40.0;
    p.switch_band = 40.0;
    p.enforce_study = false;
    p.resume = false;
    p.pipeline_budget = 15 * 60.0;
    return p;
}

// ---------------------------------------------------------------- output

struct Verdict {
    int id;
    std::string status;  // PASS, FAIL, INFO
    std::string text;
};

std::vector<Verdict> g_verdicts;

std::string fmt(const char* f, auto... args) {
    char buf[1024];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void verdict(int id, bool enforced, bool ok, const std::string& text) {
    const std::string st = !enforced ? "INFO" : ok ? "PASS" : "FAIL";
    g_verdicts.push_back({id, st, text});
    std::cout << "[" << st << "] " << id << ". " << text << (enforced || ok ? "" : " (not met)") << std::endl;
}

double seconds(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Number of 3-SE exceedances a true martingale may produce among n tests:
// binomial mean plus four standard deviations, plus one.
int allowed_exceedances(int n) {
    const double p = std::erfc(3.0 / std::sqrt(2.0));
    const double m = n * p;
    return static_cast<int>(std::floor(m + 4.0 * std::sqrt(m * (1 - p)) + 1.0));
}

// ---------------------------------------------------------------- 7. CVaR

// Empirical loss quantile function integrated piece by piece over
// [alpha, 1]; each of the n sorted losses owns a width-1/n interval.
double cvar_by_integration(const std::vector<double>& pl_sample, double alpha) {
    std::vector<double> loss;
    for (double v : pl_sample) loss.push_back(-v);
    std::sort(loss.begin(), loss.end());
    const double n = static_cast<double>(loss.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < loss.size(); ++k) {
        const double lo = std::max(alpha, k / n), hi = (k + 1) / n;
        if (hi > lo) acc += (hi - lo) * loss[k];
    }
    return acc / (1.0 - alpha);
}

void criterion_cvar() {
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(-5.0, 5.0), ua(0.0, 0.999);
    double worst = 0.0;
    long cases = 0;
    for (int trial = 0; trial < 200000; ++trial) {
        const int n = 1 + trial % 16;
        std::vector<double> x;
        std::set<double> seen;
        while (static_cast<int>(x.size()) < n) {
            const double v = u(rng);
            if (seen.insert(v).second) x.push_back(v);
        }
        std::vector<double> alphas{ua(rng), 0.0};
        for (int k = 1; k < n; ++k) alphas.push_back(static_cast<double>(k) / n);
        for (double a : alphas) {
            worst = std::max(worst, std::abs(nn::cvar(x, a) - cvar_by_integration(x, a)));
            ++cases;
        }
    }
    const double ex = nn::cvar(std::vector<double>{-1, 0, 1, 2}, 0.5);
    verdict(7, true, worst <= 1e-12 && ex == 0.5,
            fmt("CVaR oracle: max |cvar - quantile integral| = %.2e over %ld cases (n <= 16, tol 1e-12); "
                "{-1,0,1,2} at alpha 0.5 -> %.17g",
                worst, cases, ex));
}

// ---------------------------------------------------------------- 8. gradients

void criterion_gradients() {
    double worst = 0.0;
    int checked = 0, dead = 0;
    for (nn::Head head : {nn::Head::Linear, nn::Head::Sigmoid}) {
        nn::MlpSpec spec;
        spec.inputs = 11;
        spec.outputs = head == nn::Head::Linear ? 10 : 1;
        spec.head = head;
        nn::Mlp net(spec, 88);
        std::mt19937_64 rng(head == nn::Head::Linear ? 801 : 802);
        std::normal_distribution<double> g(0.0, 0.5);
        for (Eigen::Index k = 0; k < net.n_params(); ++k) net.params()[k] += g(rng);
        nn::Matrix x(spec.inputs, 32), c(spec.outputs, 32);
        for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = g(rng);
        for (Eigen::Index k = 0; k < c.size(); ++k) c.data()[k] = g(rng);
        // Calibrate the running statistics on the batch, as training does;
        // uncalibrated statistics blow activations up and saturate the head
        // below finite-difference resolution.
        for (int it = 0; it < 400; ++it) net.forward(x, nn::Mode{true, false, true});
        auto loss = [&] { return (net.forward(x, nn::kEval).array() * c.array()).sum(); };
        nn::Mlp::Tape tape;
        net.forward(x, nn::kEval, nullptr, &tape);
        nn::Vector grad = nn::Vector::Zero(net.n_params());
        net.backward(tape, c, grad);
        std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks;
        for (const auto& L : net.layers()) blocks.emplace_back(L.w, L.beta + L.rows);
        blocks.emplace_back(net.out_w(), net.n_params());
        const double h = 1e-4;
        for (const auto& [lo, hi] : blocks) {
            std::uniform_int_distribution<Eigen::Index> pick(lo, hi - 1);
            for (int t = 0; t < 50; ++t) {
                const Eigen::Index k = pick(rng);
                const double keep = net.params()[k];
                net.params()[k] = keep + h;
                const double up = loss();
                net.params()[k] = keep - h;
                const double dn = loss();
                net.params()[k] = keep;
                const double fd = (up - dn) / (2 * h);
                const double scale = std::max(std::abs(fd), std::abs(grad[k]));
                if (scale < 1e-10) {
                    ++dead;
                    continue;
                }
                worst = std::max(worst, std::abs(fd - grad[k]) / scale);
                ++checked;
            }
        }
    }
    verdict(8, true, worst <= 1e-4,
            fmt("gradient check: max relative error %.2e over %d parameters (50 draws per layer, 4x32 nets, both heads, "
                "%d draws on inactive ReLU units with zero gradient both ways; tol 1e-4)",
                worst, checked, dead));
}

// ---------------------------------------------------------------- 10. curve

void criterion_curve() {
    const auto grid = default_config().grid();
    std::mt19937_64 rng(1010);
    std::uniform_real_distribution<double> u(-0.01, 0.08);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int first = 1 + trial % 5;
        std::vector<double> r(static_cast<std::size_t>(6 - first));
        for (auto& v : r) v = u(rng);
        const auto c = reconstruct_curve(r, grid, first);
        for (int k = first; k < 6; ++k) worst = std::max(worst, std::abs(c.S(k) - r[static_cast<std::size_t>(k - first)]));
    }
    verdict(10, true, worst <= 1e-12, fmt("curve round trip: max |rate error| %.2e over 1000 random vectors (tol 1e-12)", worst));
}

// ---------------------------------------------------------------- pipeline

struct Study {
    std::map<std::pair<StrategyTag, double>, BermudanModel> models;
    std::map<std::pair<StrategyTag, double>, MetricsReport> test, reference;
    std::map<std::string, double> train_seconds;
    double pipeline_seconds = 0.0;
    bool pipeline_fresh = true;
};

std::string key_of(StrategyTag t, double a) { return std::string(to_string(t)) + "_a" + pl::Layout::alpha_tag(a); }

Study run_pipeline(const pl::Context& ctx, const Profile& prof) {
    Study st;
    const auto& c = ctx.config;
    const auto timings_path = ctx.layout.root / "timings.json";
    nlohmann::json timings = nlohmann::json::object();
    if (prof.resume && fs::exists(timings_path)) {
        const auto b = io::read_file(timings_path);
        timings = nlohmann::json::parse(std::string(b.begin(), b.end()));
        if (timings.value("config", "") != to_hex(ctx.config_fp)) timings = nlohmann::json::object();
    }
    timings["config"] = to_hex(ctx.config_fp);
    auto stage_time = [&](const std::string& name, const std::function<void()>& f) {
        const auto t0 = Clock::now();
        f();
        const double s = seconds(t0);
        ctx.log(name + ": " + fmt("%.1f", s) + " s");
        return s;
    };

    double total = 0.0;
    bool have_scen = prof.resume;
    try {
        if (have_scen)
            for (auto k : {pl::ScenarioKind::Train, pl::ScenarioKind::Test, pl::ScenarioKind::Reference})
                (void)pl::load_checked_scenarios(ctx, k);
        (void)pl::load_reference_params(ctx);
    } catch (const Error&) {
        have_scen = false;
    }
    if (have_scen) {
        total += timings.value("generate", 0.0);
        st.pipeline_fresh = false;
    } else {
        timings["generate"] = stage_time("generate-scenarios", [&] { pl::generate_scenarios(ctx); });
        total += timings["generate"].get<double>();
    }
    // Surfaces reuse identical files on disk; time only fresh builds.
    const bool surf_cached = prof.resume && fs::exists(ctx.layout.surface_manifest()) && timings.contains("surfaces");
    const double ts = stage_time("build-surfaces", [&] { pl::build_all_surfaces(ctx); });
    if (!surf_cached) timings["surfaces"] = ts;
    else st.pipeline_fresh = false;
    total += timings["surfaces"].get<double>();
    io::write_file_atomic(timings_path, timings.dump(2));

    {
        const auto t0 = Clock::now();
        const auto sc = pl::load_checked_scenarios(ctx, pl::ScenarioKind::Train);
        const auto surfaces = pl::surfaces_for(ctx, sc, pl::ScenarioKind::Train);
        for (auto tag : c.strategies) {
            const auto pan = build_panel(sc, surfaces, c.strategy(tag));
            for (double a : c.alphas) {
                const auto key = key_of(tag, a);
                if (prof.resume && timings.contains("train") && timings["train"].contains(key)) {
                    try {
                        st.models[{tag, a}] = pl::load_model(ctx, tag, a);
                        st.train_seconds[key] = timings["train"][key].get<double>();
                        st.pipeline_fresh = false;
                        continue;
                    } catch (const Error&) {
                    }
                }
                const auto t1 = Clock::now();
                auto m = pl::train_one(ctx, pan, a);
                io::write_file_atomic(ctx.layout.model(tag, a), encode_model(m));
                st.train_seconds[key] = seconds(t1);
                timings["train"][key] = st.train_seconds[key];
                io::write_file_atomic(timings_path, timings.dump(2));
                st.models[{tag, a}] = std::move(m);
            }
        }
        ctx.log(fmt("train: %.1f s this session", seconds(t0)));
        for (const auto& [k, s] : st.train_seconds) total += s;
    }
    const pl::Selection all{c.strategies, c.alphas};
    total += stage_time("evaluate", [&] {
        for (auto& r : pl::evaluate(ctx, all, pl::ScenarioKind::Test)) st.test[{parse_strategy(r.strategy), r.alpha}] = r;
    });
    total += stage_time("cross-validate", [&] {
        for (auto& r : pl::evaluate(ctx, all, pl::ScenarioKind::Reference))
            st.reference[{parse_strategy(r.strategy), r.alpha}] = r;
    });
    total += stage_time("report", [&] { pl::report(ctx); });
    st.pipeline_seconds = total;
    return st;
}

// ---------------------------------------------------------------- 1. martingale

void criterion_martingale(const pl::Context& ctx, const Profile& prof) {
    const auto t0 = Clock::now();
    auto c = default_config();
    const auto params = c.params();
    const auto sc = simulate(params, c.n_test, c.seed_test);
    const auto surfaces = pl::load_surfaces(ctx, ctx.config.params());
    const auto pan = build_panel(sc, surfaces, prof.cfg.strategy(StrategyTag::IplusSM));
    const int N = pan.n_paths;
    int step_tests = 0, step_fail = 0, cum_tests = 0, cum_fail = 0;
    double worst_step = 0.0, worst_cum = 0.0, worst_short = 0.0, worst_short_se = 0.0;
    std::string worst_short_name;
    auto z_of = [&](const std::vector<double>& d) {
        double m = 0.0, q = 0.0;
        for (double v : d) m += v;
        m /= N;
        for (double v : d) q += (v - m) * (v - m);
        const double se = std::sqrt(q / (N - 1) / N);
        return std::pair{m, se > 0.0 ? std::abs(m) / se : 0.0};
    };
    std::vector<double> d(static_cast<std::size_t>(N));
    for (int col = 0; col < pan.n_assets(); ++col) {
        const int u = col % pan.n_rates() + 1;
        const int last = pan.grid.step_of(u);
        for (int k = 0; k < last; ++k) {
            for (int p = 0; p < N; ++p) d[static_cast<std::size_t>(p)] = increment(pan, p, k, col);
            const double z = z_of(d).second;
            ++step_tests;
            step_fail += z > 3.0;
            worst_step = std::max(worst_step, z);
        }
        for (int j = 1; j <= u; ++j) {
            const int k = pan.grid.step_of(j);
            for (int p = 0; p < N; ++p) d[static_cast<std::size_t>(p)] = pan.data[pan.at(p, k, col)] - pan.data[pan.at(p, 0, col)];
            const auto [m, z] = z_of(d);
            const double se = z > 0.0 ? std::abs(m) / z : 0.0;
            ++cum_tests;
            cum_fail += z > 3.0;
            worst_cum = std::max(worst_cum, z);
            if (col >= pan.n_rates() && j == u && std::abs(m) / kBp > worst_short) {
                worst_short = std::abs(m) / kBp;
                worst_short_se = se / kBp;
                worst_short_name = fmt("O^{%d,K=%.3f}", u, pan.strategy.hedge_strikes[static_cast<std::size_t>(col / pan.n_rates() - 1)]);
            }
        }
    }
    const int step_allow = allowed_exceedances(step_tests), cum_allow = allowed_exceedances(cum_tests);
    const bool ok = step_fail <= step_allow && cum_fail <= cum_allow && worst_short < 10.0;
    verdict(1, true, ok,
            fmt("martingale (default test set, %d paths, dt 1/32, %zu hedge assets): per-step 3-SE exceedances %d/%d (max z %.2f, "
                "a martingale allows <= %d); cumulative exceedances %d/%d (max z %.2f, allows <= %d); "
                "max |mean P&L| of a constant short swaption %.2f bp, SE %.2f bp [%s] (< 10 bp); %.0f s",
                N, static_cast<std::size_t>(pan.n_assets()), step_fail, step_tests, worst_step, step_allow, cum_fail,
                cum_tests, worst_cum, cum_allow, worst_short, worst_short_se, worst_short_name.c_str(), seconds(t0)));
}

// ---------------------------------------------------------------- 9. surfaces

// Plain nested Monte Carlo for several strikes on shared antithetic paths,
// with S_T as control variate (E[S_T] = s under the annuity measure).
struct OracleValue {
    double value, se;
};

std::vector<OracleValue> oracle_prices(const RateModel& m, double s, double x, double t, const std::vector<double>& strikes,
                                       int n_paths, std::uint64_t seed, double dt) {
    const double horizon = m.maturity - t;
    const int n = std::max(1, static_cast<int>(std::ceil(horizon / dt - 1e-9)));
    const double h = horizon / n, sh = std::sqrt(h);
    const double decay = std::exp(-m.kappa * h), xsd = std::sqrt(ou_variance(m.kappa, h));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    const int pairs = n_paths / 2;
    const std::size_t K = strikes.size();
    std::vector<double> sy(K, 0.0), syy(K, 0.0), syc(K, 0.0);
    double sc = 0.0, scc = 0.0;
    for (int p = 0; p < pairs; ++p) {
        double s1 = s, s2 = s, x1 = x, x2 = x, u = t;
        for (int k = 0; k < n; ++k, u += h) {
            const double r = m.rho(u), rp = std::sqrt(1.0 - r * r);
            const double a = g(rng), b = g(rng);
            const double comp = -0.5 * m.omega * m.omega * ou_variance(m.kappa, u);
            s1 += std::sqrt(m.xi0 * std::exp(m.omega * x1 + comp)) * sh * (r * a + rp * b);
            s2 -= std::sqrt(m.xi0 * std::exp(m.omega * x2 + comp)) * sh * (r * a + rp * b);
            x1 = x1 * decay + xsd * a;
            x2 = x2 * decay - xsd * a;
        }
        const double cv = 0.5 * (s1 + s2) - s;
        sc += cv;
        scc += cv * cv;
        for (std::size_t j = 0; j < K; ++j) {
            const double y = 0.5 * (std::max(strikes[j] - s1, 0.0) + std::max(strikes[j] - s2, 0.0));
            sy[j] += y;
            syy[j] += y * y;
            syc[j] += y * cv;
        }
    }
    const double np = pairs, mc = sc / np, vc = scc / np - mc * mc;
    std::vector<OracleValue> out;
    for (std::size_t j = 0; j < K; ++j) {
        const double my = sy[j] / np, vy = syy[j] / np - my * my, cyc = syc[j] / np - my * mc;
        const double beta = vc > 0.0 ? cyc / vc : 0.0;
        const double var = std::max(0.0, vy - 2 * beta * cyc + beta * beta * vc);
        out.push_back({my - beta * mc, std::sqrt(var / (np - 1))});
    }
    return out;
}

void criterion_surfaces(const pl::Context& ctx) {
    const auto t0 = Clock::now();
    const auto params = ctx.config.params();
    const auto surfaces = pl::load_surfaces(ctx, params);
    const auto sc = pl::load_checked_scenarios(ctx, pl::ScenarioKind::Test);
    const auto strikes = pl::needed_strikes(ctx.config);
    std::mt19937_64 rng(909);
    int points = 0, fails = 0, n_surf = 0;
    double worst_excess = -1e300, worst_err = 0.0, max_se = 0.0;
    std::string worst_at;
    for (int u = 1; u < params.terminal(); ++u) {
        const auto m = RateModel::from(params, u);
        std::vector<const SwaptionSurface*> ss;
        for (double k : strikes) ss.push_back(&surfaces.at(u, k));
        n_surf += static_cast<int>(ss.size());
        std::uniform_int_distribution<int> pick_p(0, sc.n_paths - 1), pick_k(0, sc.grid.step_of(u) - 1);
        const double dt = ss.front()->spec().dt_inner;
        for (int q = 0; q < 200; ++q) {
            // States visited by the simulated paths, strictly before maturity.
            const int p = pick_p(rng), k = pick_k(rng);
            const double s = sc.S(p, k, u), x = sc.X(p, k, u), t = sc.grid.time(k);
            const auto oracle = oracle_prices(m, s, x, t, strikes, 200000, 90000 + static_cast<std::uint64_t>(u * 1000 + q), dt);
            for (std::size_t j = 0; j < strikes.size(); ++j) {
                const double err = std::abs(ss[j]->eval(s, x, t).value - oracle[j].value);
                const double tol = std::max(kBp, 3.0 * oracle[j].se);
                ++points;
                fails += err > tol;
                max_se = std::max(max_se, oracle[j].se);
                if (err - tol > worst_excess) {
                    worst_excess = err - tol;
                    worst_err = err;
                    worst_at = fmt("rate %d K %.3f s %.4f x %.2f t %.3f", u, strikes[j], s, x, t);
                }
            }
        }
    }
    // Degenerate vol-of-vol: the surface must reproduce the Bachelier formula.
    auto p0 = params;
    for (auto& w : p0.omega) w = 0.0;
    double worst_b = 0.0;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int u : {1, 3, 5}) {
        auto opt = ctx.config.surface;
        const auto spec = default_surface_spec(p0, u, ctx.config.strike, 31, opt);
        const auto srf = build_surface(p0, spec);
        for (int q = 0; q < 200; ++q) {
            const double s = p0.s0_of(u) + (2.0 * unit(rng) - 1.0) * 6.0 * std::sqrt(p0.xi0_of(u) * spec.t_nodes.back());
            const double x = spec.x_nodes.front() + unit(rng) * (spec.x_nodes.back() - spec.x_nodes.front());
            const double t = unit(rng) * spec.t_nodes.back();
            const double sd = std::sqrt(p0.xi0_of(u) * (spec.t_nodes.back() - t));
            worst_b = std::max(worst_b, std::abs(srf.eval(s, x, t).value - bachelier::price(ctx.config.strike - s, sd)));
        }
    }
    verdict(9, true, fails == 0 && worst_b <= 0.5 * kBp,
            fmt("surface accuracy: %d/%d checks outside max(1 bp, 3 SE) over %d surfaces x 200 path states "
                "(200k-path control-variate oracle, max SE %.2f bp; worst |err| %.2f bp at %s); omega=0 vs Bachelier "
                "max |err| %.3f bp on 600 points (tol 0.5 bp); %.0f s",
                fails, points, n_surf, max_se / kBp, worst_err / kBp, worst_at.c_str(), worst_b / kBp, seconds(t0)));
}

// ---------------------------------------------------------------- 2-6, 11

void criteria_study(const pl::Context& ctx, const Profile& prof, const Study& st) {
    const auto& c = ctx.config;
    const std::vector<double> alphas{0.2, 0.4, 0.6, 0.8};

    {  // 2. NonArb values of the trained swaption strategies
        double worst = 0.0;
        std::string at;
        std::ostringstream all;
        for (auto tag : {StrategyTag::OS, StrategyTag::IplusS, StrategyTag::IplusSM})
            for (double a : alphas) {
                const auto& r = st.test.at({tag, a});
                if (std::abs(r.nonarb_value - 456.0) >= worst) {
                    worst = std::abs(r.nonarb_value - 456.0);
                    at = key_of(tag, a);
                }
                all << fmt(" %.1f", r.nonarb_value);
            }
        verdict(2, true, worst <= prof.value_band,
                fmt("NonArb Value of trained swaption strategies within +-%.0f bp of 456: max deviation %.1f bp (%s); values%s",
                    prof.value_band, worst, at.c_str(), all.str().c_str()));
    }
    {  // 3. S_Max values and switch value
        const double target[] = {429.6, 415.9, 405.8, 397.8};
        double worst = 0.0;
        std::ostringstream vals;
        for (std::size_t k = 0; k < 4; ++k) {
            const auto& r = st.test.at({StrategyTag::Max, alphas[k]});
            worst = std::max(worst, std::abs(r.model_value - target[k]));
            vals << fmt(" %.1f", r.model_value);
        }
        const double sw = st.test.at({StrategyTag::Max, 0.8}).model_switch_value;
        verdict(3, true, worst <= prof.value_band && std::abs(sw - 0.7) <= prof.switch_band,
                fmt("S_Max Model Values%s vs (429.6 415.9 405.8 397.8): max deviation %.1f bp (tol %.0f); "
                    "Model Switch Value at alpha 0.8 = %.1f bp vs 0.7 (tol %.0f)",
                    vals.str().c_str(), worst, prof.value_band, sw, prof.switch_band));
    }
    {  // 4. monotonicity in alpha
        const auto sc = pl::load_checked_scenarios(ctx, pl::ScenarioKind::Test);
        const auto surfaces = pl::surfaces_for(ctx, sc, pl::ScenarioKind::Test);
        int violations = 0, checks = 0;
        double worst_up = 0.0;
        for (auto tag : c.strategies) {
            const auto pan = build_panel(sc, surfaces, c.strategy(tag));
            for (double a : alphas) {
                const auto& m = st.models.at({tag, a});
                const auto pnl = hedged_pnl(compute_trace(m, pan), pan);
                double prev = 1e300;
                for (double b : alphas) {
                    const double v = indifference_price(pnl.pl, b) / kBp;
                    ++checks;
                    if (v > prev) {
                        ++violations;
                        worst_up = std::max(worst_up, v - prev);
                    }
                    prev = v;
                }
            }
        }
        double worst_slack = 0.0;
        std::string slack_at = "none";
        for (auto tag : c.strategies)
            for (std::size_t k = 1; k < 4; ++k) {
                const double rise = st.test.at({tag, alphas[k]}).model_value - st.test.at({tag, alphas[k - 1]}).model_value;
                if (rise > worst_slack) {
                    worst_slack = rise;
                    slack_at = key_of(tag, alphas[k]);
                }
            }
        verdict(4, true, violations == 0,
                fmt("monotone in alpha, fixed model on fixed paths: %d violations in %d evaluations (largest rise %.2e bp)",
                    violations, checks, worst_up));
        verdict(4, prof.enforce_study, worst_slack <= 5.0,
                fmt("monotone in alpha across per-alpha retraining: largest rise %.2f bp at %s (slack 5 bp)", worst_slack,
                    slack_at.c_str()));
    }
    {  // 5. IQR ordering at alpha 0.4
        const StrategyTag order[] = {StrategyTag::I, StrategyTag::Max, StrategyTag::OS, StrategyTag::IplusS};
        const double paper[] = {270.8, 73.0, 60.0, 39.1};
        double q[4];
        bool within = true;
        for (int k = 0; k < 4; ++k) {
            q[k] = st.test.at({order[k], 0.4}).iqr;
            within = within && std::abs(q[k] - paper[k]) <= 0.3 * paper[k];
        }
        const bool ordered = q[0] > q[1] && q[1] >= q[2] && q[2] > q[3];
        verdict(5, prof.enforce_study, ordered && within,
                fmt("IQR at alpha 0.4: S_I %.1f, S_Max %.1f, S_OS %.1f, S_IplusS %.1f (paper 270.8 > 73.0 > 60.0 > 39.1, "
                    "+-30%%): ordering %s, magnitudes %s",
                    q[0], q[1], q[2], q[3], ordered ? "holds" : "broken", within ? "within 30%" : "outside 30%"));
    }
    {  // 6. cross-parameter robustness
        double worst = 0.0;
        std::string at;
        for (auto tag : {StrategyTag::OS, StrategyTag::Max})
            for (double a : alphas) {
                const double mv = std::abs(st.reference.at({tag, a}).model_value - st.test.at({tag, a}).model_value);
                if (mv >= worst) {
                    worst = mv;
                    at = key_of(tag, a);
                }
            }
        const double hm = st.reference.at({StrategyTag::Max, 0.2}).hedge_pnl_mean;
        verdict(6, prof.enforce_study, worst < 10.0 && hm < 0.0,
                fmt("reference set without retraining: max |Model Value shift| of S_OS/S_Max %.1f bp (%s, < 10); "
                    "S_Max Hedge PnL Mean %.1f bp (paper -4.5, must be negative)",
                    worst, at.c_str(), hm));
    }
    {  // 11. budgets
        double worst_run = 0.0, study = 0.0;
        for (const auto& [k, s] : st.train_seconds) {
            worst_run = std::max(worst_run, s);
            study += s;
        }
        if (prof.name == "ci") {
            verdict(11, true, st.pipeline_seconds <= prof.pipeline_budget,
                    fmt("ci pipeline (%d paths, dt 1/8, %d epochs, all 20 configurations) took %.0f s (budget %.0f s)",
                        c.n_train, c.train.epochs, st.pipeline_seconds, prof.pipeline_budget));
        } else {
            verdict(11, true, worst_run <= prof.run_budget && study <= prof.study_budget,
                    fmt("slowest (strategy, alpha) training run %.0f s (budget %.0f s); all 20 runs %.0f s "
                        "(overnight budget %.0f s); whole pipeline %.0f s",
                        worst_run, prof.run_budget, study, prof.study_budget, st.pipeline_seconds));
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    dhb::pipeline::retain_freed_memory();
    CLI::App app{"Acceptance criteria for the Bermudan deep hedging pipeline"};
    std::string profile_name = "ci", workdir;
    std::vector<int> only;
    bool verbose = false;
    app.add_option("--profile", profile_name, "ci or full")->check(CLI::IsMember({"ci", "full"}));
    app.add_option("--workdir", workdir, "Artifact directory")->required();
    app.add_option("--only", only, "Run only these criteria (numbers)");
    app.add_flag("--verbose", verbose, "Log every training epoch");
    CLI11_PARSE(app, argc, argv);

    const auto wall = Clock::now();
    auto want = [&](std::initializer_list<int> ids) {
        if (only.empty()) return true;
        for (int i : ids)
            if (std::find(only.begin(), only.end(), i) != only.end()) return true;
        return false;
    };
    try {
        auto prof = make_profile(profile_name);
        prof.cfg.output_dir = workdir;
        if (!prof.resume && (only.empty() || want({2, 3, 4, 5, 6, 11}))) fs::remove_all(workdir);
        pl::Context ctx(prof.cfg, [&](const std::string& m) {
            if (verbose || m.rfind("  component", 0) != 0) std::cerr << "  " << m << std::endl;
        });
        std::cout << "acceptance profile " << prof.name << ", config " << to_hex(ctx.config_fp) << ", workdir " << workdir
                  << std::endl;

        if (want({7})) criterion_cvar();
        if (want({8})) criterion_gradients();
        if (want({10})) criterion_curve();
        if (want({2, 3, 4, 5, 6, 11})) {
            const auto st = run_pipeline(ctx, prof);
            criteria_study(ctx, prof, st);
        } else if (want({1, 9})) {
            if (!fs::exists(ctx.layout.scenarios(pl::ScenarioKind::Test))) pl::generate_scenarios(ctx);
            pl::build_all_surfaces(ctx);
        }
        if (want({1})) criterion_martingale(ctx, prof);
        if (want({9})) criterion_surfaces(ctx);
    } catch (const std::exception& e) {
        std::cout << "[FAIL] acceptance aborted: " << e.what() << std::endl;
        return 1;
    }
    int failed = 0;
    for (const auto& v : g_verdicts) failed += v.status == "FAIL";
    std::cout << fmt("acceptance %s: %d enforced failures, %zu lines, %.0f s", profile_name.c_str(), failed,
                     g_verdicts.size(), seconds(wall))
              << std::endl;
    return failed == 0 ? 0 : 1;
}
