#pragma once

#include <json.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dhb/config.hpp"
#include "dhb/evaluate.hpp"
#include "dhb/hedge/panel.hpp"
#include "dhb/hedge/train.hpp"
#include "dhb/reference.hpp"
#include "dhb/scenario_io.hpp"

namespace dhb::pipeline {

namespace fs = std::filesystem;
using Log = std::function<void(const std::string&)>;

// Training allocates and frees multi-megabyte matrices every batch; keep
// them on the heap instead of returning them to the kernel each time.
inline void retain_freed_memory() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 32 << 20);
    mallopt(M_TOP_PAD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

enum class ScenarioKind { Train, Test, Reference };

inline const char* kind_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Train: return "train";
        case ScenarioKind::Test: return "test";
        case ScenarioKind::Reference: return "reference";
    }
    return "?";
}

// Artifact layout under the output directory.
struct Layout {
    fs::path root;

    [[nodiscard]] fs::path scenarios(ScenarioKind k) const { return root / "scenarios" / (std::string(kind_name(k)) + ".scn"); }
    [[nodiscard]] fs::path reference_params() const { return root / "scenarios" / "reference_params.json"; }
    [[nodiscard]] fs::path surfaces_dir() const { return root / "surfaces"; }
    [[nodiscard]] fs::path surface_manifest() const { return root / "surfaces" / "manifest.json"; }
    [[nodiscard]] fs::path model(StrategyTag t, double alpha) const {
        return root / "models" / (std::string(to_string(t)) + "_a" + alpha_tag(alpha) + ".mdl");
    }
    [[nodiscard]] fs::path report(ScenarioKind k, StrategyTag t, double alpha) const {
        return root / "reports" / kind_name(k) / (std::string(to_string(t)) + "_a" + alpha_tag(alpha) + ".json");
    }
    [[nodiscard]] fs::path table(const std::string& name) const { return root / "tables" / name; }

    static std::string alpha_tag(double a) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.2f", a);
        return buf;
    }
};

struct Context {
    RunConfig config;
    std::uint64_t config_fp = 0;
    Layout layout;
    Log log = [](const std::string&) {};

    explicit Context(RunConfig c, Log l = {}) : config(std::move(c)) {
        config.validate();
        config_fp = config_fingerprint(config);
        layout.root = config.output_dir;
        if (l) log = std::move(l);
    }
};

inline std::uint64_t seed_of(const RunConfig& c, ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Train: return c.seed_train;
        case ScenarioKind::Test: return c.seed_test;
        case ScenarioKind::Reference: return c.seed_reference;
    }
    return 0;
}

inline int paths_of(const RunConfig& c, ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Train: return c.n_train;
        case ScenarioKind::Test: return c.n_test;
        case ScenarioKind::Reference: return c.n_reference;
    }
    return 0;
}

inline ReferenceOptions reference_options(const RunConfig& c) {
    ReferenceOptions o;
    o.strike = c.strike;
    o.n_inner = c.surface.n_inner;
    o.pricing_seed = c.seed_surface;
    o.dt_inner = c.surface.dt_inner;
    return o;
}

inline std::vector<double> needed_strikes(const RunConfig& c) {
    std::vector<double> k{c.strike};
    for (auto t : c.strategies)
        for (double s : c.strategy(t).hedge_strikes) k.push_back(s);
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    return k;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- scenarios

inline void write_reference_params(const Context& ctx, const ReferenceResult& ref) {
    nlohmann::ordered_json j;
    j["config_fingerprint"] = to_hex(ctx.config_fp);
    j["seed"] = ctx.config.seed_reference;
    j["params_fingerprint"] = to_hex(ref.params.fingerprint());
    j["x0"] = ref.params.x0;
    j["omega"] = ref.params.omega;
    j["target_price"] = ref.target_price;
    j["achieved_price"] = ref.achieved_price;
    io::write_file_atomic(ctx.layout.reference_params(), j.dump(2) + "\n");
}

// Reference parameters: reversed S-X correlations, halved omega and the
// re-solved X_0 recorded by generate-scenarios.
inline SmbmParams load_reference_params(const Context& ctx) {
    const auto bytes = io::read_file(ctx.layout.reference_params());
    const auto j = nlohmann::json::parse(std::string(bytes.begin(), bytes.end()));
    if (j.at("config_fingerprint").get<std::string>() != to_hex(ctx.config_fp))
        throw FingerprintMismatch(ctx.layout.reference_params().string() + " was produced under config " +
                                  j.at("config_fingerprint").get<std::string>() + ", current config is " +
                                  to_hex(ctx.config_fp));
    auto p = reversed_rate_vol_params(ctx.config.params());
    p.x0 = j.at("x0").get<std::vector<double>>();
    p.validate();
    return p;
}

inline void generate_scenarios(const Context& ctx) {
    const auto params = ctx.config.params();
    for (auto k : {ScenarioKind::Train, ScenarioKind::Test}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto set = simulate(params, paths_of(ctx.config, k), seed_of(ctx.config, k));
        save_scenarios(ctx.layout.scenarios(k), set, ctx.config_fp);
        ctx.log(std::string("scenarios/") + kind_name(k) + ": " + std::to_string(set.n_paths) + " paths in " +
                std::to_string(seconds_since(t0)) + " s");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto ref = make_reference_scenarios(params, ctx.config.n_reference, ctx.config.seed_reference,
                                              reference_options(ctx.config));
    save_scenarios(ctx.layout.scenarios(ScenarioKind::Reference), ref.scenarios, ctx.config_fp);
    write_reference_params(ctx, ref);
    ctx.log("scenarios/reference: " + std::to_string(ref.scenarios.n_paths) + " paths in " +
            std::to_string(seconds_since(t0)) + " s");
}

inline ScenarioSet load_checked_scenarios(const Context& ctx, ScenarioKind k) {
    const auto path = ctx.layout.scenarios(k);
    auto loaded = load_scenarios(path);
    if (loaded.config_fingerprint != ctx.config_fp)
        throw FingerprintMismatch(path.string() + " was generated under config " + to_hex(loaded.config_fingerprint) +
                                  ", current config is " + to_hex(ctx.config_fp) + "; re-run generate-scenarios");
    return std::move(loaded.set);
}

// ---------------------------------------------------------------- surfaces

inline bool same_grid(const SurfaceSpec& a, const SurfaceSpec& b) {
    return a.rate == b.rate && a.strike == b.strike && a.m_nodes == b.m_nodes && a.x_nodes == b.x_nodes &&
           a.t_nodes == b.t_nodes && a.xi0 == b.xi0 && a.omega == b.omega && a.kappa == b.kappa && a.n_inner == b.n_inner && a.seed == b.seed && a.dt_inner == b.dt_inner;
}

inline fs::path surface_path(const Context& ctx, int rate, double strike, std::uint64_t params_fp) {
    return ctx.layout.surfaces_dir() / surface_file_name(rate, strike, params_fp);
}

// Builds (or reuses, when an identical file exists) every surface needed for
// the given parameters.
inline void build_surfaces_for(const Context& ctx, const SmbmParams& params, const std::string& label) {
    const auto strikes = needed_strikes(ctx.config);
    const auto fp = params.fingerprint();
    for (int i = 1; i < params.terminal(); ++i) {
        const auto tmpl = default_surface_spec(params, i, strikes.front(), ctx.config.seed_surface, ctx.config.surface);
        std::vector<double> todo;
        for (double k : strikes) {
            auto want = tmpl;
            want.strike = k;
            const auto path = surface_path(ctx, i, k, fp);
            if (fs::exists(path)) {
                try {
                    if (same_grid(decode_surface(io::read_file(path)).spec(), want)) continue;
                } catch (const Error&) {
                }
            }
            todo.push_back(k);
        }
        if (todo.empty()) {
            ctx.log("surfaces/" + label + ": rate " + std::to_string(i) + " up to date");
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        const auto built = build_surfaces(params, tmpl, todo);
        for (const auto& s : built) io::write_file_atomic(surface_path(ctx, i, s.spec().strike, fp), encode_surface(s));
        ctx.log("surfaces/" + label + ": rate " + std::to_string(i) + ", " + std::to_string(todo.size()) +
                " strike(s) in " + std::to_string(seconds_since(t0)) + " s");
    }
}

inline SurfaceSet load_surfaces(const Context& ctx, const SmbmParams& params) {
    const auto fp = params.fingerprint();
    SurfaceSet set;
    for (int i = 1; i < params.terminal(); ++i) {
        const auto tmpl = default_surface_spec(params, i, ctx.config.strike, ctx.config.seed_surface, ctx.config.surface);
        for (double k : needed_strikes(ctx.config)) {
            const auto path = surface_path(ctx, i, k, fp);
            if (!fs::exists(path)) throw MissingArtifact("surface " + path.string() + " not found; run build-surfaces");
            auto s = decode_surface(io::read_file(path));
            auto want = tmpl;
            want.strike = k;
            if (!same_grid(s.spec(), want))
                throw FingerprintMismatch(path.string() + " was built with different grid settings; re-run build-surfaces");
            set.add(std::move(s));
        }
    }
    return set;
}

inline void build_all_surfaces(const Context& ctx) {
    const auto orig = ctx.config.params();
    build_surfaces_for(ctx, orig, "original");
    std::optional<SmbmParams> ref;
    if (fs::exists(ctx.layout.reference_params())) {
        ref = load_reference_params(ctx);
        build_surfaces_for(ctx, *ref, "reference");
    } else {
        ctx.log("surfaces/reference: skipped, no reference scenarios yet");
    }
    nlohmann::ordered_json j;
    j["config_fingerprint"] = to_hex(ctx.config_fp);
    j["seed"] = ctx.config.seed_surface;
    j["original_params"] = to_hex(orig.fingerprint());
    if (ref) j["reference_params"] = to_hex(ref->fingerprint());
    j["strikes"] = needed_strikes(ctx.config);
    io::write_file_atomic(ctx.layout.surface_manifest(), j.dump(2) + "\n");
}

// Surfaces matching the parameters a scenario set was generated under.
inline SurfaceSet surfaces_for(const Context& ctx, const ScenarioSet& sc, ScenarioKind k) {
    const auto params = k == ScenarioKind::Reference ? load_reference_params(ctx) : ctx.config.params();
    if (params.fingerprint() != sc.params_fingerprint)
        throw FingerprintMismatch(std::string("scenarios/") + kind_name(k) +
                                  " do not match the parameters implied by the config");
    return load_surfaces(ctx, params);
}

// ---------------------------------------------------------------- train

struct Selection {
    std::vector<StrategyTag> strategies;
    std::vector<double> alphas;
};

inline Selection select(const RunConfig& c, std::optional<StrategyTag> s, std::optional<double> a) {
    Selection sel{c.strategies, c.alphas};
    if (s) sel.strategies = {*s};
    if (a) sel.alphas = {*a};
    return sel;
}

inline nn::TrainConfig train_config(const RunConfig& c, double alpha) {
    auto t = c.train;
    t.alpha = alpha;
    return t;
}

inline BermudanModel train_one(const Context& ctx, const HedgeAssetPanel& pan, double alpha) {
    const auto t0 = std::chrono::steady_clock::now();
    auto res = train_bermudan(pan, train_config(ctx.config, alpha), [&](const std::string& m) { ctx.log("  " + m); });
    res.model.config_fingerprint = ctx.config_fp;
    for (const auto& r : res.reports)
        ctx.log("  C^" + std::to_string(r.index) + ": epochs " + std::to_string(r.epochs_run) + ", eval cvar bp initial " +
                std::to_string(r.eval_cvar_initial) + " baseline " + std::to_string(r.eval_cvar_baseline) + " best " +
                std::to_string(r.eval_cvar_best) + " (epoch " + std::to_string(r.best_epoch) + ")");
    ctx.log(std::string(to_string(pan.strategy.tag)) + " alpha " + Layout::alpha_tag(alpha) + " trained in " +
            std::to_string(seconds_since(t0)) + " s");
    return std::move(res.model);
}

inline void train(const Context& ctx, const Selection& sel) {
    const auto sc = load_checked_scenarios(ctx, ScenarioKind::Train);
    const auto surfaces = surfaces_for(ctx, sc, ScenarioKind::Train);
    for (auto tag : sel.strategies) {
        const auto pan = build_panel(sc, surfaces, ctx.config.strategy(tag));
        for (double a : sel.alphas) {
            const auto m = train_one(ctx, pan, a);
            io::write_file_atomic(ctx.layout.model(tag, a), encode_model(m));
        }
    }
}

inline BermudanModel load_model(const Context& ctx, StrategyTag tag, double alpha) {
    const auto path = ctx.layout.model(tag, alpha);
    if (!fs::exists(path)) throw MissingArtifact("model " + path.string() + " not found; run train");
    auto m = decode_model(io::read_file(path));
    if (m.config_fingerprint != ctx.config_fp)
        throw FingerprintMismatch(path.string() + " was trained under config " + to_hex(m.config_fingerprint) +
                                  ", current config is " + to_hex(ctx.config_fp));
    return m;
}

// ---------------------------------------------------------------- evaluate

inline nlohmann::ordered_json report_json(const Context& ctx, const MetricsReport& r, ScenarioKind k) {
    auto j = to_json(r);
    j["scenarios"] = kind_name(k);
    j["scenario_seed"] = seed_of(ctx.config, k);
    j["train_seed"] = ctx.config.train.seed;
    j["config_fingerprint"] = to_hex(ctx.config_fp);
    return j;
}

inline std::vector<MetricsReport> evaluate(const Context& ctx, const Selection& sel, ScenarioKind k) {
    const auto sc = load_checked_scenarios(ctx, k);
    const auto surfaces = surfaces_for(ctx, sc, k);
    std::vector<MetricsReport> out;
    for (auto tag : sel.strategies) {
        std::vector<BermudanModel> models;
        for (double a : sel.alphas) models.push_back(load_model(ctx, tag, a));
        const auto pan = build_panel(sc, surfaces, ctx.config.strategy(tag));
        for (const auto& m : models) {
            m.check_compatible(pan);
            auto r = evaluate_model(m, pan, m.alpha);
            io::write_file_atomic(ctx.layout.report(k, tag, m.alpha), report_json(ctx, r, k).dump(2) + "\n");
            ctx.log(std::string(kind_name(k)) + " " + to_csv_row(r));
            out.push_back(std::move(r));
        }
    }
    return out;
}

// ---------------------------------------------------------------- report

inline const char* kTable1Header =
    "strategy,alpha,model_value,nonarb_value,hedge_pnl_mean,model_switch_value,nonarb_switch_value";
inline const char* kTable2Header = "strategy,alpha,p25,p50,p75,iqr,loss_prob,expected_loss,cvar95,cvar99";

inline std::string table1_row(const MetricsReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.1f,%.1f,%.1f,%.1f,%.1f,%.1f", r.strategy.c_str(), r.alpha, r.model_value,
                  r.nonarb_value, r.hedge_pnl_mean, r.model_switch_value, r.nonarb_switch_value);
    return buf;
}

inline std::string table2_row(const MetricsReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.1f,%.1f,%.1f,%.1f,%.1f,%.3f,%.1f,%.1f,%.1f", r.strategy.c_str(), r.alpha, r.p25,
                  r.p50, r.p75, r.iqr, r.loss_prob, r.expected_loss, r.cvar95, r.cvar99);
    return buf;
}

// Aggregates the per-configuration reports into the Table 1/2-shaped CSVs
// plus one CSV with every column. Returns the number of rows per set.
inline std::map<std::string, int> report(const Context& ctx) {
    std::map<std::string, int> rows;
    for (auto k : {ScenarioKind::Test, ScenarioKind::Reference}) {
        std::string t1 = std::string("# config ") + to_hex(ctx.config_fp) + " seed " +
                         std::to_string(seed_of(ctx.config, k)) + "\n" + kTable1Header + "\n";
        std::string t2 = t1.substr(0, t1.find('\n') + 1) + kTable2Header + "\n";
        std::string all = t1.substr(0, t1.find('\n') + 1) + kReportCsvHeader + "\n";
        int n = 0;
        for (auto tag : ctx.config.strategies)
            for (double a : ctx.config.alphas) {
                const auto path = ctx.layout.report(k, tag, a);
                if (!fs::exists(path)) continue;
                const auto bytes = io::read_file(path);
                const auto j = nlohmann::json::parse(std::string(bytes.begin(), bytes.end()));
                if (j.value("config_fingerprint", std::string()) != to_hex(ctx.config_fp))
                    throw FingerprintMismatch(path.string() + " belongs to a different config");
                const auto r = report_from_json(j);
                t1 += table1_row(r) + "\n";
                t2 += table2_row(r) + "\n";
                all += to_csv_row(r) + "\n";
                ++n;
            }
        if (n == 0) continue;
        const std::string suffix = k == ScenarioKind::Test ? "" : "_reference";
        io::write_file_atomic(ctx.layout.table("table1" + suffix + ".csv"), t1);
        io::write_file_atomic(ctx.layout.table("table2" + suffix + ".csv"), t2);
        io::write_file_atomic(ctx.layout.table("report" + suffix + ".csv"), all);
        rows[kind_name(k)] = n;
    }
    if (rows.empty()) throw MissingArtifact("no reports found under " + (ctx.layout.root / "reports").string());
    return rows;
}

}  // namespace dhb::pipeline
