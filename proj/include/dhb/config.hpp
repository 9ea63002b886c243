#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dhb/binary_io.hpp"
#include "dhb/fingerprint.hpp"
#include "dhb/hedge/strategy.hpp"
#include "dhb/nn/train_config.hpp"
#include "dhb/smbm.hpp"
#include "dhb/swaption.hpp"

namespace dhb {

struct CorrelationBlock {
    double start = 0.0, end = 0.0;
    std::vector<int> rates;
    std::vector<std::vector<double>> matrix;  // (W rates..., Z rates...) order
};

struct RunConfig {
    // trade
    double strike = 0.02;
    double first_exercise = 4.0;
    int n_exercise = 5;
    // model
    std::vector<double> s0{0.02, 0.02, 0.02, 0.02, 0.02};
    std::vector<double> x0{0.0, 0.0, 0.0, 0.0, 0.0};
    std::vector<double> xi0{1.132e-4, 1.228e-4, 1.287e-4, 1.344e-4, 1.451e-4};
    std::vector<double> omega{0.8403, 0.8403, 0.8403, 0.8403, 0.8403};
    std::vector<double> kappa{0.0, 0.0, 0.0, 0.0, 0.0};
    std::vector<CorrelationBlock> correlation;
    // simulation
    double dt = 1.0 / 32.0;
    int n_train = 4096;
    int n_test = 4096;
    int n_reference = 4096;
    std::uint64_t seed_train = 1001;
    std::uint64_t seed_test = 2002;
    std::uint64_t seed_reference = 3003;
    std::uint64_t seed_surface = 4004;
    // surfaces
    SurfaceGridOptions surface;
    std::vector<double> multi_strikes{0.01, 0.015, 0.02};
    // study
    std::vector<StrategyTag> strategies{kAllStrategies.begin(), kAllStrategies.end()};
    std::vector<double> alphas{0.2, 0.4, 0.6, 0.8};
    nn::TrainConfig train;
    std::string output_dir = "out";

    [[nodiscard]] TimeGrid grid() const { return TimeGrid::annual(first_exercise, n_exercise, dt); }

    [[nodiscard]] SmbmParams params() const {
        SmbmParams p;
        p.grid = grid();
        p.s0 = s0;
        p.x0 = x0;
        p.xi0 = xi0;
        p.omega = omega;
        p.kappa = kappa;
        std::vector<CorrelationPeriod> periods;
        for (const auto& b : correlation) {
            CorrelationPeriod per;
            per.start = b.start;
            per.end = b.end;
            per.rates = b.rates;
            const auto n = static_cast<Eigen::Index>(b.matrix.size());
            per.corr.resize(n, n);
            for (Eigen::Index r = 0; r < n; ++r) {
                DHB_REQUIRE(b.matrix[static_cast<std::size_t>(r)].size() == static_cast<std::size_t>(n), InvalidArgument,
                            "config: correlation block starting at t=" + std::to_string(b.start) + " is not square");
                for (Eigen::Index c = 0; c < n; ++c)
                    per.corr(r, c) = b.matrix[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            }
            periods.push_back(std::move(per));
        }
        p.schedule = CorrelationSchedule(std::move(periods));
        p.validate();
        return p;
    }

    [[nodiscard]] Strategy strategy(StrategyTag t) const { return Strategy::make(t, strike, multi_strikes); }

    void validate() const {
        DHB_REQUIRE(n_exercise >= 1 && first_exercise > 0.0, InvalidArgument, "config.trade: invalid schedule");
        DHB_REQUIRE(n_train >= 8 && n_test >= 1 && n_reference >= 1, InvalidArgument, "config.simulation: path counts too small");
        DHB_REQUIRE(!alphas.empty() && !strategies.empty(), InvalidArgument, "config.study: empty strategy or alpha list");
        for (double a : alphas) DHB_REQUIRE(a > 0.0 && a < 1.0, InvalidArgument, "config.study.alphas: must lie in (0, 1)");
        DHB_REQUIRE(surface.m_nodes >= 2 && surface.x_nodes >= 2 && surface.t_per_year >= 0, InvalidArgument,
                    "config.surfaces: need at least two m- and x-nodes");
        DHB_REQUIRE(surface.m_width_sd > 0.0 && surface.x_width_sd > 0.0 && surface.n_inner >= 2 &&
                        surface.dt_inner > 0.0,
                    InvalidArgument, "config.surfaces: widths, n_inner and dt_inner must be positive");
        auto t = train;
        t.alpha = alphas.front();
        t.validate();
        (void)params();
        for (auto s : strategies) (void)strategy(s);
    }
};

// Paper setup: K = 2%, T_i = i + 3, flat S_0 = 2%, X_0 = 0, kappa = 0,
// omega = 0.8403 and the period-wise local correlation matrices.
inline RunConfig default_config() {
    RunConfig c;
    c.correlation = {
        {0.0, 4.0, {1, 2, 3, 4, 5},
         {{1.000, 0.992, 0.964, 0.923, 0.878, -0.114, -0.074, -0.014, 0.005, 0.017},
          {0.992, 1.000, 0.986, 0.952, 0.910, -0.101, -0.062, -0.001, 0.021, 0.035},
          {0.964, 0.986, 1.000, 0.986, 0.957, -0.083, -0.049, 0.012, 0.038, 0.053},
          {0.923, 0.952, 0.986, 1.000, 0.991, -0.073, -0.040, 0.020, 0.049, 0.067},
          {0.878, 0.910, 0.957, 0.991, 1.000, -0.068, -0.035, 0.023, 0.056, 0.077},
          {-0.114, -0.101, -0.083, -0.073, -0.068, 1.000, 0.987, 0.954, 0.912, 0.862},
          {-0.074, -0.062, -0.049, -0.040, -0.035, 0.987, 1.000, 0.986, 0.951, 0.907},
          {-0.014, -0.001, 0.012, 0.020, 0.023, 0.954, 0.986, 1.000, 0.983, 0.949},
          {0.005, 0.021, 0.038, 0.049, 0.056, 0.912, 0.951, 0.983, 1.000, 0.988},
          {0.017, 0.035, 0.053, 0.067, 0.077, 0.862, 0.907, 0.949, 0.988, 1.000}}},
        {4.0, 5.0, {2, 3, 4, 5},
         {{1.000, 0.990, 0.956, 0.910, -0.147, -0.105, -0.033, -0.017},
          {0.990, 1.000, 0.983, 0.943, -0.134, -0.094, -0.021, -0.002},
          {0.956, 0.983, 1.000, 0.982, -0.115, -0.080, -0.007, 0.016},
          {0.910, 0.943, 0.982, 1.000, -0.106, -0.073, -0.002, 0.026},
          {-0.147, -0.134, -0.115, -0.106, 1.000, 0.982, 0.938, 0.891},
          {-0.105, -0.094, -0.080, -0.073, 0.982, 1.000, 0.981, 0.939},
          {-0.033, -0.021, -0.007, -0.002, 0.938, 0.981, 1.000, 0.977},
          {-0.017, -0.002, 0.016, 0.026, 0.891, 0.939, 0.977, 1.000}}},
        {5.0, 6.0, {3, 4, 5},
         {{1.000, 0.985, 0.939, -0.187, -0.144, -0.050},
          {0.985, 1.000, 0.975, -0.174, -0.134, -0.038},
          {0.939, 0.975, 1.000, -0.150, -0.121, -0.027},
          {-0.187, -0.174, -0.150, 1.000, 0.973, 0.902},
          {-0.144, -0.134, -0.121, 0.973, 1.000, 0.966},
          {-0.050, -0.038, -0.027, 0.902, 0.966, 1.000}}},
        {6.0, 7.0, {4, 5},
         {{1.000, 0.974, -0.250, -0.221},
          {0.974, 1.000, -0.240, -0.215},
          {-0.250, -0.240, 1.000, 0.956},
          {-0.221, -0.215, 0.956, 1.000}}},
        {7.0, 8.0, {5}, {{1.000, -0.259}, {-0.259, 1.000}}},
    };
    return c;
}

namespace config_detail {

using nlohmann::ordered_json;

template <typename T>
T field(const nlohmann::json& j, const char* section, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& ex) {
        throw InvalidArgument(std::string("config.") + section + "." + key + ": " + ex.what());
    }
}

template <typename T>
void maybe(const nlohmann::json& j, const char* section, const char* key, T& out) {
    if (j.contains(key)) out = field<T>(j, section, key);
}

inline const nlohmann::json& section(const nlohmann::json& j, const char* name) {
    static const nlohmann::json empty = nlohmann::json::object();
    if (!j.contains(name)) return empty;
    const auto& s = j.at(name);
    if (!s.is_object()) throw InvalidArgument(std::string("config.") + name + ": expected an object");
    return s;
}

}  // namespace config_detail

inline nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["trade"] = {{"strike", c.strike}, {"first_exercise", c.first_exercise}, {"n_exercise", c.n_exercise}};
    nlohmann::ordered_json corr = nlohmann::ordered_json::array();
    for (const auto& b : c.correlation)
        corr.push_back({{"start", b.start}, {"end", b.end}, {"rates", b.rates}, {"matrix", b.matrix}});
    j["model"] = {{"s0", c.s0}, {"x0", c.x0}, {"xi0", c.xi0}, {"omega", c.omega}, {"kappa", c.kappa}, {"correlation", corr}};
    j["simulation"] = {{"dt", c.dt},
                       {"n_train", c.n_train},
                       {"n_test", c.n_test},
                       {"n_reference", c.n_reference},
                       {"seed_train", c.seed_train},
                       {"seed_test", c.seed_test},
                       {"seed_reference", c.seed_reference},
                       {"seed_surface", c.seed_surface}};
    j["surfaces"] = {{"m_nodes", c.surface.m_nodes},
                     {"m_width_sd", c.surface.m_width_sd},
                     {"x_nodes", c.surface.x_nodes},
                     {"x_width_sd", c.surface.x_width_sd},
                     {"t_per_year", c.surface.t_per_year},
                     {"near_maturity", c.surface.near_maturity},
                     {"n_inner", c.surface.n_inner},
                     {"dt_inner", c.surface.dt_inner},
                     {"multi_strikes", c.multi_strikes}};
    std::vector<std::string> strat;
    for (auto s : c.strategies) strat.emplace_back(to_string(s));
    const auto& t = c.train;
    j["study"] = {{"strategies", strat}, {"alphas", c.alphas}};
    j["train"] = {{"lr", t.adam.lr},
                  {"beta1", t.adam.beta1},
                  {"beta2", t.adam.beta2},
                  {"eps", t.adam.eps},
                  {"batch_paths", t.batch_paths},
                  {"epochs", t.epochs},
                  {"patience", t.patience},
                  {"eval_fraction", t.eval_fraction},
                  {"seed", t.seed},
                  {"hidden_layers", t.hidden_layers},
                  {"width", t.width},
                  {"dropout", t.dropout}};
    j["output_dir"] = c.output_dir;
    return j;
}

// Missing keys keep their defaults; present keys are type-checked with the
// offending field named in the error.
inline RunConfig config_from_json(const nlohmann::json& j) {
    using namespace config_detail;
    if (!j.is_object()) throw InvalidArgument("config: top level must be an object");
    RunConfig c = default_config();
    const auto& tr = section(j, "trade");
    maybe(tr, "trade", "strike", c.strike);
    maybe(tr, "trade", "first_exercise", c.first_exercise);
    maybe(tr, "trade", "n_exercise", c.n_exercise);
    const auto& md = section(j, "model");
    maybe(md, "model", "s0", c.s0);
    maybe(md, "model", "x0", c.x0);
    maybe(md, "model", "xi0", c.xi0);
    maybe(md, "model", "omega", c.omega);
    maybe(md, "model", "kappa", c.kappa);
    if (md.contains("correlation")) {
        c.correlation.clear();
        const auto& arr = md.at("correlation");
        if (!arr.is_array()) throw InvalidArgument("config.model.correlation: expected an array of blocks");
        for (const auto& b : arr) {
            CorrelationBlock blk;
            blk.start = field<double>(b, "model.correlation[]", "start");
            blk.end = field<double>(b, "model.correlation[]", "end");
            blk.rates = field<std::vector<int>>(b, "model.correlation[]", "rates");
            blk.matrix = field<std::vector<std::vector<double>>>(b, "model.correlation[]", "matrix");
            c.correlation.push_back(std::move(blk));
        }
    }
    const auto& sm = section(j, "simulation");
    maybe(sm, "simulation", "dt", c.dt);
    maybe(sm, "simulation", "n_train", c.n_train);
    maybe(sm, "simulation", "n_test", c.n_test);
    maybe(sm, "simulation", "n_reference", c.n_reference);
    maybe(sm, "simulation", "seed_train", c.seed_train);
    maybe(sm, "simulation", "seed_test", c.seed_test);
    maybe(sm, "simulation", "seed_reference", c.seed_reference);
    maybe(sm, "simulation", "seed_surface", c.seed_surface);
    const auto& sf = section(j, "surfaces");
    maybe(sf, "surfaces", "m_nodes", c.surface.m_nodes);
    maybe(sf, "surfaces", "m_width_sd", c.surface.m_width_sd);
    maybe(sf, "surfaces", "x_nodes", c.surface.x_nodes);
    maybe(sf, "surfaces", "x_width_sd", c.surface.x_width_sd);
    maybe(sf, "surfaces", "t_per_year", c.surface.t_per_year);
    maybe(sf, "surfaces", "near_maturity", c.surface.near_maturity);
    maybe(sf, "surfaces", "n_inner", c.surface.n_inner);
    maybe(sf, "surfaces", "dt_inner", c.surface.dt_inner);
    maybe(sf, "surfaces", "multi_strikes", c.multi_strikes);
    const auto& st = section(j, "study");
    if (st.contains("strategies")) {
        c.strategies.clear();
        for (const auto& s : field<std::vector<std::string>>(st, "study", "strategies")) c.strategies.push_back(parse_strategy(s));
    }
    maybe(st, "study", "alphas", c.alphas);
    const auto& t = section(j, "train");
    maybe(t, "train", "lr", c.train.adam.lr);
    maybe(t, "train", "beta1", c.train.adam.beta1);
    maybe(t, "train", "beta2", c.train.adam.beta2);
    maybe(t, "train", "eps", c.train.adam.eps);
    maybe(t, "train", "batch_paths", c.train.batch_paths);
    maybe(t, "train", "epochs", c.train.epochs);
    maybe(t, "train", "patience", c.train.patience);
    maybe(t, "train", "eval_fraction", c.train.eval_fraction);
    maybe(t, "train", "seed", c.train.seed);
    maybe(t, "train", "hidden_layers", c.train.hidden_layers);
    maybe(t, "train", "width", c.train.width);
    maybe(t, "train", "dropout", c.train.dropout);
    if (j.contains("output_dir")) c.output_dir = field<std::string>(j, "config", "output_dir");
    c.validate();
    return c;
}

inline std::string dump_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

inline RunConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& ex) {
        throw InvalidArgument(std::string("config: parse error: ") + ex.what());
    }
    return config_from_json(j);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// Fingerprint of the canonical serialisation; output_dir is excluded so a
// run can be relocated.
inline std::uint64_t config_fingerprint(const RunConfig& c) {
    auto j = to_json(c);
    j.erase("output_dir");
    Fingerprint fp;
    fp.add(std::string_view(j.dump()));
    return fp.value();
}

}  // namespace dhb
