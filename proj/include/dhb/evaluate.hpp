#pragma once

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dhb/hedge/model.hpp"

namespace dhb {

inline constexpr double kBasisPoints = 1e4;

// Monetary fields in bp of notional.
struct MetricsReport {
    std::string strategy;
    double alpha = 0.0;
    double model_value = 0.0;
    double nonarb_value = 0.0;
    double hedge_pnl_mean = 0.0;
    double model_switch_value = 0.0;
    double nonarb_switch_value = 0.0;
    double p25 = 0.0, p50 = 0.0, p75 = 0.0, iqr = 0.0;
    double loss_prob = 0.0;
    double expected_loss = 0.0;
    double cvar95 = 0.0, cvar99 = 0.0;
    int n_paths = 0;
};

// Linear interpolation between order statistics, position q (n - 1).
inline double percentile(std::vector<double> x, double q) {
    DHB_REQUIRE(!x.empty(), InvalidArgument, "percentile: empty sample");
    std::sort(x.begin(), x.end());
    const double pos = q * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline double mean(std::span<const double> x) {
    DHB_REQUIRE(!x.empty(), InvalidArgument, "mean: empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

struct ValueMetrics {
    double model_value, nonarb_value, hedge_pnl_mean, model_switch_value, nonarb_switch_value;
};

// Inputs in relative units, outputs in bp.
inline ValueMetrics value_metrics(const PnlSample& pnl, double max_o0, double alpha) {
    ValueMetrics v{};
    v.model_value = indifference_price(pnl.pl, alpha) * kBasisPoints;
    v.nonarb_value = mean(pnl.payoff_leg) * kBasisPoints;
    v.hedge_pnl_mean = mean(pnl.hedge_leg) * kBasisPoints;
    v.model_switch_value = v.model_value - max_o0 * kBasisPoints;
    v.nonarb_switch_value = v.nonarb_value - max_o0 * kBasisPoints;
    return v;
}

struct DrawdownMetrics {
    double p25, p50, p75, iqr, loss_prob, expected_loss, cvar95, cvar99;
};

// Distribution of PL - V (same units in and out). Drawdown D = V - PL.
inline DrawdownMetrics drawdown_metrics(double model_value, std::span<const double> pl) {
    DHB_REQUIRE(!pl.empty(), InvalidArgument, "drawdown_metrics: empty sample");
    std::vector<double> diff(pl.size());
    for (std::size_t p = 0; p < pl.size(); ++p) diff[p] = pl[p] - model_value;
    DrawdownMetrics m{};
    m.p25 = percentile(diff, 0.25);
    m.p50 = percentile(diff, 0.50);
    m.p75 = percentile(diff, 0.75);
    m.iqr = m.p75 - m.p25;
    double loss_sum = 0.0;
    std::size_t n_loss = 0;
    for (double d : diff)
        if (d < 0.0) {
            loss_sum += -d;
            ++n_loss;
        }
    m.loss_prob = static_cast<double>(n_loss) / static_cast<double>(diff.size());
    m.expected_loss = n_loss ? loss_sum / static_cast<double>(n_loss) : 0.0;
    m.cvar95 = nn::cvar(diff, 0.95);
    m.cvar99 = nn::cvar(diff, 0.99);
    return m;
}

// Trace, P&L and every Table-1/2 column for one model on one panel,
// valued at CVaR level alpha.
inline MetricsReport evaluate_model(const BermudanModel& m, const HedgeAssetPanel& pan, double alpha,
                                    const TraceOptions& opt = {}) {
    const auto tr = compute_trace(m, pan, 1, opt);
    const auto pnl = hedged_pnl(tr, pan);
    MetricsReport r;
    r.strategy = std::string(to_string(m.strategy.tag));
    r.alpha = alpha;
    r.n_paths = pan.n_paths;
    const auto v = value_metrics(pnl, pan.max_o0(), alpha);
    r.model_value = v.model_value;
    r.nonarb_value = v.nonarb_value;
    r.hedge_pnl_mean = v.hedge_pnl_mean;
    r.model_switch_value = v.model_switch_value;
    r.nonarb_switch_value = v.nonarb_switch_value;
    std::vector<double> pl_bp(pnl.pl.size());
    for (std::size_t p = 0; p < pl_bp.size(); ++p) pl_bp[p] = pnl.pl[p] * kBasisPoints;
    const auto d = drawdown_metrics(r.model_value, pl_bp);
    r.p25 = d.p25;
    r.p50 = d.p50;
    r.p75 = d.p75;
    r.iqr = d.iqr;
    r.loss_prob = d.loss_prob;
    r.expected_loss = d.expected_loss;
    r.cvar95 = d.cvar95;
    r.cvar99 = d.cvar99;
    return r;
}

// Evaluation of already trained models on the reference panels, no retraining.
inline std::vector<MetricsReport> cross_validate(std::span<const BermudanModel> models,
                                                 std::span<const HedgeAssetPanel> reference_panels) {
    DHB_REQUIRE(models.size() == reference_panels.size(), InvalidArgument,
                "cross_validate: one reference panel per model expected");
    std::vector<MetricsReport> out;
    for (std::size_t k = 0; k < models.size(); ++k)
        out.push_back(evaluate_model(models[k], reference_panels[k], models[k].alpha));
    return out;
}

inline const char* kReportCsvHeader =
    "strategy,alpha,model_value,nonarb_value,hedge_pnl_mean,model_switch_value,nonarb_switch_value,"
    "p25,p50,p75,iqr,loss_prob,expected_loss,cvar95,cvar99";

inline std::string to_csv_row(const MetricsReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%.2f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.6f,%.4f,%.4f,%.4f",
                  r.strategy.c_str(), r.alpha, r.model_value, r.nonarb_value, r.hedge_pnl_mean, r.model_switch_value,
                  r.nonarb_switch_value, r.p25, r.p50, r.p75, r.iqr, r.loss_prob, r.expected_loss, r.cvar95, r.cvar99);
    return buf;
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["strategy"] = r.strategy;
    j["alpha"] = r.alpha;
    j["model_value"] = r.model_value;
    j["nonarb_value"] = r.nonarb_value;
    j["hedge_pnl_mean"] = r.hedge_pnl_mean;
    j["model_switch_value"] = r.model_switch_value;
    j["nonarb_switch_value"] = r.nonarb_switch_value;
    j["p25"] = r.p25;
    j["p50"] = r.p50;
    j["p75"] = r.p75;
    j["iqr"] = r.iqr;
    j["loss_prob"] = r.loss_prob;
    j["expected_loss"] = r.expected_loss;
    j["cvar95"] = r.cvar95;
    j["cvar99"] = r.cvar99;
    j["n_paths"] = r.n_paths;
    return j;
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.strategy = j.at("strategy").get<std::string>();
    r.alpha = j.at("alpha").get<double>();
    r.model_value = j.at("model_value").get<double>();
    r.nonarb_value = j.at("nonarb_value").get<double>();
    r.hedge_pnl_mean = j.at("hedge_pnl_mean").get<double>();
    r.model_switch_value = j.at("model_switch_value").get<double>();
    r.nonarb_switch_value = j.at("nonarb_switch_value").get<double>();
    r.p25 = j.at("p25").get<double>();
    r.p50 = j.at("p50").get<double>();
    r.p75 = j.at("p75").get<double>();
    r.iqr = j.at("iqr").get<double>();
    r.loss_prob = j.at("loss_prob").get<double>();
    r.expected_loss = j.at("expected_loss").get<double>();
    r.cvar95 = j.at("cvar95").get<double>();
    r.cvar99 = j.at("cvar99").get<double>();
    r.n_paths = j.value("n_paths", 0);
    return r;
}

}  // namespace dhb
