#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "dhb/error.hpp"

namespace dhb {

enum class StrategyTag { I, Max, OS, IplusS, IplusSM };

inline constexpr std::array<StrategyTag, 5> kAllStrategies{StrategyTag::I, StrategyTag::Max, StrategyTag::OS,
                                                           StrategyTag::IplusS, StrategyTag::IplusSM};

inline std::string_view to_string(StrategyTag t) {
    switch (t) {
        case StrategyTag::I: return "S_I";
        case StrategyTag::Max: return "S_Max";
        case StrategyTag::OS: return "S_OS";
        case StrategyTag::IplusS: return "S_IplusS";
        case StrategyTag::IplusSM: return "S_IplusS_M";
    }
    return "?";
}

inline StrategyTag parse_strategy(std::string_view s) {
    for (auto t : kAllStrategies)
        if (to_string(t) == s) return t;
    throw InvalidArgument("unknown strategy '" + std::string(s) + "' (expected S_I, S_Max, S_OS, S_IplusS, S_IplusS_M)");
}

struct Strategy {
    StrategyTag tag = StrategyTag::I;
    double trade_strike = 0.02;
    std::vector<double> hedge_strikes;  // swaption strikes used as hedge assets

    static Strategy make(StrategyTag tag, double trade_strike, std::vector<double> multi_strikes = {0.01, 0.015, 0.02}) {
        Strategy s;
        s.tag = tag;
        s.trade_strike = trade_strike;
        if (tag == StrategyTag::IplusSM) s.hedge_strikes = std::move(multi_strikes);
        else if (tag != StrategyTag::I) s.hedge_strikes = {trade_strike};
        s.validate();
        return s;
    }

    void validate() const {
        if (tag == StrategyTag::I) {
            DHB_REQUIRE(hedge_strikes.empty(), InvalidArgument, "S_I uses no swaptions");
            return;
        }
        DHB_REQUIRE(!hedge_strikes.empty(), InvalidArgument, "strategy needs at least one swaption strike");
        DHB_REQUIRE(std::is_sorted(hedge_strikes.begin(), hedge_strikes.end()) &&
                        std::adjacent_find(hedge_strikes.begin(), hedge_strikes.end()) == hedge_strikes.end(),
                    InvalidArgument, "swaption strikes must be sorted and distinct");
        DHB_REQUIRE(std::find(hedge_strikes.begin(), hedge_strikes.end(), trade_strike) != hedge_strikes.end(),
                    InvalidArgument, "swaption strikes must include the trade strike");
    }

    [[nodiscard]] bool uses_swaptions() const { return tag != StrategyTag::I; }
    [[nodiscard]] bool trainable() const { return tag != StrategyTag::Max; }
};

}  // namespace dhb
