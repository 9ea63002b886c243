#pragma once

#include "dhb/hedge/panel.hpp"
#include "dhb/nn/mlp.hpp"

// Network inputs and hedge-asset increments for component i (rates i..R
// alive, m = R - i + 1 of them).

namespace dhb {

inline int alive_count(const HedgeAssetPanel& pan, int i) { return pan.n_rates() - i + 1; }

// (t, U^{i..R}, O^{i..R,K}); swaptions omitted for S_I.
inline int hedge_feature_dim(const HedgeAssetPanel& pan, int i) {
    const int m = alive_count(pan, i);
    return 1 + m + (pan.strategy.uses_swaptions() ? m : 0);
}

inline void hedge_features(const HedgeAssetPanel& pan, int i, int p, int k, double* out) {
    const int R = pan.n_rates(), jk = pan.trade_strike_index();
    const double* row = pan.row(p, k);
    *out++ = pan.grid.time(k);
    for (int u = i; u <= R; ++u) *out++ = row[pan.swap_col(u)];
    if (pan.strategy.uses_swaptions())
        for (int u = i; u <= R; ++u) *out++ = row[pan.swaption_col(u, jk)];
}

// Swaps and swaptions at T_i.
inline int exercise_feature_dim(const HedgeAssetPanel& pan, int i) {
    const int m = alive_count(pan, i);
    return m + (pan.strategy.uses_swaptions() ? m : 0);
}

inline void exercise_features(const HedgeAssetPanel& pan, int i, int p, double* out) {
    const int R = pan.n_rates(), jk = pan.trade_strike_index();
    const double* row = pan.row(p, pan.grid.step_of(i));
    for (int u = i; u <= R; ++u) *out++ = row[pan.swap_col(u)];
    if (pan.strategy.uses_swaptions())
        for (int u = i; u <= R; ++u) *out++ = row[pan.swaption_col(u, jk)];
}

// Width of N^{CH,i}: one spread weight for S_OS, otherwise one amount per
// alive swap and per alive swaption strike.
inline int hedge_output_dim(const HedgeAssetPanel& pan, int i) {
    switch (pan.strategy.tag) {
        case StrategyTag::Max: return 0;
        case StrategyTag::OS: return 1;
        default: return alive_count(pan, i) * (1 + pan.n_strikes());
    }
}

// Panel column traded by output j of N^{CH,i} (not for S_OS / S_Max).
inline int output_column(const HedgeAssetPanel& pan, int i, int j) {
    const int m = alive_count(pan, i);
    if (j < m) return pan.swap_col(i + j);
    const int r = j - m;
    return pan.swaption_col(i + r % m, r / m);
}

inline double increment(const HedgeAssetPanel& pan, int p, int k, int col) {
    return pan.data[pan.at(p, k + 1, col)] - pan.data[pan.at(p, k, col)];
}

// Features of every (path, step < T_i) pair, path-major columns.
inline nn::Matrix hedge_feature_matrix(const HedgeAssetPanel& pan, int i, std::span<const int> paths) {
    const int d = hedge_feature_dim(pan, i), nk = pan.grid.step_of(i);
    nn::Matrix x(d, static_cast<Eigen::Index>(paths.size()) * nk);
    for (std::size_t a = 0; a < paths.size(); ++a)
        for (int k = 0; k < nk; ++k)
            hedge_features(pan, i, paths[a], k, x.col(static_cast<Eigen::Index>(a) * nk + k).data());
    return x;
}

inline nn::Matrix exercise_feature_matrix(const HedgeAssetPanel& pan, int i, std::span<const int> paths) {
    nn::Matrix x(exercise_feature_dim(pan, i), static_cast<Eigen::Index>(paths.size()));
    for (std::size_t a = 0; a < paths.size(); ++a)
        exercise_features(pan, i, paths[a], x.col(static_cast<Eigen::Index>(a)).data());
    return x;
}

}  // namespace dhb
