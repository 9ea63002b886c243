#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dhb/error.hpp"
#include "dhb/fingerprint.hpp"

namespace dhb {

// Schedule of a coterminal Bermudan: exercise/reset dates T_0 = 0 < T_1 < ...
// < T_e with accruals delta_u = T_{u+1} - T_u, plus the uniform simulation /
// rebalancing grid of step dt running from 0 to the last exercise T_{e-1}.
//
// Rate indices follow the usual convention: swap rate u (u = 1..e-1) starts at
// T_u and pays on T_{u+1}..T_e.
class TimeGrid {
public:
    TimeGrid() = default;

    TimeGrid(std::vector<double> dates, double dt) : dates_(std::move(dates)), dt_(dt) {
        DHB_REQUIRE(dates_.size() >= 3, InvalidArgument, "TimeGrid needs T_0, T_1 and T_e at least");
        DHB_REQUIRE(dates_.front() == 0.0, InvalidArgument, "TimeGrid: T_0 must be 0");
        DHB_REQUIRE(std::isfinite(dt_) && dt_ > 0.0, InvalidArgument, "TimeGrid: dt must be positive");
        for (std::size_t u = 1; u < dates_.size(); ++u) {
            DHB_REQUIRE(dates_[u] > dates_[u - 1], InvalidArgument,
                        "TimeGrid: dates must be strictly increasing");
        }
        // Every exercise date up to T_{e-1} must sit on the simulation grid.
        for (std::size_t u = 1; u + 1 < dates_.size(); ++u) {
            double steps = dates_[u] / dt_;
            DHB_REQUIRE(std::abs(steps - std::round(steps)) < 1e-9, InvalidArgument,
                        "TimeGrid: dt does not divide exercise date " + std::to_string(dates_[u]));
        }
    }

    // Annual schedule with exercise dates T_i = first + (i - 1), i = 1..n_exercise,
    // final maturity T_e = first + n_exercise.
    static TimeGrid annual(double first_exercise, int n_exercise, double dt) {
        std::vector<double> d{0.0};
        for (int i = 0; i <= n_exercise; ++i) d.push_back(first_exercise + i);
        return TimeGrid(std::move(d), dt);
    }

    // e, the index of the common final maturity.
    [[nodiscard]] int terminal_index() const { return static_cast<int>(dates_.size()) - 1; }
    [[nodiscard]] int n_rates() const { return terminal_index() - 1; }
    [[nodiscard]] double date(int u) const { return dates_.at(static_cast<std::size_t>(u)); }
    [[nodiscard]] double accrual(int u) const { return date(u + 1) - date(u); }
    [[nodiscard]] const std::vector<double>& dates() const { return dates_; }
    [[nodiscard]] double dt() const { return dt_; }

    // Simulation horizon is the last exercise date.
    [[nodiscard]] double horizon() const { return date(terminal_index() - 1); }
    [[nodiscard]] int n_steps() const { return static_cast<int>(std::lround(horizon() / dt_)); }
    [[nodiscard]] double time(int k) const { return k * dt_; }
    // Grid index of exercise date T_u.
    [[nodiscard]] int step_of(int u) const { return static_cast<int>(std::lround(date(u) / dt_)); }

    // Rate u is still diffusing over the step starting at grid index k.
    [[nodiscard]] bool alive_on_step(int u, int k) const { return k < step_of(u); }

    void hash(Fingerprint& fp) const {
        fp.add(std::span<const double>(dates_)).add(dt_);
    }

private:
    std::vector<double> dates_;
    double dt_ = 1.0 / 32.0;
};

}  // namespace dhb
