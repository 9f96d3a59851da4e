// SPDX-License-Identifier: Apache-2.0
//
// macgame: equilibria of power/rate allocation games on fading multiple-access channels
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MACGAME_POLICY_HPP
#define MACGAME_POLICY_HPP

#include "channel.hpp"
#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace macgame {

// 0.5 * log2(1 + x), the per-channel-use rate of a real Gaussian link at SNR x.
inline double half_log2_1p(double x) noexcept
{
    return 0.5 * std::log1p(x) / std::numbers::ln2;
}

// Per-state, per-user transmit strategy.
//
// `power(s, i)` is the power user i uses while it is active in state s and
// `share(s, i)` the fraction of that state's occurrences in which it is active.
// Shares are 1 everywhere except in time-shared states, where the active users
// take mutually exclusive slots (shares summing to at most 1) and therefore see
// no interference from each other. Average power is E[share * power].
class PowerPolicy {
public:
    PowerPolicy() = default;
    PowerPolicy(std::size_t states, std::size_t users)
        : states_(states), users_(users), power_(states * users, 0.0), share_(states * users, 1.0) {}

    std::size_t num_states() const noexcept { return states_; }
    std::size_t num_users() const noexcept { return users_; }

    double power(std::size_t s, std::size_t i) const { return power_[s * users_ + i]; }
    double& power(std::size_t s, std::size_t i) { return power_[s * users_ + i]; }
    double share(std::size_t s, std::size_t i) const { return share_[s * users_ + i]; }
    double& share(std::size_t s, std::size_t i) { return share_[s * users_ + i]; }

    bool time_shared(std::size_t s) const
    {
        for (std::size_t i = 0; i < users_; ++i)
            if (share(s, i) < 1.0)
                return true;
        return false;
    }

    // Column of in-slot powers for one user.
    std::vector<double> user_powers(std::size_t i) const
    {
        std::vector<double> col(states_);
        for (std::size_t s = 0; s < states_; ++s)
            col[s] = power(s, i);
        return col;
    }

    void set_user_powers(std::size_t i, const std::vector<double>& col)
    {
        require(col.size() == states_, "power column has the wrong length");
        for (std::size_t s = 0; s < states_; ++s)
            power(s, i) = col[s];
    }

    friend bool operator==(const PowerPolicy&, const PowerPolicy&) = default;

private:
    std::size_t states_ = 0;
    std::size_t users_ = 0;
    std::vector<double> power_;
    std::vector<double> share_;
};

template <class State>
double average_power(const BasicGrid<State>& grid, const PowerPolicy& policy, std::size_t user)
{
    return expectation_indexed(grid, [&](std::size_t s) { return policy.share(s, user) * policy.power(s, user); });
}

template <class State>
void check_policy_shape(const BasicGrid<State>& grid, const PowerPolicy& policy)
{
    require(policy.num_states() == grid.size() && policy.num_users() == grid.num_users(),
            "policy shape does not match the grid");
}

// Feasible: nonnegative and within every budget up to a relative tolerance.
template <class State>
bool is_feasible(const BasicGrid<State>& grid, const SystemParams& params, const PowerPolicy& policy, double rel_tol = 1e-9)
{
    check_policy_shape(grid, policy);
    for (std::size_t s = 0; s < policy.num_states(); ++s)
        for (std::size_t i = 0; i < policy.num_users(); ++i)
            if (!(policy.power(s, i) >= 0.0) || !std::isfinite(policy.power(s, i)))
                return false;
    for (std::size_t i = 0; i < policy.num_users(); ++i) {
        const double budget = params.power_budgets[i];
        if (average_power(grid, policy, i) > budget + rel_tol * std::max(budget, 1.0))
            return false;
    }
    return true;
}

struct WaterLevels {
    std::vector<double> lambda;

    double operator[](std::size_t i) const { return lambda[i]; }
    std::size_t size() const noexcept { return lambda.size(); }
};

// Ergodic rates in bits per channel use.
struct RateVector {
    std::vector<double> rates;

    double operator[](std::size_t i) const { return rates[i]; }
    std::size_t size() const noexcept { return rates.size(); }
    double sum() const { return std::accumulate(rates.begin(), rates.end(), 0.0); }

    double weighted(const std::vector<double>& mu) const
    {
        require(mu.size() == rates.size(), "weight vector length does not match the rate vector");
        double acc = 0.0;
        for (std::size_t i = 0; i < rates.size(); ++i)
            acc += mu[i] * rates[i];
        return acc;
    }
};

struct EquilibriumReport {
    WaterLevels levels;
    PowerPolicy policy;
    RateVector rates;
    std::vector<double> budget_residuals; // |E[P_i] - Pbar_i| per user
    double residual = 0.0;                // max_i residual_i / max(Pbar_i, 1e-300)
    std::size_t iterations = 0;
    bool converged = false;
    double tie_mass = 0.0;                // probability mass of time-shared states
    std::vector<std::vector<double>> level_history; // water levels after each sweep
    std::string convention;               // e.g. "time-sharing", "lambda=0 monotone iteration"
};

template <class State>
void fill_budget_residuals(const BasicGrid<State>& grid, const SystemParams& params, EquilibriumReport& report)
{
    report.budget_residuals.assign(grid.num_users(), 0.0);
    report.residual = 0.0;
    for (std::size_t i = 0; i < grid.num_users(); ++i) {
        const double budget = params.power_budgets[i];
        const double r = std::fabs(average_power(grid, report.policy, i) - budget);
        report.budget_residuals[i] = r;
        report.residual = std::max(report.residual, budget > 0.0 ? r / budget : r);
    }
}

template <class State>
double time_shared_mass(const BasicGrid<State>& grid, const PowerPolicy& policy)
{
    return expectation_indexed(grid, [&](std::size_t s) { return policy.time_shared(s) ? 1.0 : 0.0; });
}

// Mass of states where two or more users transmit in the same slot
// (power above `tol` and not separated by time sharing).
template <class State>
double simultaneous_mass(const BasicGrid<State>& grid, const PowerPolicy& policy, double tol = 1e-12)
{
    return expectation_indexed(grid, [&](std::size_t s) {
        if (policy.time_shared(s))
            return 0.0;
        std::size_t active = 0;
        for (std::size_t i = 0; i < policy.num_users(); ++i)
            active += policy.power(s, i) > tol ? 1 : 0;
        return active >= 2 ? 1.0 : 0.0;
    });
}

} // namespace macgame

#endif
