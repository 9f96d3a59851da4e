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

#ifndef MACGAME_WATERFILL_HPP
#define MACGAME_WATERFILL_HPP

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace macgame {

struct Waterfill {
    double level = 0.0;
    std::vector<double> powers;
};

// Level λ with sum_s w_s (λ - f_s)^+ = budget. Infinite floors never receive
// power. Returns +inf when the budget is positive but every floor is infinite,
// and 0 for a zero budget.
inline double waterfill_level(std::span<const double> weights, std::span<const double> floors, double budget)
{
    require(weights.size() == floors.size(), "water-filling weights and floors differ in length");
    require(budget >= 0.0, "water-filling budget must be nonnegative");
    if (budget == 0.0)
        return 0.0;
    std::vector<std::size_t> order;
    order.reserve(floors.size());
    for (std::size_t s = 0; s < floors.size(); ++s)
        if (std::isfinite(floors[s]) && weights[s] > 0.0)
            order.push_back(s);
    if (order.empty())
        return std::numeric_limits<double>::infinity();
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return floors[a] < floors[b]; });

    double wsum = 0.0;
    double wfloor = 0.0;
    double level = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        wsum += weights[order[k]];
        wfloor += weights[order[k]] * floors[order[k]];
        level = (budget + wfloor) / wsum;
        if (k + 1 == order.size() || level <= floors[order[k + 1]])
            break;
    }
    return level;
}

inline std::vector<double> waterfill_powers(std::span<const double> floors, double level)
{
    std::vector<double> powers(floors.size(), 0.0);
    for (std::size_t s = 0; s < floors.size(); ++s)
        if (std::isfinite(floors[s]))
            powers[s] = std::max(level - floors[s], 0.0);
    return powers;
}

// Exact solve of sum_s w_s (λ - f_s)^+ = budget by sorting the floors.
inline Waterfill waterfill(std::span<const double> weights, std::span<const double> floors, double budget)
{
    const double level = waterfill_level(weights, floors, budget);
    require(std::isfinite(level), "budget cannot be spent: the gain is zero on every state");
    return {level, waterfill_powers(floors, level)};
}

// Projection of one column of a state-major table (x[s * stride + column]) onto
// {x >= 0, sum_s w_s x_s = budget} in the metric <a, b> = sum_s w_s a_s b_s.
inline void project_budget_column(std::span<const double> weights, double budget, std::span<double> x,
                                  std::size_t stride, std::size_t column)
{
    const std::size_t n = weights.size();
    if (budget <= 0.0) {
        for (std::size_t s = 0; s < n; ++s)
            x[s * stride + column] = 0.0;
        return;
    }
    std::vector<double> floors(n);
    for (std::size_t s = 0; s < n; ++s)
        floors[s] = -x[s * stride + column];
    const double level = waterfill_level(weights, floors, budget);
    for (std::size_t s = 0; s < n; ++s)
        x[s * stride + column] = std::max(level - floors[s], 0.0);
}

} // namespace macgame

#endif
