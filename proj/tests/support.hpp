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
//
// Grid builders and brute-force reference solvers shared by the test suites.
// The oracles here evaluate the defining equations directly and do not call
// any solver from the library.

#ifndef MACGAME_TESTS_SUPPORT_HPP
#define MACGAME_TESTS_SUPPORT_HPP

#include <macgame/channel.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <random>
#include <vector>

namespace testing_support {

using macgame::ChannelGrid;
using macgame::FadingState;

inline ChannelGrid grid_of(std::initializer_list<std::initializer_list<double>> rows)
{
    // each row: gains..., weight
    std::vector<FadingState> states;
    for (const auto& row : rows) {
        FadingState s;
        s.gains.assign(row.begin(), row.end() - 1);
        s.weight = *(row.end() - 1);
        states.push_back(s);
    }
    return ChannelGrid(states);
}

inline ChannelGrid random_grid(std::size_t states, std::size_t users, std::uint64_t seed, bool equal_weights = false)
{
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gain(1.0);
    std::uniform_real_distribution<double> mass(0.2, 1.0);
    std::vector<FadingState> out(states);
    double total = 0.0;
    for (auto& s : out) {
        s.gains.resize(users);
        for (auto& g : s.gains)
            g = 0.05 + gain(rng);
        s.weight = equal_weights ? 1.0 : mass(rng);
        total += s.weight;
    }
    for (auto& s : out)
        s.weight /= total;
    long double sum = 0.0L;
    for (std::size_t k = 0; k + 1 < out.size(); ++k)
        sum += out[k].weight;
    out.back().weight = static_cast<double>(1.0L - sum);
    return ChannelGrid(out);
}

// Σ_s w_s (λ - f_s)^+ = budget by plain bisection.
inline double bisection_level(const std::vector<double>& w, const std::vector<double>& floors, double budget)
{
    double lo = 0.0;
    double hi = budget;
    for (std::size_t s = 0; s < floors.size(); ++s)
        if (std::isfinite(floors[s]))
            hi = std::max(hi, budget / w[s] + floors[s]);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        double spent = 0.0;
        for (std::size_t s = 0; s < floors.size(); ++s)
            if (std::isfinite(floors[s]))
                spent += w[s] * std::max(mid - floors[s], 0.0);
        (spent > budget ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

// Average power of each user when, in every state, the users with the largest
// λ_i h_i split the state evenly and transmit (λ_i - σ²/h_i)^+.
inline std::vector<double> nash_powers(const ChannelGrid& grid, double noise, const std::vector<double>& lambda)
{
    const std::size_t n = lambda.size();
    std::vector<double> avg(n, 0.0);
    for (const auto& st : grid) {
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            best = std::max(best, lambda[i] * st.gains[i]);
        if (best <= 0.0)
            continue;
        std::size_t ties = 0;
        for (std::size_t i = 0; i < n; ++i)
            ties += lambda[i] * st.gains[i] == best ? 1 : 0;
        for (std::size_t i = 0; i < n; ++i)
            if (lambda[i] * st.gains[i] == best && st.gains[i] > 0.0)
                avg[i] += st.weight / ties * std::max(lambda[i] - noise / st.gains[i], 0.0);
    }
    return avg;
}

inline double nash_lattice_residual(const ChannelGrid& grid, double noise, const std::vector<double>& budgets,
                                    const std::vector<double>& lambda)
{
    const auto avg = nash_powers(grid, noise, lambda);
    double r = 0.0;
    for (std::size_t i = 0; i < avg.size(); ++i)
        r = std::max(r, std::fabs(avg[i] - budgets[i]));
    return r;
}

// Two-user residual in which states within `band` of a tie (|λ1 h1 - λ2 h2| <=
// band * max(h1, h2)) are time-shared with a common fraction chosen by scanning.
inline double nash_band_residual(const ChannelGrid& grid, double noise, const std::vector<double>& budgets,
                                 const std::vector<double>& lambda, double band)
{
    double own1 = 0.0, own2 = 0.0, tie1 = 0.0, tie2 = 0.0;
    for (const auto& st : grid) {
        const double h1 = st.gains[0];
        const double h2 = st.gains[1];
        const double p1 = h1 > 0.0 ? std::max(lambda[0] - noise / h1, 0.0) : 0.0;
        const double p2 = h2 > 0.0 ? std::max(lambda[1] - noise / h2, 0.0) : 0.0;
        const double l1 = lambda[0] * h1;
        const double l2 = lambda[1] * h2;
        if (std::fabs(l1 - l2) <= band * std::max(h1, h2)) {
            tie1 += st.weight * p1;
            tie2 += st.weight * p2;
        } else if (l1 > l2) {
            own1 += st.weight * p1;
        } else {
            own2 += st.weight * p2;
        }
    }
    // max(|r1|, |r2|) is piecewise linear in the fraction; test its breakpoints.
    const double a = own1 - budgets[0];
    const double b = own2 + tie2 - budgets[1];
    std::vector<double> candidates{0.0, 1.0};
    if (tie1 > 0.0)
        candidates.push_back(-a / tie1);
    if (tie2 > 0.0)
        candidates.push_back(b / tie2);
    if (tie1 + tie2 > 0.0) {
        candidates.push_back((b - a) / (tie1 + tie2));
        if (tie1 != tie2)
            candidates.push_back((-a - b) / (tie1 - tie2));
    }
    double best = std::numeric_limits<double>::infinity();
    for (double theta : candidates) {
        theta = std::clamp(theta, 0.0, 1.0);
        best = std::min(best, std::max(std::fabs(a + theta * tie1), std::fabs(b - theta * tie2)));
    }
    return best;
}

// Brute-force minimizer of a function over a box lattice: a global pass at
// `coarse` spacing followed by a pass at `fine` spacing around the best point.
template <std::size_t N, class F>
std::array<double, N> lattice_argmin(F&& f, std::array<double, N> lo, std::array<double, N> hi, double coarse, double fine)
{
    auto scan = [&](std::array<double, N> a, std::array<double, N> b, double step) {
        std::array<std::size_t, N> count{};
        for (std::size_t d = 0; d < N; ++d)
            count[d] = static_cast<std::size_t>(std::floor((b[d] - a[d]) / step)) + 1;
        std::array<std::size_t, N> idx{};
        std::array<double, N> best = a;
        double best_val = std::numeric_limits<double>::infinity();
        while (true) {
            std::array<double, N> x;
            for (std::size_t d = 0; d < N; ++d)
                x[d] = a[d] + static_cast<double>(idx[d]) * step;
            const double v = f(x);
            if (v < best_val) {
                best_val = v;
                best = x;
            }
            std::size_t d = 0;
            while (d < N && ++idx[d] == count[d])
                idx[d++] = 0;
            if (d == N)
                break;
        }
        return best;
    };
    // Fine windows are re-centred until the minimizer is interior, so long
    // narrow valleys are followed instead of clipped.
    auto best = scan(lo, hi, coarse);
    for (int round = 0; round < 200; ++round) {
        std::array<double, N> a, b;
        for (std::size_t d = 0; d < N; ++d) {
            a[d] = std::max(lo[d], best[d] - 2.0 * coarse);
            b[d] = best[d] + 2.0 * coarse;
        }
        const auto next = scan(a, b, fine);
        bool interior = true;
        for (std::size_t d = 0; d < N; ++d)
            interior = interior && (next[d] > a[d] + fine || a[d] == lo[d]) && next[d] < b[d] - 1.5 * fine;
        best = next;
        if (interior)
            break;
    }
    return best;
}

// Value of the Nash dual Σ γ_i P̄_i + E[max_i φ_i(γ_i)] at water levels λ = 1/γ.
inline double nash_dual(const ChannelGrid& grid, double noise, const std::vector<double>& budgets,
                        const std::vector<double>& lambda)
{
    double value = 0.0;
    for (std::size_t i = 0; i < lambda.size(); ++i)
        value += budgets[i] / lambda[i];
    for (const auto& st : grid) {
        double top = 0.0;
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            const double x = lambda[i] * st.gains[i] / noise;
            if (x > 1.0)
                top = std::max(top, std::log(x) - 1.0 + 1.0 / x);
        }
        value += st.weight * top;
    }
    return value;
}

} // namespace testing_support

#endif
