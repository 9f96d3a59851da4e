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
// Leader/follower game: the base station commits to a decoding order per fading
// state and the two users play the resulting power game.

#ifndef MACGAME_STACKELBERG_HPP
#define MACGAME_STACKELBERG_HPP

#include "capacity.hpp"
#include "channel.hpp"
#include "decoding.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "policy.hpp"
#include "scalar_game.hpp"
#include "waterfill.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace macgame {

struct LowLevelOptions {
    double tol = 1e-10;                 // relative budget residual
    std::size_t max_iters = 200000;     // alternating sweeps
    std::optional<WaterLevels> start;   // default: the λ = 0 convention
    bool record_history = true;
};

inline RateVector stackelberg_rates(const ChannelGrid& grid, const SystemParams& params, const DecodingStrategy& strategy,
                                    const PowerPolicy& policy)
{
    params.validate(grid.num_users());
    require(is_feasible(grid, params, policy), "policy violates a power budget");
    return average_rates(grid, params, policy, strategy);
}

// Closed-form responses at water levels λ: the user decoded last water-fills
// over σ², the other over σ² plus the received power of the first.
inline PowerPolicy strategy_policy(const ChannelGrid& grid, const SystemParams& params, const DecodingStrategy& strategy,
                                   const WaterLevels& levels)
{
    strategy.check_covers(grid);
    require(levels.size() == 2, "two water levels are required");
    const double noise = params.noise_variance;
    PowerPolicy p(grid.size(), 2);
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const auto& h = grid[s].gains;
        const std::size_t last = strategy.last(s);
        const std::size_t first = strategy.first(s);
        const double p_last = detail::active_power(levels[last], noise, h[last]);
        p.power(s, last) = p_last;
        p.power(s, first) = detail::active_power(levels[first], noise + p_last * h[last], h[first]);
    }
    return p;
}

namespace detail {

// Water level of `user` given the other user's level.
inline double strategy_response(const ChannelGrid& grid, const SystemParams& params, const DecodingStrategy& strategy,
                                const std::vector<double>& w, std::size_t user, double other_level)
{
    const double budget = params.power_budgets[user];
    if (budget <= 0.0)
        return 0.0;
    const std::size_t other = 1 - user;
    const double noise = params.noise_variance;
    std::vector<double> floors(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const auto& h = grid[s].gains;
        double n = noise;
        if (strategy.first(s) == user)
            n += active_power(other_level, noise, h[other]) * h[other];
        floors[s] = h[user] > 0.0 ? n / h[user] : std::numeric_limits<double>::infinity();
    }
    const double level = waterfill_level(w, floors, budget);
    require(std::isfinite(level), "user " + std::to_string(user + 1) + " has no state with a positive gain");
    return level;
}

} // namespace detail

// Alternating exact water-level updates: λ1 given λ2, then λ2 given λ1.
// From λ = 0 the iterates increase monotonically to the smallest equilibrium
// pair, which is the admissible equilibrium.
inline EquilibriumReport low_level_solve(const ChannelGrid& grid, const SystemParams& params,
                                         const DecodingStrategy& strategy, const LowLevelOptions& opt = {})
{
    require(grid.num_users() == 2, "the low-level game is defined for two users");
    params.validate(2);
    strategy.check_covers(grid);
    require(opt.tol > 0.0, "tolerance must be positive");

    const auto w = detail::state_weights(grid);
    WaterLevels levels{{0.0, 0.0}};
    if (opt.start) {
        require(opt.start->size() == 2, "start needs two water levels");
        for (double l : opt.start->lambda)
            require(std::isfinite(l) && l >= 0.0, "start water levels must be finite and nonnegative");
        levels = *opt.start;
    }

    EquilibriumReport report;
    for (std::size_t it = 1;; ++it) {
        levels.lambda[0] = detail::strategy_response(grid, params, strategy, w, 0, levels[1]);
        levels.lambda[1] = detail::strategy_response(grid, params, strategy, w, 1, levels[0]);
        if (opt.record_history)
            report.level_history.push_back(levels.lambda);
        report.iterations = it;
        report.levels = levels;
        report.policy = strategy_policy(grid, params, strategy, levels);
        fill_budget_residuals(grid, params, report);
        if (report.residual <= opt.tol || it >= opt.max_iters)
            break;
    }
    report.rates = average_rates(grid, params, report.policy, strategy);
    report.tie_mass = 0.0;
    report.converged = report.residual <= opt.tol;
    report.convention = opt.start ? "alternating water-filling from a given start"
                                  : "lambda=0 monotone iteration (admissible)";
    return report;
}

// False iff `rival` gives both users at least the candidate's rate and one of
// them strictly more (beyond tol). Both reports must be equilibria under the
// strategy: the budgets are re-checked at their water levels.
inline bool is_admissible(const ChannelGrid& grid, const SystemParams& params, const DecodingStrategy& strategy,
                          const EquilibriumReport& candidate, const EquilibriumReport& rival, double tol = 1e-8)
{
    for (const auto* rep : {&candidate, &rival}) {
        EquilibriumReport probe;
        probe.policy = strategy_policy(grid, params, strategy, rep->levels);
        fill_budget_residuals(grid, params, probe);
        require(probe.residual <= tol, std::string(rep == &candidate ? "candidate" : "rival") +
                                           " is not an equilibrium under the strategy");
        require(rep->rates.size() == 2, "reports must carry two rates");
    }
    const RateVector& a = candidate.rates;
    const RateVector& b = rival.rates;
    const bool weak = b[0] >= a[0] - tol && b[1] >= a[1] - tol;
    const bool strict = b[0] > a[0] + tol || b[1] > a[1] + tol;
    return !(weak && strict);
}

struct AlphaPoint {
    Alpha alpha;
    EquilibriumReport report;
    std::string error;   // solver failure for this α, empty on success
};

inline std::vector<AlphaPoint> alpha_sweep(const ChannelGrid& grid, const SystemParams& params,
                                           const std::vector<Alpha>& alphas, const LowLevelOptions& opt = {},
                                           std::size_t threads = 1)
{
    require(!alphas.empty(), "alpha sweep needs at least one alpha");
    std::vector<AlphaPoint> out(alphas.size());
    parallel_for(alphas.size(), threads, [&](std::size_t k) {
        out[k].alpha = alphas[k];
        try {
            out[k].report = low_level_solve(grid, params, DecodingStrategy::threshold(grid, alphas[k]), opt);
        } catch (const error& e) {
            out[k].error = "alpha=" + alphas[k].str() + ": " + e.what();
        }
    });
    return out;
}

// α° = λ2°/λ1° of the sum-rate point.
inline Alpha sp_alpha(const ChannelGrid& grid, const SystemParams& params, const NashOptions& opt = {})
{
    const EquilibriumReport sp = nash_solve_2user(grid, params, opt);
    if (sp.levels[0] <= 0.0)
        return Alpha::infinity();
    return Alpha(sp.levels[1] / sp.levels[0]);
}

struct SplitStrategy {
    ChannelGrid grid;
    DecodingStrategy strategy;
    std::vector<std::size_t> origin;   // source state of each split state
};

// Partition realizing the sum-rate point exactly. A time-shared state is split
// into two states of mass share_1·w (user 1 decoded last) and share_2·w (user 2
// decoded last); other states follow the owner of the state.
inline SplitStrategy sp_partition(const ChannelGrid& grid, const SystemParams& params, const NashOptions& opt = {})
{
    const EquilibriumReport sp = nash_solve_2user(grid, params, opt);
    std::vector<FadingState> states;
    std::vector<bool> d1;
    std::vector<std::size_t> origin;
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const auto& st = grid[s];
        if (sp.policy.time_shared(s)) {
            for (std::size_t last : {0, 1}) {
                const double share = sp.policy.share(s, last);
                if (share <= 0.0)
                    continue;
                states.push_back({st.gains, st.weight * share});
                d1.push_back(last == 1);
                origin.push_back(s);
            }
            continue;
        }
        states.push_back(st);
        d1.push_back(sp.policy.power(s, 0) <= 0.0 && sp.levels[0] * st.gains[0] <= sp.levels[1] * st.gains[1]);
        origin.push_back(s);
    }
    return {ChannelGrid(std::move(states)), DecodingStrategy::explicit_set(std::move(d1)), std::move(origin)};
}

// Single-user capacities R_i^o; μ·R^o bounds every leader payoff.
inline RateVector solo_rates(const ChannelGrid& grid, const SystemParams& params)
{
    params.validate(grid.num_users());
    RateVector out{std::vector<double>(grid.num_users(), 0.0)};
    const auto w = detail::state_weights(grid);
    for (std::size_t i = 0; i < grid.num_users(); ++i) {
        if (params.power_budgets[i] <= 0.0)
            continue;
        const auto floors = detail::clean_floors(grid, params, i);
        const Waterfill wf = waterfill(w, floors, params.power_budgets[i]);
        for (std::size_t s = 0; s < grid.size(); ++s)
            out.rates[i] += w[s] * half_log2_1p(wf.powers[s] * grid[s].gains[i] / params.noise_variance);
    }
    return out;
}

struct StackelbergChoice {
    Alpha alpha;
    EquilibriumReport report;
    double payoff = -std::numeric_limits<double>::infinity();
    double upper_bound = 0.0;        // μ·R^o
    std::size_t evaluations = 0;
    bool certified = false;          // upper_bound - payoff <= epsilon
};

namespace detail {

// Distinct ratios h1/h2 inside [min h1 / max h2, max h1 / min h2]. Threshold
// strategies only change when α crosses one of them.
inline std::vector<double> alpha_breakpoints(const ChannelGrid& grid)
{
    double h1_min = INFINITY, h1_max = 0.0, h2_min = INFINITY, h2_max = 0.0;
    std::vector<double> r;
    for (const auto& st : grid) {
        h1_min = std::min(h1_min, st.gains[0]);
        h1_max = std::max(h1_max, st.gains[0]);
        h2_min = std::min(h2_min, st.gains[1]);
        h2_max = std::max(h2_max, st.gains[1]);
        if (st.gains[0] > 0.0 && st.gains[1] > 0.0)
            r.push_back(st.gains[0] / st.gains[1]);
    }
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    const double lo = h2_max > 0.0 ? h1_min / h2_max : 0.0;
    const double hi = h2_min > 0.0 ? h1_max / h2_min : INFINITY;
    std::erase_if(r, [&](double x) { return x < lo || x > hi; });
    return r;
}

} // namespace detail

// α = 0, α = ∞ and `count - 2` geometrically spaced thresholds spanning the
// breakpoints of the grid.
inline std::vector<Alpha> alpha_fan(const ChannelGrid& grid, std::size_t count)
{
    require(count >= 2, "an alpha fan needs at least two values");
    const auto bp = detail::alpha_breakpoints(grid);
    const double lo = bp.empty() ? 1.0 : bp.front();
    const double hi = bp.empty() ? 1.0 : bp.back();
    std::vector<Alpha> out{Alpha(0.0)};
    const std::size_t inner = count - 2;
    for (std::size_t k = 0; k < inner; ++k) {
        const double t = inner == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(inner - 1);
        out.emplace_back(lo * std::pow(hi / lo, t));
    }
    out.push_back(Alpha::infinity());
    return out;
}

// Best threshold strategy for the payoff μ·R. Endpoints α ∈ {0, ∞} are always
// evaluated. Breakpoints of the α interval are scanned exhaustively when the
// budget allows, otherwise a coarse scan is refined by golden-section search.
inline StackelbergChoice epsilon_stackelberg(const ChannelGrid& grid, const SystemParams& params, const RateAward& mu,
                                             double epsilon, std::size_t alpha_budget = 64,
                                             const LowLevelOptions& opt = {})
{
    require(grid.num_users() == 2, "the Stackelberg game is defined for two users");
    mu.validate(2);
    require(epsilon > 0.0, "epsilon must be positive");
    require(alpha_budget >= 3, "alpha budget must allow at least three evaluations");

    StackelbergChoice best;
    best.upper_bound = solo_rates(grid, params).weighted(mu.mu);
    std::map<std::size_t, double> seen;
    const auto ratios = detail::alpha_breakpoints(grid);

    auto evaluate = [&](Alpha a) {
        ++best.evaluations;
        EquilibriumReport rep = low_level_solve(grid, params, DecodingStrategy::threshold(grid, a), opt);
        const double payoff = rep.rates.weighted(mu.mu);
        if (payoff > best.payoff) {
            best.payoff = payoff;
            best.alpha = a;
            best.report = std::move(rep);
        }
        return payoff;
    };
    auto at = [&](std::size_t k) {
        if (auto it = seen.find(k); it != seen.end())
            return it->second;
        return seen[k] = evaluate(Alpha(ratios[k]));
    };
    auto done = [&] { return best.upper_bound - best.payoff <= epsilon; };

    evaluate(Alpha(0.0));
    evaluate(Alpha::infinity());
    const std::size_t remaining = alpha_budget - 2;
    const std::size_t m = ratios.size();
    if (m > 0 && !done()) {
        if (m <= remaining) {
            for (std::size_t k = 0; k < m && !done(); ++k)
                at(k);
        } else {
            const std::size_t coarse = std::max<std::size_t>(2, remaining / 2);
            std::size_t best_k = 0;
            double best_v = -INFINITY;
            for (std::size_t j = 0; j < coarse && !done(); ++j) {
                const std::size_t k = j * (m - 1) / (coarse - 1);
                if (const double v = at(k); v > best_v) {
                    best_v = v;
                    best_k = k;
                }
            }
            const std::size_t spacing = (m - 1) / (coarse - 1) + 1;
            std::size_t a = best_k >= spacing ? best_k - spacing : 0;
            std::size_t b = std::min(m - 1, best_k + spacing);
            constexpr double inv_phi = 0.6180339887498949;
            while (b - a > 3 && best.evaluations < alpha_budget && !done()) {
                const auto span = static_cast<double>(b - a);
                const std::size_t c = std::max(a + 1, b - static_cast<std::size_t>(std::lround(inv_phi * span)));
                const std::size_t d = std::min(b - 1, std::max(c + 1, a + static_cast<std::size_t>(std::lround(inv_phi * span))));
                if (at(c) >= at(d))
                    b = d;
                else
                    a = c;
            }
            for (std::size_t k = a; k <= b && best.evaluations < alpha_budget && !done(); ++k)
                at(k);
        }
    }
    best.certified = done();
    return best;
}

struct GapRow {
    RateAward mu;
    Alpha alpha;
    double stackelberg_payoff = 0.0;
    double oracle_payoff = 0.0;
    double gap = 0.0;
    bool oracle_converged = false;
};

struct AuditOptions {
    double epsilon = 1e-9;
    std::size_t alpha_budget = 64;
    LowLevelOptions low_level;
    OracleOptions oracle;
    std::size_t threads = 1;
};

// Best threshold payoff against the capacity boundary for each μ.
inline std::vector<GapRow> boundary_gap_audit(const ChannelGrid& grid, const SystemParams& params,
                                              const std::vector<RateAward>& mus, const AuditOptions& opt = {})
{
    for (const auto& mu : mus)
        mu.validate(2);
    std::vector<GapRow> rows(mus.size());
    parallel_for(mus.size(), opt.threads, [&](std::size_t k) {
        const auto choice = epsilon_stackelberg(grid, params, mus[k], opt.epsilon, opt.alpha_budget, opt.low_level);
        const auto point = boundary_oracle(grid, params, mus[k], opt.oracle);
        rows[k] = {mus[k], choice.alpha, choice.payoff, point.payoff, point.payoff - choice.payoff, point.converged};
    });
    return rows;
}

struct PartitionAudit {
    std::size_t samples = 0;
    std::size_t nonconverged = 0;
    double best_payoff = -std::numeric_limits<double>::infinity();
    double oracle_payoff = 0.0;
    double min_gap = 0.0;
    std::vector<bool> best_partition;
};

// Random explicit partitions: half are independent Bernoulli draws, half flip a
// few states of the best threshold partition.
inline PartitionAudit partition_audit(const ChannelGrid& grid, const SystemParams& params, const RateAward& mu,
                                      std::size_t samples, std::uint64_t seed, const AuditOptions& opt = {})
{
    mu.validate(2);
    const auto anchor = epsilon_stackelberg(grid, params, mu, opt.epsilon, opt.alpha_budget, opt.low_level);
    const auto base = DecodingStrategy::threshold(grid, anchor.alpha).decode_1_first;

    std::vector<std::vector<bool>> parts(samples);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t k = 0; k < samples; ++k) {
        std::vector<bool> d(grid.size());
        if (k % 2 == 0) {
            const double p = u(rng);
            for (std::size_t s = 0; s < grid.size(); ++s)
                d[s] = u(rng) < p;
        } else {
            d = base;
            const double p = 0.2 * u(rng);
            bool flipped = false;
            for (std::size_t s = 0; s < grid.size(); ++s)
                if (u(rng) < p) {
                    d[s] = !d[s];
                    flipped = true;
                }
            if (!flipped) {
                const auto s = static_cast<std::size_t>(u(rng) * static_cast<double>(grid.size())) % grid.size();
                d[s] = !d[s];
            }
        }
        parts[k] = std::move(d);
    }

    std::vector<double> payoff(samples);
    std::vector<char> ok(samples);
    parallel_for(samples, opt.threads, [&](std::size_t k) {
        const auto rep = low_level_solve(grid, params, DecodingStrategy::explicit_set(parts[k]), opt.low_level);
        payoff[k] = rep.rates.weighted(mu.mu);
        ok[k] = rep.converged;
    });

    PartitionAudit out;
    out.samples = samples;
    for (std::size_t k = 0; k < samples; ++k) {
        out.nonconverged += ok[k] ? 0 : 1;
        if (payoff[k] > out.best_payoff) {
            out.best_payoff = payoff[k];
            out.best_partition = parts[k];
        }
    }
    out.oracle_payoff = boundary_oracle(grid, params, mu, opt.oracle).payoff;
    out.min_gap = out.oracle_payoff - out.best_payoff;
    return out;
}

} // namespace macgame

#endif
