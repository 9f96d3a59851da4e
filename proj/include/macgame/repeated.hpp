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
// Repeated game with trigger strategies. Each stage is a full ergodic block:
// the stage payoff of a user is its average rate over the grid.

#ifndef MACGAME_REPEATED_HPP
#define MACGAME_REPEATED_HPP

#include "capacity.hpp"
#include "channel.hpp"
#include "decoding.hpp"
#include "error.hpp"
#include "policy.hpp"
#include "scalar_game.hpp"
#include "waterfill.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace macgame {

// Smallest T >= 1 with deviation + T·punished < T·cooperative.
inline std::size_t punishment_length(double cooperative, double deviation, double punished)
{
    require(cooperative > punished, "cooperative rate does not exceed the punished rate: the point is not "
                                    "achievable by a trigger strategy");
    require(deviation >= 0.0 && punished >= 0.0, "rates must be nonnegative");
    auto holds = [&](double t) { return deviation + t * punished < t * cooperative; };
    auto t = static_cast<std::size_t>(std::floor(deviation / (cooperative - punished))) + 1;
    while (!holds(static_cast<double>(t)))
        ++t;
    while (t > 1 && holds(static_cast<double>(t - 1)))
        --t;
    return t;
}

// Smallest T >= 0 with deviation + T·punished < (T + 1)·cooperative: the
// shortest punishment after which a single deviation no longer pays.
inline std::size_t deterrence_length(double cooperative, double deviation, double punished)
{
    require(cooperative > punished, "cooperative rate does not exceed the punished rate: the point is not "
                                    "achievable by a trigger strategy");
    auto holds = [&](double t) { return deviation + t * punished < (t + 1.0) * cooperative; };
    std::size_t t = 0;
    if (deviation >= cooperative)
        t = static_cast<std::size_t>(std::floor((deviation - cooperative) / (cooperative - punished)));
    while (!holds(static_cast<double>(t)))
        ++t;
    while (t > 0 && holds(static_cast<double>(t - 1)))
        --t;
    return t;
}

// Cooperative boundary point laid out on a slot grid: every time-shared state
// is split into one slot per active user, so that each slot carries a plain
// two-user power pair and one decoding order applies throughout.
struct RepeatedGame {
    ChannelGrid slots;
    std::vector<std::size_t> origin;          // grid state of each slot
    SystemParams params;
    RateAward mu;
    DecodingStrategy order;                   // cooperative decoding order
    PowerPolicy cooperative;
    RateVector cooperative_rates;
    std::array<EquilibriumReport, 2> punishment; // [i]: corner that punishes user i
    std::array<PowerPolicy, 2> deviation;        // [i]: best one-shot deviation of user i
    std::array<RateVector, 2> deviation_rates;
    bool converged = false;                      // cooperative point and both corners
};

namespace detail {

inline ChannelGrid split_slots(const ChannelGrid& grid, const PowerPolicy& policy, PowerPolicy& out,
                               std::vector<std::size_t>& origin)
{
    std::vector<FadingState> states;
    std::vector<std::array<double, 2>> powers;
    for (std::size_t s = 0; s < grid.size(); ++s) {
        if (!policy.time_shared(s)) {
            states.push_back(grid[s]);
            powers.push_back({policy.power(s, 0), policy.power(s, 1)});
            origin.push_back(s);
            continue;
        }
        for (std::size_t i : {0, 1}) {
            if (policy.share(s, i) <= 0.0)
                continue;
            states.push_back({grid[s].gains, grid[s].weight * policy.share(s, i)});
            std::array<double, 2> p{0.0, 0.0};
            p[i] = policy.power(s, i);
            powers.push_back(p);
            origin.push_back(s);
        }
    }
    out = PowerPolicy(states.size(), 2);
    for (std::size_t k = 0; k < states.size(); ++k)
        for (std::size_t i : {0, 1})
            out.power(k, i) = powers[k][i];
    return ChannelGrid(std::move(states), grid.label());
}

} // namespace detail

// The deviator water-fills against the opponent's policy under `order`.
inline PowerPolicy best_deviation(const ChannelGrid& grid, const SystemParams& params, const DecodingStrategy& order,
                                  const PowerPolicy& opponent_policy, std::size_t deviator)
{
    require(deviator < 2, "deviator must be user 1 or 2");
    const std::size_t other = 1 - deviator;
    std::vector<double> noise(grid.size(), params.noise_variance);
    for (std::size_t s = 0; s < grid.size(); ++s)
        if (order.first(s) == deviator)
            noise[s] += opponent_policy.power(s, other) * grid[s].gains[other];
    PowerPolicy out = opponent_policy;
    std::vector<double> zero(grid.size(), 0.0);
    if (params.power_budgets[deviator] > 0.0)
        out.set_user_powers(deviator, waterfill(detail::state_weights(grid), detail::floors_over(grid, deviator, noise),
                                                params.power_budgets[deviator])
                                          .powers);
    else
        out.set_user_powers(deviator, zero);
    return out;
}

inline RepeatedGame make_repeated_game(const ChannelGrid& grid, const SystemParams& params, const RateAward& mu,
                                       const OracleOptions& opt = {})
{
    require(grid.num_users() == 2, "the repeated game is defined for two users");
    params.validate(2);
    mu.validate(2);
    const BoundaryPoint point = boundary_oracle(grid, params, mu, opt);

    PowerPolicy cooperative;
    std::vector<std::size_t> origin;
    ChannelGrid slots = detail::split_slots(grid, point.policy, cooperative, origin);
    const auto d1 = DecodingStrategy::explicit_set(std::vector<bool>(slots.size(), point.order.front() == 0));
    RepeatedGame g{std::move(slots), std::move(origin), params, mu, d1, std::move(cooperative), {}, {}, {}, {}, false};
    g.cooperative_rates = average_rates(g.slots, params, g.cooperative, g.order);
    g.punishment[0] = corner_point(g.slots, params, CornerOrder::decode_1_first);
    g.punishment[1] = corner_point(g.slots, params, CornerOrder::decode_2_first);
    for (std::size_t i : {0, 1}) {
        g.deviation[i] = best_deviation(g.slots, params, g.order, g.cooperative, i);
        g.deviation_rates[i] = average_rates(g.slots, params, g.deviation[i], g.order);
    }
    g.converged = point.converged && g.punishment[0].converged && g.punishment[1].converged;
    return g;
}

struct PunishmentLength {
    std::size_t length = 0;         // from the best one-shot deviation
    std::size_t corner_bound = 0;   // from the corner rate (loose deviation gain)
    std::size_t deterrence = 0;     // shortest punishment that makes one deviation unprofitable
    double cooperative_rate = 0.0;
    double deviation_rate = 0.0;
    double corner_rate = 0.0;
    double punished_rate = 0.0;
};

inline PunishmentLength min_punishment_length(const RepeatedGame& game, std::size_t deviator)
{
    require(deviator < 2, "deviator must be user 1 or 2");
    PunishmentLength out;
    out.cooperative_rate = game.cooperative_rates[deviator];
    out.deviation_rate = game.deviation_rates[deviator][deviator];
    out.punished_rate = game.punishment[deviator].rates[deviator];
    const auto own_corner = deviator == 0 ? CornerOrder::decode_2_first : CornerOrder::decode_1_first;
    out.corner_rate = corner_point(game.slots, game.params, own_corner).rates[deviator];
    out.length = punishment_length(out.cooperative_rate, out.deviation_rate, out.punished_rate);
    out.corner_bound = punishment_length(out.cooperative_rate, out.corner_rate, out.punished_rate);
    out.deterrence = deterrence_length(out.cooperative_rate, out.deviation_rate, out.punished_rate);
    return out;
}

inline PunishmentLength min_punishment_length(const ChannelGrid& grid, const SystemParams& params, const RateAward& mu,
                                              std::size_t deviator, const OracleOptions& opt = {})
{
    return min_punishment_length(make_repeated_game(grid, params, mu, opt), deviator);
}

class TriggerStrategy {
public:
    // Checks every length against the punishment inequality.
    TriggerStrategy(const RepeatedGame& game, std::array<std::size_t, 2> lengths, double detection_tol = 1e-6)
        : TriggerStrategy(lengths, detection_tol)
    {
        for (std::size_t i : {0, 1}) {
            const auto need = min_punishment_length(game, i).length;
            require(lengths[i] >= need, "punishment length of user " + std::to_string(i + 1) + " is below " +
                                            std::to_string(need));
        }
    }

    // No inequality check; used to probe lengths below the minimum.
    static TriggerStrategy unchecked(std::array<std::size_t, 2> lengths, double detection_tol = 1e-6)
    {
        return TriggerStrategy(lengths, detection_tol);
    }

    std::size_t length(std::size_t user) const { return lengths_[user]; }
    double detection_tol() const noexcept { return tol_; }

private:
    TriggerStrategy(std::array<std::size_t, 2> lengths, double tol) : lengths_(lengths), tol_(tol)
    {
        require(lengths[0] >= 1 && lengths[1] >= 1, "punishment lengths must be positive");
        require(tol >= 0.0, "detection tolerance must be nonnegative");
    }

    std::array<std::size_t, 2> lengths_{};
    double tol_ = 1e-6;
};

// Stages (1-based) at which a user plays `policy` instead of the prescribed
// one. The default deviation is the best one-shot deviation against the
// cooperative point.
struct Behavior {
    std::vector<std::size_t> deviate_at;
    std::optional<std::vector<double>> powers;

    static Behavior comply() { return {}; }
    static Behavior deviate(std::vector<std::size_t> stages, std::optional<std::vector<double>> p = std::nullopt)
    {
        return {std::move(stages), std::move(p)};
    }

    bool deviates(std::size_t stage) const
    {
        return std::find(deviate_at.begin(), deviate_at.end(), stage) != deviate_at.end();
    }
};

enum class Regime { cooperate, punish };

struct StageOutcome {
    std::size_t stage = 0;
    RateVector rates;
    Regime regime = Regime::cooperate;
    std::size_t punished = 0;    // 1-based user under punishment, 0 while cooperating
    std::size_t remaining = 0;   // punishment stages left after this one
    std::size_t deviator = 0;    // 1-based user detected deviating in this stage, 0 if none
};

struct PayoffMode {
    enum class Kind { time_average, discounted };
    Kind kind = Kind::time_average;
    double delta = 0.0;

    static PayoffMode time_average() { return {}; }
    static PayoffMode discounted(double d) { return {Kind::discounted, d}; }
};

struct Simulation {
    std::vector<StageOutcome> stages;
    std::vector<double> payoff;
};

inline Simulation simulate(const RepeatedGame& game, const TriggerStrategy& strategy,
                           const std::array<Behavior, 2>& behaviors, std::size_t horizon,
                           PayoffMode mode = PayoffMode::time_average())
{
    require(horizon >= 1, "horizon must be at least one stage");
    if (mode.kind == PayoffMode::Kind::discounted)
        require(mode.delta > 0.0 && mode.delta < 1.0, "discount factor must lie in (0, 1)");
    const std::size_t n = game.slots.size();
    for (const auto& b : behaviors)
        if (b.powers)
            require(b.powers->size() == n, "deviation policy must list one power per slot");

    Simulation sim;
    sim.payoff.assign(2, 0.0);
    std::size_t punished = 0;
    std::size_t remaining = 0;
    double discount = 1.0;
    for (std::size_t t = 1; t <= horizon; ++t) {
        StageOutcome out;
        out.stage = t;
        const bool punishing = remaining > 0;
        const PowerPolicy& prescribed = punishing ? game.punishment[punished - 1].policy : game.cooperative;
        const DecodingStrategy order = punishing ? corner_strategy(n, punished == 1 ? CornerOrder::decode_1_first
                                                                                    : CornerOrder::decode_2_first)
                                                 : game.order;
        PowerPolicy played = prescribed;
        for (std::size_t i : {0, 1})
            if (behaviors[i].deviates(t)) {
                if (behaviors[i].powers)
                    played.set_user_powers(i, *behaviors[i].powers);
                else
                    played.set_user_powers(i, best_deviation(game.slots, game.params, order, prescribed, i).user_powers(i));
            }

        std::size_t detected = 0;
        for (std::size_t i : {0, 1}) {
            double scale = 0.0, diff = 0.0;
            for (std::size_t s = 0; s < n; ++s) {
                scale = std::max(scale, prescribed.power(s, i));
                diff = std::max(diff, std::fabs(played.power(s, i) - prescribed.power(s, i)));
            }
            if (diff > strategy.detection_tol() * std::max(scale, 1.0)) {
                require(detected == 0, "simultaneous deviations are not modeled");
                detected = i + 1;
            }
        }

        out.rates = average_rates(game.slots, game.params, played, order);
        out.regime = punishing ? Regime::punish : Regime::cooperate;
        out.punished = punishing ? punished : 0;
        out.deviator = detected;
        if (punishing)
            --remaining;
        out.remaining = remaining;
        if (detected) {
            punished = detected;
            remaining = strategy.length(detected - 1);
        }

        for (std::size_t i : {0, 1}) {
            if (mode.kind == PayoffMode::Kind::discounted)
                sim.payoff[i] += (1.0 - mode.delta) * discount * out.rates[i];
            else
                sim.payoff[i] += out.rates[i];
        }
        discount *= mode.delta;
        sim.stages.push_back(std::move(out));
    }
    if (mode.kind == PayoffMode::Kind::time_average)
        for (double& p : sim.payoff)
            p /= static_cast<double>(horizon);
    return sim;
}

inline std::string regime_name(Regime r)
{
    return r == Regime::cooperate ? "cooperate" : "punish";
}

} // namespace macgame

#endif
