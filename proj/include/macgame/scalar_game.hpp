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

#ifndef MACGAME_SCALAR_GAME_HPP
#define MACGAME_SCALAR_GAME_HPP

#include "channel.hpp"
#include "decoding.hpp"
#include "error.hpp"
#include "policy.hpp"
#include "waterfill.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace macgame {

struct NashOptions {
    double tol = 1e-8;          // relative budget residual
    std::size_t max_iters = 10000;
    double tie_tol = 1e-9;      // relative gap in λ_i h_i below which a state is a tie
};

struct TreatAsNoise {};
using InterferenceModel = std::variant<TreatAsNoise, DecodingStrategy>;

namespace detail {

inline std::vector<double> state_weights(const ChannelGrid& grid)
{
    std::vector<double> w(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s)
        w[s] = grid[s].weight;
    return w;
}

// N(s)/h_user(s), infinite where the gain vanishes.
inline std::vector<double> floors_over(const ChannelGrid& grid, std::size_t user, std::span<const double> noise)
{
    std::vector<double> f(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const double h = grid[s].gains[user];
        f[s] = h > 0.0 ? noise[s] / h : std::numeric_limits<double>::infinity();
    }
    return f;
}

inline std::vector<double> clean_floors(const ChannelGrid& grid, const SystemParams& params, std::size_t user)
{
    const std::vector<double> noise(grid.size(), params.noise_variance);
    return floors_over(grid, user, noise);
}

inline double active_power(double level, double noise, double gain)
{
    return gain > 0.0 ? std::max(level - noise / gain, 0.0) : 0.0;
}

inline EquilibriumReport single_user_report(const ChannelGrid& grid, const SystemParams& params, std::size_t user,
                                            const NashOptions& opt);

} // namespace detail

inline Waterfill waterfill_response(const ChannelGrid& grid, const SystemParams& params, std::size_t user,
                                    std::span<const double> interference)
{
    params.validate(grid.num_users());
    require(user < grid.num_users(), "user index out of range");
    require(interference.size() == grid.size(), "interference must list one value per state");
    for (double n : interference)
        require(n >= params.noise_variance * (1.0 - 1e-15), "effective noise must be at least the noise variance");
    require(params.power_budgets[user] > 0.0, "water-filling needs a positive budget");
    const auto w = detail::state_weights(grid);
    return waterfill(w, detail::floors_over(grid, user, interference), params.power_budgets[user]);
}

// Per-state rates of one policy. Time-shared states are interference free.
inline std::vector<double> state_rates(const ChannelGrid& grid, const SystemParams& params, const PowerPolicy& policy,
                                       std::size_t s, const InterferenceModel& model = TreatAsNoise{})
{
    const std::size_t n = grid.num_users();
    const double noise = params.noise_variance;
    const auto& h = grid[s].gains;
    std::vector<double> r(n, 0.0);
    if (policy.time_shared(s)) {
        for (std::size_t i = 0; i < n; ++i)
            r[i] = policy.share(s, i) * half_log2_1p(policy.power(s, i) * h[i] / noise);
        return r;
    }
    if (const auto* d = std::get_if<DecodingStrategy>(&model)) {
        require(n == 2, "decoding strategies are defined for two users");
        const std::size_t first = d->first(s);
        const std::size_t last = d->last(s);
        const double rx_last = policy.power(s, last) * h[last];
        r[last] = half_log2_1p(rx_last / noise);
        r[first] = half_log2_1p(policy.power(s, first) * h[first] / (noise + rx_last));
        return r;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        total += policy.power(s, i) * h[i];
    for (std::size_t i = 0; i < n; ++i) {
        const double rx = policy.power(s, i) * h[i];
        r[i] = half_log2_1p(rx / (noise + (total - rx)));
    }
    return r;
}

inline RateVector average_rates(const ChannelGrid& grid, const SystemParams& params, const PowerPolicy& policy,
                                const InterferenceModel& model = TreatAsNoise{})
{
    check_policy_shape(grid, policy);
    if (const auto* d = std::get_if<DecodingStrategy>(&model))
        d->check_covers(grid);
    RateVector out{std::vector<double>(grid.num_users(), 0.0)};
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const auto r = state_rates(grid, params, policy, s, model);
        for (std::size_t i = 0; i < r.size(); ++i)
            out.rates[i] += grid[s].weight * r[i];
    }
    return out;
}

// Policy induced by water levels: in each state the users maximizing λ_i h_i
// (within tie_tol) transmit (λ_i - σ²/h_i)^+. Tied users time-share the state,
// with shares copied from `shares_from` when given and split evenly otherwise.
inline PowerPolicy induced_policy(const ChannelGrid& grid, const SystemParams& params, const WaterLevels& levels,
                                  double tie_tol = 1e-9, const PowerPolicy* shares_from = nullptr)
{
    const std::size_t n = grid.num_users();
    require(levels.size() == n, "one water level per user is required");
    PowerPolicy policy(grid.size(), n);
    std::vector<std::size_t> tied;
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const auto& h = grid[s].gains;
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            best = std::max(best, levels[i] * h[i]);
        if (best <= 0.0)
            continue;
        tied.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (levels[i] * h[i] >= best * (1.0 - tie_tol))
                tied.push_back(i);
        for (std::size_t i : tied)
            policy.power(s, i) = detail::active_power(levels[i], params.noise_variance, h[i]);
        if (tied.size() > 1) {
            const bool copy = shares_from != nullptr && shares_from->time_shared(s);
            for (std::size_t i = 0; i < n; ++i)
                policy.share(s, i) = 0.0;
            for (std::size_t i : tied)
                policy.share(s, i) = copy ? shares_from->share(s, i) : 1.0 / static_cast<double>(tied.size());
        }
    }
    return policy;
}

inline std::vector<double> nash_residual(const ChannelGrid& grid, const SystemParams& params, const WaterLevels& levels,
                                         double tie_tol = 1e-9, const PowerPolicy* shares_from = nullptr)
{
    params.validate(grid.num_users());
    for (double l : levels.lambda)
        require(l >= 0.0 && std::isfinite(l), "water levels must be finite and nonnegative");
    const PowerPolicy policy = induced_policy(grid, params, levels, tie_tol, shares_from);
    std::vector<double> r(grid.num_users());
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = std::fabs(average_power(grid, policy, i) - params.power_budgets[i]);
    return r;
}

namespace detail {

inline void finish_report(const ChannelGrid& grid, const SystemParams& params, const NashOptions& opt,
                          EquilibriumReport& report)
{
    fill_budget_residuals(grid, params, report);
    report.rates = average_rates(grid, params, report.policy);
    report.tie_mass = time_shared_mass(grid, report.policy);
    report.converged = report.residual <= opt.tol;
    if (report.convention.empty())
        report.convention = "time-sharing";
}

inline EquilibriumReport single_user_report(const ChannelGrid& grid, const SystemParams& params, std::size_t user,
                                            const NashOptions& opt)
{
    EquilibriumReport report;
    const std::size_t n = grid.num_users();
    const auto w = state_weights(grid);
    const Waterfill wf = waterfill(w, clean_floors(grid, params, user), params.power_budgets[user]);
    report.levels.lambda.assign(n, 0.0);
    report.levels.lambda[user] = wf.level;
    report.policy = PowerPolicy(grid.size(), n);
    report.policy.set_user_powers(user, wf.powers);
    report.iterations = 1;
    finish_report(grid, params, opt, report);
    return report;
}

// Group of states sharing one gain ratio q = h2/h1 (within tie_tol).
struct RatioGroup {
    double q = 0.0;
    std::vector<std::size_t> states;
};

inline std::vector<RatioGroup> ratio_groups(const ChannelGrid& grid, double tie_tol)
{
    std::vector<std::pair<double, std::size_t>> keyed;
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const double h1 = grid[s].gains[0];
        const double h2 = grid[s].gains[1];
        if (h1 == 0.0 && h2 == 0.0)
            continue;
        keyed.emplace_back(h1 > 0.0 ? h2 / h1 : std::numeric_limits<double>::infinity(), s);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<RatioGroup> groups;
    for (const auto& [q, s] : keyed) {
        const bool join = !groups.empty()
            && (q == groups.back().q || (std::isfinite(q) && q <= groups.back().q * (1.0 + tie_tol)));
        if (!join)
            groups.push_back({q, {}});
        groups.back().states.push_back(s);
    }
    return groups;
}

// Two-user equilibrium by exact search over ownership cuts.
//
// States sorted by q = h2/h1 are owned by user 1 below a cut and by user 2
// above it. For cut k the single-user levels λ1(k), λ2(k) give a ratio
// f(k) = λ1/λ2 that is non-increasing in k; the equilibrium is the cut where
// f crosses the ordered ratios, or a time-shared group sitting exactly at
// λ1/λ2 = q when f jumps over it.
class TwoUserCutSolver {
public:
    TwoUserCutSolver(const ChannelGrid& grid, const SystemParams& params, const NashOptions& opt)
        : grid_(grid), params_(params), opt_(opt), groups_(ratio_groups(grid, opt.tie_tol))
    {
        floors1_ = clean_floors(grid, params, 0);
        floors2_ = clean_floors(grid, params, 1);
    }

    EquilibriumReport solve()
    {
        const std::size_t g = groups_.size();
        require(g > 0, "every state has zero gain for both users");
        // First cut k in [1, g] with f(k) <= q_k (q_g taken as +inf).
        std::size_t lo = 1;
        std::size_t hi = g;
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (ratio(mid) <= groups_[mid].q)
                hi = mid;
            else
                lo = mid + 1;
        }
        const std::size_t k = lo;
        const double fk = ratio(k);
        const double qprev = groups_[k - 1].q;
        if (fk >= qprev)
            return pure(k);
        return tied(k - 1);
    }

private:
    // Level of user 1 owning groups [0, k) and of user 2 owning [k, g).
    double level1(std::size_t k)
    {
        ++evaluations_;
        return waterfill_level(weights_over(0, k), select(floors1_, 0, k), params_.power_budgets[0]);
    }

    double level2(std::size_t k)
    {
        ++evaluations_;
        return waterfill_level(weights_over(k, groups_.size()), select(floors2_, k, groups_.size()),
                               params_.power_budgets[1]);
    }

    double ratio(std::size_t k)
    {
        const double l1 = level1(k);
        const double l2 = level2(k);
        require(std::isfinite(l1) || std::isfinite(l2), "budgets cannot be spent on this grid");
        if (!std::isfinite(l2))
            return 0.0;
        if (!std::isfinite(l1))
            return std::numeric_limits<double>::infinity();
        return l1 / l2;
    }

    std::vector<double> weights_over(std::size_t from, std::size_t to) const
    {
        std::vector<double> w;
        for (std::size_t j = from; j < to; ++j)
            for (std::size_t s : groups_[j].states)
                w.push_back(grid_[s].weight);
        return w;
    }

    std::vector<double> select(const std::vector<double>& values, std::size_t from, std::size_t to) const
    {
        std::vector<double> out;
        for (std::size_t j = from; j < to; ++j)
            for (std::size_t s : groups_[j].states)
                out.push_back(values[s]);
        return out;
    }

    EquilibriumReport pure(std::size_t k)
    {
        const double l1 = level1(k);
        const double l2 = level2(k);
        require(std::isfinite(l1) && std::isfinite(l2), "budgets cannot be spent on this grid");
        EquilibriumReport report;
        report.levels.lambda = {l1, l2};
        report.policy = PowerPolicy(grid_.size(), 2);
        for (std::size_t j = 0; j < groups_.size(); ++j)
            for (std::size_t s : groups_[j].states) {
                if (j < k)
                    report.policy.power(s, 0) = active_power(l1, params_.noise_variance, grid_[s].gains[0]);
                else
                    report.policy.power(s, 1) = active_power(l2, params_.noise_variance, grid_[s].gains[1]);
            }
        report.iterations = evaluations_;
        finish_report(grid_, params_, opt_, report);
        return report;
    }

    // Partial budgets: power user i spends on owned states and on the tie group.
    struct Split {
        double owned = 0.0;
        double tie = 0.0;
    };

    Split split(std::size_t user, double level, std::size_t t) const
    {
        Split sp;
        for (std::size_t j = 0; j < groups_.size(); ++j) {
            const bool owned = user == 0 ? j < t : j > t;
            if (!owned && j != t)
                continue;
            for (std::size_t s : groups_[j].states) {
                const double p = grid_[s].weight * active_power(level, params_.noise_variance, grid_[s].gains[user]);
                (j == t ? sp.tie : sp.owned) += p;
            }
        }
        return sp;
    }

    // Share of the tie group user i needs to close its budget at `level`.
    double needed_share(std::size_t user, double level, std::size_t t) const
    {
        const Split sp = split(user, level, t);
        const double rest = params_.power_budgets[user] - sp.owned;
        if (sp.tie <= 0.0)
            return rest > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        return rest / sp.tie;
    }

    EquilibriumReport tied(std::size_t t)
    {
        const double q = groups_[t].q;
        // λ1 = q λ2 on the tie; shares θ1(λ2) + θ2(λ2) = 1 is decreasing in λ2.
        double lo = std::max(level1(t + 1) / q, level2(t));
        double hi = std::min(level1(t) / q, level2(t + 1));
        if (lo > hi)
            std::swap(lo, hi);
        auto excess = [&](double l2) { return needed_share(0, q * l2, t) + needed_share(1, l2, t) - 1.0; };
        std::size_t steps = 0;
        if (!std::isfinite(hi)) {
            hi = std::max(lo, std::numeric_limits<double>::min());
            while (excess(hi) > 0.0 && steps < opt_.max_iters) {
                lo = hi;
                hi *= 2.0;
                ++steps;
            }
        }
        while (steps < opt_.max_iters && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            const double mid = 0.5 * (lo + hi);
            if (excess(mid) > 0.0)
                lo = mid;
            else
                hi = mid;
            ++steps;
        }
        const double l2 = 0.5 * (lo + hi);
        const double l1 = q * l2;
        const double theta = std::clamp(needed_share(0, l1, t), 0.0, 1.0);

        EquilibriumReport report;
        report.levels.lambda = {l1, l2};
        report.policy = PowerPolicy(grid_.size(), 2);
        for (std::size_t j = 0; j < groups_.size(); ++j)
            for (std::size_t s : groups_[j].states) {
                const auto& h = grid_[s].gains;
                if (j <= t)
                    report.policy.power(s, 0) = active_power(l1, params_.noise_variance, h[0]);
                if (j >= t)
                    report.policy.power(s, 1) = active_power(l2, params_.noise_variance, h[1]);
                if (j == t) {
                    report.policy.share(s, 0) = theta;
                    report.policy.share(s, 1) = 1.0 - theta;
                }
            }
        report.iterations = evaluations_ + steps;
        finish_report(grid_, params_, opt_, report);
        return report;
    }

    const ChannelGrid& grid_;
    const SystemParams& params_;
    NashOptions opt_;
    std::vector<RatioGroup> groups_;
    std::vector<double> floors1_;
    std::vector<double> floors2_;
    std::size_t evaluations_ = 0;
};

} // namespace detail

namespace detail {

// True when user 2 comes first in the canonical order: smaller budget, then
// lexicographically smaller gain sequence.
inline bool second_user_first(const ChannelGrid& grid, const SystemParams& params)
{
    if (params.power_budgets[0] != params.power_budgets[1])
        return params.power_budgets[1] < params.power_budgets[0];
    for (const auto& st : grid)
        if (st.gains[0] != st.gains[1])
            return st.gains[1] < st.gains[0];
    return false;
}

inline ChannelGrid swap_two_users(const ChannelGrid& grid)
{
    std::vector<FadingState> states;
    states.reserve(grid.size());
    for (const auto& st : grid)
        states.push_back({{st.gains[1], st.gains[0]}, st.weight});
    return ChannelGrid(std::move(states), grid.label());
}

inline EquilibriumReport swap_two_users(EquilibriumReport r)
{
    std::swap(r.levels.lambda[0], r.levels.lambda[1]);
    PowerPolicy p(r.policy.num_states(), 2);
    for (std::size_t s = 0; s < p.num_states(); ++s)
        for (std::size_t i : {0, 1}) {
            p.power(s, i) = r.policy.power(s, 1 - i);
            p.share(s, i) = r.policy.share(s, 1 - i);
        }
    r.policy = std::move(p);
    std::swap(r.rates.rates[0], r.rates.rates[1]);
    std::swap(r.budget_residuals[0], r.budget_residuals[1]);
    for (auto& h : r.level_history)
        std::swap(h[0], h[1]);
    return r;
}

} // namespace detail

// The two users are solved in a canonical order, so relabeling the users
// relabels the result exactly.
inline EquilibriumReport nash_solve_2user(const ChannelGrid& grid, const SystemParams& params,
                                          const NashOptions& opt = {})
{
    require(grid.num_users() == 2, "nash_solve_2user needs a 2-user grid");
    params.validate(2);
    if (params.power_budgets[1] == 0.0)
        return detail::single_user_report(grid, params, 0, opt);
    if (params.power_budgets[0] == 0.0)
        return detail::single_user_report(grid, params, 1, opt);
    if (detail::second_user_first(grid, params)) {
        const ChannelGrid swapped = detail::swap_two_users(grid);
        const SystemParams sp{params.noise_variance, {params.power_budgets[1], params.power_budgets[0]}};
        return detail::swap_two_users(detail::TwoUserCutSolver(swapped, sp, opt).solve());
    }
    return detail::TwoUserCutSolver(grid, params, opt).solve();
}

namespace detail {

// N-user equilibrium as the minimizer of the convex dual
//   D(γ) = sum_i γ_i P̄_i + E[max_i φ_i(γ_i)],  φ(γ) = max_p ln(1 + p h/σ²) - γ p,
// with γ_i = 1/λ_i. The max over users is smoothed by a log-sum-exp at
// temperature τ and Newton's method is continued as τ → 0; the softmax weights
// become the time-sharing shares of tied states.
class SmoothedDualSolver {
public:
    SmoothedDualSolver(const ChannelGrid& grid, const SystemParams& params, const NashOptions& opt)
        : grid_(grid), params_(params), opt_(opt)
    {
        for (std::size_t i = 0; i < grid.num_users(); ++i)
            if (params.power_budgets[i] > 0.0)
                active_.push_back(i);
    }

    EquilibriumReport solve()
    {
        const std::size_t m = active_.size();
        const auto w = state_weights(grid_);
        Eigen::VectorXd gamma(m);
        for (std::size_t a = 0; a < m; ++a) {
            const std::size_t i = active_[a];
            const double level = waterfill_level(w, clean_floors(grid_, params_, i), params_.power_budgets[i]);
            require(std::isfinite(level), "budget cannot be spent: the gain is zero on every state");
            gamma(a) = 1.0 / level;
        }

        std::size_t iterations = 0;
        std::vector<std::vector<double>> history;
        bool budget_left = true;
        for (double tau = 1.0; tau >= 1e-13 && budget_left; tau *= 0.1) {
            for (std::size_t it = 0; it < 60; ++it) {
                if (iterations >= opt_.max_iters) {
                    budget_left = false;
                    break;
                }
                ++iterations;
                const Eval e = evaluate(gamma, tau, true);
                if (relative_gradient(e.grad) <= std::max(1e-14, 1e-2 * tau))
                    break;
                Eigen::MatrixXd hess = e.hess;
                const double ridge = 1e-14 * std::max(hess.diagonal().maxCoeff(), 1e-300);
                hess.diagonal().array() += ridge;
                Eigen::VectorXd step = hess.ldlt().solve(-e.grad);
                if (!step.allFinite() || e.grad.dot(step) >= 0.0)
                    step = -e.grad.cwiseQuotient(hess.diagonal());
                double scale = 1.0;
                for (std::size_t a = 0; a < m; ++a)
                    if (step(a) < 0.0)
                        scale = std::min(scale, 0.9 * gamma(a) / -step(a));
                bool accepted = false;
                const double g0 = e.grad.lpNorm<Eigen::Infinity>();
                const double slope = e.grad.dot(step);
                const double noise_floor = 1e-15 * std::fabs(e.value);
                for (int ls = 0; ls < 60; ++ls) {
                    const Eigen::VectorXd trial = gamma + scale * step;
                    const Eval t = evaluate(trial, tau, false);
                    // Armijo, or a gradient decrease once D no longer resolves the step.
                    if (t.value <= e.value + 1e-4 * scale * slope
                        || (std::fabs(t.value - e.value) <= noise_floor && t.grad.lpNorm<Eigen::Infinity>() < g0)) {
                        accepted = !(trial == gamma);
                        gamma = trial;
                        break;
                    }
                    scale *= 0.5;
                }
                if (!accepted)
                    break;
            }
            history.push_back(levels_of(gamma).lambda);
        }
        if (auto exact = polish(gamma)) {
            exact->iterations = iterations;
            exact->level_history = std::move(history);
            finish_report(grid_, params_, opt_, *exact);
            exact->converged = exact->converged && transmit_condition_holds(exact->levels, exact->policy);
            return *std::move(exact);
        }
        return harden(gamma, iterations, std::move(history));
    }

private:
    struct Eval {
        double value = 0.0;
        Eigen::VectorXd grad;
        Eigen::MatrixXd hess;
    };

    WaterLevels levels_of(const Eigen::VectorXd& gamma) const
    {
        WaterLevels levels{std::vector<double>(grid_.num_users(), 0.0)};
        for (std::size_t a = 0; a < active_.size(); ++a)
            levels.lambda[active_[a]] = 1.0 / gamma(a);
        return levels;
    }

    double relative_gradient(const Eigen::VectorXd& grad) const
    {
        double r = 0.0;
        for (std::size_t a = 0; a < active_.size(); ++a)
            r = std::max(r, std::fabs(grad(a)) / params_.power_budgets[active_[a]]);
        return r;
    }

    Eval evaluate(const Eigen::VectorXd& gamma, double tau, bool with_hessian) const
    {
        const std::size_t m = active_.size();
        const double noise = params_.noise_variance;
        Eval e;
        e.grad = Eigen::VectorXd::Zero(m);
        if (with_hessian)
            e.hess = Eigen::MatrixXd::Zero(m, m);
        for (std::size_t a = 0; a < m; ++a) {
            e.value += gamma(a) * params_.power_budgets[active_[a]];
            e.grad(a) = params_.power_budgets[active_[a]];
        }
        Eigen::VectorXd phi(m), power(m), curv(m), pi(m);
        for (std::size_t s = 0; s < grid_.size(); ++s) {
            const auto& h = grid_[s].gains;
            for (std::size_t a = 0; a < m; ++a) {
                const double x = h[active_[a]] / (gamma(a) * noise);
                if (x > 1.0) {
                    phi(a) = std::log(x) - 1.0 + 1.0 / x;
                    power(a) = 1.0 / gamma(a) - noise / h[active_[a]];
                    curv(a) = 1.0 / (gamma(a) * gamma(a));
                } else {
                    phi(a) = 0.0;
                    power(a) = 0.0;
                    curv(a) = 0.0;
                }
            }
            const double top = phi.maxCoeff();
            pi = ((phi.array() - top) / tau).exp();
            const double z = pi.sum();
            pi /= z;
            const double w = grid_[s].weight;
            e.value += w * (top + tau * std::log(z));
            e.grad -= w * pi.cwiseProduct(power);
            if (with_hessian) {
                const Eigen::VectorXd u = pi.cwiseProduct(power);
                e.hess.diagonal() += w * (pi.cwiseProduct(curv) + u.cwiseProduct(power) / tau);
                e.hess -= (w / tau) * u * u.transpose();
            }
        }
        return e;
    }

    // Every transmitting user maximizes λ_i h_i within tie_tol.
    bool transmit_condition_holds(const WaterLevels& levels, const PowerPolicy& policy) const
    {
        for (std::size_t s = 0; s < grid_.size(); ++s) {
            const auto& h = grid_[s].gains;
            double top = 0.0;
            for (std::size_t i = 0; i < h.size(); ++i)
                top = std::max(top, levels[i] * h[i]);
            for (std::size_t i = 0; i < h.size(); ++i)
                if (policy.power(s, i) > 0.0 && policy.share(s, i) > 0.0 && levels[i] * h[i] < top * (1.0 - opt_.tie_tol))
                    return false;
        }
        return true;
    }

    // Tie between users a < b shared by one or more states with equal λ_i h_i.
    struct TieEdge {
        std::size_t a = 0;
        std::size_t b = 0;
        std::vector<std::size_t> states;
    };

    // Exact solve for the ownership structure read off the smoothed solution.
    // Tied users form a forest; each tree has one free scalar t with λ_i = c_i t
    // fixed by  sum_i (P̄_i - W_i)/λ_i = sum_ties w (1 - σ²/L)^+,  where W_i is
    // the power spent on owned states and L the common λ_i h_i of a tie state.
    // Shares then follow by peeling leaves. Other structures return nullopt.
    std::optional<EquilibriumReport> polish(const Eigen::VectorXd& gamma) const
    {
        const std::size_t n = grid_.num_users();
        const double noise = params_.noise_variance;
        std::vector<double> lambda(n, 0.0);
        for (std::size_t a = 0; a < active_.size(); ++a)
            lambda[active_[a]] = 1.0 / gamma(a);

        constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> owner(grid_.size(), none);
        std::vector<TieEdge> edges;
        for (std::size_t s = 0; s < grid_.size(); ++s) {
            const auto& h = grid_[s].gains;
            double top = 0.0;
            for (std::size_t i : active_)
                top = std::max(top, lambda[i] * h[i]);
            if (top <= noise)
                continue;
            std::vector<std::size_t> tied;
            for (std::size_t i : active_)
                if (lambda[i] * h[i] >= top * (1.0 - 1e-10))
                    tied.push_back(i);
            if (tied.size() == 1) {
                owner[s] = tied.front();
                continue;
            }
            if (tied.size() > 2)
                return std::nullopt;
            auto it = std::find_if(edges.begin(), edges.end(),
                                   [&](const TieEdge& e) { return e.a == tied[0] && e.b == tied[1]; });
            if (it == edges.end())
                edges.push_back({tied[0], tied[1], {s}});
            else
                it->states.push_back(s);
        }

        // Components, scale factors c_i and cycle detection.
        std::vector<std::vector<std::size_t>> incident(n);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            incident[edges[e].a].push_back(e);
            incident[edges[e].b].push_back(e);
        }
        std::vector<std::size_t> comp(n, none);
        std::vector<double> scale(n, 0.0);
        std::vector<std::vector<std::size_t>> members;
        for (std::size_t root : active_) {
            if (comp[root] != none)
                continue;
            const std::size_t id = members.size();
            members.push_back({root});
            comp[root] = id;
            scale[root] = 1.0;
            std::size_t edge_count = 0;
            for (std::size_t k = 0; k < members[id].size(); ++k) {
                const std::size_t u = members[id][k];
                for (std::size_t e : incident[u]) {
                    const std::size_t v = edges[e].a == u ? edges[e].b : edges[e].a;
                    const auto& h = grid_[edges[e].states.front()].gains;
                    if (comp[v] == none) {
                        comp[v] = id;
                        scale[v] = scale[u] * h[u] / h[v];
                        members[id].push_back(v);
                        ++edge_count;
                    }
                }
            }
            std::size_t internal = 0;
            for (std::size_t u : members[id])
                internal += incident[u].size();
            if (internal / 2 != edge_count)
                return std::nullopt;
        }

        auto owned_power = [&](std::size_t i, double level) {
            double acc = 0.0;
            for (std::size_t s = 0; s < grid_.size(); ++s)
                if (owner[s] == i)
                    acc += grid_[s].weight * active_power(level, noise, grid_[s].gains[i]);
            return acc;
        };

        for (std::size_t id = 0; id < members.size(); ++id) {
            const auto& users = members[id];
            auto excess = [&](double t) {
                double lhs = 0.0;
                for (std::size_t i : users) {
                    const double level = scale[i] * t;
                    lhs += (params_.power_budgets[i] - owned_power(i, level)) / level;
                }
                for (const auto& e : edges) {
                    if (comp[e.a] != id)
                        continue;
                    for (std::size_t s : e.states) {
                        const double common = scale[e.a] * t * grid_[s].gains[e.a];
                        lhs -= grid_[s].weight * std::max(1.0 - noise / common, 0.0);
                    }
                }
                return lhs;
            };
            const double t0 = lambda[users.front()];
            double lo = t0;
            double hi = t0;
            double step = 1e-9;
            std::size_t guard = 0;
            while (excess(lo) < 0.0 && guard++ < 200) {
                lo /= 1.0 + step;
                step *= 2.0;
            }
            step = 1e-9;
            while (excess(hi) > 0.0 && guard++ < 400) {
                hi *= 1.0 + step;
                step *= 2.0;
            }
            if (guard >= 400)
                return std::nullopt;
            for (int it = 0; it < 200 && hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (excess(mid) > 0.0 ? lo : hi) = mid;
            }
            const double t = 0.5 * (lo + hi);
            for (std::size_t i : users)
                lambda[i] = scale[i] * t;
        }

        // Shares by peeling leaves of each tie tree.
        std::vector<double> theta(edges.size(), 0.5); // share of edge.a
        std::vector<double> assigned(n, 0.0);
        std::vector<std::size_t> degree(n, 0);
        std::vector<bool> done(edges.size(), false);
        for (std::size_t i = 0; i < n; ++i)
            degree[i] = incident[i].size();
        auto tie_power = [&](const TieEdge& e, std::size_t i) {
            double acc = 0.0;
            for (std::size_t s : e.states)
                acc += grid_[s].weight * active_power(lambda[i], noise, grid_[s].gains[i]);
            return acc;
        };
        std::vector<std::size_t> leaves;
        for (std::size_t i = 0; i < n; ++i)
            if (degree[i] == 1)
                leaves.push_back(i);
        while (!leaves.empty()) {
            const std::size_t u = leaves.back();
            leaves.pop_back();
            if (degree[u] != 1)
                continue;
            std::size_t e = none;
            for (std::size_t k : incident[u])
                if (!done[k])
                    e = k;
            const std::size_t v = edges[e].a == u ? edges[e].b : edges[e].a;
            const double need = params_.power_budgets[u] - owned_power(u, lambda[u]) - assigned[u];
            const double avail = tie_power(edges[e], u);
            const double share_u = avail > 0.0 ? std::clamp(need / avail, 0.0, 1.0) : 0.5;
            theta[e] = edges[e].a == u ? share_u : 1.0 - share_u;
            assigned[v] += (1.0 - share_u) * tie_power(edges[e], v);
            done[e] = true;
            degree[u] = 0;
            if (--degree[v] == 1)
                leaves.push_back(v);
        }

        EquilibriumReport report;
        report.levels.lambda = lambda;
        report.policy = PowerPolicy(grid_.size(), n);
        for (std::size_t s = 0; s < grid_.size(); ++s)
            if (owner[s] != none)
                report.policy.power(s, owner[s]) = active_power(lambda[owner[s]], noise, grid_[s].gains[owner[s]]);
        for (std::size_t e = 0; e < edges.size(); ++e)
            for (std::size_t s : edges[e].states) {
                for (std::size_t i = 0; i < n; ++i)
                    report.policy.share(s, i) = 0.0;
                report.policy.power(s, edges[e].a) = active_power(lambda[edges[e].a], noise, grid_[s].gains[edges[e].a]);
                report.policy.power(s, edges[e].b) = active_power(lambda[edges[e].b], noise, grid_[s].gains[edges[e].b]);
                report.policy.share(s, edges[e].a) = theta[e];
                report.policy.share(s, edges[e].b) = 1.0 - theta[e];
            }
        return report;
    }

    EquilibriumReport harden(const Eigen::VectorXd& gamma, std::size_t iterations,
                             std::vector<std::vector<double>> history) const
    {
        const std::size_t m = active_.size();
        const double tau = 1e-13;
        EquilibriumReport report;
        report.levels = levels_of(gamma);
        report.policy = PowerPolicy(grid_.size(), grid_.num_users());
        const double noise = params_.noise_variance;
        std::vector<double> phi(m), pi(m);
        for (std::size_t s = 0; s < grid_.size(); ++s) {
            const auto& h = grid_[s].gains;
            double top = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                const double x = h[active_[a]] / (gamma(a) * noise);
                phi[a] = x > 1.0 ? std::log(x) - 1.0 + 1.0 / x : 0.0;
                top = std::max(top, phi[a]);
            }
            if (top <= 0.0)
                continue;
            double z = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                pi[a] = std::exp((phi[a] - top) / tau);
                z += pi[a];
            }
            std::size_t lead = 0;
            for (std::size_t a = 0; a < m; ++a) {
                pi[a] /= z;
                if (pi[a] > pi[lead])
                    lead = a;
            }
            if (pi[lead] >= 1.0 - 1e-12) {
                const std::size_t i = active_[lead];
                report.policy.power(s, i) = active_power(report.levels[i], noise, h[i]);
                continue;
            }
            for (std::size_t i = 0; i < grid_.num_users(); ++i)
                report.policy.share(s, i) = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                if (pi[a] < 1e-15)
                    continue;
                const std::size_t i = active_[a];
                report.policy.power(s, i) = active_power(report.levels[i], noise, h[i]);
                report.policy.share(s, i) = pi[a];
            }
        }
        report.iterations = iterations;
        report.level_history = std::move(history);
        finish_report(grid_, params_, opt_, report);
        return report;
    }

    const ChannelGrid& grid_;
    const SystemParams& params_;
    NashOptions opt_;
    std::vector<std::size_t> active_;
};

} // namespace detail

// General N-user solver; two-user grids are delegated to the cut search.
inline EquilibriumReport nash_solve_dual(const ChannelGrid& grid, const SystemParams& params, const NashOptions& opt = {})
{
    require(grid.num_users() >= 2, "the N-user solver needs at least two users");
    params.validate(grid.num_users());
    std::size_t positive = 0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < grid.num_users(); ++i)
        if (params.power_budgets[i] > 0.0) {
            ++positive;
            last = i;
        }
    if (positive == 1)
        return detail::single_user_report(grid, params, last, opt);
    return detail::SmoothedDualSolver(grid, params, opt).solve();
}

inline EquilibriumReport nash_solve_nuser(const ChannelGrid& grid, const SystemParams& params,
                                          const NashOptions& opt = {})
{
    if (grid.num_users() == 2)
        return nash_solve_2user(grid, params, opt);
    return nash_solve_dual(grid, params, opt);
}

} // namespace macgame

#endif
