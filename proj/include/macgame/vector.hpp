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
// Two users, Nr receive antennas. Each user sends one stream with scalar power
// P_i(s) along its amplitude vector h_i(s); the received covariance is
// σ²I + sum_i P_i h_i h_iᵀ.

#ifndef MACGAME_VECTOR_HPP
#define MACGAME_VECTOR_HPP

#include "channel.hpp"
#include "decoding.hpp"
#include "error.hpp"
#include "policy.hpp"
#include "projected_gradient.hpp"
#include "scalar_game.hpp"
#include "stackelberg.hpp"
#include "waterfill.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace macgame {

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        acc += a[k] * b[k];
    return acc;
}

inline void require_two_user_vector(const VectorGrid& grid)
{
    require(grid.num_users() == 2, "vector games are defined for two users");
}

} // namespace detail

// h_uᵀ(σ²I + P h_o h_oᵀ)⁻¹ h_u by the rank-one inversion identity:
//   ‖h_u‖²/σ² − P (h_oᵀh_u)² / (σ²(σ² + P‖h_o‖²)).
inline double effective_snr(const VectorFadingState& state, std::size_t user, double interferer_power, double noise)
{
    require(state.num_users() == 2, "effective SNR is defined for two users");
    const auto& h = state.gain_vectors[user];
    const auto& o = state.gain_vectors[1 - user];
    const double own = detail::dot(h, h) / noise;
    if (interferer_power <= 0.0)
        return own;
    const double c = detail::dot(h, o);
    const double corr = interferer_power * c * c / (noise * (noise + interferer_power * detail::dot(o, o)));
    return std::max(own - corr, 0.0);
}

// Same quantity from a dense solve of the Nr×Nr covariance.
inline double effective_snr_dense(const VectorFadingState& state, std::size_t user, double interferer_power, double noise)
{
    const std::size_t nr = state.antennas();
    const Eigen::Map<const Eigen::VectorXd> h(state.gain_vectors[user].data(), static_cast<Eigen::Index>(nr));
    const Eigen::Map<const Eigen::VectorXd> o(state.gain_vectors[1 - user].data(), static_cast<Eigen::Index>(nr));
    const Eigen::MatrixXd cov =
        noise * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nr)) +
        interferer_power * o * o.transpose();
    return h.dot(cov.inverse() * h);
}

// Rates with the other user treated as noise.
inline RateVector vec_noise_rates(const VectorGrid& grid, const SystemParams& params, const PowerPolicy& policy)
{
    detail::require_two_user_vector(grid);
    check_policy_shape(grid, policy);
    RateVector out{{0.0, 0.0}};
    for (std::size_t s = 0; s < grid.size(); ++s) {
        for (std::size_t i : {0, 1}) {
            const double other = policy.time_shared(s) ? 0.0 : policy.power(s, 1 - i);
            const double snr = effective_snr(grid[s], i, other, params.noise_variance);
            out.rates[i] += grid[s].weight * policy.share(s, i) * half_log2_1p(policy.power(s, i) * snr);
        }
    }
    return out;
}

// E[½log2 det(I + (P1 h1h1ᵀ + P2 h2h2ᵀ)/σ²)], the successive-decoding sum rate.
// Time-shared states contribute the sum of their single-user rates.
inline double vec_sum_capacity(const VectorGrid& grid, const SystemParams& params, const PowerPolicy& policy)
{
    detail::require_two_user_vector(grid);
    check_policy_shape(grid, policy);
    const double noise = params.noise_variance;
    return expectation_indexed(grid, [&](std::size_t s) {
        const auto& h = grid[s].gain_vectors;
        const double p1 = policy.power(s, 0);
        const double p2 = policy.power(s, 1);
        if (policy.time_shared(s))
            return policy.share(s, 0) * half_log2_1p(p1 * detail::dot(h[0], h[0]) / noise) +
                   policy.share(s, 1) * half_log2_1p(p2 * detail::dot(h[1], h[1]) / noise);
        // Sylvester: det(I + H P Hᵀ/σ²) = det(I₂ + P^½ HᵀH P^½/σ²).
        const double g11 = p1 * detail::dot(h[0], h[0]) / noise;
        const double g22 = p2 * detail::dot(h[1], h[1]) / noise;
        const double g12 = std::sqrt(p1 * p2) * detail::dot(h[0], h[1]) / noise;
        return 0.5 * std::log2((1.0 + g11) * (1.0 + g22) - g12 * g12);
    });
}

// Water-filling over 1/EffectiveSNR against the opponent's powers.
inline Waterfill vec_waterfill_response(const VectorGrid& grid, const SystemParams& params, std::size_t user,
                                        const std::vector<double>& opponent_powers)
{
    detail::require_two_user_vector(grid);
    params.validate(2);
    require(user < 2, "user index out of range");
    require(opponent_powers.size() == grid.size(), "opponent policy must list one power per state");
    std::vector<double> w(grid.size()), floors(grid.size());
    double spent = 0.0;
    for (std::size_t s = 0; s < grid.size(); ++s) {
        require(opponent_powers[s] >= 0.0, "opponent powers must be nonnegative");
        spent += grid[s].weight * opponent_powers[s];
        w[s] = grid[s].weight;
        const double snr = effective_snr(grid[s], user, opponent_powers[s], params.noise_variance);
        floors[s] = snr > 0.0 ? 1.0 / snr : std::numeric_limits<double>::infinity();
    }
    require(spent <= params.power_budgets[1 - user] * (1.0 + 1e-9), "opponent policy violates its budget");
    if (params.power_budgets[user] <= 0.0)
        return {0.0, std::vector<double>(grid.size(), 0.0)};
    return waterfill(w, floors, params.power_budgets[user]);
}

struct VecOptions {
    double tol = 1e-10;              // water-filling residual, relative to the water level
    std::size_t max_iters = 100000;
};

// Largest relative distance between a user's powers and its water-filling
// response to the other user: zero exactly at the KKT point of the
// sum-capacity program.
inline double vec_waterfill_residual(const VectorGrid& grid, const SystemParams& params, const PowerPolicy& policy)
{
    double r = 0.0;
    for (std::size_t i : {0, 1}) {
        if (params.power_budgets[i] <= 0.0)
            continue;
        const Waterfill br = vec_waterfill_response(grid, params, i, policy.user_powers(1 - i));
        for (std::size_t s = 0; s < grid.size(); ++s)
            r = std::max(r, std::fabs(policy.share(s, i) * policy.power(s, i) - br.powers[s]) / br.level);
    }
    return r;
}

namespace detail {

inline ChannelGrid scalar_view(const VectorGrid& grid)
{
    std::vector<FadingState> states;
    states.reserve(grid.size());
    for (const auto& s : grid) {
        FadingState f;
        f.weight = s.weight;
        for (const auto& h : s.gain_vectors)
            f.gains.push_back(h[0] * h[0]);
        states.push_back(std::move(f));
    }
    return ChannelGrid(std::move(states), grid.label());
}

} // namespace detail

// Iterative water-filling from zero powers. Single-antenna grids are the
// scalar game, whose equilibrium time-shares, so they are solved as such.
inline EquilibriumReport vec_nash_solve(const VectorGrid& grid, const SystemParams& params, const VecOptions& opt = {})
{
    detail::require_two_user_vector(grid);
    params.validate(2);
    if (grid[0].antennas() == 1) {
        NashOptions nopt;
        nopt.tol = std::max(opt.tol, 1e-12);
        EquilibriumReport rep = nash_solve_2user(detail::scalar_view(grid), params, nopt);
        rep.rates = vec_noise_rates(grid, params, rep.policy);
        return rep;
    }

    EquilibriumReport report;
    report.policy = PowerPolicy(grid.size(), 2);
    report.levels.lambda.assign(2, 0.0);
    for (std::size_t it = 1;; ++it) {
        for (std::size_t i : {0, 1}) {
            const Waterfill wf = vec_waterfill_response(grid, params, i, report.policy.user_powers(1 - i));
            report.levels.lambda[i] = wf.level;
            report.policy.set_user_powers(i, wf.powers);
        }
        report.iterations = it;
        report.level_history.push_back(report.levels.lambda);
        const double r = vec_waterfill_residual(grid, params, report.policy);
        if (r <= opt.tol || it >= opt.max_iters)
            break;
    }
    for (std::size_t i : {0, 1})
        if (params.power_budgets[i] > 0.0)
            report.levels.lambda[i] = vec_waterfill_response(grid, params, i, report.policy.user_powers(1 - i)).level;
    fill_budget_residuals(grid, params, report);
    report.rates = vec_noise_rates(grid, params, report.policy);
    report.converged = vec_waterfill_residual(grid, params, report.policy) <= opt.tol;
    report.convention = "iterative water-filling";
    return report;
}

namespace detail {

// Sum capacity over a flat state-major power table, w-metric gradient.
class VecSumObjective {
public:
    VecSumObjective(const VectorGrid& grid, const SystemParams& params) : grid_(grid), params_(params)
    {
        for (const auto& s : grid)
            weights_.push_back(s.weight);
    }

    double value(const std::vector<double>& x) const { return vec_sum_capacity(grid_, params_, as_policy(x)); }

    void gradient(const std::vector<double>& x, std::vector<double>& g) const
    {
        constexpr double c = 0.5 / std::numbers::ln2;
        for (std::size_t s = 0; s < grid_.size(); ++s)
            for (std::size_t i : {0, 1}) {
                // h_iᵀ(σ²I + Σ P h hᵀ)⁻¹h_i = q / (1 + P_i q), q the SNR against the other user.
                const double q = effective_snr(grid_[s], i, x[2 * s + 1 - i], params_.noise_variance);
                g[2 * s + i] = c * q / (1.0 + x[2 * s + i] * q);
            }
    }

    void project(std::vector<double>& x) const
    {
        for (std::size_t i : {0, 1})
            project_budget_column(weights_, params_.power_budgets[i], x, 2, i);
    }

    double inner(const std::vector<double>& a, const std::vector<double>& b) const
    {
        double acc = 0.0;
        for (std::size_t s = 0; s < grid_.size(); ++s)
            acc += weights_[s] * (a[2 * s] * b[2 * s] + a[2 * s + 1] * b[2 * s + 1]);
        return acc;
    }

    PowerPolicy as_policy(const std::vector<double>& x) const
    {
        PowerPolicy p(grid_.size(), 2);
        for (std::size_t s = 0; s < grid_.size(); ++s)
            for (std::size_t i : {0, 1})
                p.power(s, i) = x[2 * s + i];
        return p;
    }

    static std::vector<double> flatten(const PowerPolicy& p)
    {
        std::vector<double> x(2 * p.num_states());
        for (std::size_t s = 0; s < p.num_states(); ++s)
            for (std::size_t i : {0, 1})
                x[2 * s + i] = p.share(s, i) * p.power(s, i);
        return x;
    }

    double max_snr() const
    {
        double m = 0.0;
        for (const auto& s : grid_)
            for (const auto& h : s.gain_vectors)
                m = std::max(m, dot(h, h) / params_.noise_variance);
        return m;
    }

private:
    const VectorGrid& grid_;
    const SystemParams& params_;
    std::vector<double> weights_;
};

} // namespace detail

// Projected-gradient residual ‖x − P(x + ∇)‖∞ of a policy in the sum-capacity
// program, powers in units of the noise variance; zero iff the policy
// maximizes the sum capacity.
inline double vec_sum_kkt_residual(const VectorGrid& grid, const SystemParams& params, const PowerPolicy& policy)
{
    detail::require_two_user_vector(grid);
    check_policy_shape(grid, policy);
    const double sigma = params.noise_variance;
    SystemParams unit{1.0, params.power_budgets};
    for (double& p : unit.power_budgets)
        p /= sigma;
    const detail::VecSumObjective f(grid, unit);
    auto x = detail::VecSumObjective::flatten(policy);
    for (double& v : x)
        v /= sigma;
    std::vector<double> g(x.size());
    f.gradient(x, g);
    std::vector<double> probe(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        probe[k] = x[k] + g[k];
    f.project(probe);
    double r = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
        r = std::max(r, std::fabs(probe[k] - x[k]));
    return r;
}

struct VecSumResult {
    PowerPolicy policy;
    double sum_rate = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// Direct maximization of the sum capacity by spectral projected gradient,
// carried out in units of the noise variance.
inline VecSumResult vec_sum_capacity_optimize(const VectorGrid& grid, const SystemParams& params,
                                              const std::optional<PowerPolicy>& start = std::nullopt,
                                              double tol = 1e-10, std::size_t max_iters = 50000)
{
    detail::require_two_user_vector(grid);
    params.validate(2);
    const double sigma = params.noise_variance;
    SystemParams unit{1.0, params.power_budgets};
    for (double& p : unit.power_budgets)
        p /= sigma;
    const detail::VecSumObjective f(grid, unit);
    std::vector<double> x(2 * grid.size());
    if (start) {
        check_policy_shape(grid, *start);
        x = detail::VecSumObjective::flatten(*start);
        for (double& v : x)
            v /= sigma;
    } else {
        for (std::size_t s = 0; s < grid.size(); ++s)
            for (std::size_t i : {0, 1})
                x[2 * s + i] = unit.power_budgets[i];
    }
    SpgOptions opt;
    opt.tol = tol;
    opt.max_iters = max_iters;
    const double snr = f.max_snr();
    opt.initial_step = 0.5 / std::max(0.5 / std::numbers::ln2 * snr * snr, 1e-300);
    SpgResult res = spg_maximize(f, x, opt);
    for (double& v : res.x)
        v *= sigma;
    const PowerPolicy policy = f.as_policy(res.x);
    return {policy, vec_sum_capacity(grid, params, policy), res.kkt_residual, res.iterations, res.converged};
}

struct VecNashGap {
    RateVector nash_rates;
    double sp_sum_rate = 0.0;
    double gap = 0.0;
    double kkt_residual = 0.0;   // of the Nash policy in the sum-capacity program
    bool converged = false;
};

inline VecNashGap vec_nash_gap(const VectorGrid& grid, const SystemParams& params, const VecOptions& opt = {})
{
    const EquilibriumReport nash = vec_nash_solve(grid, params, opt);
    VecNashGap out;
    out.nash_rates = nash.rates;
    out.sp_sum_rate = vec_sum_capacity(grid, params, nash.policy);
    out.gap = out.sp_sum_rate - nash.rates.sum();
    out.kkt_residual = vec_sum_kkt_residual(grid, params, nash.policy);
    out.converged = nash.converged;
    return out;
}

// Powers under a decoding order at water levels λ: the user decoded last
// fills over σ²/‖h‖², the other over 1/EffectiveSNR against it.
inline PowerPolicy vec_strategy_policy(const VectorGrid& grid, const SystemParams& params,
                                       const DecodingStrategy& strategy, const WaterLevels& levels)
{
    strategy.check_covers(grid);
    PowerPolicy p(grid.size(), 2);
    const double noise = params.noise_variance;
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const std::size_t last = strategy.last(s);
        const std::size_t first = strategy.first(s);
        const double clean = effective_snr(grid[s], last, 0.0, noise);
        const double p_last = clean > 0.0 ? std::max(levels[last] - 1.0 / clean, 0.0) : 0.0;
        const double snr = effective_snr(grid[s], first, p_last, noise);
        p.power(s, last) = p_last;
        p.power(s, first) = snr > 0.0 ? std::max(levels[first] - 1.0 / snr, 0.0) : 0.0;
    }
    return p;
}

inline RateVector vec_strategy_rates(const VectorGrid& grid, const SystemParams& params,
                                     const DecodingStrategy& strategy, const PowerPolicy& policy)
{
    strategy.check_covers(grid);
    RateVector out{{0.0, 0.0}};
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const std::size_t last = strategy.last(s);
        const std::size_t first = strategy.first(s);
        const double noise = params.noise_variance;
        out.rates[last] += grid[s].weight * half_log2_1p(policy.power(s, last) * effective_snr(grid[s], last, 0.0, noise));
        out.rates[first] += grid[s].weight *
                            half_log2_1p(policy.power(s, first) * effective_snr(grid[s], first, policy.power(s, last), noise));
    }
    return out;
}

// Low-level game under a decoding partition: alternating exact water-level
// updates from λ = 0, as in the scalar game.
inline EquilibriumReport vec_stackelberg_corners(const VectorGrid& grid, const SystemParams& params,
                                                 const DecodingStrategy& strategy, const LowLevelOptions& opt = {})
{
    detail::require_two_user_vector(grid);
    params.validate(2);
    strategy.check_covers(grid);
    std::vector<double> w(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s)
        w[s] = grid[s].weight;
    const double noise = params.noise_variance;

    auto respond = [&](std::size_t user, double other_level) {
        if (params.power_budgets[user] <= 0.0)
            return 0.0;
        const std::size_t other = 1 - user;
        std::vector<double> floors(grid.size());
        for (std::size_t s = 0; s < grid.size(); ++s) {
            double interference = 0.0;
            if (strategy.first(s) == user) {
                const double clean = effective_snr(grid[s], other, 0.0, noise);
                interference = clean > 0.0 ? std::max(other_level - 1.0 / clean, 0.0) : 0.0;
            }
            const double snr = effective_snr(grid[s], user, interference, noise);
            floors[s] = snr > 0.0 ? 1.0 / snr : std::numeric_limits<double>::infinity();
        }
        const double level = waterfill_level(w, floors, params.power_budgets[user]);
        require(std::isfinite(level), "user " + std::to_string(user + 1) + " has a zero gain vector on every state");
        return level;
    };

    EquilibriumReport report;
    WaterLevels levels{{0.0, 0.0}};
    if (opt.start)
        levels = *opt.start;
    for (std::size_t it = 1;; ++it) {
        levels.lambda[0] = respond(0, levels[1]);
        levels.lambda[1] = respond(1, levels[0]);
        if (opt.record_history)
            report.level_history.push_back(levels.lambda);
        report.iterations = it;
        report.levels = levels;
        report.policy = vec_strategy_policy(grid, params, strategy, levels);
        fill_budget_residuals(grid, params, report);
        if (report.residual <= opt.tol || it >= opt.max_iters)
            break;
    }
    report.rates = vec_strategy_rates(grid, params, strategy, report.policy);
    report.converged = report.residual <= opt.tol;
    report.convention = opt.start ? "alternating water-filling from a given start"
                                  : "lambda=0 monotone iteration (admissible)";
    return report;
}

struct VecPartitionAudit {
    std::size_t samples = 0;
    double best_sum_rate = -std::numeric_limits<double>::infinity();
    double max_sum_rate = 0.0;
    double min_gap = 0.0;
};

// Random explicit partitions against the maximum sum rate.
inline VecPartitionAudit vec_partition_audit(const VectorGrid& grid, const SystemParams& params, std::size_t samples,
                                             std::uint64_t seed, const LowLevelOptions& opt = {})
{
    const EquilibriumReport nash = vec_nash_solve(grid, params);
    VecPartitionAudit out;
    out.samples = samples;
    out.max_sum_rate = vec_sum_capacity(grid, params, nash.policy);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t k = 0; k < samples; ++k) {
        const double p = u(rng);
        std::vector<bool> d(grid.size());
        for (std::size_t s = 0; s < grid.size(); ++s)
            d[s] = u(rng) < p;
        const auto rep = vec_stackelberg_corners(grid, params, DecodingStrategy::explicit_set(std::move(d)), opt);
        out.best_sum_rate = std::max(out.best_sum_rate, rep.rates.sum());
    }
    out.min_gap = out.max_sum_rate - out.best_sum_rate;
    return out;
}

} // namespace macgame

#endif
