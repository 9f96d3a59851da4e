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

#ifndef MACGAME_CAPACITY_HPP
#define MACGAME_CAPACITY_HPP

#include "channel.hpp"
#include "decoding.hpp"
#include "error.hpp"
#include "policy.hpp"
#include "projected_gradient.hpp"
#include "scalar_game.hpp"
#include "waterfill.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <vector>

namespace macgame {

struct PentagonConstraints {
    double r1_max = 0.0;
    double r2_max = 0.0;
    double sum_max = 0.0;
};

inline PentagonConstraints pentagon(const FadingState& state, const SystemParams& params, double p1, double p2)
{
    require(state.gains.size() == 2, "the pentagon is defined for two users");
    require(p1 >= 0.0 && p2 >= 0.0, "powers must be nonnegative");
    const double noise = params.noise_variance;
    const double rx1 = p1 * state.gains[0];
    const double rx2 = p2 * state.gains[1];
    return {half_log2_1p(rx1 / noise), half_log2_1p(rx2 / noise), half_log2_1p((rx1 + rx2) / noise)};
}

// Weights μ_i of the base-station payoff sum_i μ_i R_i.
struct RateAward {
    std::vector<double> mu;

    void validate(std::size_t n_users) const
    {
        require(mu.size() == n_users, "one rate award per user is required");
        bool any = false;
        for (double m : mu) {
            require(std::isfinite(m) && m >= 0.0, "rate awards must be finite and nonnegative");
            any = any || m > 0.0;
        }
        require(any, "at least one rate award must be positive");
    }

    bool all_equal() const
    {
        return std::all_of(mu.begin(), mu.end(), [&](double m) { return m == mu.front(); });
    }
};

// CR1: user 2 is decoded first (user 1 sees only noise). CR2 mirrors it.
enum class CornerOrder { decode_2_first, decode_1_first };

inline DecodingStrategy corner_strategy(std::size_t states, CornerOrder order)
{
    return order == CornerOrder::decode_2_first ? DecodingStrategy::all_decode_2_first(states)
                                                : DecodingStrategy::all_decode_1_first(states);
}

// Sequential water-filling: the user decoded last fills over σ², the other over
// σ² plus the received power of the first.
inline EquilibriumReport corner_point(const ChannelGrid& grid, const SystemParams& params, CornerOrder order)
{
    require(grid.num_users() == 2, "corner points are defined for two users");
    params.validate(2);
    const std::size_t last = order == CornerOrder::decode_2_first ? 0 : 1;
    const std::size_t first = 1 - last;
    const auto w = detail::state_weights(grid);

    EquilibriumReport report;
    report.levels.lambda.assign(2, 0.0);
    report.policy = PowerPolicy(grid.size(), 2);
    std::vector<double> noise(grid.size(), params.noise_variance);
    if (params.power_budgets[last] > 0.0) {
        const Waterfill wf = waterfill(w, detail::floors_over(grid, last, noise), params.power_budgets[last]);
        report.levels.lambda[last] = wf.level;
        report.policy.set_user_powers(last, wf.powers);
    }
    for (std::size_t s = 0; s < grid.size(); ++s)
        noise[s] += report.policy.power(s, last) * grid[s].gains[last];
    if (params.power_budgets[first] > 0.0) {
        const Waterfill wf = waterfill(w, detail::floors_over(grid, first, noise), params.power_budgets[first]);
        report.levels.lambda[first] = wf.level;
        report.policy.set_user_powers(first, wf.powers);
    }
    report.iterations = 1;
    fill_budget_residuals(grid, params, report);
    report.rates = average_rates(grid, params, report.policy, corner_strategy(grid.size(), order));
    report.converged = true;
    report.convention = "sequential water-filling";
    return report;
}

// Sum-rate point; coincides with the Nash equilibrium of the water-filling game.
inline EquilibriumReport sum_point(const ChannelGrid& grid, const SystemParams& params, const NashOptions& opt = {})
{
    EquilibriumReport report = grid.num_users() == 1 ? detail::single_user_report(grid, params, 0, opt)
                                                     : nash_solve_nuser(grid, params, opt);
    report.convention = "sum-rate point (time-sharing)";
    return report;
}

// Sum rate of a policy in which each slot carries one transmitter:
// E[ sum_i share_i * ½log2(1 + h_i P_i / σ²) ].
inline double single_transmitter_sum_rate(const ChannelGrid& grid, const SystemParams& params, const PowerPolicy& policy)
{
    return expectation_indexed(grid, [&](std::size_t s) {
        double r = 0.0;
        for (std::size_t i = 0; i < grid.num_users(); ++i)
            r += policy.share(s, i) * half_log2_1p(grid[s].gains[i] * policy.power(s, i) / params.noise_variance);
        return r;
    });
}

// Decoding order of the boundary point: ascending μ, so the largest award is
// decoded last. Equal awards keep index order.
inline std::vector<std::size_t> decoding_order(const RateAward& mu)
{
    std::vector<std::size_t> order(mu.mu.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mu.mu[a] < mu.mu[b]; });
    return order;
}

// Successive-decoding rates with users decoded in `order` (first entry first).
inline RateVector successive_rates(const ChannelGrid& grid, const SystemParams& params, const PowerPolicy& policy,
                                   const std::vector<std::size_t>& order)
{
    check_policy_shape(grid, policy);
    const std::size_t n = grid.num_users();
    RateVector out{std::vector<double>(n, 0.0)};
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const auto& h = grid[s].gains;
        double tail = 0.0;
        for (std::size_t k = n; k-- > 0;) {
            const std::size_t i = order[k];
            const double rx = policy.power(s, i) * h[i];
            out.rates[i] += grid[s].weight * half_log2_1p(rx / (params.noise_variance + tail));
            tail += rx;
        }
    }
    return out;
}

struct BoundaryPoint {
    RateAward mu;
    RateVector rates;
    PowerPolicy policy;
    double payoff = 0.0;
    std::vector<std::size_t> order;   // decoding order, first decoded first
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    bool time_sharing = false;        // equal awards: reported at the sum-rate point
};

struct OracleOptions {
    double tol = 1e-8;                          // KKT residual, powers in units of the noise variance
    std::size_t max_iters = 20000;
    bool equal_mu_fallback = true;             // equal awards return the sum-rate point
    bool barzilai_borwein = true;
    std::optional<PowerPolicy> start;          // default: each user spreads its budget evenly
};

namespace detail {

// Weighted successive-decoding objective
//   sum_s w_s sum_m (μ_(m) - μ_(m-1)) ½log2(1 + sum_{k>=m} P_(k) h_(k) / σ²)
// over a flat state-major power table, in the metric <a, b> = sum_s w_s a_s·b_s.
class BoundaryObjective {
public:
    BoundaryObjective(const ChannelGrid& grid, const SystemParams& params, const RateAward& mu)
        : grid_(grid), params_(params), order_(decoding_order(mu)), n_(grid.num_users()), weights_(state_weights(grid))
    {
        double prev = 0.0;
        for (std::size_t i : order_) {
            delta_.push_back(mu.mu[i] - prev);
            prev = mu.mu[i];
        }
    }

    const std::vector<std::size_t>& order() const { return order_; }

    double value(const std::vector<double>& x) const
    {
        double acc = 0.0;
        for (std::size_t s = 0; s < grid_.size(); ++s) {
            const auto& h = grid_[s].gains;
            double tail = 0.0;
            double js = 0.0;
            for (std::size_t m = n_; m-- > 0;) {
                const std::size_t i = order_[m];
                tail += x[s * n_ + i] * h[i];
                js += delta_[m] * half_log2_1p(tail / params_.noise_variance);
            }
            acc += weights_[s] * js;
        }
        return acc;
    }

    void gradient(const std::vector<double>& x, std::vector<double>& g) const
    {
        constexpr double c = 0.5 / std::numbers::ln2;
        std::vector<double> tails(n_);
        for (std::size_t s = 0; s < grid_.size(); ++s) {
            const auto& h = grid_[s].gains;
            double tail = 0.0;
            for (std::size_t m = n_; m-- > 0;) {
                tail += x[s * n_ + order_[m]] * h[order_[m]];
                tails[m] = tail;
            }
            double acc = 0.0;
            for (std::size_t m = 0; m < n_; ++m) {
                acc += delta_[m] * c / (params_.noise_variance + tails[m]);
                g[s * n_ + order_[m]] = h[order_[m]] * acc;
            }
        }
    }

    void project(std::vector<double>& x) const
    {
        for (std::size_t i = 0; i < n_; ++i)
            project_budget_column(weights_, params_.power_budgets[i], x, n_, i);
    }

    double inner(const std::vector<double>& a, const std::vector<double>& b) const
    {
        double acc = 0.0;
        for (std::size_t s = 0; s < grid_.size(); ++s) {
            double part = 0.0;
            for (std::size_t i = 0; i < n_; ++i)
                part += a[s * n_ + i] * b[s * n_ + i];
            acc += weights_[s] * part;
        }
        return acc;
    }

    // Curvature bound used for the first step.
    double lipschitz() const
    {
        double hmax = 0.0;
        for (const auto& st : grid_)
            for (double h : st.gains)
                hmax = std::max(hmax, h);
        const double mu_max = std::accumulate(delta_.begin(), delta_.end(), 0.0);
        const double sigma = params_.noise_variance;
        return std::max(static_cast<double>(n_) * mu_max * hmax * hmax * 0.5 / std::numbers::ln2 / (sigma * sigma),
                        1e-300);
    }

private:
    const ChannelGrid& grid_;
    const SystemParams& params_;
    std::vector<std::size_t> order_;
    std::vector<double> delta_;
    std::size_t n_;
    std::vector<double> weights_;
};

} // namespace detail

inline BoundaryPoint boundary_oracle(const ChannelGrid& grid, const SystemParams& params, const RateAward& mu,
                                     const OracleOptions& opt = {})
{
    params.validate(grid.num_users());
    mu.validate(grid.num_users());
    const std::size_t n = grid.num_users();
    BoundaryPoint point;
    point.mu = mu;
    point.order = decoding_order(mu);

    if (opt.equal_mu_fallback && mu.all_equal()) {
        NashOptions nopt;
        nopt.tol = opt.tol;
        const EquilibriumReport sp = sum_point(grid, params, nopt);
        point.policy = sp.policy;
        point.rates = sp.rates;
        point.payoff = sp.rates.weighted(mu.mu);
        point.converged = sp.converged;
        point.iterations = sp.iterations;
        point.time_sharing = true;
        return point;
    }

    // Solved in units of the noise variance, so the result does not depend on
    // the power scale.
    const double sigma = params.noise_variance;
    SystemParams unit{1.0, params.power_budgets};
    for (double& p : unit.power_budgets)
        p /= sigma;
    const detail::BoundaryObjective objective(grid, unit, mu);
    std::vector<double> x(grid.size() * n, 0.0);
    if (opt.start) {
        check_policy_shape(grid, *opt.start);
        for (std::size_t s = 0; s < grid.size(); ++s)
            for (std::size_t i = 0; i < n; ++i)
                x[s * n + i] = opt.start->share(s, i) * opt.start->power(s, i) / sigma;
    } else {
        for (std::size_t s = 0; s < grid.size(); ++s)
            for (std::size_t i = 0; i < n; ++i)
                x[s * n + i] = unit.power_budgets[i];
    }
    SpgOptions sopt;
    sopt.tol = opt.tol;
    sopt.max_iters = opt.max_iters;
    sopt.initial_step = 0.5 / objective.lipschitz();
    sopt.barzilai_borwein = opt.barzilai_borwein;
    const SpgResult res = spg_maximize(objective, std::move(x), sopt);

    point.policy = PowerPolicy(grid.size(), n);
    for (std::size_t s = 0; s < grid.size(); ++s)
        for (std::size_t i = 0; i < n; ++i)
            point.policy.power(s, i) = res.x[s * n + i] * sigma;

    // Users without award do not affect the payoff; they water-fill against the
    // interference left after the users decoded after them.
    const auto w = detail::state_weights(grid);
    for (std::size_t k = n; k-- > 0;) {
        const std::size_t i = point.order[k];
        if (mu.mu[i] > 0.0 || params.power_budgets[i] <= 0.0)
            continue;
        std::vector<double> noise(grid.size(), params.noise_variance);
        for (std::size_t s = 0; s < grid.size(); ++s)
            for (std::size_t j = k + 1; j < n; ++j)
                noise[s] += point.policy.power(s, point.order[j]) * grid[s].gains[point.order[j]];
        const auto floors = detail::floors_over(grid, i, noise);
        const double level = waterfill_level(w, floors, params.power_budgets[i]);
        if (std::isfinite(level))
            point.policy.set_user_powers(i, waterfill_powers(floors, level));
    }

    point.rates = successive_rates(grid, params, point.policy, point.order);
    point.payoff = point.rates.weighted(mu.mu);
    point.kkt_residual = res.kkt_residual;
    point.iterations = res.iterations;
    point.converged = res.converged;
    return point;
}

// Awards (μ_1, μ_2) = (cos θ, sin θ) for θ evenly spaced in [0, π/2].
inline std::vector<RateAward> award_fan(std::size_t count)
{
    require(count >= 2, "an award fan needs at least two awards");
    std::vector<RateAward> out;
    for (std::size_t k = 0; k < count; ++k) {
        const double theta = 0.5 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count - 1);
        double c = std::cos(theta);
        double s = std::sin(theta);
        if (k == 0)
            s = 0.0;
        if (k + 1 == count)
            c = 0.0;
        if (std::fabs(c - s) <= 1e-15)
            s = c;
        out.push_back(RateAward{{c, s}});
    }
    return out;
}

// Boundary points over an award fan.
inline std::vector<BoundaryPoint> region_trace(const ChannelGrid& grid, const SystemParams& params, std::size_t count,
                                               const OracleOptions& opt = {})
{
    require(grid.num_users() == 2, "region traces are defined for two users");
    std::vector<BoundaryPoint> out;
    for (const auto& mu : award_fan(count))
        out.push_back(boundary_oracle(grid, params, mu, opt));
    return out;
}

} // namespace macgame

#endif
