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
// Acceptance run. Prints one PASS/FAIL line per criterion, followed by the
// failed checks and a few indented measurements. Exit status is the number of
// failed criteria.

#include <macgame/cli/runner.hpp>
#include <macgame/macgame.hpp>

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace macgame;
using testing_support::random_grid;

namespace {

class Criterion {
public:
    Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {}

    void check(bool ok, const std::string& what)
    {
        ++checks_;
        if (!ok) {
            ++failed_;
            if (failures_.size() < 12)
                failures_.push_back(what);
        }
    }

    void note(const std::string& line) { notes_.push_back(line); }

    bool report(double seconds) const
    {
        std::printf("criterion %d: %s  %s (%zu checks, %zu failed, %.1f s)\n", id_, failed_ == 0 ? "PASS" : "FAIL",
                    title_.c_str(), checks_, failed_, seconds);
        for (const auto& f : failures_)
            std::printf("    failed: %s\n", f.c_str());
        for (const auto& n : notes_)
            std::printf("    %s\n", n.c_str());
        std::fflush(stdout);
        return failed_ == 0;
    }

private:
    int id_;
    std::string title_;
    std::size_t checks_ = 0;
    std::size_t failed_ = 0;
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

struct Case {
    std::string name;
    ChannelGrid grid;
    SystemParams params;
};

ChannelGrid exponential(std::size_t states, std::vector<double> means, std::uint64_t seed)
{
    DistributionSpec spec;
    spec.family = Family::exponential;
    spec.num_users = means.size();
    spec.means = std::move(means);
    return build_grid(spec, states, seed);
}

ChannelGrid uniform(std::size_t states, std::vector<double> lower, std::vector<double> upper, std::uint64_t seed)
{
    DistributionSpec spec;
    spec.family = Family::uniform;
    spec.num_users = lower.size();
    spec.lower = std::move(lower);
    spec.upper = std::move(upper);
    return build_grid(spec, states, seed);
}

const std::vector<Case>& scalar_cases()
{
    static const std::vector<Case> cases{
        {"exp-200", exponential(200, {1.0, 1.0}, 11), {1.0, {1.0, 2.0}}},
        {"exp-500", exponential(500, {1.0, 2.0}, 12), {1.0, {1.0, 1.0}}},
        {"exp-1000", exponential(1000, {2.0, 0.5}, 13), {0.5, {2.0, 1.0}}},
        {"uni-100", uniform(100, {0.1, 0.2}, {2.0, 3.0}, 14), {1.0, {1.0, 1.0}}},
        {"uni-400", uniform(400, {0.5, 0.1}, {1.5, 2.5}, 15), {1.0, {0.5, 1.5}}},
        {"uni-800", uniform(800, {0.05, 0.05}, {4.0, 4.0}, 16), {2.0, {1.0, 3.0}}},
    };
    return cases;
}

const std::vector<RateAward>& unequal_awards()
{
    static const std::vector<RateAward> mus{RateAward{{2.0, 1.0}}, RateAward{{1.0, 2.0}}, RateAward{{3.0, 1.0}},
                                            RateAward{{1.0, 3.0}}};
    return mus;
}

double rate_distance(const RateVector& a, const RateVector& b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::fabs(a[i] - b[i]));
    return d;
}

std::vector<bool> random_partition(std::size_t n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double p = u(rng);
    std::vector<bool> d(n);
    for (std::size_t s = 0; s < n; ++s)
        d[s] = u(rng) < p;
    return d;
}

ChannelGrid swap_users(const ChannelGrid& grid)
{
    std::vector<FadingState> states;
    for (const auto& s : grid)
        states.push_back({{s.gains[1], s.gains[0]}, s.weight});
    return ChannelGrid(states);
}

// ---- 1 -------------------------------------------------------------------

// Per-user rates of `rates_of` restricted to states outside `skip`.
RateVector rates_off(const ChannelGrid& grid, const std::function<std::vector<double>(std::size_t)>& rates_of,
                     const std::vector<bool>& skip)
{
    RateVector out{{0.0, 0.0}};
    for (std::size_t s = 0; s < grid.size(); ++s)
        if (!skip[s]) {
            const auto r = rates_of(s);
            out.rates[0] += grid[s].weight * r[0];
            out.rates[1] += grid[s].weight * r[1];
        }
    return out;
}

void nash_is_sum_rate(Criterion& c)
{
    OracleOptions raw;
    raw.equal_mu_fallback = false;
    const RateAward equal{{1.0, 1.0}};
    for (const auto& k : scalar_cases()) {
        const auto nash = nash_solve_2user(k.grid, k.params);
        const auto canonical = boundary_oracle(k.grid, k.params, equal);
        const auto oracle = boundary_oracle(k.grid, k.params, equal, raw);
        const double sim = simultaneous_mass(k.grid, nash.policy);
        c.check(nash.converged && canonical.converged && oracle.converged, k.name + ": solvers converge");
        c.check(rate_distance(nash.rates, canonical.rates) <= 1e-4, k.name + ": Nash differs from the oracle");
        c.check(sim <= nash.tie_mass, k.name + ": simultaneous mass " + fmt(sim) + " > tie mass");
        c.check(sim <= 1e-6, k.name + ": simultaneous mass " + fmt(sim));

        // Independent maximizer: same sum rate, same per-user rates off the
        // time-shared states, where the maximizer is unique.
        const double dsum = std::fabs(nash.rates.sum() - oracle.rates.sum());
        c.check(dsum <= 1e-4, k.name + ": sum rate differs from the gradient maximizer by " + fmt(dsum));
        std::vector<bool> tied(k.grid.size());
        for (std::size_t s = 0; s < k.grid.size(); ++s)
            tied[s] = nash.policy.time_shared(s);
        const auto off_nash = rates_off(k.grid, [&](std::size_t s) { return state_rates(k.grid, k.params, nash.policy, s); }, tied);
        const auto order = corner_strategy(k.grid.size(), CornerOrder::decode_1_first);
        const auto off_oracle = rates_off(
            k.grid, [&](std::size_t s) { return state_rates(k.grid, k.params, oracle.policy, s, order); }, tied);
        const double doff = rate_distance(off_nash, off_oracle);
        c.check(doff <= 1e-4, k.name + ": per-user rates off the tie differ by " + fmt(doff));
        c.note(k.name + ": tie mass " + fmt(nash.tie_mass) + ", simultaneous mass " + fmt(sim) +
               "; gradient maximizer: sum-rate distance " + fmt(dsum) + ", per-user distance " +
               fmt(rate_distance(nash.rates, oracle.rates)) + " (" + fmt(doff) + " off the tie)");
    }
}

// ---- 2 -------------------------------------------------------------------

void water_level_residuals(Criterion& c)
{
    for (const auto& k : scalar_cases()) {
        const auto rep = nash_solve_2user(k.grid, k.params);
        const double band = testing_support::nash_band_residual(k.grid, k.params.noise_variance, k.params.power_budgets,
                                                                 rep.levels.lambda, 1e-9);
        for (std::size_t i = 0; i < 2; ++i)
            c.check(rep.budget_residuals[i] <= 1e-8 * k.params.power_budgets[i],
                    k.name + ": budget residual " + fmt(rep.budget_residuals[i]));
        const double pmin = std::min(k.params.power_budgets[0], k.params.power_budgets[1]);
        c.check(band <= 1e-8 * pmin, k.name + ": independent residual " + fmt(band));
    }

    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const ChannelGrid grid = random_grid(2, 2, 100 + seed);
        const SystemParams params{1.0, {0.5 + 0.25 * static_cast<double>(seed % 4), 1.0}};
        const auto rep = nash_solve_2user(grid, params);
        const double top = 1.5 * std::max(rep.levels[0], rep.levels[1]) + 1.0;
        const auto best = testing_support::lattice_argmin<2>(
            [&](const std::array<double, 2>& l) {
                return testing_support::nash_band_residual(grid, 1.0, params.power_budgets, {l[0], l[1]}, 2e-4);
            },
            {1e-3, 1e-3}, {top, top}, 1e-2, 1e-4);
        const double d = std::max(std::fabs(rep.levels[0] - best[0]), std::fabs(rep.levels[1] - best[1]));
        worst = std::max(worst, d);
        c.check(d <= 1e-3, "2-state seed " + std::to_string(seed) + ": lattice distance " + fmt(d));
    }
    c.note("2-state lattice distance at most " + fmt(worst));
}

// ---- 3 -------------------------------------------------------------------

void monotone_low_level(Criterion& c)
{
    std::mt19937_64 rng(2718);
    std::size_t starts = 0;
    for (const auto& k : scalar_cases()) {
        for (int n = 0; n < 20; ++n) {
            const auto strategy = DecodingStrategy::explicit_set(random_partition(k.grid.size(), rng));
            const auto eq = low_level_solve(k.grid, k.params, strategy);
            const std::string tag = k.name + " partition " + std::to_string(n);
            c.check(eq.converged, tag + ": converges");
            for (std::size_t t = 1; t < eq.level_history.size(); ++t)
                for (std::size_t i = 0; i < 2; ++i)
                    c.check(eq.level_history[t][i] >= eq.level_history[t - 1][i],
                            tag + ": level decreases at sweep " + std::to_string(t));
            for (double bump : {0.2, 2.0}) {
                LowLevelOptions opt;
                opt.start = WaterLevels{{eq.levels[0] * (1.0 + bump) + bump, eq.levels[1] * (1.0 + bump) + bump}};
                opt.record_history = false;
                const auto other = low_level_solve(k.grid, k.params, strategy, opt);
                if (!other.converged)
                    continue;
                ++starts;
                c.check(eq.rates[0] >= other.rates[0] - 1e-6 && eq.rates[1] >= other.rates[1] - 1e-6,
                        tag + ": perturbed start not dominated");
            }
        }
    }
    c.note(std::to_string(starts) + " perturbed-start equilibria compared");
}

// ---- 4 -------------------------------------------------------------------

void three_points(Criterion& c)
{
    for (const auto& k : scalar_cases()) {
        const auto sp = nash_solve_2user(k.grid, k.params);
        const Alpha a_sp = sp_alpha(k.grid, k.params);
        const auto sweep = alpha_sweep(k.grid, k.params, {Alpha(0.0), Alpha::infinity(), a_sp});
        const double d0 = rate_distance(sweep[0].report.rates, corner_point(k.grid, k.params, CornerOrder::decode_2_first).rates);
        const double di = rate_distance(sweep[1].report.rates, corner_point(k.grid, k.params, CornerOrder::decode_1_first).rates);
        c.check(d0 <= 1e-6, k.name + ": alpha=0 vs corner " + fmt(d0));
        c.check(di <= 1e-6, k.name + ": alpha=inf vs corner " + fmt(di));

        // The threshold partition at the sum-rate ratio, with the states on
        // the threshold time-shared between the two decoding orders.
        const SplitStrategy split = sp_partition(k.grid, k.params);
        const auto threshold = DecodingStrategy::threshold(k.grid, a_sp);
        std::size_t off = 0;
        for (std::size_t n = 0; n < split.grid.size(); ++n) {
            const std::size_t s = split.origin[n];
            if (!sp.policy.time_shared(s))
                off += split.strategy.decode_1_first[n] == threshold.decode_1_first[s] ? 0 : 1;
        }
        c.check(off == 0, k.name + ": " + std::to_string(off) + " states off the threshold partition");
        const auto at = low_level_solve(split.grid, k.params, split.strategy);
        const double ds = rate_distance(at.rates, sp.rates);
        c.check(at.converged && ds <= 1e-6, k.name + ": sum-rate ratio threshold vs sum-rate point " + fmt(ds));
        c.note(k.name + ": sum-rate ratio threshold distance " + fmt(ds) + "; with the threshold states unshared " +
               fmt(rate_distance(sweep[2].report.rates, sp.rates)) + " (time-shared mass " + fmt(sp.tie_mass) + ")");

        AuditOptions opt;
        opt.threads = 0;
        opt.low_level.record_history = false;
        const auto rows = boundary_gap_audit(k.grid, k.params, unequal_awards(), opt);
        for (const auto& r : rows) {
            const std::string mu = "(" + fmt(r.mu.mu[0]) + "," + fmt(r.mu.mu[1]) + ")";
            c.check(r.gap > 1e-3, k.name + " mu " + mu + ": gap " + fmt(r.gap));
            const auto audit = partition_audit(k.grid, k.params, r.mu, 200, 31 + static_cast<std::uint64_t>(r.mu.mu[0]), opt);
            c.check(audit.nonconverged == 0, k.name + " mu " + mu + ": partition samples converge");
            c.check(audit.min_gap > 1e-4, k.name + " mu " + mu + ": sampled partition gap " + fmt(audit.min_gap));
        }
    }
}

// ---- 5 -------------------------------------------------------------------

double deviation_profit(const RepeatedGame& game, std::size_t deviator, std::size_t length, std::size_t stage,
                        std::size_t horizon)
{
    const auto strategy = TriggerStrategy::unchecked({length, length});
    std::array<Behavior, 2> b{Behavior::comply(), Behavior::comply()};
    const double comply = simulate(game, strategy, b, horizon).payoff[deviator];
    b[deviator] = Behavior::deviate({stage});
    return simulate(game, strategy, b, horizon).payoff[deviator] - comply;
}

void repeated_game(Criterion& c)
{
    const std::vector<std::pair<std::string, ChannelGrid>> grids{
        {"two-state", testing_support::grid_of({{2, 1, 0.5}, {1, 2, 0.5}})},
        {"exp-200", exponential(200, {1.0, 1.0}, 21)},
    };
    const SystemParams params{1.0, {1.0, 1.0}};
    const std::vector<RateAward> mus{RateAward{{1.0, 1.0}}, RateAward{{2.0, 1.0}}, RateAward{{1.0, 2.0}},
                                     RateAward{{3.0, 1.0}}};
    for (const auto& [name, grid] : grids) {
        for (const auto& mu : mus) {
            const auto game = make_repeated_game(grid, params, mu);
            const std::size_t dev = decoding_order(mu).back();
            const auto len = min_punishment_length(game, dev);
            const std::string tag = name + " mu (" + fmt(mu.mu[0]) + "," + fmt(mu.mu[1]) + ") user " +
                                    std::to_string(dev + 1) + " T=" + std::to_string(len.length);
            const auto T = static_cast<double>(len.length);
            c.check(game.converged, tag + ": game points converge");
            c.check(len.deviation_rate + T * len.punished_rate < T * len.cooperative_rate, tag + ": inequality at T");
            c.check(!(len.deviation_rate + (T - 1.0) * len.punished_rate < (T - 1.0) * len.cooperative_rate),
                    tag + ": inequality already holds at T-1");

            for (std::size_t stage : {1, 4})
                for (std::size_t extra : {0, 1, 9}) {
                    const double p = deviation_profit(game, dev, len.length, stage, stage + len.length + extra);
                    c.check(p < 0.0, tag + ": deviation at " + std::to_string(stage) + " pays " + fmt(p));
                }

            // One stage less punishment, full punishment window inside the horizon.
            double best = -INFINITY;
            if (len.length == 1) {
                best = len.deviation_rate - len.cooperative_rate;
            } else {
                for (std::size_t stage : {1, 4})
                    for (std::size_t extra : {0, 1, 9})
                        best = std::max(best, deviation_profit(game, dev, len.length - 1, stage,
                                                               stage + len.length - 1 + extra));
            }
            c.check(best > 0.0, tag + ": no profitable deviation at T-1 (best " + fmt(best) + ")");

            const std::size_t D = std::max<std::size_t>(len.deterrence, 1);
            const double at_d = deviation_profit(game, dev, D, 1, 1 + D);
            const double below = len.deterrence == 0 ? 0.0
                                                     : (len.deterrence == 1
                                                            ? len.deviation_rate - len.cooperative_rate
                                                            : deviation_profit(game, dev, len.deterrence - 1, 1, len.deterrence));
            const double margin = len.deviation_rate + (T - 1.0) * len.punished_rate - (T - 1.0) * len.cooperative_rate;
            c.note(tag + ": inequality margin at T-1 " + fmt(margin) + ", simulated deviation payoff at T-1 " + fmt(best) +
                   "; shortest deterring punishment " +
                   std::to_string(len.deterrence) + " (profit " + fmt(at_d) + ", one less " + fmt(below) + ")");
        }
    }
}

// ---- 6 -------------------------------------------------------------------

void n_users(Criterion& c)
{
    const std::vector<Case> cases{
        {"exp3-300", exponential(300, {1.0, 1.5, 0.7}, 41), {1.0, {1.0, 0.6, 1.5}}},
        {"exp3-1000", exponential(1000, {1.0, 1.0, 1.0}, 42), {0.5, {1.0, 1.0, 1.0}}},
        {"uni3-500", uniform(500, {0.1, 0.1, 0.3}, {2.0, 3.0, 1.5}, 43), {1.0, {2.0, 1.0, 0.5}}},
    };
    for (const auto& k : cases) {
        const auto rep = nash_solve_nuser(k.grid, k.params);
        c.check(rep.converged, k.name + ": converges");
        for (std::size_t i = 0; i < 3; ++i) {
            const double r = std::fabs(average_power(k.grid, rep.policy, i) - k.params.power_budgets[i]);
            c.check(r <= 1e-8, k.name + ": budget " + std::to_string(i + 1) + " residual " + fmt(r));
        }
        std::size_t bad = 0;
        for (std::size_t s = 0; s < k.grid.size(); ++s) {
            const auto& h = k.grid[s].gains;
            for (std::size_t i = 0; i < 3; ++i) {
                if (rep.policy.power(s, i) <= 0.0 || rep.policy.share(s, i) <= 0.0)
                    continue;
                for (std::size_t j = 0; j < 3; ++j)
                    bad += rep.levels[i] * h[i] < rep.levels[j] * h[j] - 1e-9 ? 1 : 0;
            }
        }
        c.check(bad == 0, k.name + ": " + std::to_string(bad) + " transmit-condition violations");
        c.note(k.name + ": time-shared mass " + fmt(rep.tie_mass) + ", " + std::to_string(rep.iterations) + " iterations");
    }
    for (const auto& k : scalar_cases()) {
        const auto a = nash_solve_nuser(k.grid, k.params);
        const auto b = nash_solve_2user(k.grid, k.params);
        c.check(a.levels.lambda == b.levels.lambda && a.policy == b.policy && a.rates.rates == b.rates.rates,
                k.name + ": two-user path differs");
    }
}

// ---- 7 -------------------------------------------------------------------

VectorGrid gaussian_vector_grid(std::size_t states, std::size_t antennas, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> amp(0.0, 1.0);
    std::vector<VectorFadingState> out(states);
    for (auto& s : out) {
        s.gain_vectors.assign(2, std::vector<double>(antennas));
        for (auto& h : s.gain_vectors)
            for (auto& a : h)
                a = amp(rng);
        s.weight = 1.0 / static_cast<double>(states);
    }
    return VectorGrid(std::move(out));
}

VectorGrid orthogonal_vector_grid(std::size_t states, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gain(1.0);
    std::vector<VectorFadingState> out(states);
    for (auto& s : out) {
        const double a = std::sqrt(gain(rng)), b = std::sqrt(gain(rng));
        if (gain(rng) < std::log(2.0))
            s.gain_vectors = {{a, 0.0}, {0.0, b}};
        else
            s.gain_vectors = {{0.0, a}, {b, 0.0}};
        s.weight = 1.0 / static_cast<double>(states);
    }
    return VectorGrid(std::move(out));
}

struct SequentialCorner {
    double rate_last = 0.0, rate_first = 0.0;
};

// Last-decoded user fills interference free; the other fills over the
// remaining interference. SNRs by explicit 2x2 inversion, levels by bisection.
SequentialCorner sequential_corner(const VectorGrid& g, const SystemParams& params, std::size_t last)
{
    const std::size_t first = 1 - last;
    const double noise = params.noise_variance;
    auto snr = [&](const VectorFadingState& st, std::size_t user, double p_other) {
        const auto& h = st.gain_vectors[user];
        const auto& o = st.gain_vectors[1 - user];
        const double a = noise + p_other * o[0] * o[0];
        const double b = p_other * o[0] * o[1];
        const double d = noise + p_other * o[1] * o[1];
        return (d * h[0] * h[0] - 2.0 * b * h[0] * h[1] + a * h[1] * h[1]) / (a * d - b * b);
    };
    std::vector<double> w, f_last, f_first, p_last;
    for (const auto& s : g) {
        w.push_back(s.weight);
        f_last.push_back(1.0 / snr(s, last, 0.0));
    }
    const double l_last = testing_support::bisection_level(w, f_last, params.power_budgets[last]);
    for (std::size_t s = 0; s < g.size(); ++s) {
        p_last.push_back(std::max(l_last - f_last[s], 0.0));
        f_first.push_back(1.0 / snr(g[s], first, p_last[s]));
    }
    const double l_first = testing_support::bisection_level(w, f_first, params.power_budgets[first]);
    SequentialCorner out;
    for (std::size_t s = 0; s < g.size(); ++s) {
        out.rate_last += w[s] * 0.5 * std::log2(1.0 + p_last[s] / f_last[s]);
        out.rate_first += w[s] * 0.5 * std::log2(1.0 + std::max(l_first - f_first[s], 0.0) / f_first[s]);
    }
    return out;
}

void vector_channel(Criterion& c)
{
    double worst_snr = 0.0;
    for (std::size_t antennas : {2, 3, 4}) {
        const VectorGrid g = gaussian_vector_grid(200, antennas, 50 + antennas);
        for (const auto& st : g)
            for (std::size_t u : {0, 1})
                for (double p : {0.0, 0.3, 2.0, 40.0}) {
                    const double a = effective_snr(st, u, p, 0.7);
                    const double b = effective_snr_dense(st, u, p, 0.7);
                    worst_snr = std::max(worst_snr, std::fabs(a - b));
                }
    }
    c.check(worst_snr <= 1e-10, "effective SNR vs dense inverse " + fmt(worst_snr));
    c.note("effective SNR disagreement at most " + fmt(worst_snr));

    const SystemParams params{1.0, {1.0, 1.5}};
    const double r = std::sqrt(0.5);
    const VectorGrid tilted(std::vector<VectorFadingState>{{{{1.0, 0.0}, {r, r}}, 0.5},
                                                           {{{0.6, 0.0}, {1.2 * r, 1.2 * r}}, 0.5}});
    const std::vector<std::pair<std::string, VectorGrid>> correlated{
        {"45-degree", tilted},
        {"gauss-2x100", gaussian_vector_grid(100, 2, 61)},
        {"gauss-3x300", gaussian_vector_grid(300, 3, 62)},
    };
    for (const auto& [name, g] : correlated) {
        const auto nash = vec_nash_solve(g, params);
        const double kkt = vec_sum_kkt_residual(g, params, nash.policy);
        const auto gap = vec_nash_gap(g, params);
        const auto direct = vec_sum_capacity_optimize(g, params);
        c.check(nash.converged, name + ": Nash converges");
        c.check(kkt <= 1e-6, name + ": KKT residual " + fmt(kkt));
        c.check(std::fabs(direct.sum_rate - gap.sp_sum_rate) <= 1e-6,
                name + ": direct sum capacity differs by " + fmt(direct.sum_rate - gap.sp_sum_rate));
        c.check(gap.gap > 1e-3, name + ": gap " + fmt(gap.gap));
        c.note(name + ": KKT residual " + fmt(kkt) + ", gap " + fmt(gap.gap));

        if (g.antennas() == 2)
            for (std::size_t last : {0, 1}) {
                const auto strategy = last == 0 ? DecodingStrategy::all_decode_2_first(g.size())
                                                : DecodingStrategy::all_decode_1_first(g.size());
                const auto rep = vec_stackelberg_corners(g, params, strategy);
                const auto ref = sequential_corner(g, params, last);
                const double d = std::max(std::fabs(rep.rates[last] - ref.rate_last),
                                          std::fabs(rep.rates[1 - last] - ref.rate_first));
                c.check(rep.converged && d <= 1e-6, name + ": corner vs sequential oracle " + fmt(d));
            }
    }

    const VectorGrid orth = orthogonal_vector_grid(150, 63);
    const auto og = vec_nash_gap(orth, params);
    c.check(og.gap <= 1e-9, "orthogonal gap " + fmt(og.gap));
    c.check(vec_sum_kkt_residual(orth, params, vec_nash_solve(orth, params).policy) <= 1e-6, "orthogonal KKT residual");
    const VectorGrid single = to_vector_grid(exponential(300, {1.0, 1.0}, 64));
    const auto sg = vec_nash_gap(single, params);
    c.check(sg.gap <= 1e-9, "single-antenna gap " + fmt(sg.gap));
    c.note("orthogonal gap " + fmt(og.gap) + ", single-antenna gap " + fmt(sg.gap));
}

// ---- 8 -------------------------------------------------------------------

// Feasible start for the oracle: a sawtooth profile scaled onto each budget.
PowerPolicy sawtooth_policy(const ChannelGrid& grid, const SystemParams& params, double tilt)
{
    PowerPolicy p(grid.size(), 2);
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const double x = (static_cast<double>(s % 7) + tilt) / (3.0 + tilt);
        p.power(s, 0) = x;
        p.power(s, 1) = 2.0 - x;
    }
    for (std::size_t i = 0; i < 2; ++i) {
        const double scale = params.power_budgets[i] / average_power(grid, p, i);
        for (std::size_t s = 0; s < grid.size(); ++s)
            p.power(s, i) *= scale;
    }
    return p;
}

void cross_cutting(Criterion& c, const std::filesystem::path& scenario_dir)
{
    double worst_scale = 0.0;
    std::size_t swap_mismatch = 0;
    double worst_swap = 0.0;
    double worst_restart = 0.0;
    for (const auto& k : scalar_cases()) {
        const auto& g = k.grid;
        auto all_rates = [&](const SystemParams& p) {
            std::vector<RateVector> out;
            out.push_back(nash_solve_2user(g, p).rates);
            out.push_back(corner_point(g, p, CornerOrder::decode_1_first).rates);
            for (const auto& a : alpha_sweep(g, p, {Alpha(0.5), Alpha(2.0)}))
                out.push_back(a.report.rates);
            out.push_back(boundary_oracle(g, p, RateAward{{2.0, 1.0}}).rates);
            return out;
        };
        const auto base = all_rates(k.params);
        for (double s : {0.01, 100.0}) {
            const SystemParams scaled{s * k.params.noise_variance, {s * k.params.power_budgets[0], s * k.params.power_budgets[1]}};
            const auto other = all_rates(scaled);
            for (std::size_t n = 0; n < base.size(); ++n) {
                const double d = rate_distance(base[n], other[n]);
                worst_scale = std::max(worst_scale, d);
                c.check(d <= 1e-9, k.name + ": scale " + fmt(s) + " item " + std::to_string(n) + " moves " + fmt(d));
            }
        }

        const ChannelGrid mirror = swap_users(g);
        const SystemParams mp{k.params.noise_variance, {k.params.power_budgets[1], k.params.power_budgets[0]}};
        const std::vector<std::pair<RateVector, RateVector>> pairs{
            {nash_solve_2user(g, k.params).rates, nash_solve_2user(mirror, mp).rates},
            {corner_point(g, k.params, CornerOrder::decode_1_first).rates,
             corner_point(mirror, mp, CornerOrder::decode_2_first).rates},
            {alpha_sweep(g, k.params, {Alpha(2.0)})[0].report.rates,
             alpha_sweep(mirror, mp, {Alpha(0.5)})[0].report.rates},
            {boundary_oracle(g, k.params, RateAward{{2.0, 1.0}}).rates,
             boundary_oracle(mirror, mp, RateAward{{1.0, 2.0}}).rates},
        };
        for (std::size_t n = 0; n < pairs.size(); ++n) {
            const auto& [a, b] = pairs[n];
            const bool exact = a[0] == b[1] && a[1] == b[0];
            swap_mismatch += exact ? 0 : 1;
            worst_swap = std::max({worst_swap, std::fabs(a[0] - b[1]), std::fabs(a[1] - b[0])});
            c.check(exact, k.name + ": swap item " + std::to_string(n) + " not exact (" +
                               fmt(std::max(std::fabs(a[0] - b[1]), std::fabs(a[1] - b[0]))) + ")");
        }

        for (const auto& mu : unequal_awards()) {
            const auto ref = boundary_oracle(g, k.params, mu);
            for (double tilt : {0.5, 4.0}) {
                OracleOptions opt;
                opt.start = sawtooth_policy(g, k.params, tilt);
                const auto again = boundary_oracle(g, k.params, mu, opt);
                const double d = std::max(std::fabs(again.payoff - ref.payoff), rate_distance(again.rates, ref.rates));
                worst_restart = std::max(worst_restart, d);
                c.check(d <= 1e-6, k.name + ": oracle restart differs by " + fmt(d));
            }
        }
    }
    for (std::uint64_t seed : {71, 72}) {
        const VectorGrid g = gaussian_vector_grid(120, 2, seed);
        const SystemParams params{1.0, {1.0, 2.0}};
        const auto a = vec_sum_capacity_optimize(g, params);
        const auto b = vec_sum_capacity_optimize(g, params, vec_nash_solve(g, params).policy);
        PowerPolicy skew(g.size(), 2);
        for (std::size_t s = 0; s < g.size(); ++s) {
            skew.power(s, 0) = s % 2 == 0 ? 2.0 * params.power_budgets[0] : 0.0;
            skew.power(s, 1) = s % 2 == 1 ? 2.0 * params.power_budgets[1] : 0.0;
        }
        const auto d = vec_sum_capacity_optimize(g, params, skew);
        const double dd = std::max(std::fabs(a.sum_rate - b.sum_rate), std::fabs(a.sum_rate - d.sum_rate));
        worst_restart = std::max(worst_restart, dd);
        c.check(dd <= 1e-6, "vector sum-capacity restart differs by " + fmt(dd));
    }
    c.note("scale invariance: worst rate change " + fmt(worst_scale));
    c.note("user swap: " + std::to_string(swap_mismatch) + " inexact pairs, worst difference " + fmt(worst_swap));
    c.note("oracle restarts: worst difference " + fmt(worst_restart));

    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(scenario_dir)) {
        if (entry.path().extension() != ".ini")
            continue;
        const auto sc = cli::load_scenario(entry.path());
        const std::string name = entry.path().filename().string();
        for (const bool trace : {false, true}) {
            auto go = [&](std::size_t threads) {
                const cli::RunOptions opt{threads, std::nullopt};
                return trace ? cli::trace_scenario(sc, opt) : cli::run_scenario(sc, opt);
            };
            if (trace && (sc.vector || cli::scenario_grid(sc).num_users() != 2))
                continue;
            const auto a = go(1), b = go(1), d = go(4);
            bool same = a.files.size() == b.files.size() && a.files.size() == d.files.size();
            for (std::size_t n = 0; same && n < a.files.size(); ++n)
                same = a.files[n].name == b.files[n].name && a.files[n].content == b.files[n].content &&
                       a.files[n].name == d.files[n].name && a.files[n].content == d.files[n].content;
            c.check(same, name + (trace ? " trace" : " run") + ": output not byte-identical");
            files += a.files.size();
        }
    }
    c.note(std::to_string(files) + " CLI artifacts reproduced byte for byte across repeats and thread counts");
}

} // namespace

int main(int argc, char** argv)
{
    const std::filesystem::path scenario_dir = argc > 1 ? argv[1] : MACGAME_SCENARIO_DIR;
    const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria{
        {"two-user Nash equilibrium is the sum-rate point", nash_is_sum_rate},
        {"water-level system residuals", water_level_residuals},
        {"low-level game: convergence, monotone iterates, admissibility", monotone_low_level},
        {"Stackelberg sweep reaches the corners and the sum-rate point only", three_points},
        {"repeated game punishment length", repeated_game},
        {"N-user equilibrium", n_users},
        {"vector channel", vector_channel},
        {"cross-cutting numerics", [&](Criterion& c) { cross_cutting(c, scenario_dir); }},
    };
    int failed = 0;
    for (std::size_t n = 0; n < criteria.size(); ++n) {
        Criterion c(static_cast<int>(n + 1), criteria[n].first);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[n].second(c);
        } catch (const std::exception& e) {
            c.check(false, std::string("exception: ") + e.what());
        }
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        failed += c.report(dt.count()) ? 0 : 1;
    }
    return failed;
}
