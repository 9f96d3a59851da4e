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

#ifndef MACGAME_CLI_RUNNER_HPP
#define MACGAME_CLI_RUNNER_HPP

#include "../capacity.hpp"
#include "../parallel.hpp"
#include "../repeated.hpp"
#include "../report.hpp"
#include "../scalar_game.hpp"
#include "../stackelberg.hpp"
#include "../vector.hpp"
#include "scenario.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace macgame::cli {

struct RunOptions {
    std::optional<std::size_t> threads;
    std::optional<double> tol;
};

struct Artifact {
    std::string name;
    std::string content;
};

// Everything a run produces, held in memory until it is written.
struct RunResult {
    std::vector<Artifact> files;
    bool converged = true;
};

namespace detail {

struct Solvers {
    NashOptions nash;
    LowLevelOptions low_level;
    OracleOptions oracle;
    VecOptions vec;
    std::size_t threads = 1;
};

inline Solvers solvers_for(const Scenario& sc, const RunOptions& run)
{
    Solvers s;
    const auto tol = run.tol ? run.tol : sc.tol;
    if (tol) {
        require(*tol > 0.0, "tolerance must be positive");
        s.nash.tol = s.low_level.tol = s.oracle.tol = s.vec.tol = *tol;
    }
    if (sc.max_iters)
        s.nash.max_iters = s.low_level.max_iters = s.oracle.max_iters = s.vec.max_iters = *sc.max_iters;
    s.low_level.record_history = false;
    s.threads = run.threads.value_or(sc.threads);
    return s;
}

inline std::string join(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? ", " : "") + num(v[i]);
    return out;
}

inline std::string award_text(const RateAward& mu) { return "(" + join(mu.mu) + ")"; }

inline void header(std::ostream& out, const Scenario& sc, std::size_t states, std::size_t users)
{
    static const char* families[] = {"exponential", "uniform", "explicit"};
    out << "scenario: " << sc.name << '\n';
    out << "task: " << task_name(sc.task) << '\n';
    out << "channel: " << (sc.vector ? "vector" : "scalar") << ' ' << families[static_cast<int>(sc.channel.family)]
        << ", " << states << " states";
    if (sc.channel.family != Family::explicit_list)
        out << " (" << (sc.channel.sampling == Sampling::monte_carlo ? "monte_carlo" : "quadrature") << ", seed "
            << sc.seed << ')';
    out << '\n';
    out << "users: " << users << ", noise " << num(sc.params.noise_variance) << ", budgets "
        << join(sc.params.power_budgets) << "\n\n";
}

template <class State>
void check_users(const BasicGrid<State>& grid, const Scenario& sc)
{
    if (grid.num_users() != sc.params.num_users())
        throw config_error("system.budgets", "the channel has " + std::to_string(grid.num_users()) +
                                                 " users but " + std::to_string(sc.params.num_users()) +
                                                 " budgets are given");
}

template <class Grid, class Build>
Grid build_checked(const Scenario& sc, Build&& build)
{
    try {
        Grid g = build(sc);
        check_users(g, sc);
        return g;
    } catch (const config_error&) {
        throw;
    } catch (const error& e) {
        throw config_error(sc.channel.family == Family::explicit_list ? "states" : "channel", e.what());
    }
}

inline ChannelGrid scalar_grid(const Scenario& sc)
{
    return build_checked<ChannelGrid>(sc, scenario_grid);
}

inline VectorGrid vector_grid(const Scenario& sc)
{
    return build_checked<VectorGrid>(sc, scenario_vector_grid);
}

inline std::string csv(auto&& write)
{
    std::ostringstream out;
    write(out);
    return out.str();
}

inline void run_nash(const Scenario& sc, const Solvers& sv, RunResult& res, std::ostream& rep)
{
    const ChannelGrid grid = scalar_grid(sc);
    header(rep, sc, grid.size(), grid.num_users());
    const EquilibriumReport r = grid.num_users() == 2 ? nash_solve_2user(grid, sc.params, sv.nash)
                                                      : nash_solve_nuser(grid, sc.params, sv.nash);
    describe(rep, grid, r, "Nash equilibrium");
    res.converged = r.converged;
    res.files.push_back({"equilibrium.csv", csv([&](std::ostream& o) { write_equilibrium_csv(o, grid, r); })});
}

inline void run_sweep(const Scenario& sc, const Solvers& sv, RunResult& res, std::ostream& rep)
{
    const ChannelGrid grid = scalar_grid(sc);
    header(rep, sc, grid.size(), 2);
    const auto alphas = sc.alphas.empty() ? alpha_fan(grid, sc.alpha_count) : sc.alphas;
    const auto sweep = alpha_sweep(grid, sc.params, alphas, sv.low_level, sv.threads);
    rep << "Stackelberg sweep over " << sweep.size() << " thresholds\n";
    for (const auto& p : sweep) {
        rep << "  alpha=" << p.alpha.str() << ": ";
        if (!p.error.empty()) {
            rep << "failed: " << p.error << '\n';
            res.converged = false;
            continue;
        }
        rep << "rates (" << join(p.report.rates.rates) << ") levels (" << join(p.report.levels.lambda)
            << ") residual " << num(p.report.residual) << (p.report.converged ? "" : " NOT CONVERGED") << '\n';
        res.converged = res.converged && p.report.converged;
    }
    res.files.push_back({"sweep.csv", csv([&](std::ostream& o) { write_sweep_csv(o, sweep); })});
}

inline void run_epsilon(const Scenario& sc, const Solvers& sv, RunResult& res, std::ostream& rep)
{
    const ChannelGrid grid = scalar_grid(sc);
    header(rep, sc, grid.size(), 2);
    const auto choice = epsilon_stackelberg(grid, sc.params, sc.mus.front(), sc.epsilon, sc.alpha_budget, sv.low_level);
    rep << "epsilon-Stackelberg strategy for mu = " << award_text(sc.mus.front()) << '\n';
    rep << "  alpha: " << choice.alpha.str() << '\n';
    rep << "  payoff: " << num(choice.payoff) << '\n';
    rep << "  upper bound: " << num(choice.upper_bound) << '\n';
    rep << "  evaluations: " << choice.evaluations << '\n';
    rep << "  certified within epsilon " << num(sc.epsilon) << ": " << (choice.certified ? "yes" : "no") << "\n\n";
    describe(rep, grid, choice.report, "Low-level equilibrium");
    res.converged = choice.report.converged;
    res.files.push_back({"equilibrium.csv", csv([&](std::ostream& o) { write_equilibrium_csv(o, grid, choice.report); })});
}

inline std::vector<BoundaryPoint> boundary_points(const ChannelGrid& grid, const SystemParams& params,
                                                  const std::vector<RateAward>& mus, const Solvers& sv)
{
    std::vector<BoundaryPoint> points(mus.size());
    parallel_for(mus.size(), sv.threads,
                 [&](std::size_t k) { points[k] = boundary_oracle(grid, params, mus[k], sv.oracle); });
    return points;
}

inline void run_boundary(const Scenario& sc, const Solvers& sv, RunResult& res, std::ostream& rep)
{
    const ChannelGrid grid = scalar_grid(sc);
    header(rep, sc, grid.size(), 2);
    const auto mus = sc.mus.empty() ? award_fan(sc.mu_count) : sc.mus;
    const auto points = boundary_points(grid, sc.params, mus, sv);
    rep << "Capacity boundary at " << points.size() << " awards\n";
    for (const auto& p : points) {
        rep << "  mu=" << award_text(p.mu) << ": rates (" << join(p.rates.rates) << ") payoff " << num(p.payoff)
            << " kkt " << num(p.kkt_residual) << (p.time_sharing ? " time-sharing" : "")
            << (p.converged ? "" : " NOT CONVERGED") << '\n';
        res.converged = res.converged && p.converged;
    }
    res.files.push_back({"region.csv", csv([&](std::ostream& o) { write_region_csv(o, points); })});
}

inline void run_repeated(const Scenario& sc, const Solvers& sv, RunResult& res, std::ostream& rep)
{
    const ChannelGrid grid = scalar_grid(sc);
    header(rep, sc, grid.size(), 2);
    const RepeatedGame game = make_repeated_game(grid, sc.params, sc.mus.front(), sv.oracle);
    const std::array<PunishmentLength, 2> need{min_punishment_length(game, 0), min_punishment_length(game, 1)};
    std::array<std::size_t, 2> lengths{std::max<std::size_t>(need[0].length, 1),
                                       std::max<std::size_t>(need[1].length, 1)};
    if (sc.lengths)
        lengths = *sc.lengths;
    const auto strategy = TriggerStrategy::unchecked(lengths);
    const PayoffMode mode = sc.delta ? PayoffMode::discounted(*sc.delta) : PayoffMode::time_average();

    std::array<Behavior, 2> behaviors{Behavior::comply(), Behavior::comply()};
    const Simulation compliant = simulate(game, strategy, behaviors, sc.horizon, mode);
    if (sc.deviator)
        behaviors[sc.deviator - 1] = Behavior::deviate(sc.deviate_at);
    const Simulation sim = simulate(game, strategy, behaviors, sc.horizon, mode);

    rep << "Repeated game at mu = " << award_text(sc.mus.front()) << '\n';
    rep << "  cooperative rates: (" << join(game.cooperative_rates.rates) << ")\n";
    rep << "  boundary and corner solves converged: " << (game.converged ? "yes" : "no") << '\n';
    for (std::size_t i : {0, 1}) {
        const auto& n = need[i];
        rep << "  user " << i + 1 << ": cooperative " << num(n.cooperative_rate) << ", best deviation "
            << num(n.deviation_rate) << ", punished " << num(n.punished_rate) << '\n';
        rep << "    minimum punishment length " << n.length << " (corner bound " << n.corner_bound
            << ", deterrence " << n.deterrence << "), using " << lengths[i]
            << (lengths[i] < n.length ? " (below minimum)" : "") << '\n';
    }
    rep << "  payoff (" << (sc.delta ? "discounted, delta " + num(*sc.delta) : std::string("time average")) << ", "
        << sc.horizon << " stages)\n";
    rep << "    all comply: (" << join(compliant.payoff) << ")\n";
    if (sc.deviator)
        rep << "    user " << sc.deviator << " deviates: (" << join(sim.payoff) << "), gain "
            << num(sim.payoff[sc.deviator - 1] - compliant.payoff[sc.deviator - 1]) << '\n';
    res.converged = game.converged;
    res.files.push_back({"trajectory.csv", csv([&](std::ostream& o) { write_trajectory_csv(o, sim); })});
}

inline void run_vector_nash(const Scenario& sc, const Solvers& sv, RunResult& res, std::ostream& rep)
{
    const VectorGrid grid = vector_grid(sc);
    require(grid.num_users() == 2, "vector games are defined for two users");
    header(rep, sc, grid.size(), 2);
    const EquilibriumReport r = vec_nash_solve(grid, sc.params, sv.vec);
    rep << "antennas: " << grid.antennas() << "\n\n";
    describe(rep, grid, r, "Vector Nash equilibrium");
    rep << "  sum-capacity KKT residual: " << num(vec_sum_kkt_residual(grid, sc.params, r.policy)) << '\n';
    res.converged = r.converged;
    res.files.push_back({"equilibrium.csv", csv([&](std::ostream& o) { write_equilibrium_csv(o, grid, r); })});
}

inline void run_vector_gap(const Scenario& sc, const Solvers& sv, RunResult& res, std::ostream& rep)
{
    const VectorGrid grid = vector_grid(sc);
    require(grid.num_users() == 2, "vector games are defined for two users");
    header(rep, sc, grid.size(), 2);
    const VecNashGap gap = vec_nash_gap(grid, sc.params, sv.vec);
    rep << "antennas: " << grid.antennas() << "\n\n";
    rep << "Vector Nash against the sum capacity\n";
    rep << "  Nash rates: (" << join(gap.nash_rates.rates) << "), sum " << num(gap.nash_rates.sum()) << '\n';
    rep << "  sum capacity of the Nash policy: " << num(gap.sp_sum_rate) << '\n';
    rep << "  gap: " << num(gap.gap) << '\n';
    rep << "  sum-capacity KKT residual: " << num(gap.kkt_residual) << '\n';
    rep << "  converged: " << (gap.converged ? "yes" : "no") << '\n';
    res.converged = gap.converged;
    const std::vector<VectorGapRow> rows{{sc.name, gap}};
    res.files.push_back({"vector_gap.csv", csv([&](std::ostream& o) { write_vector_gap_csv(o, rows); })});
}

inline void run_audit(const Scenario& sc, const Solvers& sv, RunResult& res, std::ostream& rep)
{
    const ChannelGrid grid = scalar_grid(sc);
    header(rep, sc, grid.size(), 2);
    AuditOptions opt;
    opt.epsilon = sc.epsilon;
    opt.alpha_budget = sc.alpha_budget;
    opt.low_level = sv.low_level;
    opt.oracle = sv.oracle;
    opt.threads = sv.threads;
    const auto rows = boundary_gap_audit(grid, sc.params, sc.mus, opt);
    rep << "Stackelberg payoff against the capacity boundary\n";
    for (const auto& r : rows) {
        rep << "  mu=" << award_text(r.mu) << ": alpha " << r.alpha.str() << ", Stackelberg " << num(r.stackelberg_payoff)
            << ", boundary " << num(r.oracle_payoff) << ", gap " << num(r.gap)
            << (r.oracle_converged ? "" : " NOT CONVERGED") << '\n';
        res.converged = res.converged && r.oracle_converged;
    }
    if (sc.samples > 0) {
        rep << "Randomized partitions (" << sc.samples << " per award, seed " << sc.seed << ")\n";
        for (const auto& mu : sc.mus) {
            const auto pa = partition_audit(grid, sc.params, mu, sc.samples, sc.seed, opt);
            rep << "  mu=" << award_text(mu) << ": best payoff " << num(pa.best_payoff) << ", minimum gap "
                << num(pa.min_gap) << ", unconverged " << pa.nonconverged << '\n';
        }
    }
    res.files.push_back({"gap.csv", csv([&](std::ostream& o) { write_gap_csv(o, rows); })});
}

} // namespace detail

inline RunResult run_scenario(const Scenario& sc, const RunOptions& opt = {})
{
    const detail::Solvers sv = detail::solvers_for(sc, opt);
    RunResult res;
    std::ostringstream rep;
    switch (sc.task) {
    case Task::nash: detail::run_nash(sc, sv, res, rep); break;
    case Task::stackelberg_sweep: detail::run_sweep(sc, sv, res, rep); break;
    case Task::epsilon_stackelberg: detail::run_epsilon(sc, sv, res, rep); break;
    case Task::capacity_boundary: detail::run_boundary(sc, sv, res, rep); break;
    case Task::repeated: detail::run_repeated(sc, sv, res, rep); break;
    case Task::vector_nash: detail::run_vector_nash(sc, sv, res, rep); break;
    case Task::vector_gap: detail::run_vector_gap(sc, sv, res, rep); break;
    case Task::audit: detail::run_audit(sc, sv, res, rep); break;
    }
    rep << "\nstatus: " << (res.converged ? "converged" : "NOT CONVERGED") << '\n';
    res.files.insert(res.files.begin(), {"report.txt", rep.str()});
    return res;
}

struct TraceRow {
    std::string source;
    std::optional<RateAward> mu;
    std::optional<Alpha> alpha;
    RateVector rates;
};

// source,mu_1,mu_2,alpha,rate_1,rate_2 with empty fields where a column does
// not apply.
inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows)
{
    out << "source,mu_1,mu_2,alpha,rate_1,rate_2\n";
    for (const auto& r : rows) {
        out << r.source << ',';
        if (r.mu)
            out << num(r.mu->mu[0]) << ',' << num(r.mu->mu[1]);
        else
            out << ',';
        out << ',' << (r.alpha ? r.alpha->str() : std::string()) << ',' << num(r.rates[0]) << ','
            << num(r.rates[1]) << '\n';
    }
}

// Capacity boundary over an award fan, Stackelberg points over a threshold
// fan, the Nash point and both corners, with a dominance audit of every
// non-boundary row against the boundary.
inline RunResult trace_scenario(const Scenario& sc, const RunOptions& opt = {})
{
    const detail::Solvers sv = detail::solvers_for(sc, opt);
    if (sc.vector)
        throw config_error("channel.kind", "region traces need a scalar channel");
    if (sc.params.num_users() != 2)
        throw config_error("system.budgets", "region traces are defined for two users");
    const ChannelGrid grid = detail::scalar_grid(sc);
    RunResult res;
    std::ostringstream rep;
    detail::header(rep, sc, grid.size(), 2);

    const auto boundary = detail::boundary_points(grid, sc.params, award_fan(sc.trace_mu_count), sv);
    const auto sweep = alpha_sweep(grid, sc.params, alpha_fan(grid, sc.trace_alpha_count), sv.low_level, sv.threads);
    const EquilibriumReport nash = nash_solve_2user(grid, sc.params, sv.nash);
    const EquilibriumReport cr1 = corner_point(grid, sc.params, CornerOrder::decode_2_first);
    const EquilibriumReport cr2 = corner_point(grid, sc.params, CornerOrder::decode_1_first);

    std::vector<TraceRow> rows;
    for (const auto& b : boundary) {
        rows.push_back({"boundary", b.mu, std::nullopt, b.rates});
        res.converged = res.converged && b.converged;
    }
    for (const auto& p : sweep) {
        if (!p.error.empty()) {
            rep << "stackelberg alpha=" << p.alpha.str() << " failed: " << p.error << '\n';
            res.converged = false;
            continue;
        }
        rows.push_back({"stackelberg", std::nullopt, p.alpha, p.report.rates});
        res.converged = res.converged && p.report.converged;
    }
    rows.push_back({"nash", std::nullopt, std::nullopt, nash.rates});
    rows.push_back({"corner", std::nullopt, std::nullopt, cr1.rates});
    rows.push_back({"corner", std::nullopt, std::nullopt, cr2.rates});
    res.converged = res.converged && nash.converged;

    double worst = -INFINITY;
    std::string worst_row;
    for (const auto& r : rows) {
        if (r.source == "boundary")
            continue;
        for (const auto& b : boundary) {
            const double excess = r.rates.weighted(b.mu.mu) - b.payoff;
            if (excess > worst) {
                worst = excess;
                worst_row = r.source + (r.alpha ? " alpha=" + r.alpha->str() : std::string());
            }
        }
    }
    const double scale = std::max(1.0, boundary.front().payoff);
    rep << "Region trace: " << boundary.size() << " boundary points, " << rows.size() - boundary.size()
        << " achievable points\n";
    rep << "  Nash rates: (" << detail::join(nash.rates.rates) << ")\n";
    rep << "  CR1 rates: (" << detail::join(cr1.rates.rates) << ")\n";
    rep << "  CR2 rates: (" << detail::join(cr2.rates.rates) << ")\n";
    rep << "  dominance audit: largest excess over a supporting line " << num(worst) << " (" << worst_row << "), "
        << (worst <= 1e-6 * scale ? "inside the region" : "OUTSIDE THE REGION") << '\n';
    rep << "\nstatus: " << (res.converged ? "converged" : "NOT CONVERGED") << '\n';
    res.files.push_back({"report.txt", rep.str()});
    res.files.push_back({"trace.csv", detail::csv([&](std::ostream& o) { write_trace_csv(o, rows); })});
    return res;
}

// Writes every artifact into `dir`, creating it if needed. Files written by a
// failed call are removed before the error propagates.
inline void write_artifacts(const std::filesystem::path& dir, const RunResult& res)
{
    std::vector<std::filesystem::path> written;
    try {
        std::filesystem::create_directories(dir);
        for (const auto& f : res.files) {
            const auto path = dir / f.name;
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            written.push_back(path);
            out << f.content;
            out.close();
            if (!out)
                throw error("cannot write '" + path.string() + "'");
        }
    } catch (...) {
        std::error_code ec;
        for (const auto& p : written)
            std::filesystem::remove(p, ec);
        throw;
    }
}

} // namespace macgame::cli

#endif
