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

#ifndef MACGAME_CHANNEL_HPP
#define MACGAME_CHANNEL_HPP

// Finite discretizations of the joint fading distribution.
//
// A grid is a weighted list of fading states; every expectation over the
// continuous density is replaced by a weighted sum over the grid. Scalar grids
// store per-user power gains h_i (linear scale). Vector grids store, per user,
// the real amplitude vector of length Nr seen at the receive array; only outer
// products h h^T enter the solvers, so the sign of an entry carries no meaning.

#include "error.hpp"
#include "format.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace macgame {

struct FadingState {
    std::vector<double> gains;
    double weight = 0.0;

    std::size_t num_users() const noexcept { return gains.size(); }
};

struct VectorFadingState {
    std::vector<std::vector<double>> gain_vectors;
    double weight = 0.0;

    std::size_t num_users() const noexcept { return gain_vectors.size(); }
    std::size_t antennas() const noexcept { return gain_vectors.empty() ? 0 : gain_vectors.front().size(); }
};

namespace detail {

inline void validate_state(const FadingState& s, std::size_t n_users, std::size_t /*antennas*/)
{
    require(s.gains.size() == n_users, "fading state has inconsistent user count");
    for (double g : s.gains)
        require(std::isfinite(g) && g >= 0.0, "fading gains must be finite and nonnegative");
}

inline void validate_state(const VectorFadingState& s, std::size_t n_users, std::size_t antennas)
{
    require(s.gain_vectors.size() == n_users, "fading state has inconsistent user count");
    for (const auto& v : s.gain_vectors) {
        require(v.size() == antennas, "gain vectors must share one antenna count");
        for (double a : v)
            require(std::isfinite(a), "gain vector entries must be finite");
    }
}

inline std::size_t antennas_of(const FadingState&) { return 1; }
inline std::size_t antennas_of(const VectorFadingState& s) { return s.antennas(); }

} // namespace detail

// Immutable weighted set of fading states. Weights sum to one.
template <class State>
class BasicGrid {
public:
    using state_type = State;

    BasicGrid(std::vector<State> states, std::string label = {})
        : states_(std::move(states)), label_(std::move(label))
    {
        require(!states_.empty(), "channel grid needs at least one state");
        num_users_ = states_.front().num_users();
        antennas_ = detail::antennas_of(states_.front());
        require(num_users_ >= 1, "channel grid needs at least one user");
        require(antennas_ >= 1, "gain vectors must have at least one entry");
        long double total = 0.0L;
        for (const auto& s : states_) {
            detail::validate_state(s, num_users_, antennas_);
            require(std::isfinite(s.weight) && s.weight > 0.0, "state weights must be positive");
            total += s.weight;
        }
        require(std::fabs(static_cast<double>(total - 1.0L)) <= 1e-12, "state weights must sum to 1");
    }

    const std::vector<State>& states() const noexcept { return states_; }
    const State& operator[](std::size_t i) const { return states_[i]; }
    std::size_t size() const noexcept { return states_.size(); }
    std::size_t num_users() const noexcept { return num_users_; }
    std::size_t antennas() const noexcept { return antennas_; }
    const std::string& label() const noexcept { return label_; }

    auto begin() const noexcept { return states_.begin(); }
    auto end() const noexcept { return states_.end(); }

private:
    std::vector<State> states_;
    std::size_t num_users_ = 0;
    std::size_t antennas_ = 1;
    std::string label_;
};

using ChannelGrid = BasicGrid<FadingState>;
using VectorGrid = BasicGrid<VectorFadingState>;

struct SystemParams {
    double noise_variance = 1.0;
    std::vector<double> power_budgets;

    std::size_t num_users() const noexcept { return power_budgets.size(); }

    // A zero budget models an absent user; at least one user must hold power.
    void validate(std::size_t n_users) const
    {
        require(std::isfinite(noise_variance) && noise_variance > 0.0, "noise variance must be positive");
        require(power_budgets.size() == n_users, "one power budget per user is required");
        bool any = false;
        for (double p : power_budgets) {
            require(std::isfinite(p) && p >= 0.0, "power budgets must be finite and nonnegative");
            any = any || p > 0.0;
        }
        require(any, "at least one user needs a positive power budget");
    }
};

// E[f] = sum_s w(s) f(s).
template <class State, class F>
double expectation(const BasicGrid<State>& grid, F&& f)
{
    double acc = 0.0;
    for (const auto& s : grid)
        acc += s.weight * std::invoke(f, s);
    return acc;
}

// Same sum indexed by state position, for per-state tables.
template <class State, class F>
double expectation_indexed(const BasicGrid<State>& grid, F&& f)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        acc += grid[i].weight * std::invoke(f, i);
    return acc;
}

enum class Family { exponential, uniform, explicit_list };
enum class Sampling { monte_carlo, quadrature };

// Describes the fading law. Exponential gains are Rayleigh-fading powers with the
// given per-user means; uniform gains are drawn on [lower_i, upper_i].
struct DistributionSpec {
    Family family = Family::exponential;
    Sampling sampling = Sampling::monte_carlo;
    std::size_t num_users = 2;
    std::vector<double> means;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<FadingState> states; // explicit_list only
    std::string label;
};

namespace detail {

// 53-bit uniform on [0, 1) from the raw engine output; independent of the
// standard library's distribution implementations.
inline double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline void validate_family(const DistributionSpec& spec)
{
    require(spec.num_users >= 1, "distribution needs at least one user");
    switch (spec.family) {
    case Family::exponential:
        require(spec.means.size() == spec.num_users, "exponential family needs one mean per user");
        for (double m : spec.means)
            require(std::isfinite(m) && m > 0.0, "exponential means must be positive");
        break;
    case Family::uniform:
        require(spec.lower.size() == spec.num_users && spec.upper.size() == spec.num_users,
                "uniform family needs lower and upper bounds per user");
        for (std::size_t i = 0; i < spec.num_users; ++i) {
            require(std::isfinite(spec.lower[i]) && spec.lower[i] >= 0.0, "uniform lower bound must be nonnegative");
            require(std::isfinite(spec.upper[i]) && spec.upper[i] > 0.0, "uniform upper bound must be positive");
            require(spec.lower[i] <= spec.upper[i], "uniform bounds must satisfy lower <= upper");
        }
        break;
    case Family::explicit_list:
        require(!spec.states.empty(), "explicit family needs at least one state");
        break;
    default:
        throw error("unknown distribution family");
    }
}

inline double draw_gain(const DistributionSpec& spec, std::size_t user, std::mt19937_64& rng)
{
    const double u = unit_uniform(rng);
    if (spec.family == Family::exponential)
        return -spec.means[user] * std::log1p(-u);
    return spec.lower[user] + (spec.upper[user] - spec.lower[user]) * u;
}

struct GslFixedDeleter {
    void operator()(gsl_integration_fixed_workspace* w) const noexcept { gsl_integration_fixed_free(w); }
};

// Nodes and probability weights of an n-point rule for one user's marginal.
inline std::pair<std::vector<double>, std::vector<double>>
marginal_rule(const DistributionSpec& spec, std::size_t user, std::size_t n)
{
    std::vector<double> nodes(n), weights(n);
    if (spec.family == Family::uniform && spec.lower[user] == spec.upper[user]) {
        std::fill(nodes.begin(), nodes.end(), spec.lower[user]);
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
        return {nodes, weights};
    }
    std::unique_ptr<gsl_integration_fixed_workspace, GslFixedDeleter> ws;
    if (spec.family == Family::exponential)
        ws.reset(gsl_integration_fixed_alloc(gsl_integration_fixed_laguerre, n, 0.0, 1.0 / spec.means[user], 0.0, 0.0));
    else
        ws.reset(gsl_integration_fixed_alloc(gsl_integration_fixed_legendre, n, spec.lower[user], spec.upper[user], 0.0, 0.0));
    require(ws != nullptr, "quadrature rule allocation failed");
    const double* x = gsl_integration_fixed_nodes(ws.get());
    const double* w = gsl_integration_fixed_weights(ws.get());
    const double total = std::accumulate(w, w + n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        nodes[k] = x[k];
        weights[k] = w[k] / total;
    }
    return {nodes, weights};
}

inline std::vector<FadingState> normalized(std::vector<FadingState> states)
{
    long double total = 0.0L;
    for (const auto& s : states)
        total += s.weight;
    for (auto& s : states)
        s.weight = static_cast<double>(s.weight / total);
    return states;
}

} // namespace detail

// Largest per-user node count accepted in quadrature mode; Laguerre weights
// underflow beyond this.
inline constexpr std::size_t max_quadrature_nodes = 64;

// Monte Carlo mode: `resolution` equally weighted states drawn with `seed`.
// Quadrature mode: product rule with `resolution` nodes per user.
// Explicit lists pass through unchanged.
inline ChannelGrid build_grid(const DistributionSpec& spec, std::size_t resolution, std::uint64_t seed)
{
    require(resolution >= 1, "grid resolution must be at least 1");
    detail::validate_family(spec);
    if (spec.family == Family::explicit_list)
        return ChannelGrid(spec.states, spec.label);

    const std::size_t n_users = spec.num_users;
    std::vector<FadingState> states;
    if (spec.sampling == Sampling::monte_carlo) {
        std::mt19937_64 rng(seed);
        states.reserve(resolution);
        const double w = 1.0 / static_cast<double>(resolution);
        for (std::size_t k = 0; k < resolution; ++k) {
            FadingState s;
            s.gains.resize(n_users);
            for (std::size_t i = 0; i < n_users; ++i)
                s.gains[i] = detail::draw_gain(spec, i, rng);
            s.weight = w;
            states.push_back(std::move(s));
        }
        return ChannelGrid(std::move(states), spec.label);
    }

    require(resolution <= max_quadrature_nodes, "quadrature resolution is limited to 64 nodes per user");
    std::vector<std::pair<std::vector<double>, std::vector<double>>> rules;
    for (std::size_t i = 0; i < n_users; ++i)
        rules.push_back(detail::marginal_rule(spec, i, resolution));
    std::size_t total = 1;
    for (std::size_t i = 0; i < n_users; ++i)
        total *= resolution;
    states.reserve(total);
    std::vector<std::size_t> idx(n_users, 0);
    for (std::size_t k = 0; k < total; ++k) {
        FadingState s;
        s.gains.resize(n_users);
        s.weight = 1.0;
        for (std::size_t i = 0; i < n_users; ++i) {
            s.gains[i] = rules[i].first[idx[i]];
            s.weight *= rules[i].second[idx[i]];
        }
        if (s.weight > 0.0)
            states.push_back(std::move(s));
        for (std::size_t i = n_users; i-- > 0;) {
            if (++idx[i] < resolution)
                break;
            idx[i] = 0;
        }
    }
    return ChannelGrid(detail::normalized(std::move(states)), spec.label);
}

// Vector grids: every entry of every user's vector is the square root of an
// independent power gain drawn from `spec` (user i's parameters apply to all of
// user i's antennas). Explicit lists are given directly as amplitude vectors.
struct VectorDistributionSpec {
    DistributionSpec marginal;
    std::size_t antennas = 2;
    std::vector<VectorFadingState> states; // explicit_list only
};

inline VectorGrid build_vector_grid(const VectorDistributionSpec& spec, std::size_t resolution, std::uint64_t seed)
{
    require(resolution >= 1, "grid resolution must be at least 1");
    if (spec.marginal.family == Family::explicit_list) {
        require(!spec.states.empty(), "explicit family needs at least one state");
        return VectorGrid(spec.states, spec.marginal.label);
    }
    detail::validate_family(spec.marginal);
    require(spec.antennas >= 1, "antenna count must be positive");
    require(spec.marginal.sampling == Sampling::monte_carlo, "vector grids support Monte Carlo sampling only");
    std::mt19937_64 rng(seed);
    std::vector<VectorFadingState> states;
    states.reserve(resolution);
    const double w = 1.0 / static_cast<double>(resolution);
    for (std::size_t k = 0; k < resolution; ++k) {
        VectorFadingState s;
        s.gain_vectors.assign(spec.marginal.num_users, std::vector<double>(spec.antennas));
        for (std::size_t i = 0; i < spec.marginal.num_users; ++i)
            for (std::size_t a = 0; a < spec.antennas; ++a)
                s.gain_vectors[i][a] = std::sqrt(detail::draw_gain(spec.marginal, i, rng));
        s.weight = w;
        states.push_back(std::move(s));
    }
    return VectorGrid(std::move(states), spec.marginal.label);
}

// Single-antenna view of a scalar grid: amplitudes sqrt(h_i).
inline VectorGrid to_vector_grid(const ChannelGrid& grid)
{
    std::vector<VectorFadingState> states;
    states.reserve(grid.size());
    for (const auto& s : grid) {
        VectorFadingState v;
        v.weight = s.weight;
        for (double g : s.gains)
            v.gain_vectors.push_back({std::sqrt(g)});
        states.push_back(std::move(v));
    }
    return VectorGrid(std::move(states), grid.label());
}

// ---- CSV ---------------------------------------------------------------------
//
// Scalar: state_index,weight,h_1,...,h_N
// Vector: state_index,weight,h_1_1,...,h_Nr_1,h_1_2,...,h_Nr_N  (h_k_i = antenna k, user i)
// Values are written in shortest round-trip form so a dump reloads bit-exactly.

inline void write_grid_csv(std::ostream& out, const ChannelGrid& grid)
{
    out << "state_index,weight";
    for (std::size_t i = 1; i <= grid.num_users(); ++i)
        out << ",h_" << i;
    out << '\n';
    for (std::size_t k = 0; k < grid.size(); ++k) {
        out << k << ',' << format_number(grid[k].weight, 0);
        for (double g : grid[k].gains)
            out << ',' << format_number(g, 0);
        out << '\n';
    }
}

inline void write_grid_csv(std::ostream& out, const VectorGrid& grid)
{
    out << "state_index,weight";
    for (std::size_t i = 1; i <= grid.num_users(); ++i)
        for (std::size_t a = 1; a <= grid.antennas(); ++a)
            out << ",h_" << a << '_' << i;
    out << '\n';
    for (std::size_t k = 0; k < grid.size(); ++k) {
        out << k << ',' << format_number(grid[k].weight, 0);
        for (const auto& v : grid[k].gain_vectors)
            for (double a : v)
                out << ',' << format_number(a, 0);
        out << '\n';
    }
}

namespace detail {

inline std::vector<std::vector<double>> read_csv_rows(std::istream& in, std::vector<std::string>& header)
{
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "grid CSV is empty");
    header.clear();
    for (auto tok : split(trim(line), ','))
        header.emplace_back(trim(tok));
    require(header.size() >= 3 && header[0] == "state_index" && header[1] == "weight",
            "grid CSV header must start with state_index,weight");
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        auto toks = split(trim(line), ',');
        require(toks.size() == header.size(), "grid CSV line " + std::to_string(line_no) + " has wrong field count");
        std::vector<double> row;
        for (auto tok : toks) {
            auto v = parse_number(tok);
            require(v.has_value(), "grid CSV line " + std::to_string(line_no) + " has a non-numeric field");
            row.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), "grid CSV has no states");
    return rows;
}

} // namespace detail

inline ChannelGrid read_grid_csv(std::istream& in, std::string label = {})
{
    std::vector<std::string> header;
    auto rows = detail::read_csv_rows(in, header);
    std::vector<FadingState> states;
    for (auto& row : rows) {
        FadingState s;
        s.weight = row[1];
        s.gains.assign(row.begin() + 2, row.end());
        states.push_back(std::move(s));
    }
    return ChannelGrid(std::move(states), std::move(label));
}

inline VectorGrid read_vector_grid_csv(std::istream& in, std::size_t antennas, std::string label = {})
{
    std::vector<std::string> header;
    auto rows = detail::read_csv_rows(in, header);
    const std::size_t entries = header.size() - 2;
    require(antennas >= 1 && entries % antennas == 0, "vector grid CSV column count does not match the antenna count");
    const std::size_t n_users = entries / antennas;
    std::vector<VectorFadingState> states;
    for (auto& row : rows) {
        VectorFadingState s;
        s.weight = row[1];
        for (std::size_t i = 0; i < n_users; ++i)
            s.gain_vectors.emplace_back(row.begin() + 2 + i * antennas, row.begin() + 2 + (i + 1) * antennas);
        states.push_back(std::move(s));
    }
    return VectorGrid(std::move(states), std::move(label));
}

} // namespace macgame

#endif
