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
// CSV and text serialization of solver results. Numbers use 12 significant
// digits with a '.' radix regardless of locale.

#ifndef MACGAME_REPORT_HPP
#define MACGAME_REPORT_HPP

#include "capacity.hpp"
#include "format.hpp"
#include "policy.hpp"
#include "repeated.hpp"
#include "stackelberg.hpp"
#include "vector.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace macgame {

inline std::string num(double x) { return format_number(x, 12); }

// user,lambda,avg_power,rate
template <class State>
void write_equilibrium_csv(std::ostream& out, const BasicGrid<State>& grid, const EquilibriumReport& report)
{
    out << "user,lambda,avg_power,rate\n";
    for (std::size_t i = 0; i < report.rates.size(); ++i)
        out << i + 1 << ',' << num(report.levels[i]) << ',' << num(average_power(grid, report.policy, i)) << ','
            << num(report.rates[i]) << '\n';
}

// alpha,lambda_1,lambda_2,rate_1,rate_2,converged
inline void write_sweep_csv(std::ostream& out, const std::vector<AlphaPoint>& sweep)
{
    out << "alpha,lambda_1,lambda_2,rate_1,rate_2,converged\n";
    for (const auto& p : sweep) {
        out << p.alpha.str();
        if (!p.error.empty()) {
            out << ",nan,nan,nan,nan,0\n";
            continue;
        }
        const auto& r = p.report;
        out << ',' << num(r.levels[0]) << ',' << num(r.levels[1]) << ',' << num(r.rates[0]) << ','
            << num(r.rates[1]) << ',' << (r.converged ? 1 : 0) << '\n';
    }
}

// mu_1,mu_2,stackelberg_payoff,oracle_payoff,gap
inline void write_gap_csv(std::ostream& out, const std::vector<GapRow>& rows)
{
    out << "mu_1,mu_2,stackelberg_payoff,oracle_payoff,gap\n";
    for (const auto& r : rows)
        out << num(r.mu.mu[0]) << ',' << num(r.mu.mu[1]) << ',' << num(r.stackelberg_payoff) << ','
            << num(r.oracle_payoff) << ',' << num(r.gap) << '\n';
}

// mu_1,mu_2,rate_1,rate_2
inline void write_region_csv(std::ostream& out, const std::vector<BoundaryPoint>& points)
{
    out << "mu_1,mu_2,rate_1,rate_2\n";
    for (const auto& p : points)
        out << num(p.mu.mu[0]) << ',' << num(p.mu.mu[1]) << ',' << num(p.rates[0]) << ',' << num(p.rates[1]) << '\n';
}

// stage,regime,deviator,rate_1,rate_2,cum_avg_1,cum_avg_2
inline void write_trajectory_csv(std::ostream& out, const Simulation& sim)
{
    out << "stage,regime,deviator,rate_1,rate_2,cum_avg_1,cum_avg_2\n";
    double c1 = 0.0, c2 = 0.0;
    for (const auto& st : sim.stages) {
        c1 += st.rates[0];
        c2 += st.rates[1];
        const double t = static_cast<double>(st.stage);
        out << st.stage << ',' << regime_name(st.regime) << ',' << st.deviator << ',' << num(st.rates[0]) << ','
            << num(st.rates[1]) << ',' << num(c1 / t) << ',' << num(c2 / t) << '\n';
    }
}

struct VectorGapRow {
    std::string scenario;
    VecNashGap gap;
};

// scenario,sum_nash_rates,sp_sum_rate,gap
inline void write_vector_gap_csv(std::ostream& out, const std::vector<VectorGapRow>& rows)
{
    out << "scenario,sum_nash_rates,sp_sum_rate,gap\n";
    for (const auto& r : rows)
        out << r.scenario << ',' << num(r.gap.nash_rates.sum()) << ',' << num(r.gap.sp_sum_rate) << ','
            << num(r.gap.gap) << '\n';
}

// Human-readable block for one equilibrium.
template <class State>
void describe(std::ostream& out, const BasicGrid<State>& grid, const EquilibriumReport& r, const std::string& title)
{
    out << title << '\n';
    out << "  convention: " << (r.convention.empty() ? "-" : r.convention) << '\n';
    out << "  converged: " << (r.converged ? "yes" : "no") << " after " << r.iterations << " iterations\n";
    out << "  budget residual: " << num(r.residual) << '\n';
    out << "  time-shared mass: " << num(r.tie_mass) << '\n';
    for (std::size_t i = 0; i < r.rates.size(); ++i)
        out << "  user " << i + 1 << ": lambda=" << num(r.levels[i]) << " avg_power="
            << num(average_power(grid, r.policy, i)) << " rate=" << num(r.rates[i]) << '\n';
    out << "  sum rate: " << num(r.rates.sum()) << '\n';
}

} // namespace macgame

#endif
