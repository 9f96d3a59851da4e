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
// Two users on a Rayleigh-faded scalar channel: the water-filling Nash
// equilibrium, the capacity corners, a few Stackelberg thresholds and the
// punishment length that sustains a boundary point.

#include <macgame/macgame.hpp>

#include <cstdio>

using namespace macgame;

int main()
{
    DistributionSpec spec;
    spec.family = Family::exponential;
    spec.means = {1.0, 0.7};
    const ChannelGrid grid = build_grid(spec, 400, 7);
    const SystemParams params{1.0, {1.0, 1.0}};

    const auto nash = nash_solve_2user(grid, params);
    std::printf("Nash       lambda = (%.4f, %.4f)  rates = (%.4f, %.4f)\n", nash.levels[0], nash.levels[1],
                nash.rates[0], nash.rates[1]);

    for (auto order : {CornerOrder::decode_2_first, CornerOrder::decode_1_first}) {
        const auto c = corner_point(grid, params, order);
        std::printf("corner     rates = (%.4f, %.4f)\n", c.rates[0], c.rates[1]);
    }

    for (const auto& p : alpha_sweep(grid, params, {Alpha(0.5), sp_alpha(grid, params), Alpha(2.0)}))
        std::printf("alpha %-6s rates = (%.4f, %.4f)\n", p.alpha.str().c_str(), p.report.rates[0], p.report.rates[1]);

    const RateAward mu{{2.0, 1.0}};
    const auto boundary = boundary_oracle(grid, params, mu);
    const auto leader = epsilon_stackelberg(grid, params, mu, 1e-9, 64);
    std::printf("mu=(2,1)   boundary payoff %.4f, best threshold payoff %.4f\n", boundary.payoff, leader.payoff);

    const auto len = min_punishment_length(grid, params, mu, decoding_order(mu).back());
    std::printf("punishment length %zu stages\n", len.length);
    return 0;
}
