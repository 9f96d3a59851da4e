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

#ifndef MACGAME_DECODING_HPP
#define MACGAME_DECODING_HPP

#include "channel.hpp"
#include "error.hpp"
#include "format.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace macgame {

// Threshold of the α family. `infinite()` is a sentinel, not a large float.
class Alpha {
public:
    constexpr Alpha() = default;
    explicit Alpha(double value) : value_(value)
    {
        require(value >= 0.0, "alpha must be nonnegative");
        if (std::isinf(value))
            infinite_ = true;
    }

    static Alpha infinity()
    {
        Alpha a;
        a.value_ = INFINITY;
        a.infinite_ = true;
        return a;
    }

    bool infinite() const noexcept { return infinite_; }
    double value() const noexcept { return value_; }
    std::string str() const { return infinite_ ? std::string("inf") : format_number(value_); }

    friend bool operator==(const Alpha&, const Alpha&) = default;

private:
    double value_ = 0.0;
    bool infinite_ = false;
};

// Base-station decoding order per fading state of a 2-user channel.
// `decode_1_first[s]` places state s in D1: user 1 is decoded first and sees
// user 2 as noise, while user 2 is decoded last and sees only noise.
struct DecodingStrategy {
    enum class Kind { explicit_set, alpha_threshold };

    Kind kind = Kind::explicit_set;
    Alpha alpha;
    std::vector<bool> decode_1_first;

    static DecodingStrategy explicit_set(std::vector<bool> d1)
    {
        DecodingStrategy d;
        d.decode_1_first = std::move(d1);
        return d;
    }

    // decode-1-first iff h1 <= α h2; α = 0 gives D1 = ∅ and α = ∞ gives all states.
    static DecodingStrategy threshold(const ChannelGrid& grid, Alpha alpha)
    {
        require(grid.num_users() == 2, "decoding strategies are defined for two users");
        DecodingStrategy d;
        d.kind = Kind::alpha_threshold;
        d.alpha = alpha;
        d.decode_1_first.resize(grid.size());
        for (std::size_t s = 0; s < grid.size(); ++s) {
            const auto& h = grid[s].gains;
            if (alpha.infinite())
                d.decode_1_first[s] = true;
            else if (alpha.value() == 0.0)
                d.decode_1_first[s] = false;
            else
                d.decode_1_first[s] = h[0] <= alpha.value() * h[1];
        }
        return d;
    }

    static DecodingStrategy all_decode_2_first(std::size_t states)
    {
        return explicit_set(std::vector<bool>(states, false));
    }

    static DecodingStrategy all_decode_1_first(std::size_t states)
    {
        return explicit_set(std::vector<bool>(states, true));
    }

    std::size_t size() const noexcept { return decode_1_first.size(); }
    bool in_d1(std::size_t s) const { return decode_1_first[s]; }

    // Index of the user decoded first in state s.
    std::size_t first(std::size_t s) const { return decode_1_first[s] ? 0 : 1; }
    std::size_t last(std::size_t s) const { return 1 - first(s); }

    template <class State>
    void check_covers(const BasicGrid<State>& grid) const
    {
        require(grid.num_users() == 2, "decoding strategies are defined for two users");
        require(decode_1_first.size() == grid.size(), "decoding strategy does not cover every grid state");
    }
};

} // namespace macgame

#endif
