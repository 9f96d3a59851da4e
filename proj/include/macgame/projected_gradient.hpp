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

#ifndef MACGAME_PROJECTED_GRADIENT_HPP
#define MACGAME_PROJECTED_GRADIENT_HPP

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <vector>

namespace macgame {

struct SpgOptions {
    double tol = 1e-8;            // KKT residual ||x - P(x + g)||_inf
    std::size_t max_iters = 20000;
    double initial_step = 1.0;    // first step length; BB steps afterwards
    bool barzilai_borwein = true; // false keeps the initial step (plain projected gradient)
    std::size_t memory = 10;      // nonmonotone window
    double min_step = 1e-12;
    double max_step = 1e12;
};

struct SpgResult {
    std::vector<double> x;
    double value = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// Spectral projected gradient ascent for a concave objective over a convex set.
//
// Problem interface:
//   double value(const std::vector<double>&) const;
//   void gradient(const std::vector<double>&, std::vector<double>&) const;  // in the problem's metric
//   void project(std::vector<double>&) const;                              // metric projection
//   double inner(const std::vector<double>&, const std::vector<double>&) const;
template <class Problem>
SpgResult spg_maximize(const Problem& problem, std::vector<double> x, const SpgOptions& opt = {})
{
    require(opt.initial_step > 0.0, "projected gradient step must be positive");
    const std::size_t n = x.size();
    problem.project(x);
    std::vector<double> g(n), trial(n), g_trial(n), s(n), y(n), probe(n);
    double f = problem.value(x);
    problem.gradient(x, g);
    std::deque<double> recent{f};
    double step = opt.initial_step;

    auto kkt = [&](const std::vector<double>& point, const std::vector<double>& grad) {
        for (std::size_t k = 0; k < n; ++k)
            probe[k] = point[k] + grad[k];
        problem.project(probe);
        double r = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            r = std::max(r, std::fabs(probe[k] - point[k]));
        return r;
    };

    SpgResult out;
    for (std::size_t it = 0;; ++it) {
        out.kkt_residual = kkt(x, g);
        out.iterations = it;
        if (out.kkt_residual <= opt.tol) {
            out.converged = true;
            break;
        }
        if (it >= opt.max_iters)
            break;

        for (std::size_t k = 0; k < n; ++k)
            trial[k] = x[k] + step * g[k];
        problem.project(trial);
        for (std::size_t k = 0; k < n; ++k)
            s[k] = trial[k] - x[k];
        const double ascent = problem.inner(g, s);
        const double reference = *std::min_element(recent.begin(), recent.end());

        double t = 1.0;
        double f_trial = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t k = 0; k < n; ++k)
                trial[k] = x[k] + t * s[k];
            f_trial = problem.value(trial);
            if (f_trial >= reference + 1e-4 * t * ascent) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted)
            break;

        problem.gradient(trial, g_trial);
        for (std::size_t k = 0; k < n; ++k) {
            s[k] = trial[k] - x[k];
            y[k] = g_trial[k] - g[k];
        }
        if (opt.barzilai_borwein) {
            const double sy = problem.inner(s, y);
            const double ss = problem.inner(s, s);
            step = sy < 0.0 ? std::clamp(ss / -sy, opt.min_step, opt.max_step) : opt.max_step;
        }
        x.swap(trial);
        g.swap(g_trial);
        f = f_trial;
        recent.push_back(f);
        if (recent.size() > std::max<std::size_t>(opt.memory, 1))
            recent.pop_front();
    }
    out.x = std::move(x);
    out.value = f;
    return out;
}

} // namespace macgame

#endif
