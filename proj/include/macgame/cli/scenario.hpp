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
// Scenario files are INI text, one scenario per file:
//
//   [scenario]  name
//   [channel]   kind (scalar|vector), family (exponential|uniform|explicit),
//               sampling (monte_carlo|quadrature), resolution, seed, antennas,
//               means, lower, upper, grid_file
//   [states]    explicit states, one key per state (see below)
//   [system]    noise, budgets
//   [task]      name and task parameters
//   [solver]    tol, max_iters, threads
//   [trace]     mu_count, alpha_count
//
// Lists are comma separated. Award vectors are written "2:1" and listed with
// commas: "mus = 2:1, 1:2". An explicit scalar state is "gains..., weight"; an
// explicit vector state lists each user's amplitudes separated by '|' and
// ends with the weight: "s1 = 1 0 | 0.7 0.7 | 0.5".

#ifndef MACGAME_CLI_SCENARIO_HPP
#define MACGAME_CLI_SCENARIO_HPP

#include "../capacity.hpp"
#include "../channel.hpp"
#include "../decoding.hpp"
#include "../error.hpp"
#include "../format.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace macgame::cli {

enum class Task {
    nash,
    stackelberg_sweep,
    epsilon_stackelberg,
    capacity_boundary,
    repeated,
    vector_nash,
    vector_gap,
    audit
};

inline const std::map<std::string, Task>& task_names()
{
    static const std::map<std::string, Task> names{
        {"nash", Task::nash},
        {"stackelberg-sweep", Task::stackelberg_sweep},
        {"epsilon-stackelberg", Task::epsilon_stackelberg},
        {"capacity-boundary", Task::capacity_boundary},
        {"repeated", Task::repeated},
        {"vector-nash", Task::vector_nash},
        {"vector-gap", Task::vector_gap},
        {"audit", Task::audit},
    };
    return names;
}

inline std::string task_name(Task t)
{
    for (const auto& [name, task] : task_names())
        if (task == t)
            return name;
    return "?";
}

struct Scenario {
    std::string name;
    bool vector = false;
    DistributionSpec channel;
    std::size_t antennas = 1;
    std::vector<VectorFadingState> vector_states;
    std::size_t resolution = 1;
    std::uint64_t seed = 1;
    SystemParams params;

    Task task = Task::nash;
    std::vector<Alpha> alphas;          // stackelberg-sweep; empty means a fan of alpha_count
    std::size_t alpha_count = 17;
    std::vector<RateAward> mus;         // boundary, audit, epsilon-stackelberg, repeated
    std::size_t mu_count = 17;
    double epsilon = 1e-9;
    std::size_t alpha_budget = 64;
    std::size_t horizon = 100;
    std::optional<double> delta;        // discounted payoff when set
    std::size_t deviator = 0;           // 1-based, 0 = nobody deviates
    std::vector<std::size_t> deviate_at;
    std::optional<std::array<std::size_t, 2>> lengths;
    std::size_t samples = 0;            // audit: randomized partitions per award

    std::optional<double> tol;
    std::optional<std::size_t> max_iters;
    std::size_t threads = 1;

    std::size_t trace_mu_count = 17;
    std::size_t trace_alpha_count = 17;
};

namespace detail {

using boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"scenario", {"name"}},
        {"channel", {"kind", "family", "sampling", "resolution", "seed", "antennas", "means", "lower", "upper", "grid_file"}},
        {"system", {"noise", "budgets"}},
        {"task", {"name", "alphas", "alpha_count", "mu", "mus", "mu_count", "epsilon", "alpha_budget", "horizon", "delta",
                  "deviator", "deviate_at", "lengths", "samples"}},
        {"solver", {"tol", "max_iters", "threads"}},
        {"trace", {"mu_count", "alpha_count"}},
    };
    return keys;
}

class Reader {
public:
    explicit Reader(const ptree& tree) : tree_(tree) {}

    std::optional<std::string> text(const std::string& key) const
    {
        const auto v = tree_.get_optional<std::string>(ptree::path_type(key, '.'));
        if (!v)
            return std::nullopt;
        return std::string(trim(*v));
    }

    std::string required(const std::string& key) const
    {
        auto v = text(key);
        if (!v || v->empty())
            throw config_error(key, "missing");
        return *v;
    }

    double number(const std::string& key, std::string_view token) const
    {
        const auto v = parse_number(token);
        if (!v || std::isnan(*v))
            throw config_error(key, "'" + std::string(trim(token)) + "' is not a number");
        return *v;
    }

    std::optional<double> real(const std::string& key) const
    {
        const auto v = text(key);
        if (!v)
            return std::nullopt;
        return number(key, *v);
    }

    std::optional<std::uint64_t> count(const std::string& key) const
    {
        const auto v = text(key);
        if (!v)
            return std::nullopt;
        std::uint64_t out = 0;
        const char* end = v->data() + v->size();
        auto [ptr, ec] = std::from_chars(v->data(), end, out);
        if (ec != std::errc() || ptr != end || v->empty())
            throw config_error(key, "'" + *v + "' is not a nonnegative integer");
        return out;
    }

    std::vector<double> reals(const std::string& key) const
    {
        std::vector<double> out;
        for (auto part : split(required(key), ','))
            out.push_back(number(key, part));
        return out;
    }

    std::vector<std::size_t> counts(const std::string& key) const
    {
        std::vector<std::size_t> out;
        for (double x : reals(key)) {
            if (!(x >= 1.0) || x != std::floor(x))
                throw config_error(key, "entries must be positive integers");
            out.push_back(static_cast<std::size_t>(x));
        }
        return out;
    }

    RateAward award(const std::string& key, std::string_view token) const
    {
        RateAward mu;
        for (auto part : split(token, ':'))
            mu.mu.push_back(number(key, part));
        if (mu.mu.size() != 2)
            throw config_error(key, "awards are written as 'mu_1:mu_2'");
        try {
            mu.validate(2);
        } catch (const error& e) {
            throw config_error(key, e.what());
        }
        return mu;
    }

    const ptree& tree() const { return tree_; }

private:
    const ptree& tree_;
};

inline void check_keys(const ptree& tree)
{
    for (const auto& [section, body] : tree) {
        if (section == "states")
            continue;
        const auto it = known_keys().find(section);
        if (it == known_keys().end())
            throw config_error(section, "unknown section");
        for (const auto& [key, value] : body)
            if (!it->second.count(key))
                throw config_error(section + "." + key, "unknown key");
    }
}

inline Family parse_family(const std::string& key, const std::string& v)
{
    if (v == "exponential")
        return Family::exponential;
    if (v == "uniform")
        return Family::uniform;
    if (v == "explicit")
        return Family::explicit_list;
    throw config_error(key, "family must be exponential, uniform or explicit");
}

inline void read_explicit_states(const Reader& in, Scenario& sc)
{
    const auto states = in.tree().get_child_optional("states");
    if (!states || states->empty())
        throw config_error("states", "the explicit family needs a [states] section");
    for (const auto& [key, value] : *states) {
        const std::string full = "states." + key;
        const std::string line(trim(value.data()));
        if (!sc.vector) {
            FadingState st;
            for (auto part : split(line, ','))
                st.gains.push_back(in.number(full, part));
            if (st.gains.size() < 2)
                throw config_error(full, "a state lists the gains and then the weight");
            st.weight = st.gains.back();
            st.gains.pop_back();
            sc.channel.states.push_back(std::move(st));
            continue;
        }
        VectorFadingState st;
        const auto groups = split(line, '|');
        if (groups.size() < 2)
            throw config_error(full, "a vector state lists amplitude groups and then the weight");
        for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
            std::vector<double> h;
            std::istringstream words{std::string(groups[g])};
            std::string word;
            while (words >> word)
                h.push_back(in.number(full, word));
            st.gain_vectors.push_back(std::move(h));
        }
        st.weight = in.number(full, groups.back());
        sc.vector_states.push_back(std::move(st));
    }
}

inline void read_grid_file(const std::string& key, const std::filesystem::path& path, Scenario& sc)
{
    std::ifstream file(path);
    if (!file)
        throw config_error(key, "cannot open '" + path.string() + "'");
    try {
        if (sc.vector) {
            const VectorGrid g = read_vector_grid_csv(file, sc.antennas);
            sc.vector_states.assign(g.begin(), g.end());
        } else {
            const ChannelGrid g = read_grid_csv(file);
            sc.channel.states.assign(g.begin(), g.end());
        }
    } catch (const config_error&) {
        throw;
    } catch (const error& e) {
        throw config_error(key, e.what());
    }
}

} // namespace detail

// `seed_override` replaces the [channel] seed (the MACGAME_SEED variable).
inline Scenario parse_scenario(std::istream& text, const std::filesystem::path& base_dir = {},
                               std::optional<std::uint64_t> seed_override = std::nullopt)
{
    detail::ptree tree;
    try {
        boost::property_tree::read_ini(text, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw config_error("line " + std::to_string(e.line()), e.message());
    }
    detail::check_keys(tree);
    const detail::Reader in(tree);
    Scenario sc;
    sc.name = in.text("scenario.name").value_or("scenario");

    const std::string kind = in.text("channel.kind").value_or("scalar");
    if (kind != "scalar" && kind != "vector")
        throw config_error("channel.kind", "must be scalar or vector");
    sc.vector = kind == "vector";
    sc.channel.family = detail::parse_family("channel.family", in.required("channel.family"));
    sc.channel.label = sc.name;
    const std::string sampling = in.text("channel.sampling").value_or("monte_carlo");
    if (sampling == "monte_carlo")
        sc.channel.sampling = Sampling::monte_carlo;
    else if (sampling == "quadrature")
        sc.channel.sampling = Sampling::quadrature;
    else
        throw config_error("channel.sampling", "must be monte_carlo or quadrature");
    sc.antennas = in.count("channel.antennas").value_or(sc.vector ? 2 : 1);
    if (sc.antennas < 1)
        throw config_error("channel.antennas", "must be at least 1");

    sc.params.noise_variance = in.real("system.noise").value_or(1.0);
    sc.params.power_budgets = in.reals("system.budgets");
    try {
        sc.params.validate(sc.params.power_budgets.size());
    } catch (const error& e) {
        throw config_error("system.budgets", e.what());
    }
    sc.channel.num_users = sc.params.power_budgets.size();

    if (sc.channel.family == Family::explicit_list) {
        if (const auto file = in.text("channel.grid_file"))
            detail::read_grid_file("channel.grid_file", base_dir / *file, sc);
        else
            detail::read_explicit_states(in, sc);
    } else {
        sc.resolution = in.count("channel.resolution").value_or(0);
        if (sc.resolution < 1)
            throw config_error("channel.resolution", "must be given and at least 1");
        sc.seed = in.count("channel.seed").value_or(1);
        if (sc.channel.family == Family::exponential) {
            sc.channel.means = in.reals("channel.means");
        } else {
            sc.channel.lower = in.reals("channel.lower");
            sc.channel.upper = in.reals("channel.upper");
        }
        try {
            macgame::detail::validate_family(sc.channel);
        } catch (const error& e) {
            throw config_error("channel.family", e.what());
        }
    }
    if (seed_override)
        sc.seed = *seed_override;

    const std::string task = in.required("task.name");
    const auto t = task_names().find(task);
    if (t == task_names().end())
        throw config_error("task.name", "unknown task '" + task + "'");
    sc.task = t->second;

    if (in.text("task.alphas"))
        for (double a : in.reals("task.alphas")) {
            if (!(a >= 0.0))
                throw config_error("task.alphas", "alphas must be nonnegative");
            sc.alphas.push_back(std::isinf(a) ? Alpha::infinity() : Alpha(a));
        }
    sc.alpha_count = in.count("task.alpha_count").value_or(sc.alpha_count);
    if (const auto mu = in.text("task.mu"))
        sc.mus.push_back(in.award("task.mu", *mu));
    if (const auto mus = in.text("task.mus"))
        for (auto part : split(*mus, ','))
            sc.mus.push_back(in.award("task.mus", part));
    sc.mu_count = in.count("task.mu_count").value_or(sc.mu_count);
    sc.epsilon = in.real("task.epsilon").value_or(sc.epsilon);
    sc.alpha_budget = in.count("task.alpha_budget").value_or(sc.alpha_budget);
    sc.horizon = in.count("task.horizon").value_or(sc.horizon);
    sc.delta = in.real("task.delta");
    sc.deviator = in.count("task.deviator").value_or(0);
    if (in.text("task.deviate_at"))
        sc.deviate_at = in.counts("task.deviate_at");
    if (in.text("task.lengths")) {
        const auto l = in.counts("task.lengths");
        if (l.size() != 2)
            throw config_error("task.lengths", "give one punishment length per user");
        sc.lengths = std::array<std::size_t, 2>{l[0], l[1]};
    }
    sc.samples = in.count("task.samples").value_or(0);

    sc.tol = in.real("solver.tol");
    sc.max_iters = in.count("solver.max_iters");
    sc.threads = in.count("solver.threads").value_or(1);
    sc.trace_mu_count = in.count("trace.mu_count").value_or(sc.trace_mu_count);
    sc.trace_alpha_count = in.count("trace.alpha_count").value_or(sc.trace_alpha_count);

    // task preconditions
    const bool two = sc.params.num_users() == 2;
    if (sc.tol && !(*sc.tol > 0.0))
        throw config_error("solver.tol", "must be positive");
    if (sc.max_iters && *sc.max_iters < 1)
        throw config_error("solver.max_iters", "must be positive");
    if (sc.task != Task::nash && !two)
        throw config_error("system.budgets", "task '" + task + "' is defined for two users");
    if (sc.vector && sc.task != Task::vector_nash && sc.task != Task::vector_gap)
        throw config_error("channel.kind", "task '" + task + "' needs a scalar channel");
    if (sc.vector && sc.channel.family != Family::explicit_list && sc.channel.sampling != Sampling::monte_carlo)
        throw config_error("channel.sampling", "vector channels are sampled by Monte Carlo only");
    switch (sc.task) {
    case Task::stackelberg_sweep:
        if (sc.alphas.empty() && sc.alpha_count < 2)
            throw config_error("task.alpha_count", "must be at least 2");
        break;
    case Task::epsilon_stackelberg:
    case Task::repeated:
        if (sc.mus.size() != 1)
            throw config_error("task.mu", "exactly one award vector is required");
        if (sc.task == Task::epsilon_stackelberg) {
            if (!(sc.epsilon > 0.0))
                throw config_error("task.epsilon", "must be positive");
            if (sc.alpha_budget < 3)
                throw config_error("task.alpha_budget", "must be at least 3");
        } else {
            if (sc.horizon < 1)
                throw config_error("task.horizon", "must be at least 1");
            if (sc.delta && !(*sc.delta > 0.0 && *sc.delta < 1.0))
                throw config_error("task.delta", "must lie in (0, 1)");
            if (sc.deviator > 2)
                throw config_error("task.deviator", "must be 0, 1 or 2");
            if (sc.deviator != 0 && sc.deviate_at.empty())
                throw config_error("task.deviate_at", "a deviator needs deviation stages");
        }
        break;
    case Task::capacity_boundary:
        if (sc.mus.empty() && sc.mu_count < 2)
            throw config_error("task.mu_count", "must be at least 2");
        break;
    case Task::audit:
        if (sc.mus.empty())
            throw config_error("task.mus", "the audit needs award vectors");
        if (!(sc.epsilon > 0.0))
            throw config_error("task.epsilon", "must be positive");
        break;
    default:
        break;
    }
    if (sc.trace_mu_count < 2)
        throw config_error("trace.mu_count", "must be at least 2");
    if (sc.trace_alpha_count < 2)
        throw config_error("trace.alpha_count", "must be at least 2");
    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt)
{
    std::ifstream file(path);
    if (!file)
        throw config_error("config", "cannot open '" + path.string() + "'");
    return parse_scenario(file, path.parent_path(), seed_override);
}

inline ChannelGrid scenario_grid(const Scenario& sc)
{
    require(!sc.vector, "scenario has a vector channel");
    return build_grid(sc.channel, sc.resolution, sc.seed);
}

// Scalar scenarios become single-antenna vector grids.
inline VectorGrid scenario_vector_grid(const Scenario& sc)
{
    if (!sc.vector)
        return to_vector_grid(scenario_grid(sc));
    VectorDistributionSpec spec;
    spec.marginal = sc.channel;
    spec.antennas = sc.antennas;
    spec.states = sc.vector_states;
    return build_vector_grid(spec, sc.resolution, sc.seed);
}

} // namespace macgame::cli

#endif
