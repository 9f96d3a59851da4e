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

#include <macgame/cli/runner.hpp>

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace macgame;
using namespace macgame::cli;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace fs = std::filesystem;

namespace {

const fs::path scenarios{MACGAME_SCENARIO_DIR};

using Table = std::vector<std::vector<std::string>>;

Table parse_csv(const std::string& text)
{
    Table rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        for (auto part : split(line, ','))
            cells.emplace_back(part);
        rows.push_back(std::move(cells));
    }
    return rows;
}

const std::string& artifact(const RunResult& r, const std::string& name)
{
    for (const auto& f : r.files)
        if (f.name == name)
            return f.content;
    FAIL("missing artifact " << name);
    throw;
}

double cell(const std::string& s) { return parse_number(s).value(); }

Scenario from_text(const std::string& text)
{
    std::istringstream in(text);
    return parse_scenario(in);
}

std::string config_key_of(const std::string& text)
{
    try {
        const Scenario sc = from_text(text);
        (void)run_scenario(sc);
    } catch (const config_error& e) {
        return e.key();
    }
    return "<none>";
}

const std::string symmetric_head = "[channel]\nfamily = explicit\n[states]\na = 2, 1, 0.5\nb = 1, 2, 0.5\n";

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_tool(const std::string& args)
{
    const int status = std::system((std::string(MACGAME_TOOL) + " " + args + " 2>/dev/null").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("nash task on the symmetric scenario", "[cli]")
{
    const RunResult r = run_scenario(load_scenario(scenarios / "symmetric_nash.ini"));
    CHECK(r.converged);
    REQUIRE(r.files.front().name == "report.txt");
    CHECK_THAT(artifact(r, "report.txt"), ContainsSubstring("lambda=2.5 "));
    const Table t = parse_csv(artifact(r, "equilibrium.csv"));
    REQUIRE(t.size() == 3);
    CHECK(t[0] == std::vector<std::string>{"user", "lambda", "avg_power", "rate"});
    for (std::size_t i : {1, 2}) {
        CHECK_THAT(cell(t[i][1]), WithinAbs(2.5, 1e-12));
        CHECK_THAT(cell(t[i][2]), WithinAbs(1.0, 1e-12));
        CHECK_THAT(cell(t[i][3]), WithinAbs(0.25 * std::log2(5.0), 1e-6));
    }
}

TEST_CASE("stackelberg sweep endpoints are the corners", "[cli]")
{
    const Scenario sc = load_scenario(scenarios / "symmetric_sweep.ini");
    const RunResult r = run_scenario(sc);
    const Table t = parse_csv(artifact(r, "sweep.csv"));
    REQUIRE(t.size() == 4);
    CHECK(t[0] == std::vector<std::string>{"alpha", "lambda_1", "lambda_2", "rate_1", "rate_2", "converged"});
    const ChannelGrid grid = scenario_grid(sc);
    const auto cr1 = corner_point(grid, sc.params, CornerOrder::decode_2_first);
    const auto cr2 = corner_point(grid, sc.params, CornerOrder::decode_1_first);
    CHECK(t[1][0] == "0");
    CHECK(t[3][0] == "inf");
    for (std::size_t i : {0, 1}) {
        CHECK_THAT(cell(t[1][3 + i]), WithinAbs(cr1.rates[i], 1e-11));
        CHECK_THAT(cell(t[3][3 + i]), WithinAbs(cr2.rates[i], 1e-11));
    }
    for (std::size_t k = 1; k < 4; ++k)
        CHECK(t[k][5] == "1");
}

TEST_CASE("malformed configs name the offending key", "[cli]")
{
    const std::string tail = "[system]\nbudgets = 1, 1\n[task]\nname = nash\n";
    CHECK(config_key_of(symmetric_head + tail) == "<none>");
    CHECK(config_key_of(symmetric_head + "[system]\nbudgets = 1, one\n[task]\nname = nash\n") == "system.budgets");
    CHECK(config_key_of(symmetric_head + tail + "speed = 3\n") == "task.speed");
    CHECK(config_key_of(symmetric_head + "[system]\nbudgets = 1, 1\n") == "task.name");
    CHECK(config_key_of(symmetric_head + "[system]\nbudgets = 1, 1\n[task]\nname = dance\n") == "task.name");
    CHECK(config_key_of("[channel]\nfamily = explicit\n" + tail) == "states");
    CHECK(config_key_of(symmetric_head + "[system]\nbudgets = 1, 1, 1\n[task]\nname = nash\n") == "system.budgets");
    CHECK(config_key_of("[channel]\nfamily = explicit\n[states]\na = 2, 1, 0.5\nb = 1, 2, 0.4\n" + tail) == "states");
    CHECK(config_key_of("[channel]\nfamily = gamma\n" + tail) == "channel.family");
    CHECK(config_key_of("[channel]\nfamily = exponential\nmeans = 1, 1\n" + tail) == "channel.resolution");
    CHECK(config_key_of(symmetric_head + "[system]\nbudgets = 1, 1\n[task]\nname = repeated\n") == "task.mu");
    CHECK(config_key_of(symmetric_head + "[system]\nbudgets = 1, 1\n[task]\nname = audit\nmus = 2:1:1\n") ==
          "task.mus");
    CHECK(config_key_of(symmetric_head + tail + "[solver]\ntol = -1\n") == "solver.tol");
    CHECK(config_key_of(symmetric_head + tail + "[plot]\ncolour = red\n") == "plot");
}

TEST_CASE("threads do not change the output", "[cli]")
{
    const Scenario sc = load_scenario(scenarios / "audit.ini");
    const RunResult one = run_scenario(sc, {1, std::nullopt});
    const RunResult many = run_scenario(sc, {4, std::nullopt});
    REQUIRE(one.files.size() == many.files.size());
    for (std::size_t k = 0; k < one.files.size(); ++k)
        CHECK(one.files[k].content == many.files[k].content);
}

TEST_CASE("region trace", "[cli]")
{
    const Scenario sc = load_scenario(scenarios / "region_trace.ini");
    const RunResult r = trace_scenario(sc);
    CHECK(r.converged);
    const Table t = parse_csv(artifact(r, "trace.csv"));
    CHECK(t[0] == std::vector<std::string>{"source", "mu_1", "mu_2", "alpha", "rate_1", "rate_2"});

    std::vector<std::array<double, 4>> boundary;   // mu_1, mu_2, rate_1, rate_2
    std::vector<std::array<double, 2>> corners, stackelberg, nash;
    for (std::size_t k = 1; k < t.size(); ++k) {
        const std::array<double, 2> rates{cell(t[k][4]), cell(t[k][5])};
        if (t[k][0] == "boundary")
            boundary.push_back({cell(t[k][1]), cell(t[k][2]), rates[0], rates[1]});
        else if (t[k][0] == "corner")
            corners.push_back(rates);
        else if (t[k][0] == "stackelberg")
            stackelberg.push_back(rates);
        else if (t[k][0] == "nash")
            nash.push_back(rates);
        else
            FAIL("unknown source " << t[k][0]);
    }
    REQUIRE(boundary.size() == 17);
    REQUIRE(nash.size() == 1);
    REQUIRE(corners.size() == 2);
    CHECK(stackelberg.size() == 17);

    const auto& mid = boundary[8];
    REQUIRE(mid[0] == mid[1]);
    CHECK_THAT(nash[0][0], WithinAbs(mid[2], 1e-6));
    CHECK_THAT(nash[0][1], WithinAbs(mid[3], 1e-6));

    CHECK_THAT(corners[0][0], WithinAbs(boundary.front()[2], 1e-6));
    CHECK_THAT(corners[0][1], WithinAbs(boundary.front()[3], 1e-6));
    CHECK_THAT(corners[1][0], WithinAbs(boundary.back()[2], 1e-6));
    CHECK_THAT(corners[1][1], WithinAbs(boundary.back()[3], 1e-6));

    for (const auto& b : boundary) {
        const double payoff = b[0] * b[2] + b[1] * b[3];
        for (const auto& p : stackelberg)
            CHECK(b[0] * p[0] + b[1] * p[1] <= payoff + 1e-9);
        for (const auto& p : corners)
            CHECK(b[0] * p[0] + b[1] * p[1] <= payoff + 1e-9);
    }
    CHECK_THAT(artifact(r, "report.txt"), ContainsSubstring("inside the region"));
}

TEST_CASE("repeated and vector scenarios", "[cli]")
{
    const RunResult rep = run_scenario(load_scenario(scenarios / "repeated.ini"));
    CHECK(rep.converged);
    const Table traj = parse_csv(artifact(rep, "trajectory.csv"));
    CHECK(traj[0] == std::vector<std::string>{"stage", "regime", "deviator", "rate_1", "rate_2", "cum_avg_1", "cum_avg_2"});
    REQUIRE(traj.size() == 61);
    CHECK(traj[10][2] == "2");
    CHECK(traj[11][1] == "punish");

    const RunResult gap = run_scenario(load_scenario(scenarios / "vector_gap.ini"));
    const Table g = parse_csv(artifact(gap, "vector_gap.csv"));
    CHECK(g[0] == std::vector<std::string>{"scenario", "sum_nash_rates", "sp_sum_rate", "gap"});
    REQUIRE(g.size() == 2);
    CHECK(g[1][0] == "correlated");
    CHECK(cell(g[1][3]) > 1e-3);
}

TEST_CASE("command-line tool", "[cli]")
{
    const fs::path tmp = fs::temp_directory_path() / "macgame_test_cli";
    fs::remove_all(tmp);
    const std::string cfg = (scenarios / "rayleigh_nash.ini").string();

    CHECK(run_tool("run " + cfg + " --out " + (tmp / "a").string()) == 0);
    CHECK(run_tool("run " + cfg + " --out " + (tmp / "b").string()) == 0);
    for (const char* f : {"report.txt", "equilibrium.csv"})
        CHECK(slurp(tmp / "a" / f) == slurp(tmp / "b" / f));

    CHECK(run_tool("run " + cfg + " --out " + (tmp / "c").string() + " --threads 3") == 0);
    CHECK(slurp(tmp / "a" / "equilibrium.csv") == slurp(tmp / "c" / "equilibrium.csv"));

    CHECK(run_tool("trace " + (scenarios / "region_trace.ini").string() + " --out " + (tmp / "t1").string()) == 0);
    CHECK(run_tool("trace " + (scenarios / "region_trace.ini").string() + " --out " + (tmp / "t2").string()) == 0);
    CHECK(slurp(tmp / "t1" / "trace.csv") == slurp(tmp / "t2" / "trace.csv"));

    CHECK(run_tool("run " + cfg + " --out " + (tmp / "s").string() + " --tol 1e-300") == 2);
    CHECK(fs::exists(tmp / "s" / "report.txt"));

    {
        std::ofstream bad(tmp / "bad.ini");
        bad << "[channel]\nfamily = exponential\nmeans = 1, oops\nresolution = 10\n[system]\nbudgets = 1, 1\n"
               "[task]\nname = nash\n";
    }
    CHECK(run_tool("run " + (tmp / "bad.ini").string() + " --out " + (tmp / "d").string()) == 1);
    CHECK_FALSE(fs::exists(tmp / "d" / "report.txt"));

    const std::string seeded = "MACGAME_SEED=7 " + std::string(MACGAME_TOOL) + " run " + cfg + " --out " +
                               (tmp / "e").string() + " 2>/dev/null";
    CHECK(std::system(seeded.c_str()) == 0);
    CHECK_THAT(slurp(tmp / "e" / "report.txt"), ContainsSubstring("seed 7)"));
    CHECK(slurp(tmp / "a" / "equilibrium.csv") != slurp(tmp / "e" / "equilibrium.csv"));
    fs::remove_all(tmp);
}
