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
//   macgame run <config> --out <dir> [--threads N] [--tol X]
//   macgame trace <config> --out <dir> [--threads N] [--tol X]
//
// Exit status: 0 converged, 2 a solver did not converge, 1 bad input.
// MACGAME_SEED replaces the scenario seed.

#include <macgame/cli/runner.hpp>

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <iostream>

namespace {

std::optional<std::uint64_t> seed_from_env()
{
    const char* raw = std::getenv("MACGAME_SEED");
    if (raw == nullptr || *raw == '\0')
        return std::nullopt;
    const std::string_view text(raw);
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw macgame::config_error("MACGAME_SEED", "'" + std::string(text) + "' is not a nonnegative integer");
    return seed;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Power and rate allocation games on fading multiple-access channels"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    std::optional<std::size_t> threads;
    std::optional<double> tol;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config, "scenario file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir, "output directory")->required();
        cmd->add_option("--threads", threads, "worker threads, 0 for all cores");
        cmd->add_option("--tol", tol, "solver tolerance")->check(CLI::PositiveNumber);
    };
    CLI::App* run = app.add_subcommand("run", "solve the scenario's task");
    CLI::App* trace = app.add_subcommand("trace", "capacity region against Stackelberg, Nash and corner points");
    add_common(run);
    add_common(trace);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const auto scenario = macgame::cli::load_scenario(config, seed_from_env());
        const macgame::cli::RunOptions opt{threads, tol};
        const auto result = run->parsed() ? macgame::cli::run_scenario(scenario, opt)
                                          : macgame::cli::trace_scenario(scenario, opt);
        macgame::cli::write_artifacts(out_dir, result);
        if (!result.converged) {
            std::cerr << "macgame: a solver did not converge; see " << out_dir << "/report.txt\n";
            return 2;
        }
        return 0;
    } catch (const macgame::config_error& e) {
        std::cerr << "macgame: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "macgame: " << e.what() << '\n';
        return 1;
    }
}
