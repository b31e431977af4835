/*
   Copyright 2026 The cachehit Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// Command-line front end: optimize | evaluate | simulate | sweep | verify.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cachehit/cli.hpp"

namespace {

using namespace cachehit;
using namespace cachehit::cli;

struct Flags {
    std::string config;
    std::string out;
    std::string format;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::optional<unsigned> threads;
};

RunConfig load(const Flags& flags)
{
    std::ifstream in(flags.config);
    if (!in) throw ValidationError("--config", "cannot open " + flags.config);
    std::stringstream text;
    text << in.rdbuf();
    auto cfg = parse_run_config(text.str());
    if (flags.seed) cfg.sim.seed = *flags.seed;
    if (flags.trials) cfg.sim.trials = *flags.trials;
    if (flags.threads) cfg.sim.threads = *flags.threads;
    if (!flags.out.empty()) cfg.output_path = flags.out;
    if (flags.format == "csv") cfg.format = Format::Csv;
    if (flags.format == "json") cfg.format = Format::Json;
    cfg.sim.validated();
    return cfg;
}

void emit(const RunConfig& cfg, const std::string& command, const Table& table)
{
    std::ofstream file;
    if (!cfg.output_path.empty()) {
        file.open(cfg.output_path, std::ios::binary);
        if (!file) throw ValidationError("output.path", "cannot write " + cfg.output_path);
    }
    std::ostream& os = cfg.output_path.empty() ? std::cout : file;
    if (cfg.format == Format::Json)
        write_json(os, command, table);
    else
        write_csv(os, table);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hit probability of probabilistic caching with retransmissions in Poisson small-cell networks"};
    app.require_subcommand(1);
    Flags flags;
    const char* commands[][2] = {
        {"optimize", "Optimal placement with KKT certificate"},
        {"evaluate", "Hit probability of an explicit or optimal placement"},
        {"simulate", "Monte Carlo estimate with 99% confidence interval"},
        {"sweep", "Grid over n, b1 or K"},
        {"verify", "Analytic results against closed forms, simulation and grid search"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", flags.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", flags.out, "Output path (default: stdout)");
        sub->add_option("--format", flags.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--seed", flags.seed, "Monte Carlo seed");
        sub->add_option("--trials", flags.trials, "Monte Carlo trials");
        sub->add_option("--threads", flags.threads, "Worker threads")->check(CLI::PositiveNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : static_cast<int>(ExitCode::Validation);
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const auto cfg = load(flags);
        const unsigned threads = flags.threads.value_or(cfg.sim.threads);
        CommandResult result;
        if (command == "optimize")
            result = cmd_optimize(cfg, threads);
        else if (command == "evaluate")
            result = cmd_evaluate(cfg, threads);
        else if (command == "simulate")
            result = cmd_simulate(cfg);
        else if (command == "sweep")
            result = cmd_sweep(cfg, threads);
        else
            result = cmd_verify(cfg, threads);
        emit(cfg, command, result.table);
        if (result.status == ExitCode::NotCertified) std::cerr << "warning: solution not certified\n";
        if (result.status == ExitCode::VerificationFailed) std::cerr << "verification failed\n";
        return static_cast<int>(result.status);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::Validation);
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::NotCertified);
    }
}
