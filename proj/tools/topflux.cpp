// Copyright 2026 The topflux Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "topflux/scenario.hpp"

int main(int argc, char **argv) {
    CLI::App app{"topflux: topological / flux qubit hybrid simulations"};
    app.require_subcommand(1);

    topflux::cli::RunRequest req;
    std::string config;
    std::uint64_t seed = 0;
    std::string format;
    std::string out_dir = ".";

    auto *run = app.add_subcommand("run", "run a scenario from a JSON config");
    run->add_option("config", config, "config file")->required();
    auto *seed_opt = run->add_option("--seed", seed, "64-bit RNG seed (overrides the config)");
    run->add_option("--out", out_dir, "output directory")->capture_default_str();
    auto *format_opt =
        run->add_option("--format", format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
    run->add_option("--set", req.overrides, "key=value override, repeatable")->take_all();

    auto *list = app.add_subcommand("list", "list scenarios, their keys and defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : topflux::cli::kExitConfig;
    }

    if (list->parsed()) {
        std::cout << topflux::cli::list_scenarios();
        return 0;
    }
    req.config = config;
    req.out_dir = out_dir;
    if (seed_opt->count() > 0) {
        req.seed = seed;
    }
    if (format_opt->count() > 0) {
        req.format = format;
    }
    return topflux::cli::run_command(req, std::cout, std::cerr);
}
