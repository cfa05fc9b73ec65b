// SPDX-License-Identifier: Apache-2.0
//
// cfmimo user-centric cell-free massive MIMO downlink simulator
// Copyright (C) 2026 the cfmimo contributors
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
// Command line front end: loads an experiment config, applies overrides,
// runs it, prints a timed table, and persists results and optimizer
// traces. Wall times appear on the console only; files stay a pure
// function of (config, seeds).

#include "cfmimo/deployopt.hpp"
#include "cfmimo/experiment.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CliArgs {
    std::string spec_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> sets;
    std::string out;
    std::string format;
};

void add_common(CLI::App* sub, CliArgs& args) {
    sub->add_option("spec-file", args.spec_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", args.seed, "run only this seed");
    sub->add_option("--set", args.sets, "override one config key, KEY=VALUE")
        ->take_all();
    sub->add_option("--out", args.out, "output file (default: stdout table only)");
    sub->add_option("--format", args.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
}

void print_table(const cfmimo::ExperimentResult& res) {
    const cfmimo::ResultTable& t = res.table;
    for (const auto& [k, v] : t.metadata) std::printf("# %s = %s\n", k.c_str(), v.c_str());

    std::vector<std::string> header = t.columns;
    header.push_back("wall_s");
    std::vector<std::vector<std::string>> body;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        body.push_back(t.rows[r]);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f",
                      r < res.wall_seconds.size() ? res.wall_seconds[r] : 0.0);
        body.back().push_back(buf);
    }

    std::vector<std::size_t> width(header.size(), 0);
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& row : body)
        for (std::size_t c = 0; c < row.size() && c < width.size(); ++c)
            width[c] = std::max(width[c], row[c].size());

    auto print_row = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c)
            std::printf("%s%-*s", c ? "  " : "", static_cast<int>(width[c]),
                        row[c].c_str());
        std::printf("\n");
    };
    print_row(header);
    for (const auto& row : body) print_row(row);

    const double total =
        std::accumulate(res.wall_seconds.begin(), res.wall_seconds.end(), 0.0);
    std::printf("# total row wall time: %.3f s over %zu rows\n", total, t.rows.size());
}

std::filesystem::path trace_path(const std::filesystem::path& out,
                                 const std::string& name) {
    std::filesystem::path p = out;
    const std::string stem = p.stem().string();
    p.replace_filename(stem + ".trace." + name + ".csv");
    return p;
}

int run_cli(const CliArgs& args, const std::string& mode) {
    cfmimo::ExperimentSpec spec = cfmimo::load_config(args.spec_path);

    for (const std::string& kv : args.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects KEY=VALUE, got '" + kv + "'");
        cfmimo::apply_override(spec, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (args.seed) spec.seeds = {*args.seed};
    if (!args.out.empty()) spec.out = args.out;
    if (!args.format.empty()) spec.format = args.format;

    if (mode == "check-gradients") {
        spec.kind = cfmimo::ExperimentKind::gradient_check;
        spec.values.clear();
    } else if (mode == "optimize") {
        if (spec.kind != cfmimo::ExperimentKind::deploy_random &&
            spec.kind != cfmimo::ExperimentKind::deploy_kmeans) {
            spec.kind = cfmimo::ExperimentKind::deploy_random;
            spec.values.clear();
        }
    }
    spec.validate();

    const cfmimo::ExperimentResult res = cfmimo::run_experiment(spec);
    print_table(res);

    if (!spec.out.empty()) {
        cfmimo::emit_results(res.table, spec.out, spec.format);
        std::printf("# wrote %s\n", spec.out.c_str());
        for (const auto& [name, opt] : res.traces) {
            const std::filesystem::path tp = trace_path(spec.out, name);
            cfmimo::save_trace_csv(opt, tp.string());
            std::printf("# wrote %s\n", tp.string().c_str());
        }
    } else if (!res.traces.empty()) {
        std::printf("# optimizer traces kept in memory only; pass --out to save them\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"user-centric cell-free massive MIMO downlink simulator"};
    app.require_subcommand(1);

    CliArgs args;
    CLI::App* cmd_run = app.add_subcommand("run", "run the configured experiment");
    CLI::App* cmd_grad = app.add_subcommand(
        "check-gradients", "compare analytic position gradients with finite differences");
    CLI::App* cmd_opt =
        app.add_subcommand("optimize", "optimize AP positions with BB gradient ascent");
    add_common(cmd_run, args);
    add_common(cmd_grad, args);
    add_common(cmd_opt, args);

    CLI11_PARSE(app, argc, argv);

    try {
        std::string mode = "run";
        if (app.got_subcommand(cmd_grad)) mode = "check-gradients";
        if (app.got_subcommand(cmd_opt)) mode = "optimize";
        return run_cli(args, mode);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
