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
// Experiment orchestration: strict INI-style configs, the experiment
// families (approximation sweeps, deployment runs, gradient checks),
// and deterministic CSV/JSON result emission. Persisted outputs are a
// pure function of (config, seeds); timing never enters files.

#pragma once

#include "cfmimo/deployopt.hpp"
#include "cfmimo/scenario.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace cfmimo {

enum class ExperimentKind {
    de_vs_mc_antennas, // sweep antennas_per_ap, compare DE against MC
    de_vs_mc_users,    // sweep num_users
    assoc_sweep,       // sweep assoc_count
    reg_sweep,         // sweep x in alpha = x * noise power
    deploy_random,     // BBGD from the drawn layout
    deploy_kmeans,     // BBGD from clustered user positions
    gradient_check,    // analytic position gradient vs finite differences
};

ExperimentKind kind_from_string(const std::string& name);
std::string kind_to_string(ExperimentKind kind);

// Config key the sweep values bind to; empty for non-sweep kinds.
std::string sweep_key_of(ExperimentKind kind);

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::de_vs_mc_antennas;
    SystemConfig base;
    std::vector<double> values;             // sweep points (sweep kinds only)
    std::vector<std::uint64_t> seeds = {1};
    std::string out;                        // output file; empty = stdout only
    std::string format = "csv";             // csv | json
    double exclude_radius_m = 25.0;         // gradient_check reporting flag
    double fd_step_m = 0.5;                 // gradient_check FD step

    void validate() const; // throws std::invalid_argument
};

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::pair<std::string, std::string>> metadata;
};

struct ExperimentResult {
    ResultTable table;
    std::vector<double> wall_seconds;  // per row; console-only, never persisted
    std::vector<std::pair<std::string, OptResult>> traces; // deploy kinds
};

// Strict parser: unknown sections/keys, duplicates and malformed values are
// errors carrying the line number. parse_config takes the raw text so the
// loader is testable without touching the filesystem.
ExperimentSpec load_config(const std::string& path);
ExperimentSpec parse_config(const std::string& text, const std::string& origin);

// Canonical round-trippable dump: parse_config(dump_config(s)) == s.
std::string dump_config(const ExperimentSpec& spec);

// Apply one "key=value" override (the CLI --set flag); key may belong to
// either section.
void apply_override(ExperimentSpec& spec, const std::string& key,
                    const std::string& value);

// FNV-1a over the canonical dump; stable across runs and platforms.
std::uint64_t config_hash(const ExperimentSpec& spec);

std::string format_number(double v); // 12 significant digits
std::string code_version();

ExperimentResult run_experiment(const ExperimentSpec& spec);

void emit_results(const ResultTable& table, std::ostream& os, const std::string& format);
void emit_results(const ResultTable& table, const std::string& path,
                  const std::string& format);

} // namespace cfmimo
