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
// AP placement optimization: gradient ascent on the deterministic sum rate
// with Barzilai-Borwein step sizes, displacement clamping, backtracking
// halving, and persistent masking of runaway gradients. The service policy
// is rebuilt after every accepted move and frozen inside each evaluation.

#pragma once

#include "cfmimo/detequiv.hpp"
#include "cfmimo/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cfmimo {

struct BbgdOptions {
    arma::uword max_iter = 200;
    double rel_tol = 1e-4;          // gain below this counts as a stall
    arma::uword stall_window = 5;   // consecutive stalls before stopping
    double move_max_m = 50.0;       // most-moved AP per iteration, meters
    double move_min_m = 20.0;
    bool use_fd_gradient = false;   // step from the FD oracle instead of the
    double fd_step_m = 0.5;         // analytic gradient (decoupling runs)
    FixedPointOptions fixed_point;
};

enum class StopReason { all_masked, stalled, max_iterations };

struct OptTraceRow {
    arma::uword iter = 0;
    double objective = 0.0;   // accepted objective after this iteration
    double step = 0.0;        // zero for the initial row and mask-only rows
    double max_move_m = 0.0;  // displacement of the most-moved AP
    arma::mat ap_xy;          // accepted positions after this iteration
    std::vector<bool> masked; // mask snapshot after this iteration
};

struct OptResult {
    Layout best_layout;
    double best_objective = 0.0;
    double initial_objective = 0.0;
    std::vector<OptTraceRow> trace;
    std::vector<bool> masked;
    StopReason reason = StopReason::max_iterations;
    arma::uword iterations = 0;
};

// Deterministic sum rate of a layout under a freshly rebuilt service policy.
double layout_objective(const SystemConfig& cfg, const Layout& layout,
                        const FixedPointOptions& fp = {});

// Raw quotient <dpos, dgrad> / <dgrad, dgrad>, sign coerced positive and
// clamped to [step_min, step_max]; flat-gradient fallback is step_max.
double bb_step(const arma::mat& dpos, const arma::mat& dgrad, double step_min,
               double step_max);

// Index of the unmasked AP with the largest gradient row norm.
arma::uword largest_gradient_ap(const arma::mat& grad_xy, const std::vector<bool>& masked);

OptResult bbgd_optimize(const SystemConfig& cfg, const Layout& init,
                        const BbgdOptions& opts = {});

// Lloyd clustering of user positions into num_aps centroids; empty clusters
// are reseeded at the point farthest from its assigned centroid.
Layout kmeans_init(const arma::mat& ue_xy, arma::uword num_aps, std::uint64_t seed);

// One row per iteration: iter, objective, step, max move, masked count,
// masked bitmask and AP coordinates.
void save_trace_csv(const OptResult& result, const std::string& path);

} // namespace cfmimo
