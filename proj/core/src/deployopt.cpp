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

#include "cfmimo/deployopt.hpp"

#include "cfmimo/gradients.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace cfmimo {

namespace {

struct Evaluation {
    Scenario scenario;
    ChannelStatistics stats;
    DeState de;
    RateReport report;
};

Evaluation evaluate_layout(const SystemConfig& cfg, const Layout& layout,
                           const FixedPointOptions& fp) {
    Evaluation ev;
    ev.scenario.cfg = cfg;
    ev.scenario.layout = layout;
    rebuild_geometry(ev.scenario);
    ev.stats = build_statistics(ev.scenario);
    ev.de = solve_de(ev.stats, ev.scenario.svc, cfg.reg_param(), fp);
    ev.report = deterministic_sinr(ev.de, ev.scenario.svc, cfg.noise_power_w());
    return ev;
}

arma::vec row_norms(const arma::mat& grad_xy) {
    arma::vec norms(grad_xy.n_rows);
    for (arma::uword l = 0; l < grad_xy.n_rows; ++l)
        norms(l) = arma::norm(grad_xy.row(l), 2);
    return norms;
}

} // namespace

double layout_objective(const SystemConfig& cfg, const Layout& layout,
                        const FixedPointOptions& fp) {
    return evaluate_layout(cfg, layout, fp).report.sum_rate;
}

double bb_step(const arma::mat& dpos, const arma::mat& dgrad, double step_min,
               double step_max) {
    const double num = arma::accu(dpos % dgrad);
    const double den = arma::accu(dgrad % dgrad);
    if (!(den > 0.0)) return step_max;
    return std::clamp(std::abs(num / den), step_min, step_max);
}

arma::uword largest_gradient_ap(const arma::mat& grad_xy, const std::vector<bool>& masked) {
    const arma::vec norms = row_norms(grad_xy);
    arma::uword best = grad_xy.n_rows;
    double best_norm = -1.0;
    for (arma::uword l = 0; l < grad_xy.n_rows; ++l) {
        if (masked[l]) continue;
        if (norms(l) > best_norm) {
            best_norm = norms(l);
            best = l;
        }
    }
    if (best == grad_xy.n_rows)
        throw std::logic_error("largest_gradient_ap: every AP is already masked");
    return best;
}

OptResult bbgd_optimize(const SystemConfig& cfg, const Layout& init,
                        const BbgdOptions& opts) {
    cfg.validate();
    if (init.ap_xy.n_rows != cfg.num_aps || init.ue_xy.n_rows != cfg.num_users)
        throw std::invalid_argument("bbgd_optimize: layout does not match the config");

    OptResult out;
    out.masked.assign(cfg.num_aps, false);

    Layout cur = init;
    Evaluation ev = evaluate_layout(cfg, cur, opts.fixed_point);
    double cur_obj = ev.report.sum_rate;
    out.initial_objective = cur_obj;
    out.best_layout = cur;
    out.best_objective = cur_obj;
    out.trace.push_back({0, cur_obj, 0.0, 0.0, cur.ap_xy, out.masked});

    arma::mat prev_pos, prev_grad; // last (position, gradient) pair for BB
    arma::uword stall_count = 0;
    arma::uword masked_count = 0;

    for (arma::uword t = 1; t <= opts.max_iter; ++t) {
        out.iterations = t;
        const GradientReport gr =
            opts.use_fd_gradient
                ? fd_gradient(ev.scenario, opts.fd_step_m, out.masked)
                : sum_rate_gradient(ev.scenario, ev.stats, ev.de, ev.report, out.masked);
        const arma::vec norms = row_norms(gr.grad_xy);
        double gmax = 0.0;
        for (arma::uword l = 0; l < cfg.num_aps; ++l)
            if (!out.masked[l]) gmax = std::max(gmax, norms(l));
        if (!(gmax > 0.0)) {
            out.reason = StopReason::all_masked; // nothing left to move
            return out;
        }

        const double step_max = opts.move_max_m / gmax;
        const double step_min = opts.move_min_m / gmax;
        double step = step_max;
        if (prev_grad.n_elem > 0)
            step = bb_step(cur.ap_xy - prev_pos, gr.grad_xy - prev_grad, step_min, step_max);
        prev_pos = cur.ap_xy;
        prev_grad = gr.grad_xy;

        // backtracking: shrink toward the floor, then mask the dominant AP
        bool accepted = false;
        Evaluation cand_ev;
        while (true) {
            Layout cand = cur;
            cand.ap_xy += step * gr.grad_xy; // masked rows are exact zeros
            cand_ev = evaluate_layout(cfg, cand, opts.fixed_point);
            if (cand_ev.report.sum_rate > cur_obj) {
                accepted = true;
                const double gain = (cand_ev.report.sum_rate - cur_obj) /
                                    std::max(cur_obj, std::numeric_limits<double>::min());
                cur = cand;
                cur_obj = cand_ev.report.sum_rate;
                ev = std::move(cand_ev);
                stall_count = gain < opts.rel_tol ? stall_count + 1 : 0;
                out.trace.push_back({t, cur_obj, step, step * gmax, cur.ap_xy, out.masked});
                break;
            }
            if (step <= step_min) {
                const arma::uword worst = largest_gradient_ap(gr.grad_xy, out.masked);
                out.masked[worst] = true;
                ++masked_count;
                prev_pos.reset(); // BB pair is stale once the mask changes
                prev_grad.reset();
                ++stall_count; // no objective gain this iteration
                out.trace.push_back({t, cur_obj, 0.0, 0.0, cur.ap_xy, out.masked});
                break;
            }
            step = std::max(0.5 * step, step_min);
        }
        (void)accepted;

        if (cur_obj > out.best_objective) {
            out.best_objective = cur_obj;
            out.best_layout = cur;
        }
        if (masked_count == cfg.num_aps) {
            out.reason = StopReason::all_masked;
            return out;
        }
        if (stall_count >= opts.stall_window) {
            out.reason = StopReason::stalled;
            return out;
        }
    }
    out.reason = StopReason::max_iterations;
    return out;
}

Layout kmeans_init(const arma::mat& ue_xy, arma::uword num_aps, std::uint64_t seed) {
    const arma::uword k_n = ue_xy.n_rows;
    if (k_n < num_aps)
        throw std::invalid_argument("kmeans_init: fewer users than requested centroids");

    std::mt19937_64 eng = make_engine(seed, RngStream::kmeans);
    // sample distinct starting points (partial Fisher-Yates)
    arma::uvec order = arma::regspace<arma::uvec>(0, k_n - 1);
    for (arma::uword i = 0; i < num_aps; ++i) {
        std::uniform_int_distribution<arma::uword> pick(i, k_n - 1);
        std::swap(order(i), order(pick(eng)));
    }
    arma::mat centroids(num_aps, 2);
    for (arma::uword c = 0; c < num_aps; ++c) centroids.row(c) = ue_xy.row(order(c));

    arma::uvec assign(k_n, arma::fill::zeros);
    arma::vec dist2(k_n, arma::fill::zeros);
    for (arma::uword it = 0; it < 100; ++it) {
        bool changed = false;
        for (arma::uword k = 0; k < k_n; ++k) {
            arma::uword best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (arma::uword c = 0; c < num_aps; ++c) {
                const double d = std::pow(ue_xy(k, 0) - centroids(c, 0), 2) +
                                 std::pow(ue_xy(k, 1) - centroids(c, 1), 2);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            dist2(k) = best_d;
            if (assign(k) != best) {
                assign(k) = best;
                changed = true;
            }
        }
        for (arma::uword c = 0; c < num_aps; ++c) {
            const arma::uvec members = arma::find(assign == c);
            if (members.is_empty()) {
                centroids.row(c) = ue_xy.row(dist2.index_max()); // farthest point
                changed = true;
            } else {
                centroids.row(c) = arma::mean(ue_xy.rows(members), 0);
            }
        }
        if (!changed) break;
    }

    Layout layout;
    layout.ap_xy = centroids;
    layout.ue_xy = ue_xy;
    return layout;
}

void save_trace_csv(const OptResult& result, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr)
        throw std::runtime_error("save_trace_csv: cannot open " + path);
    const arma::uword m_n = result.trace.empty() ? 0 : result.trace.front().ap_xy.n_rows;
    std::fprintf(f, "iter,objective,step,max_move_m,masked_count,masked_bits");
    for (arma::uword l = 0; l < m_n; ++l)
        std::fprintf(f, ",ap%llu_x,ap%llu_y", static_cast<unsigned long long>(l),
                     static_cast<unsigned long long>(l));
    std::fprintf(f, "\n");
    for (const OptTraceRow& row : result.trace) {
        arma::uword masked_count = 0;
        for (bool m : row.masked) masked_count += m ? 1 : 0;
        std::fprintf(f, "%llu,%.12g,%.12g,%.12g,%llu,",
                     static_cast<unsigned long long>(row.iter), row.objective, row.step,
                     row.max_move_m, static_cast<unsigned long long>(masked_count));
        for (arma::uword l = 0; l < m_n; ++l) std::fputc(row.masked[l] ? '1' : '0', f);
        for (arma::uword l = 0; l < m_n; ++l)
            std::fprintf(f, ",%.12g,%.12g", row.ap_xy(l, 0), row.ap_xy(l, 1));
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

} // namespace cfmimo
