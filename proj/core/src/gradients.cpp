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

#include "cfmimo/gradients.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cfmimo {

namespace {

constexpr double kDistFloorM = 1.0; // direction vector floor near AP/user overlap

std::complex<double> trace_prod(const arma::cx_mat& a, const arma::cx_mat& b) {
    return arma::accu(a % b.st());
}

// psi (sum_i w_i e'_{i,T} rhat_i + T) psi, the resolvent response along T;
// the fixed-point feedback is carried by the response vector eprime_t.
arma::cx_mat build_dpsi(const ApDeState& st, const ChannelStatistics& stats,
                        const arma::umat& assoc, arma::uword l,
                        const arma::vec& eprime_t, const arma::cx_mat& target) {
    const double n = static_cast<double>(st.n_antennas);
    arma::cx_mat mid = target;
    for (arma::uword i = 0; i < stats.rhat.n_rows; ++i) {
        if (!assoc(i, l)) continue;
        const double opi = 1.0 + st.e(i);
        mid += stats.rhat(i, l) * (eprime_t(i) / (n * opi * opi));
    }
    return st.psi * mid * st.psi;
}

arma::cx_mat dpsi_identity(const ApDeState& st, const ChannelStatistics& stats,
                           const arma::umat& assoc, arma::uword l) {
    const arma::cx_mat eye(st.n_antennas, st.n_antennas, arma::fill::eye);
    return build_dpsi(st, stats, assoc, l, st.e_prime, eye);
}

// Signal and interference-plus-noise levels per user, from the report.
void signal_denominator(const RateReport& rep, const ServiceMap& svc, double noise_w,
                        arma::vec& s_amp, arma::vec& denom) {
    const arma::uword k_n = svc.assoc.n_rows;
    const arma::uword m_n = svc.assoc.n_cols;
    s_amp.zeros(k_n);
    denom.zeros(k_n);
    for (arma::uword k = 0; k < k_n; ++k) {
        for (arma::uword l = 0; l < m_n; ++l) {
            if (svc.assoc(k, l)) s_amp(k) += std::sqrt(svc.power(k, l)) * rep.sa(k, l);
            for (arma::uword j = 0; j < k_n; ++j)
                if (j != k && svc.assoc(j, l)) denom(k) += svc.power(j, l) * rep.itf(k, j, l);
        }
        denom(k) += noise_w;
    }
}

std::vector<bool> resolve_mask(const std::vector<bool>& mask, arma::uword m_n) {
    if (mask.empty()) return std::vector<bool>(m_n, false);
    if (mask.size() != m_n)
        throw std::invalid_argument("gradients: mask size does not match the AP count");
    return mask;
}

// d beta / d distance at a clamped distance.
double pathgain_slope(double dist_m, const SystemConfig& cfg) {
    const double d = std::max(dist_m, kDistFloorM);
    const double g = cfg.pathloss_exp;
    return -std::pow(2.0, g) * cfg.ref_gain() * (g / cfg.ref_dist_m) *
           std::pow(1.0 + d / cfg.ref_dist_m, -g - 1.0);
}

} // namespace

arma::cx_mat estimate_gain(const ChannelStatistics& stats, arma::uword k, arma::uword l) {
    const double eta_tau = stats.pilot_power_w * stats.pilot_len;
    const arma::cx_mat& psi_p = stats.pilot_cov(stats.pilot(k), l);
    // r psi^-1 = (psi^-1 r)^H for Hermitian factors
    return eta_tau * arma::solve(psi_p, stats.r(k, l), arma::solve_opts::likely_sympd).t();
}

arma::cx_mat dRhat_dR(const ChannelStatistics& stats, arma::uword k, arma::uword l) {
    const arma::cx_mat a = estimate_gain(stats, k, l);
    return 2.0 * a - a * a;
}

arma::cx_mat chain_through_estimate(const arma::cx_mat& g, const arma::cx_mat& a) {
    const arma::cx_mat ga = g * a;
    return ga.t() + ga - a.t() * ga;
}

arma::cx_mat dSA_dR(const ChannelStatistics& stats, const DeState& de,
                    const ServiceMap& svc, arma::uword k, arma::uword l) {
    const ApDeState& st = de.ap[l];
    const arma::uword n_dim = st.n_antennas;
    if (!svc.assoc(k, l)) return arma::cx_mat(n_dim, n_dim, arma::fill::zeros);

    const double n = static_cast<double>(n_dim);
    const double ep = st.e_prime(k);
    const arma::cx_mat dpsi_i = dpsi_identity(st, stats, svc.assoc, l);
    const arma::cx_mat g =
        st.psi / (n * std::sqrt(ep)) - dpsi_i * (st.e(k) / (2.0 * n * ep * std::sqrt(ep)));
    return chain_through_estimate(g, estimate_gain(stats, k, l));
}

arma::cx_mat dITF_own_dR(const ChannelStatistics& stats, const DeState& de,
                         const ServiceMap& svc, arma::uword k, arma::uword j,
                         arma::uword l) {
    const ApDeState& st = de.ap[l];
    const arma::uword n_dim = st.n_antennas;
    if (j == k || !svc.assoc(j, l)) return arma::cx_mat(n_dim, n_dim, arma::fill::zeros);

    const double n = static_cast<double>(n_dim);
    const double opk = 1.0 + st.e(k);
    const double denom = n * n * st.e_prime(j);
    const arma::cx_mat dpsi_hat_j =
        build_dpsi(st, stats, svc.assoc, l, st.eprime_hat.col(j), stats.rhat(j, l));

    const arma::cx_mat g_til = dpsi_hat_j / denom;
    if (!svc.assoc(k, l)) {
        // unserved victim: undeflated form, depends on the full covariance
        return g_til;
    }
    const arma::cx_mat g_hat =
        (dpsi_hat_j * opk - st.psi * (2.0 * st.eprime_hat(k, j))) / (denom * opk * opk * opk);
    return chain_through_estimate(g_hat - g_til, estimate_gain(stats, k, l)) + g_til;
}

arma::cx_mat dITF_interferer_dRhat(const ChannelStatistics& stats, const DeState& de,
                                   const ServiceMap& svc, arma::uword k, arma::uword j,
                                   arma::uword l) {
    const ApDeState& st = de.ap[l];
    const arma::uword n_dim = st.n_antennas;
    if (j == k || !svc.assoc(j, l)) return arma::cx_mat(n_dim, n_dim, arma::fill::zeros);

    const double n = static_cast<double>(n_dim);
    const double opk2 = (1.0 + st.e(k)) * (1.0 + st.e(k));
    const double epj = st.e_prime(j);
    const arma::cx_mat dpsi_hat_k =
        build_dpsi(st, stats, svc.assoc, l, st.eprime_hat.col(k), stats.rhat(k, l));
    const arma::cx_mat dpsi_til_k =
        build_dpsi(st, stats, svc.assoc, l, st.eprime_tilde.col(k), stats.rtil(k, l));
    const arma::cx_mat dpsi_i = dpsi_identity(st, stats, svc.assoc, l);

    const double num = st.eprime_hat(k, j) / opk2 + st.eprime_tilde(j, k);
    return ((dpsi_hat_k / opk2 + dpsi_til_k) * epj - dpsi_i * num) / (n * n * epj * epj);
}

arma::cx_mat dITF_interferer_dR(const ChannelStatistics& stats, const DeState& de,
                                const ServiceMap& svc, arma::uword k, arma::uword j,
                                arma::uword l) {
    const arma::cx_mat g = dITF_interferer_dRhat(stats, de, svc, k, j, l);
    if (j == k || !svc.assoc(j, l)) return g;
    return chain_through_estimate(g, estimate_gain(stats, j, l));
}

arma::cx_mat dSINR_dR(const ChannelStatistics& stats, const DeState& de,
                      const ServiceMap& svc, double noise_w, arma::uword k,
                      arma::uword j, arma::uword l) {
    const RateReport rep = deterministic_sinr(de, svc, noise_w);
    arma::vec s_amp, denom;
    signal_denominator(rep, svc, noise_w, s_amp, denom);

    const arma::uword n_dim = de.ap[l].n_antennas;
    arma::cx_mat g(n_dim, n_dim, arma::fill::zeros);
    if (j == k) {
        if (svc.assoc(k, l))
            g += dSA_dR(stats, de, svc, k, l) *
                 (2.0 * s_amp(k) * std::sqrt(svc.power(k, l)) / denom(k));
        const double c = s_amp(k) * s_amp(k) / (denom(k) * denom(k));
        for (arma::uword jj = 0; jj < svc.assoc.n_rows; ++jj)
            if (jj != k && svc.assoc(jj, l))
                g -= dITF_own_dR(stats, de, svc, k, jj, l) * (c * svc.power(jj, l));
    } else if (svc.assoc(j, l)) {
        const double c = s_amp(k) * s_amp(k) / (denom(k) * denom(k));
        g -= dITF_interferer_dR(stats, de, svc, k, j, l) * (c * svc.power(j, l));
    }
    return g;
}

arma::cx_mat dR_dposition(const Scenario& scenario, arma::uword k, arma::uword l,
                          arma::uword axis, bool* clamped) {
    const arma::rowvec diff = scenario.layout.ap_xy.row(l) - scenario.layout.ue_xy.row(k);
    const double dist = std::sqrt(diff(0) * diff(0) + diff(1) * diff(1));
    if (clamped != nullptr && dist < kDistFloorM) *clamped = true;
    const double dir = diff(axis) / std::max(dist, kDistFloorM);
    return scenario.corr.rbar(k, l) * (pathgain_slope(dist, scenario.cfg) * dir);
}

GradientReport sum_rate_gradient(const Scenario& scenario, const ChannelStatistics& stats,
                                 const DeState& de, const RateReport& report,
                                 const std::vector<bool>& mask) {
    const ServiceMap& svc = scenario.svc;
    const arma::uword k_n = svc.assoc.n_rows;
    const arma::uword m_n = svc.assoc.n_cols;
    const double noise_w = scenario.cfg.noise_power_w();
    const double eta_tau = stats.pilot_power_w * stats.pilot_len;

    GradientReport out;
    out.masked = resolve_mask(mask, m_n);
    out.grad_xy.zeros(m_n, 2);

    arma::vec s_amp, denom;
    signal_denominator(report, svc, noise_w, s_amp, denom);
    arma::vec w_rate(k_n), u_victim(k_n);
    for (arma::uword k = 0; k < k_n; ++k) {
        w_rate(k) = 1.0 / (std::log(2.0) * (1.0 + report.sinr(k)));
        u_victim(k) = -w_rate(k) * s_amp(k) * s_amp(k) / (denom(k) * denom(k));
    }

    for (arma::uword l = 0; l < m_n; ++l) {
        if (out.masked[l]) continue;
        const ApDeState& st = de.ap[l];
        const double n = static_cast<double>(st.n_antennas);
        const arma::uword n_dim = st.n_antennas;

        // shared response basis for this AP
        const arma::cx_mat dpsi_i = dpsi_identity(st, stats, svc.assoc, l);
        std::vector<arma::cx_mat> dpsi_hat(k_n), dpsi_til(k_n), gain(k_n);
        std::vector<arma::cx_mat> psi_inv(scenario.cfg.pilot_len);
        for (arma::uword k = 0; k < k_n; ++k) {
            dpsi_hat[k] =
                build_dpsi(st, stats, svc.assoc, l, st.eprime_hat.col(k), stats.rhat(k, l));
            dpsi_til[k] =
                build_dpsi(st, stats, svc.assoc, l, st.eprime_tilde.col(k), stats.rtil(k, l));
            const arma::uword t = stats.pilot(k);
            if (psi_inv[t].n_elem == 0) psi_inv[t] = arma::inv_sympd(stats.pilot_cov(t, l));
            gain[k] = eta_tau * stats.r(k, l) * psi_inv[t];
        }

        // beam-side aggregates over the users AP l serves
        arma::cx_mat beam_full(n_dim, n_dim, arma::fill::zeros); // sum q_j dpsi_hat_j
        arma::vec beam_scal(k_n, arma::fill::zeros);             // row j: sum q_i eprime_hat(j,i)
        arma::vec q(k_n, arma::fill::zeros);
        for (arma::uword i = 0; i < k_n; ++i) {
            if (!svc.assoc(i, l)) continue;
            q(i) = svc.power(i, l) / (n * n * st.e_prime(i));
            beam_full += dpsi_hat[i] * q(i);
            for (arma::uword j = 0; j < k_n; ++j)
                beam_scal(j) += q(i) * st.eprime_hat(j, i);
        }

        // victim-side aggregates over everyone who hears AP l
        arma::cx_mat victim_full(n_dim, n_dim, arma::fill::zeros);
        arma::mat num_kj(k_n, k_n); // interference numerator per (victim, beam)
        for (arma::uword k = 0; k < k_n; ++k) {
            const double opk2 = (1.0 + st.e(k)) * (1.0 + st.e(k));
            victim_full += (dpsi_hat[k] / opk2 + dpsi_til[k]) * u_victim(k);
            for (arma::uword j = 0; j < k_n; ++j)
                num_kj(k, j) = st.eprime_hat(k, j) / opk2 + st.eprime_tilde(j, k);
        }

        // net estimate-path gradient h_j and plain error-path remainder per user
        std::vector<arma::cx_mat> h(k_n), p_base(k_n), cross(k_n);
        for (arma::uword j = 0; j < k_n; ++j) {
            const double opj = 1.0 + st.e(j);
            const double opj2 = opj * opj;
            const double c0 = u_victim(j);

            arma::cx_mat beam_j = beam_full;
            double scal_j = beam_scal(j);
            if (svc.assoc(j, l)) {
                beam_j -= dpsi_hat[j] * q(j);
                scal_j -= q(j) * st.eprime_hat(j, j);
            }
            // own-interference: estimate path minus error path, chained later;
            // an unserved victim sees the undeflated form (constant e_j = 0),
            // so the deflation-factor derivative exists only when l serves j
            const arma::cx_mat sum_til = beam_j;
            arma::cx_mat sum_hat = beam_j / opj2;
            if (svc.assoc(j, l)) sum_hat -= st.psi * (2.0 * scal_j / (opj2 * opj));
            arma::cx_mat h_j = (sum_hat - sum_til) * c0;
            arma::cx_mat plain_j = sum_til * c0;

            if (svc.assoc(j, l)) {
                const double epj = st.e_prime(j);
                // own signal
                h_j += (st.psi / (n * std::sqrt(epj)) -
                        dpsi_i * (st.e(j) / (2.0 * n * epj * std::sqrt(epj)))) *
                       (w_rate(j) * 2.0 * s_amp(j) * std::sqrt(svc.power(j, l)) / denom(j));
                // interference inflicted on every other user
                const double opk2j = (1.0 + st.e(j)) * (1.0 + st.e(j));
                arma::cx_mat vic = victim_full -
                                   (dpsi_hat[j] / opk2j + dpsi_til[j]) * u_victim(j);
                double vic_scal = 0.0;
                for (arma::uword k = 0; k < k_n; ++k)
                    if (k != j) vic_scal += u_victim(k) * num_kj(k, j);
                h_j += (vic * epj - dpsi_i * vic_scal) *
                       (svc.power(j, l) / (n * n * epj * epj));
            }

            const arma::cx_mat ha = h_j * gain[j];
            cross[j] = gain[j].t() * ha;
            p_base[j] = ha.t() + ha - cross[j] + plain_j;
            h[j] = std::move(h_j);
        }

        // pilot contamination: a moved covariance also perturbs the estimates
        // of every user sharing the pilot, through the observation covariance
        std::vector<arma::cx_mat> copilot_sum(scenario.cfg.pilot_len);
        for (arma::uword k = 0; k < k_n; ++k) {
            arma::cx_mat& acc = copilot_sum[stats.pilot(k)];
            if (acc.n_elem == 0) acc = cross[k];
            else acc += cross[k];
        }

        for (arma::uword j = 0; j < k_n; ++j) {
            const arma::cx_mat p_j = p_base[j] + cross[j] - copilot_sum[stats.pilot(j)];
            const double tau = std::real(trace_prod(p_j, scenario.corr.rbar(j, l)));

            const arma::rowvec diff =
                scenario.layout.ap_xy.row(l) - scenario.layout.ue_xy.row(j);
            const double dist = std::sqrt(diff(0) * diff(0) + diff(1) * diff(1));
            if (dist < kDistFloorM) out.geometry_clamped = true;
            const double slope = pathgain_slope(dist, scenario.cfg);
            const double inv_d = 1.0 / std::max(dist, kDistFloorM);
            out.grad_xy(l, 0) += tau * slope * diff(0) * inv_d;
            out.grad_xy(l, 1) += tau * slope * diff(1) * inv_d;
        }
    }
    return out;
}

double de_sum_rate_at(const Scenario& scenario, const arma::mat& ap_xy,
                      bool freeze_angles) {
    if (ap_xy.n_rows != scenario.cfg.num_aps || ap_xy.n_cols != 2)
        throw std::invalid_argument("de_sum_rate_at: ap_xy must be num_aps x 2");

    Scenario moved = scenario;
    moved.layout.ap_xy = ap_xy;
    if (freeze_angles) {
        for (arma::uword k = 0; k < scenario.cfg.num_users; ++k) {
            for (arma::uword l = 0; l < scenario.cfg.num_aps; ++l) {
                const double dist =
                    arma::norm(moved.layout.ap_xy.row(l) - moved.layout.ue_xy.row(k), 2);
                moved.corr.beta(k, l) = pathloss_beta(dist, moved.cfg);
            }
        }
    } else {
        moved.corr = build_correlations(moved.layout, moved.cfg);
    }
    // service policy stays frozen: same association, pilots and power split
    const ChannelStatistics stats = build_statistics(moved.corr, moved.svc, moved.cfg);
    const RateReport rep = deterministic_sum_rate(moved, stats);
    return rep.sum_rate;
}

GradientReport fd_gradient(const Scenario& scenario, double step_m,
                           const std::vector<bool>& mask, bool freeze_angles) {
    if (!(step_m > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
    const arma::uword m_n = scenario.cfg.num_aps;

    GradientReport out;
    out.masked = resolve_mask(mask, m_n);
    out.grad_xy.zeros(m_n, 2);

    for (arma::uword l = 0; l < m_n; ++l) {
        if (out.masked[l]) continue;
        for (arma::uword axis = 0; axis < 2; ++axis) {
            arma::mat up = scenario.layout.ap_xy;
            arma::mat dn = scenario.layout.ap_xy;
            up(l, axis) += step_m;
            dn(l, axis) -= step_m;
            out.grad_xy(l, axis) = (de_sum_rate_at(scenario, up, freeze_angles) -
                                    de_sum_rate_at(scenario, dn, freeze_angles)) /
                                   (2.0 * step_m);
        }
    }
    return out;
}

} // namespace cfmimo
