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

#include "cfmimo/stats.hpp"

#include <stdexcept>

namespace cfmimo {

namespace {
arma::cx_mat hermitize(const arma::cx_mat& a) { return 0.5 * (a + a.t()); }
} // namespace

arma::cx_mat pilot_observation_cov(const std::vector<arma::cx_mat>& copilot_r,
                                   double pilot_power_w, double pilot_len,
                                   double sigma_ul2) {
    if (copilot_r.empty())
        throw std::invalid_argument("pilot_observation_cov: empty co-pilot set");
    const arma::uword n = copilot_r.front().n_rows;
    arma::cx_mat psi(n, n, arma::fill::zeros);
    for (const auto& r : copilot_r) {
        if (r.n_rows != n || r.n_cols != n)
            throw std::invalid_argument("pilot_observation_cov: inconsistent sizes");
        psi += r;
    }
    psi *= pilot_power_w * pilot_len;
    psi.diag() += sigma_ul2;
    return psi;
}

arma::cx_mat estimated_corr(const arma::cx_mat& r, const arma::cx_mat& psi,
                            double pilot_power_w, double pilot_len) {
    // solve instead of an explicit inverse; psi is Hermitian PD
    arma::cx_mat psi_inv_r = arma::solve(psi, r, arma::solve_opts::likely_sympd);
    return hermitize(pilot_power_w * pilot_len * r * psi_inv_r);
}

arma::cx_mat error_corr(const arma::cx_mat& r, const arma::cx_mat& rhat) {
    return hermitize(r - rhat);
}

ChannelStatistics build_statistics(const Correlations& corr, const ServiceMap& svc,
                                   const SystemConfig& cfg) {
    const arma::uword k_n = corr.beta.n_rows;
    const arma::uword m_n = corr.beta.n_cols;
    ChannelStatistics st;
    st.r.set_size(k_n, m_n);
    st.rhat.set_size(k_n, m_n);
    st.rtil.set_size(k_n, m_n);
    st.pilot_cov.set_size(cfg.pilot_len, m_n);
    st.pilot = svc.pilot;
    st.pilot_power_w = cfg.pilot_power_w;
    st.pilot_len = static_cast<double>(cfg.pilot_len);
    st.sigma_ul2 = cfg.noise_power_w();

    std::vector<std::vector<arma::uword>> sharers(cfg.pilot_len);
    for (arma::uword k = 0; k < k_n; ++k) {
        if (svc.pilot(k) >= cfg.pilot_len)
            throw std::invalid_argument("build_statistics: pilot index out of range");
        sharers[svc.pilot(k)].push_back(k);
    }

    for (arma::uword l = 0; l < m_n; ++l) {
        for (arma::uword k = 0; k < k_n; ++k) st.r(k, l) = full_corr(corr, k, l);
        // antenna count per AP comes from the matrices, not the config,
        // so heterogeneous arrays pass through unchanged
        const arma::uword n = k_n > 0 ? st.r(0, l).n_rows : cfg.antennas_per_ap;
        for (arma::uword t = 0; t < cfg.pilot_len; ++t) {
            arma::cx_mat psi(n, n, arma::fill::zeros);
            for (arma::uword k : sharers[t]) psi += st.r(k, l);
            psi *= st.pilot_power_w * st.pilot_len;
            psi.diag() += st.sigma_ul2;
            st.pilot_cov(t, l) = psi;
        }
        for (arma::uword k = 0; k < k_n; ++k) {
            st.rhat(k, l) = estimated_corr(st.r(k, l), st.pilot_cov(svc.pilot(k), l),
                                           st.pilot_power_w, st.pilot_len);
            st.rtil(k, l) = error_corr(st.r(k, l), st.rhat(k, l));
        }
    }
    return st;
}

ChannelStatistics build_statistics(const Scenario& scenario) {
    return build_statistics(scenario.corr, scenario.svc, scenario.cfg);
}

} // namespace cfmimo
