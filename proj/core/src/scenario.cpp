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

#include "cfmimo/scenario.hpp"
#include "cfmimo/rng.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace cfmimo {

double SystemConfig::noise_power_w() const {
    return std::pow(10.0, noise_dbm / 10.0) * 1e-3;
}

double SystemConfig::reg_param() const {
    return reg_param_w >= 0.0 ? reg_param_w : noise_power_w();
}

double SystemConfig::ref_gain() const {
    const double fc_mhz = carrier_hz / 1e6;
    const double pl_db = -35.4 + 34.0 * std::log10(ref_dist_m) + 20.0 * std::log10(fc_mhz);
    return std::pow(10.0, -pl_db / 10.0);
}

void SystemConfig::validate() const {
    auto bad = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
    if (!(radius_m > 0.0)) bad("radius_m must be positive");
    if (num_aps < 1) bad("num_aps must be at least 1");
    if (antennas_per_ap < 1) bad("antennas_per_ap must be at least 1");
    if (!(ap_power_w > 0.0)) bad("ap_power_w must be positive");
    if (!(pilot_power_w > 0.0)) bad("pilot_power_w must be positive");
    if (pilot_len < 1) bad("pilot_len must be at least 1");
    if (!(carrier_hz > 0.0)) bad("carrier_hz must be positive");
    if (!(ref_dist_m > 0.0)) bad("ref_dist_m must be positive");
    if (!(pathloss_exp > 0.0)) bad("pathloss_exp must be positive");
    if (assoc_count < 1) bad("assoc_count must be at least 1");
    if (!(angular_spread_rad >= 0.0)) bad("angular_spread_rad must be nonnegative");
    if (!(antenna_spacing > 0.0)) bad("antenna_spacing must be positive");
    if (mc_trials < 1) bad("mc_trials must be at least 1");
    if (!std::isfinite(noise_dbm)) bad("noise_dbm must be finite");
}

double pathloss_beta(double distance_m, const SystemConfig& cfg) {
    if (distance_m < 0.0) throw std::invalid_argument("pathloss_beta: negative distance");
    const double g = cfg.pathloss_exp;
    return std::pow(2.0, g) * cfg.ref_gain() *
           std::pow(1.0 + distance_m / cfg.ref_dist_m, -g);
}

arma::cx_mat local_scattering_corr(double angle_rad, arma::uword n_antennas,
                                   const SystemConfig& cfg) {
    const double two_pi_d = 2.0 * arma::datum::pi * cfg.antenna_spacing;
    const double phase_rate = two_pi_d * std::sin(angle_rad);
    const double spread_rate = two_pi_d * std::cos(angle_rad);
    const double damp = 0.5 * cfg.angular_spread_rad * cfg.angular_spread_rad;

    arma::cx_mat r(n_antennas, n_antennas);
    // Toeplitz in the antenna lag: value depends on t - m only.
    for (arma::uword t = 0; t < n_antennas; ++t) {
        for (arma::uword m = 0; m < n_antennas; ++m) {
            const double lag = static_cast<double>(t) - static_cast<double>(m);
            const double mag = std::exp(-damp * spread_rate * spread_rate * lag * lag);
            r(t, m) = std::polar(mag, phase_rate * lag);
        }
    }
    return r;
}

Layout generate_layout(const SystemConfig& cfg, std::uint64_t seed) {
    auto eng = make_engine(seed, RngStream::layout);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw_disk = [&](arma::mat& xy) {
        for (arma::uword i = 0; i < xy.n_rows; ++i) {
            const double rad = cfg.radius_m * std::sqrt(unit(eng));
            const double ang = 2.0 * arma::datum::pi * unit(eng);
            xy(i, 0) = rad * std::cos(ang);
            xy(i, 1) = rad * std::sin(ang);
        }
    };
    Layout layout;
    layout.ap_xy.set_size(cfg.num_aps, 2);
    layout.ue_xy.set_size(cfg.num_users, 2);
    draw_disk(layout.ap_xy);
    draw_disk(layout.ue_xy);
    return layout;
}

Correlations build_correlations(const Layout& layout, const SystemConfig& cfg) {
    const arma::uword k_n = layout.ue_xy.n_rows;
    const arma::uword m_n = layout.ap_xy.n_rows;
    Correlations corr;
    corr.beta.set_size(k_n, m_n);
    corr.rbar.set_size(k_n, m_n);
    for (arma::uword l = 0; l < m_n; ++l) {
        for (arma::uword k = 0; k < k_n; ++k) {
            const double dx = layout.ue_xy(k, 0) - layout.ap_xy(l, 0);
            const double dy = layout.ue_xy(k, 1) - layout.ap_xy(l, 1);
            const double dist = std::hypot(dx, dy);
            corr.beta(k, l) = pathloss_beta(dist, cfg);
            const double theta = std::atan2(dy, dx);
            corr.rbar(k, l) = local_scattering_corr(theta, cfg.antennas_per_ap, cfg);

            arma::vec eigval = arma::eig_sym(corr.rbar(k, l));
            // unit diagonal: trace / N == 1, so the PSD slack is absolute
            if (eigval.min() < -1e-10) {
                throw std::runtime_error("build_correlations: correlation shape for user " +
                                         std::to_string(k) + ", AP " + std::to_string(l) +
                                         " is not numerically PSD");
            }
        }
    }
    return corr;
}

arma::cx_mat full_corr(const Correlations& corr, arma::uword k, arma::uword l) {
    return corr.beta(k, l) * corr.rbar(k, l);
}

arma::umat associate(const arma::mat& beta, const SystemConfig& cfg) {
    const arma::uword k_n = beta.n_rows;
    const arma::uword m_n = beta.n_cols;
    const arma::uword take = std::min<arma::uword>(cfg.assoc_count, m_n);
    arma::umat assoc(k_n, m_n, arma::fill::zeros);
    for (arma::uword k = 0; k < k_n; ++k) {
        // stable order resolves path-gain ties toward the lower AP index
        arma::uvec order = arma::stable_sort_index(beta.row(k).t(), "descend");
        for (arma::uword i = 0; i < take; ++i) assoc(k, order(i)) = 1;
    }
    return assoc;
}

arma::uvec assign_pilots(const arma::umat& assoc, const arma::mat& beta,
                         const SystemConfig& cfg) {
    (void)assoc; // policy depends on path gains only
    const arma::uword k_n = beta.n_rows;
    arma::uvec pilot(k_n, arma::fill::zeros);
    for (arma::uword k = 0; k < k_n; ++k) {
        const arma::uword primary = beta.row(k).index_max();
        arma::vec load(cfg.pilot_len, arma::fill::zeros);
        for (arma::uword j = 0; j < k; ++j) load(pilot(j)) += beta(j, primary);
        pilot(k) = load.index_min(); // index_min takes the lowest index on ties
    }
    return pilot;
}

arma::mat allocate_power(const arma::umat& assoc, const arma::mat& beta,
                         const SystemConfig& cfg) {
    const arma::uword k_n = beta.n_rows;
    const arma::uword m_n = beta.n_cols;
    arma::mat power(k_n, m_n, arma::fill::zeros);
    for (arma::uword l = 0; l < m_n; ++l) {
        double denom = 0.0;
        for (arma::uword k = 0; k < k_n; ++k)
            if (assoc(k, l)) denom += std::sqrt(beta(k, l));
        if (denom <= 0.0) continue; // AP serves nobody
        for (arma::uword k = 0; k < k_n; ++k)
            if (assoc(k, l)) power(k, l) = cfg.ap_power_w * std::sqrt(beta(k, l)) / denom;
    }
    return power;
}

ServiceMap build_service_map(const arma::mat& beta, const SystemConfig& cfg) {
    ServiceMap svc;
    svc.assoc = associate(beta, cfg);
    svc.pilot = assign_pilots(svc.assoc, beta, cfg);
    svc.power = allocate_power(svc.assoc, beta, cfg);
    return svc;
}

Scenario build_scenario(const SystemConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Scenario s;
    s.cfg = cfg;
    s.layout = generate_layout(cfg, seed);
    s.corr = build_correlations(s.layout, cfg);
    s.svc = build_service_map(s.corr.beta, cfg);
    return s;
}

void rebuild_geometry(Scenario& scenario) {
    scenario.corr = build_correlations(scenario.layout, scenario.cfg);
    scenario.svc = build_service_map(scenario.corr.beta, scenario.cfg);
}

void save_layout_csv(const Layout& layout, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_layout_csv: cannot open " + path);
    out << "id,x,y,kind\n";
    char buf[96];
    for (arma::uword i = 0; i < layout.ap_xy.n_rows; ++i) {
        std::snprintf(buf, sizeof(buf), "%llu,%.12g,%.12g,ap\n",
                      static_cast<unsigned long long>(i), layout.ap_xy(i, 0), layout.ap_xy(i, 1));
        out << buf;
    }
    for (arma::uword i = 0; i < layout.ue_xy.n_rows; ++i) {
        std::snprintf(buf, sizeof(buf), "%llu,%.12g,%.12g,ue\n",
                      static_cast<unsigned long long>(i), layout.ue_xy(i, 0), layout.ue_xy(i, 1));
        out << buf;
    }
}

Layout load_layout_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_layout_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("id,x,y,kind", 0) != 0)
        throw std::runtime_error("load_layout_csv: bad header in " + path);
    std::vector<std::array<double, 2>> aps, ues;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string id_s, x_s, y_s, kind;
        if (!std::getline(row, id_s, ',') || !std::getline(row, x_s, ',') ||
            !std::getline(row, y_s, ',') || !std::getline(row, kind))
            throw std::runtime_error("load_layout_csv: malformed row: " + line);
        const std::array<double, 2> xy{std::stod(x_s), std::stod(y_s)};
        if (kind == "ap") aps.push_back(xy);
        else if (kind == "ue") ues.push_back(xy);
        else throw std::runtime_error("load_layout_csv: unknown kind: " + kind);
    }
    Layout layout;
    layout.ap_xy.set_size(aps.size(), 2);
    layout.ue_xy.set_size(ues.size(), 2);
    for (arma::uword i = 0; i < aps.size(); ++i) {
        layout.ap_xy(i, 0) = aps[i][0];
        layout.ap_xy(i, 1) = aps[i][1];
    }
    for (arma::uword i = 0; i < ues.size(); ++i) {
        layout.ue_xy(i, 0) = ues[i][0];
        layout.ue_xy(i, 1) = ues[i][1];
    }
    return layout;
}

} // namespace cfmimo
