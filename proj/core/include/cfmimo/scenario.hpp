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
// Network geometry and large-scale propagation state: AP/user placement,
// distance-dependent path gain, per-link spatial correlation, user-centric
// AP association, pilot assignment and per-AP downlink power split.

#pragma once

#include <armadillo>
#include <cstdint>
#include <string>

namespace cfmimo {

struct SystemConfig {
    double radius_m = 1000.0;          // service disk radius
    arma::uword num_aps = 15;          // access points (M)
    arma::uword num_users = 40;        // user terminals (K)
    arma::uword antennas_per_ap = 32;  // antennas per AP
    double ap_power_w = 10.0;          // per-AP downlink budget
    double noise_dbm = -94.0;          // receiver noise power, dBm
    double pilot_power_w = 0.4;        // uplink pilot power per user
    arma::uword pilot_len = 10;        // orthogonal pilot sequences
    double carrier_hz = 3.0e9;         // carrier frequency
    double ref_dist_m = 50.0;          // path-gain reference distance
    double pathloss_exp = 3.4;         // path-gain decay exponent
    double reg_param_w = -1.0;         // precoder regularizer; <0 selects noise power
    arma::uword assoc_count = 10;      // APs serving each user
    double angular_spread_rad = 0.3316;// scattering angular std dev
    double antenna_spacing = 0.5;      // array spacing in wavelengths
    arma::uword mc_trials = 500;       // Monte Carlo channel draws
    std::uint64_t rng_seed = 1;

    double noise_power_w() const;      // watts, from noise_dbm
    double reg_param() const;          // effective regularizer, watts
    double ref_gain() const;           // path gain at the reference distance
    void validate() const;             // throws std::invalid_argument
};

struct Layout {
    arma::mat ap_xy; // num_aps x 2
    arma::mat ue_xy; // num_users x 2
};

// assoc(k,l) = 1 when AP l serves user k; pilot(k) in [0, pilot_len);
// power(k,l) downlink watts AP l spends on user k (0 when unserved).
struct ServiceMap {
    arma::umat assoc;
    arma::uvec pilot;
    arma::mat power;
};

// Large-scale state split so the gain table can be rebuilt for moved APs
// while the unit-diagonal correlation shapes stay fixed.
struct Correlations {
    arma::mat beta;                  // K x M path gains
    arma::field<arma::cx_mat> rbar;  // K x M unit-diagonal correlation shapes
};

struct Scenario {
    SystemConfig cfg;
    Layout layout;
    Correlations corr;
    ServiceMap svc;
};

// Distance-dependent path gain; continuous at zero distance, equals
// ref_gain() at the reference distance.
double pathloss_beta(double distance_m, const SystemConfig& cfg);

// Uniform linear array correlation shape for a scattering cluster seen
// under the given azimuth. Hermitian, unit diagonal, PSD by construction
// (Gaussian characteristic function evaluated at integer lags).
arma::cx_mat local_scattering_corr(double angle_rad, arma::uword n_antennas,
                                   const SystemConfig& cfg);

// APs and users drawn independently and uniformly on the service disk.
Layout generate_layout(const SystemConfig& cfg, std::uint64_t seed);

Correlations build_correlations(const Layout& layout, const SystemConfig& cfg);

// Full per-link correlation matrix beta(k,l) * rbar(k,l).
arma::cx_mat full_corr(const Correlations& corr, arma::uword k, arma::uword l);

// Each user selects its assoc_count strongest APs by path gain
// (ties resolved toward the lower AP index).
arma::umat associate(const arma::mat& beta, const SystemConfig& cfg);

// Greedy sequential pilot assignment: user k takes the pilot with the
// least accumulated co-pilot gain at k's strongest AP.
arma::uvec assign_pilots(const arma::umat& assoc, const arma::mat& beta,
                         const SystemConfig& cfg);

// Square-root weighted split of each AP's budget across its served users.
arma::mat allocate_power(const arma::umat& assoc, const arma::mat& beta,
                         const SystemConfig& cfg);

ServiceMap build_service_map(const arma::mat& beta, const SystemConfig& cfg);

Scenario build_scenario(const SystemConfig& cfg, std::uint64_t seed);

// Recompute correlations and service policy after AP positions changed.
void rebuild_geometry(Scenario& scenario);

// Plain-text layout exchange: header "id,x,y,kind", kind in {ap, ue}.
void save_layout_csv(const Layout& layout, const std::string& path);
Layout load_layout_csv(const std::string& path);

} // namespace cfmimo
