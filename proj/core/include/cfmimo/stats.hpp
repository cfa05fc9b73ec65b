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
// Second-order channel statistics under linear MMSE channel estimation
// from shared uplink pilots. Estimation error and estimate are
// uncorrelated, so the estimate/error covariance pair splits every link
// covariance additively: r = rhat + rtil.

#pragma once

#include "cfmimo/scenario.hpp"

#include <armadillo>
#include <vector>

namespace cfmimo {

struct ChannelStatistics {
    arma::field<arma::cx_mat> r;         // K x M link covariance
    arma::field<arma::cx_mat> rhat;      // K x M estimate covariance
    arma::field<arma::cx_mat> rtil;      // K x M error covariance
    arma::field<arma::cx_mat> pilot_cov; // pilot_len x M observation covariance
    arma::uvec pilot;                    // pilot index per user
    double pilot_power_w = 0.0;
    double pilot_len = 0.0;
    double sigma_ul2 = 0.0;              // uplink noise power (watts)
};

// Covariance of the de-spread pilot observation: the pilot-sharing users'
// covariances scaled by pilot energy, plus noise.
arma::cx_mat pilot_observation_cov(const std::vector<arma::cx_mat>& copilot_r,
                                   double pilot_power_w, double pilot_len,
                                   double sigma_ul2);

// MMSE estimate covariance: eta * tau_p * r * psi^-1 * r, re-hermitized.
arma::cx_mat estimated_corr(const arma::cx_mat& r, const arma::cx_mat& psi,
                            double pilot_power_w, double pilot_len);

// Estimation error covariance r - rhat.
arma::cx_mat error_corr(const arma::cx_mat& r, const arma::cx_mat& rhat);

ChannelStatistics build_statistics(const Correlations& corr, const ServiceMap& svc,
                                   const SystemConfig& cfg);
ChannelStatistics build_statistics(const Scenario& scenario);

} // namespace cfmimo
