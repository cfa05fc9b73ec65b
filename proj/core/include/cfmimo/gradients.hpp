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
// Derivatives of the deterministic sum rate with respect to per-link
// covariance matrices and, through the path-gain chain, AP positions.
// Matrix gradients G are Hermitian and follow the convention
// df = Re tr(G dR); the service policy and the per-link correlation
// shapes are held fixed while differentiating.

#pragma once

#include "cfmimo/detequiv.hpp"
#include "cfmimo/scenario.hpp"
#include "cfmimo/stats.hpp"

#include <armadillo>
#include <vector>

namespace cfmimo {

struct GradientReport {
    arma::mat grad_xy;          // num_aps x 2, zero rows for masked APs
    std::vector<bool> masked;   // echo of the input mask
    bool geometry_clamped = false; // some AP-user distance hit the floor
};

// Sensitivity of the estimate covariance to the link covariance is carried
// by the gain matrix a = eta * tau_p * r * psi_pilot^-1.
arma::cx_mat estimate_gain(const ChannelStatistics& stats, arma::uword k, arma::uword l);

// First-order factor 2a - a^2 of the estimate covariance response.
arma::cx_mat dRhat_dR(const ChannelStatistics& stats, arma::uword k, arma::uword l);

// Pull a gradient taken w.r.t. the estimate covariance back to the link
// covariance: g -> a^H g + g a - a^H g a (exact for rhat = a r a^H-free
// symmetrized response; preserves Hermitian structure).
arma::cx_mat chain_through_estimate(const arma::cx_mat& g, const arma::cx_mat& a);

// d SA(k,l) / d R(k,l); zero when l does not serve k.
arma::cx_mat dSA_dR(const ChannelStatistics& stats, const DeState& de,
                    const ServiceMap& svc, arma::uword k, arma::uword l);

// d ITF(k,j,l) / d R(k,l): sensitivity of the interference user k receives
// from AP l's beam toward j, w.r.t. the victim's own link covariance.
arma::cx_mat dITF_own_dR(const ChannelStatistics& stats, const DeState& de,
                         const ServiceMap& svc, arma::uword k, arma::uword j,
                         arma::uword l);

// d ITF(k,j,l) / d Rhat(j,l): sensitivity w.r.t. the interferer's estimate
// covariance, before pulling back through the estimation map. Its trace
// against rhat(j,l) itself vanishes under full association: rescaling the
// interferer's estimate cancels between beam gain and power normalization.
arma::cx_mat dITF_interferer_dRhat(const ChannelStatistics& stats, const DeState& de,
                                   const ServiceMap& svc, arma::uword k, arma::uword j,
                                   arma::uword l);

// d ITF(k,j,l) / d R(j,l): same figure w.r.t. the interferer's covariance.
arma::cx_mat dITF_interferer_dR(const ChannelStatistics& stats, const DeState& de,
                                const ServiceMap& svc, arma::uword k, arma::uword j,
                                arma::uword l);

// d SINR(k) / d R(j,l) assembled by the quotient rule.
arma::cx_mat dSINR_dR(const ChannelStatistics& stats, const DeState& de,
                      const ServiceMap& svc, double noise_w, arma::uword k,
                      arma::uword j, arma::uword l);

// d R(k,l) / d position(l, axis) = slope * direction * rbar; distances
// below the floor are clamped and flagged.
arma::cx_mat dR_dposition(const Scenario& scenario, arma::uword k, arma::uword l,
                          arma::uword axis, bool* clamped = nullptr);

// Position gradient of the deterministic sum rate for every unmasked AP.
GradientReport sum_rate_gradient(const Scenario& scenario, const ChannelStatistics& stats,
                                 const DeState& de, const RateReport& report,
                                 const std::vector<bool>& mask = {});

// Deterministic sum rate with AP positions replaced, the service policy
// frozen, and (optionally) the correlation shapes frozen; the evaluation
// backend of the finite-difference oracle.
double de_sum_rate_at(const Scenario& scenario, const arma::mat& ap_xy,
                      bool freeze_angles = true);

// Central finite differences on de_sum_rate_at; the reference the
// analytic gradient is validated against.
GradientReport fd_gradient(const Scenario& scenario, double step_m = 0.5,
                           const std::vector<bool>& mask = {},
                           bool freeze_angles = true);

} // namespace cfmimo
