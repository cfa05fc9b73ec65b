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
// Large-system (deterministic) approximation of the downlink rates.
// Per AP: a scalar fixed point e_k coupled through a resolvent-style
// matrix psi, then linear systems in (I - J) for the derivative traces
// e' that enter signal, interference and power normalization. Everything
// here is a function of channel statistics only; no channel draws.

#pragma once

#include "cfmimo/scenario.hpp"
#include "cfmimo/stats.hpp"

#include <armadillo>
#include <vector>

namespace cfmimo {

struct FixedPointOptions {
    double tol = 1e-12;          // residual on e, scaled by 1 + |e|
    arma::uword max_iter = 10000;
};

// Converged fixed point of one AP: psi and per-user traces e.
struct ApFixedPoint {
    arma::cx_mat psi;
    arma::vec e;
    arma::uword iters = 0;
    double residual = 0.0;
};

// Full per-AP state: fixed point plus the linear-system responses.
//   tr2(j,i)          = tr(rhat_j psi rhat_i psi) / N
//   e_prime(j)        = response to target I
//   eprime_hat(j,i)   = response of user j to target rhat_i
//   eprime_tilde(j,i) = response of user j to target rtil_i
struct ApDeState {
    arma::cx_mat psi;
    arma::vec e;
    arma::vec e_prime;
    arma::mat tr2;
    arma::mat j_mat;
    arma::mat eprime_hat;
    arma::mat eprime_tilde;
    arma::uword n_antennas = 0;
    arma::uword iters = 0;
    double residual = 0.0;
};

struct DeState {
    std::vector<ApDeState> ap;
    double alpha = 0.0;
};

// Per-user deterministic SINR/rate figures.
//   sa(k,l):     signal amplitude contribution of AP l toward user k
//   itf(k,j,l):  interference user k receives from the beam AP l points at j
struct RateReport {
    arma::vec sinr;
    arma::vec rate;
    double sum_rate = 0.0;
    arma::mat sa;
    arma::cube itf;
};

ApFixedPoint solve_fixed_point(const arma::field<arma::cx_mat>& rhat,
                               const arma::umat& assoc, arma::uword l, double alpha,
                               const FixedPointOptions& opts = {});

// Response of e to a perturbation target; target I gives e_prime itself.
arma::vec solve_eprime(const ApFixedPoint& fp, const arma::field<arma::cx_mat>& rhat,
                       const arma::umat& assoc, arma::uword l);
arma::vec solve_eprime_target(const ApFixedPoint& fp, const arma::field<arma::cx_mat>& rhat,
                              const arma::umat& assoc, arma::uword l,
                              const arma::cx_mat& target);

// Derivative of psi along the same perturbation target, given the response
// vector for that target.
arma::cx_mat dpsi_target(const ApFixedPoint& fp, const arma::field<arma::cx_mat>& rhat,
                         const arma::umat& assoc, arma::uword l,
                         const arma::vec& eprime_t, const arma::cx_mat& target);

// Batched per-AP pipeline: one (I - J) factorization serves the plain,
// estimate-target and error-target responses for every user.
ApDeState solve_ap_de(const ChannelStatistics& stats, const ServiceMap& svc,
                      arma::uword l, double alpha, const FixedPointOptions& opts = {});

DeState solve_de(const ChannelStatistics& stats, const ServiceMap& svc, double alpha,
                 const FixedPointOptions& opts = {});

RateReport deterministic_sinr(const DeState& de, const ServiceMap& svc, double noise_w);

// Deterministic counterpart of the Monte Carlo power normalization mean.
arma::mat normalized_power_de(const DeState& de, const ServiceMap& svc);

// Convenience orchestration from a scenario (alpha and noise from config).
RateReport deterministic_sum_rate(const Scenario& scenario, const ChannelStatistics& stats);

} // namespace cfmimo
