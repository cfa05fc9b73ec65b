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
// Monte Carlo reference for the downlink: sampled correlated channels,
// per-AP regularized local precoding with unit-power normalization, and
// the resulting ergodic rates. Every draw is reproducible from
// (seed, trial index) alone.

#pragma once

#include "cfmimo/scenario.hpp"
#include "cfmimo/stats.hpp"

#include <armadillo>
#include <cstdint>

namespace cfmimo {

// est/err hold the channel estimate and estimation error per (user, AP);
// the true channel is their sum.
struct ChannelRealization {
    arma::field<arma::cx_vec> est;
    arma::field<arma::cx_vec> err;
};

// w(k,l) is the unnormalized beam AP l points at user k (zero length when
// unserved); rho(k,l) = 1/||w||^2 restores unit transmit power per beam.
struct PrecoderSet {
    arma::field<arma::cx_vec> w;
    arma::mat rho;
};

struct McRateEstimate {
    double sum_rate = 0.0;
    double std_error = 0.0;   // standard error of the sum-rate mean
    arma::vec per_user;       // mean per-user rates
    arma::uword trials = 0;
};

// Precomputes covariance square roots once; draws are then matrix-vector
// products. Element variance of the underlying white vectors is 1/N, the
// same normalization the deterministic approximation assumes.
class ChannelSampler {
  public:
    explicit ChannelSampler(const ChannelStatistics& stats);
    ChannelRealization draw(std::uint64_t seed, std::uint64_t trial) const;

  private:
    arma::field<arma::cx_mat> sqrt_hat_;
    arma::field<arma::cx_mat> sqrt_til_;
};

// Hermitian PSD square root with tiny negative eigenvalues clipped to zero.
arma::cx_mat psd_sqrt(const arma::cx_mat& a);

// Local regularized MMSE precoding matrix of one AP.
arma::cx_mat lp_mmse_matrix(const ChannelRealization& real, const ServiceMap& svc,
                            arma::uword l, double alpha);

PrecoderSet lp_mmse_precode(const ChannelRealization& real, const ServiceMap& svc,
                            double alpha);

// Downlink SINR per user for one channel draw and fixed precoders.
arma::vec instantaneous_sinr(const ChannelRealization& real, const PrecoderSet& pre,
                             const ServiceMap& svc, double noise_w);

McRateEstimate ergodic_sum_rate(const ChannelStatistics& stats, const ServiceMap& svc,
                                const SystemConfig& cfg);
McRateEstimate ergodic_sum_rate(const ChannelStatistics& stats, const ServiceMap& svc,
                                const SystemConfig& cfg, arma::uword trials,
                                std::uint64_t seed);

// Trial-mean of the power normalization factors rho(k,l); reference for
// validating their deterministic counterparts.
arma::mat mc_mean_normalized_power(const ChannelStatistics& stats, const ServiceMap& svc,
                                   double alpha, arma::uword trials, std::uint64_t seed);

} // namespace cfmimo
