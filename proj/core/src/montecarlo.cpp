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

#include "cfmimo/montecarlo.hpp"
#include "cfmimo/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmimo {

arma::cx_mat psd_sqrt(const arma::cx_mat& a) {
    arma::vec eigval;
    arma::cx_mat eigvec;
    if (!arma::eig_sym(eigval, eigvec, a))
        throw std::runtime_error("psd_sqrt: eigendecomposition failed");
    eigval.transform([](double v) { return v > 0.0 ? std::sqrt(v) : 0.0; });
    return eigvec * arma::diagmat(eigval) * eigvec.t();
}

ChannelSampler::ChannelSampler(const ChannelStatistics& stats) {
    const arma::uword k_n = stats.rhat.n_rows;
    const arma::uword m_n = stats.rhat.n_cols;
    sqrt_hat_.set_size(k_n, m_n);
    sqrt_til_.set_size(k_n, m_n);
    for (arma::uword l = 0; l < m_n; ++l) {
        for (arma::uword k = 0; k < k_n; ++k) {
            sqrt_hat_(k, l) = psd_sqrt(stats.rhat(k, l));
            sqrt_til_(k, l) = psd_sqrt(stats.rtil(k, l));
        }
    }
}

ChannelRealization ChannelSampler::draw(std::uint64_t seed, std::uint64_t trial) const {
    const arma::uword k_n = sqrt_hat_.n_rows;
    const arma::uword m_n = sqrt_hat_.n_cols;
    auto eng = make_engine(seed, RngStream::channel, trial);
    std::normal_distribution<double> gauss(0.0, 1.0);

    ChannelRealization real;
    real.est.set_size(k_n, m_n);
    real.err.set_size(k_n, m_n);
    // fixed draw order (AP-major, estimate before error) keeps every
    // realization a pure function of (seed, trial)
    for (arma::uword l = 0; l < m_n; ++l) {
        for (arma::uword k = 0; k < k_n; ++k) {
            const arma::uword n = sqrt_hat_(k, l).n_rows;
            const double scale = std::sqrt(0.5 / static_cast<double>(n));
            arma::cx_vec x(n), y(n);
            for (arma::uword i = 0; i < n; ++i)
                x(i) = std::complex<double>(gauss(eng), gauss(eng)) * scale;
            for (arma::uword i = 0; i < n; ++i)
                y(i) = std::complex<double>(gauss(eng), gauss(eng)) * scale;
            real.est(k, l) = sqrt_hat_(k, l) * x;
            real.err(k, l) = sqrt_til_(k, l) * y;
        }
    }
    return real;
}

arma::cx_mat lp_mmse_matrix(const ChannelRealization& real, const ServiceMap& svc,
                            arma::uword l, double alpha) {
    const arma::uword k_n = real.est.n_rows;
    arma::uword n = 0;
    for (arma::uword k = 0; k < k_n; ++k)
        if (real.est(k, l).n_elem > 0) { n = real.est(k, l).n_elem; break; }
    if (n == 0) throw std::invalid_argument("lp_mmse_matrix: no channels at this AP");
    arma::cx_mat gram(n, n, arma::fill::zeros);
    for (arma::uword k = 0; k < k_n; ++k)
        if (svc.assoc(k, l)) gram += real.est(k, l) * real.est(k, l).t();
    gram.diag() += alpha;
    return arma::inv_sympd(gram);
}

PrecoderSet lp_mmse_precode(const ChannelRealization& real, const ServiceMap& svc,
                            double alpha) {
    const arma::uword k_n = real.est.n_rows;
    const arma::uword m_n = real.est.n_cols;
    PrecoderSet pre;
    pre.w.set_size(k_n, m_n);
    pre.rho.zeros(k_n, m_n);
    for (arma::uword l = 0; l < m_n; ++l) {
        if (!arma::any(svc.assoc.col(l))) continue;
        const arma::cx_mat w_mat = lp_mmse_matrix(real, svc, l, alpha);
        for (arma::uword k = 0; k < k_n; ++k) {
            if (!svc.assoc(k, l)) continue;
            pre.w(k, l) = w_mat * real.est(k, l);
            const double nrm2 = std::pow(arma::norm(pre.w(k, l)), 2);
            if (!(nrm2 > 0.0))
                throw std::runtime_error("lp_mmse_precode: zero-power beam");
            pre.rho(k, l) = 1.0 / nrm2;
        }
    }
    return pre;
}

arma::vec instantaneous_sinr(const ChannelRealization& real, const PrecoderSet& pre,
                             const ServiceMap& svc, double noise_w) {
    const arma::uword k_n = real.est.n_rows;
    const arma::uword m_n = real.est.n_cols;
    arma::cx_mat amp(k_n, k_n, arma::fill::zeros); // amp(k,j): beam j as heard by user k
    for (arma::uword j = 0; j < k_n; ++j) {
        for (arma::uword l = 0; l < m_n; ++l) {
            if (!svc.assoc(j, l)) continue;
            const double gain = std::sqrt(pre.rho(j, l) * svc.power(j, l));
            for (arma::uword k = 0; k < k_n; ++k) {
                const arma::cx_vec h = real.est(k, l) + real.err(k, l);
                amp(k, j) += gain * arma::cdot(h, pre.w(j, l));
            }
        }
    }
    arma::vec sinr(k_n, arma::fill::zeros);
    for (arma::uword k = 0; k < k_n; ++k) {
        double interference = 0.0;
        for (arma::uword j = 0; j < k_n; ++j)
            if (j != k) interference += std::norm(amp(k, j));
        sinr(k) = std::norm(amp(k, k)) / (interference + noise_w);
    }
    return sinr;
}

McRateEstimate ergodic_sum_rate(const ChannelStatistics& stats, const ServiceMap& svc,
                                const SystemConfig& cfg, arma::uword trials,
                                std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("ergodic_sum_rate: trials must be >= 1");
    const arma::uword k_n = stats.rhat.n_rows;
    const double alpha = cfg.reg_param();
    const double noise = cfg.noise_power_w();
    const ChannelSampler sampler(stats);

    arma::vec per_user(k_n, arma::fill::zeros);
    arma::vec per_trial(trials, arma::fill::zeros);
    for (arma::uword t = 0; t < trials; ++t) {
        const ChannelRealization real = sampler.draw(seed, t);
        const PrecoderSet pre = lp_mmse_precode(real, svc, alpha);
        const arma::vec sinr = instantaneous_sinr(real, pre, svc, noise);
        double sum = 0.0;
        for (arma::uword k = 0; k < k_n; ++k) {
            const double rate = std::log2(1.0 + sinr(k));
            per_user(k) += rate;
            sum += rate;
        }
        per_trial(t) = sum;
    }
    McRateEstimate est;
    est.trials = trials;
    est.per_user = per_user / static_cast<double>(trials);
    est.sum_rate = arma::mean(per_trial);
    est.std_error = trials > 1
        ? arma::stddev(per_trial) / std::sqrt(static_cast<double>(trials))
        : 0.0;
    return est;
}

McRateEstimate ergodic_sum_rate(const ChannelStatistics& stats, const ServiceMap& svc,
                                const SystemConfig& cfg) {
    return ergodic_sum_rate(stats, svc, cfg, cfg.mc_trials, cfg.rng_seed);
}

arma::mat mc_mean_normalized_power(const ChannelStatistics& stats, const ServiceMap& svc,
                                   double alpha, arma::uword trials, std::uint64_t seed) {
    const ChannelSampler sampler(stats);
    arma::mat acc(stats.rhat.n_rows, stats.rhat.n_cols, arma::fill::zeros);
    for (arma::uword t = 0; t < trials; ++t) {
        const ChannelRealization real = sampler.draw(seed, t);
        const PrecoderSet pre = lp_mmse_precode(real, svc, alpha);
        acc += pre.rho;
    }
    return acc / static_cast<double>(trials);
}

} // namespace cfmimo
