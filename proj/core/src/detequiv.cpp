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

#include "cfmimo/detequiv.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmimo {

namespace {

// tr(a * b) without forming the product
std::complex<double> trace_prod(const arma::cx_mat& a, const arma::cx_mat& b) {
    return arma::accu(a % b.st());
}

double n_of(const arma::field<arma::cx_mat>& rhat, arma::uword l) {
    for (arma::uword k = 0; k < rhat.n_rows; ++k)
        if (rhat(k, l).n_elem > 0) return static_cast<double>(rhat(k, l).n_rows);
    throw std::invalid_argument("detequiv: no matrices for this AP");
}

// weights s_i / (N (1 + e_i)^2) shared by the linear system and dpsi
arma::vec system_weights(const arma::vec& e, const arma::umat& assoc, arma::uword l,
                         double n) {
    arma::vec w(e.n_elem, arma::fill::zeros);
    for (arma::uword i = 0; i < e.n_elem; ++i)
        if (assoc(i, l)) w(i) = 1.0 / (n * (1.0 + e(i)) * (1.0 + e(i)));
    return w;
}

struct ApCross {
    arma::mat tr2;   // tr(rhat_j psi rhat_i psi)/N
    arma::vec v;     // tr(rhat_j psi psi)/N
    arma::mat j_mat; // j_mat(j,i) = s_i tr2(j,i) / (N (1+e_i)^2)
};

ApCross build_cross(const ApFixedPoint& fp, const arma::field<arma::cx_mat>& rhat,
                    const arma::umat& assoc, arma::uword l) {
    const arma::uword k_n = rhat.n_rows;
    const double n = n_of(rhat, l);
    std::vector<arma::cx_mat> a(k_n); // rhat_j * psi
    for (arma::uword j = 0; j < k_n; ++j) a[j] = rhat(j, l) * fp.psi;

    ApCross cross;
    cross.tr2.set_size(k_n, k_n);
    cross.v.set_size(k_n);
    for (arma::uword j = 0; j < k_n; ++j) {
        cross.v(j) = std::real(trace_prod(a[j], fp.psi)) / n;
        for (arma::uword i = 0; i <= j; ++i) {
            const double t = std::real(trace_prod(a[j], a[i])) / n;
            cross.tr2(j, i) = t;
            cross.tr2(i, j) = t; // symmetric by the cyclic property
        }
    }
    const arma::vec w = system_weights(fp.e, assoc, l, n);
    cross.j_mat = cross.tr2 * arma::diagmat(w); // scales column i by w(i)
    return cross;
}

arma::mat solve_system(const ApCross& cross, const arma::mat& rhs) {
    const arma::uword k_n = cross.j_mat.n_rows;
    arma::mat lhs = arma::eye(k_n, k_n) - cross.j_mat;
    arma::mat x;
    if (!arma::solve(x, lhs, rhs))
        throw std::runtime_error("detequiv: (I - J) system is singular");
    return x;
}

} // namespace

ApFixedPoint solve_fixed_point(const arma::field<arma::cx_mat>& rhat,
                               const arma::umat& assoc, arma::uword l, double alpha,
                               const FixedPointOptions& opts) {
    if (!(alpha > 0.0)) throw std::invalid_argument("solve_fixed_point: alpha must be positive");
    const arma::uword k_n = rhat.n_rows;
    std::vector<arma::uword> served;
    for (arma::uword k = 0; k < k_n; ++k)
        if (assoc(k, l)) served.push_back(k);

    ApFixedPoint fp;
    fp.e.zeros(k_n);
    if (served.empty()) {
        // nobody served: psi collapses to the regularizer alone
        const arma::uword n = static_cast<arma::uword>(n_of(rhat, l));
        fp.psi = arma::cx_mat(n, n, arma::fill::eye) / alpha;
        fp.iters = 0;
        fp.residual = 0.0;
        return fp;
    }

    const double n = n_of(rhat, l);
    const arma::uword n_dim = rhat(served.front(), l).n_rows;
    for (arma::uword k : served)
        fp.e(k) = std::real(arma::trace(rhat(k, l))) / (n * alpha); // standard start

    auto rebuild_psi = [&]() {
        arma::cx_mat b(n_dim, n_dim, arma::fill::zeros);
        for (arma::uword k : served) b += rhat(k, l) / (n * (1.0 + fp.e(k)));
        b.diag() += alpha;
        fp.psi = arma::inv_sympd(b);
    };

    double damping = 1.0;
    double prev_res = arma::datum::inf;
    for (arma::uword it = 1; it <= opts.max_iter; ++it) {
        rebuild_psi();
        double res = 0.0;
        arma::vec e_new = fp.e;
        for (arma::uword k : served) {
            const double val = std::real(trace_prod(rhat(k, l), fp.psi)) / n;
            // scaled residual: absolute tolerance is unreachable when e is
            // large (roundoff of the inverse exceeds it)
            res = std::max(res, std::abs(val - fp.e(k)) / (1.0 + std::abs(fp.e(k))));
            e_new(k) = val;
        }
        fp.e = damping * e_new + (1.0 - damping) * fp.e;
        fp.iters = it;
        fp.residual = res;
        if (res <= opts.tol) {
            rebuild_psi(); // keep the returned (psi, e) pair self-consistent
            return fp;
        }
        if (res > prev_res) damping = std::max(0.5 * damping, 0.0625); // oscillation guard
        prev_res = res;
    }
    throw std::runtime_error("solve_fixed_point: no convergence after " +
                             std::to_string(opts.max_iter) + " iterations (residual " +
                             std::to_string(fp.residual) + ")");
}

arma::vec solve_eprime(const ApFixedPoint& fp, const arma::field<arma::cx_mat>& rhat,
                       const arma::umat& assoc, arma::uword l) {
    const ApCross cross = build_cross(fp, rhat, assoc, l);
    return solve_system(cross, cross.v);
}

arma::vec solve_eprime_target(const ApFixedPoint& fp, const arma::field<arma::cx_mat>& rhat,
                              const arma::umat& assoc, arma::uword l,
                              const arma::cx_mat& target) {
    const arma::uword k_n = rhat.n_rows;
    const double n = n_of(rhat, l);
    const ApCross cross = build_cross(fp, rhat, assoc, l);
    arma::vec rhs(k_n);
    const arma::cx_mat pt = fp.psi * target * fp.psi;
    for (arma::uword j = 0; j < k_n; ++j)
        rhs(j) = std::real(trace_prod(rhat(j, l), pt)) / n;
    return solve_system(cross, rhs);
}

arma::cx_mat dpsi_target(const ApFixedPoint& fp, const arma::field<arma::cx_mat>& rhat,
                         const arma::umat& assoc, arma::uword l,
                         const arma::vec& eprime_t, const arma::cx_mat& target) {
    const double n = n_of(rhat, l);
    arma::cx_mat mid = target;
    for (arma::uword i = 0; i < rhat.n_rows; ++i) {
        if (!assoc(i, l)) continue;
        mid += rhat(i, l) * (eprime_t(i) / (n * (1.0 + fp.e(i)) * (1.0 + fp.e(i))));
    }
    return fp.psi * mid * fp.psi;
}

ApDeState solve_ap_de(const ChannelStatistics& stats, const ServiceMap& svc,
                      arma::uword l, double alpha, const FixedPointOptions& opts) {
    const arma::uword k_n = stats.rhat.n_rows;
    ApFixedPoint fp = solve_fixed_point(stats.rhat, svc.assoc, l, alpha, opts);

    ApDeState st;
    st.psi = fp.psi;
    st.e = fp.e;
    st.iters = fp.iters;
    st.residual = fp.residual;
    st.n_antennas = fp.psi.n_rows;

    if (k_n == 0) {
        st.e_prime.set_size(0);
        return st;
    }

    const double n = static_cast<double>(st.n_antennas);
    std::vector<arma::cx_mat> a(k_n); // rhat_j * psi, shared by all traces below
    for (arma::uword j = 0; j < k_n; ++j) a[j] = stats.rhat(j, l) * fp.psi;

    ApCross cross;
    cross.tr2.set_size(k_n, k_n);
    cross.v.set_size(k_n);
    for (arma::uword j = 0; j < k_n; ++j) {
        cross.v(j) = std::real(trace_prod(a[j], fp.psi)) / n;
        for (arma::uword i = 0; i <= j; ++i) {
            const double t = std::real(trace_prod(a[j], a[i])) / n;
            cross.tr2(j, i) = t;
            cross.tr2(i, j) = t;
        }
    }
    cross.j_mat = cross.tr2 * arma::diagmat(system_weights(fp.e, svc.assoc, l, n));
    st.tr2 = cross.tr2;
    st.j_mat = cross.j_mat;

    // error-target right-hand sides: tr(rhat_j psi rtil_i psi)/N
    arma::mat vtil(k_n, k_n);
    for (arma::uword i = 0; i < k_n; ++i) {
        const arma::cx_mat b = stats.rtil(i, l) * fp.psi;
        for (arma::uword j = 0; j < k_n; ++j)
            vtil(j, i) = std::real(trace_prod(a[j], b)) / n;
    }

    // single factorization, 2K + 1 right-hand sides
    arma::mat rhs(k_n, 2 * k_n + 1);
    rhs.col(0) = cross.v;
    rhs.cols(1, k_n) = cross.tr2;
    rhs.cols(k_n + 1, 2 * k_n) = vtil;
    const arma::mat x = solve_system(cross, rhs);
    st.e_prime = x.col(0);
    st.eprime_hat = x.cols(1, k_n);
    st.eprime_tilde = x.cols(k_n + 1, 2 * k_n);

    for (arma::uword k = 0; k < k_n; ++k) {
        if (svc.assoc(k, l) && !(st.e_prime(k) > 0.0))
            throw std::runtime_error("solve_ap_de: nonpositive response for a served user");
    }
    return st;
}

DeState solve_de(const ChannelStatistics& stats, const ServiceMap& svc, double alpha,
                 const FixedPointOptions& opts) {
    DeState de;
    de.alpha = alpha;
    de.ap.reserve(stats.rhat.n_cols);
    for (arma::uword l = 0; l < stats.rhat.n_cols; ++l)
        de.ap.push_back(solve_ap_de(stats, svc, l, alpha, opts));
    return de;
}

RateReport deterministic_sinr(const DeState& de, const ServiceMap& svc, double noise_w) {
    const arma::uword m_n = de.ap.size();
    const arma::uword k_n = svc.assoc.n_rows;
    RateReport rep;
    rep.sa.zeros(k_n, m_n);
    rep.itf.zeros(k_n, k_n, m_n);
    rep.sinr.zeros(k_n);
    rep.rate.zeros(k_n);

    for (arma::uword l = 0; l < m_n; ++l) {
        const ApDeState& ap = de.ap[l];
        const double n = static_cast<double>(ap.n_antennas);
        for (arma::uword k = 0; k < k_n; ++k) {
            if (svc.assoc(k, l))
                rep.sa(k, l) = ap.e(k) / std::sqrt(ap.e_prime(k));
            const double denom_k = (1.0 + ap.e(k)) * (1.0 + ap.e(k));
            for (arma::uword j = 0; j < k_n; ++j) {
                if (j == k || !svc.assoc(j, l)) continue;
                // beam toward j, heard by k: estimate-aligned part deflated
                // by k's own estimate share, plus the estimation-error part
                rep.itf(k, j, l) = (ap.eprime_hat(k, j) / denom_k + ap.eprime_tilde(j, k)) /
                                   (n * ap.e_prime(j));
            }
        }
    }

    for (arma::uword k = 0; k < k_n; ++k) {
        double amp = 0.0;
        for (arma::uword l = 0; l < m_n; ++l)
            if (svc.assoc(k, l)) amp += std::sqrt(svc.power(k, l)) * rep.sa(k, l);
        double interference = 0.0;
        for (arma::uword l = 0; l < m_n; ++l)
            for (arma::uword j = 0; j < k_n; ++j)
                if (j != k && svc.assoc(j, l))
                    interference += svc.power(j, l) * rep.itf(k, j, l);
        rep.sinr(k) = amp * amp / (interference + noise_w);
        rep.rate(k) = std::log2(1.0 + rep.sinr(k));
    }
    rep.sum_rate = arma::accu(rep.rate);
    return rep;
}

arma::mat normalized_power_de(const DeState& de, const ServiceMap& svc) {
    const arma::uword k_n = svc.assoc.n_rows;
    const arma::uword m_n = de.ap.size();
    arma::mat rho(k_n, m_n, arma::fill::zeros);
    for (arma::uword l = 0; l < m_n; ++l) {
        const ApDeState& ap = de.ap[l];
        for (arma::uword k = 0; k < k_n; ++k) {
            if (!svc.assoc(k, l)) continue;
            const double opp = 1.0 + ap.e(k);
            rho(k, l) = opp * opp / ap.e_prime(k);
        }
    }
    return rho;
}

RateReport deterministic_sum_rate(const Scenario& scenario, const ChannelStatistics& stats) {
    const DeState de = solve_de(stats, scenario.svc, scenario.cfg.reg_param());
    return deterministic_sinr(de, scenario.svc, scenario.cfg.noise_power_w());
}

} // namespace cfmimo
