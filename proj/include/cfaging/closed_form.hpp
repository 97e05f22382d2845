// SPDX-License-Identifier: Apache-2.0
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

#pragma once

// Analytical SINR of the two-layer decoder.
//
// Every expectation is written in terms of long-term statistics only. The
// pilot scalar c_j = alpha_d,j sqrt(p~_j) + DAC noise + RF distortion is
// common to all APs, so the correlation across APs of UE k's own gain
// carries a factor E|c_k|^2 / |E c_k|^2. Fourth moments of the Rician
// channel with random LoS phase use
//   E{(h^H P h)(h^H Q h)} = tr(P Rb) tr(Q Rb) + tr(P Rb Q Rb)
//                           - (hbar^H P hbar)(hbar^H Q hbar).

#include <sstream>
#include <vector>

#include "estimation.hpp"
#include "hardware.hpp"
#include "linalg.hpp"
#include "scenario.hpp"
#include "terms.hpp"

namespace cfaging {

/// n-independent statistics of the local statistic h_hat_mk^H A_m h_mi
/// for one link (m, k) and every UE i.
struct LinkBasis {
    double gamma = 0.0;   // tr(A GammaBar) = E{h_hat^H A h_k}
    double tr_a2g = 0.0;  // tr(A^2 GammaBar)
    double tr_bg = 0.0;   // tr(B GammaBar)
    std::vector<cplx> mu;         // tr(A Gain^H A Rbar_i)
    std::vector<double> resid;    // tr(GammaBar A Rbar_i A); E|.|^2 for i outside the cohort
    std::vector<double> q1;       // E|h_hat^H A h_i[lambda]|^2
    std::vector<double> q2_a2;    // E{sum_a A_a^2 |h_hat_a|^2 |h_ia[lambda]|^2}
    std::vector<double> q2_b;     // same with weights B_a
    std::vector<double> base_a2;  // sum_a A_a^2 GammaBar_aa Rbar_i,aa
    std::vector<double> base_b;
};

struct ClosedFormBasis {
    int M = 0, K = 0;
    std::vector<LinkBasis> links;
    const LinkBasis& at(int m, int k) const { return links[static_cast<std::size_t>(m) * K + k]; }
};

namespace detail {

inline double tr_re(const CMat& x) { return x.trace().real(); }

inline LinkBasis link_basis(const Scenario& sc, const HardwareProfile& hw, const EstimateMoments& mom, int m, int k) {
    const int N = sc.N(), K = sc.K();
    const AdcBank& adc = hw.adc[m];
    const double kr2 = hw.kappa_r[m] * hw.kappa_r[m];
    const double s2 = sc.noise_mw;
    const RVec& av = adc.a;
    const RVec& bv = adc.b;
    const RVec dg = bv + kr2 * av;
    const CMat ad = av.cast<cplx>().asDiagonal();
    const CMat& G = mom.Gain;
    const CMat& Gb = mom.GammaBar;
    const CMat Mx = ad * G.adjoint() * ad;
    const CMat Kx = ad * G;
    const CMat GA = G * ad;
    const auto& cohort = sc.pilots.cohort[k];

    LinkBasis lb;
    lb.gamma = tr_re(ad * Gb);
    lb.tr_a2g = tr_re(ad * ad * Gb);
    lb.tr_bg = 0.0;
    for (int a = 0; a < N; ++a) lb.tr_bg += bv(a) * Gb(a, a).real();
    lb.mu.resize(K);
    lb.resid.resize(K);
    lb.q1.resize(K);
    lb.q2_a2.resize(K);
    lb.q2_b.resize(K);
    lb.base_a2.resize(K);
    lb.base_b.resize(K);

    std::vector<double> e(K);
    for (int j = 0; j < K; ++j) e[j] = hw.tx_power_factor(j) * sc.pilot_mw[j];

    for (int i = 0; i < K; ++i) {
        const LinkStats& si = sc.link(m, i);
        const CMat& Ri = si.Rbar;
        const CVec& hb = si.hbar;
        lb.mu[i] = (Mx * Ri).trace();
        lb.resid[i] = tr_re(Gb * ad * Ri * ad);
        double ba2 = 0.0, bb = 0.0;
        for (int a = 0; a < N; ++a) {
            const double w = Gb(a, a).real() * Ri(a, a).real();
            ba2 += av(a) * av(a) * w;
            bb += bv(a) * w;
        }
        lb.base_a2[i] = ba2;
        lb.base_b[i] = bb;

        if (!sc.pilots.shares_pilot(k, i)) {
            lb.q1[i] = lb.resid[i];
            lb.q2_a2[i] = ba2;
            lb.q2_b[i] = bb;
            continue;
        }

        const TemporalCorrelation rt = sc.rho_pilot(i);
        const double r2 = rt.rho * rt.rho;
        const double rb2 = rt.rho_bar * rt.rho_bar;
        const double ei = e[i];
        // cohort power on each antenna excluding i: sum_j e_j Rbar_j,bb
        RVec others = RVec::Zero(N);
        for (int j : cohort)
            if (j != i)
                for (int b = 0; b < N; ++b) others(b) += e[j] * sc.link(m, j).Rbar(b, b).real();

        // Q1
        double q1 = 0.0;
        const CMat MRi = Mx * Ri;
        const CMat MhRi = Mx.adjoint() * Ri;
        for (int j : cohort)
            if (j != i) q1 += e[j] * tr_re(MRi * Mx.adjoint() * sc.link(m, j).Rbar);
        const double t_mm = tr_re(MRi * MhRi);
        const double f_mm = std::norm(MRi.trace()) + t_mm - std::norm(hb.dot(Mx * hb));
        q1 += ei * (r2 * f_mm + rb2 * t_mm);
        const CMat KRK = Kx.adjoint() * Ri * Kx;
        for (int b = 0; b < N; ++b) q1 += s2 * av(b) * KRK(b, b).real();
        for (int b = 0; b < N; ++b) {
            const CVec kb = Kx.col(b);
            const double rbb = Ri(b, b).real();
            const double krk = KRK(b, b).real();
            const double fb = rbb * krk + std::norm((Ri * kb)(b)) - std::norm(hb(b)) * std::norm(kb.dot(hb));
            q1 += dg(b) * (others(b) * krk + ei * (r2 * fb + rb2 * rbb * krk));
        }
        lb.q1[i] = q1;

        // Q2 for both antenna weightings
        const CMat GARi = GA * Ri;
        const CVec GAh = GA * hb;
        double q2a = 0.0, q2b = 0.0;
        for (int a = 0; a < N; ++a) {
            const double raa = Ri(a, a).real();
            double s = 0.0;
            for (int j : cohort)
                if (j != i) s += e[j] * (GA.row(a) * sc.link(m, j).Rbar * GA.row(a).adjoint())(0, 0).real() * raa;
            const double gri = (GA.row(a) * Ri * GA.row(a).adjoint())(0, 0).real();
            s += ei * (r2 * (gri * raa + std::norm(GARi(a, a)) - std::norm(GAh(a)) * std::norm(hb(a))) + rb2 * gri * raa);
            for (int b = 0; b < N; ++b) {
                const double rbb = Ri(b, b).real();
                const double own = r2 * (rbb * raa + std::norm(Ri(a, b)) - std::norm(hb(b)) * std::norm(hb(a))) +
                                   rb2 * rbb * raa;
                s += std::norm(G(a, b)) * (s2 * av(b) * raa + dg(b) * (others(b) * raa + ei * own));
            }
            q2a += av(a) * av(a) * s;
            q2b += bv(a) * s;
        }
        lb.q2_a2[i] = q2a;
        lb.q2_b[i] = q2b;
    }
    return lb;
}

}  // namespace detail

inline ClosedFormBasis build_closed_form_basis(const Scenario& sc, const HardwareProfile& hw, const MomentTable& mt) {
    ClosedFormBasis cb;
    cb.M = sc.M();
    cb.K = sc.K();
    cb.links.reserve(static_cast<std::size_t>(cb.M) * cb.K);
    for (int m = 0; m < cb.M; ++m)
        for (int k = 0; k < cb.K; ++k) cb.links.push_back(detail::link_basis(sc, hw, mt.at(m, k), m, k));
    return cb;
}

/// Analytical second-order description of the decoded symbol of UE k at
/// data instant n, as M x M forms in the decoder weights.
struct ClosedFormTerms {
    int k = 0;
    int n = 0;             // data instant, lambda..tau_c
    double signal_scale = 0.0;  // alpha_d,k^2 p_k
    RVec delta;            // rho_k[n - lambda] tr(A_m GammaBar_mk)
    CMat B;                // gain uncertainty (already scaled by alpha^2 p)
    RVec Lambda;           // aged-out part of UE k, diagonal
    std::vector<CMat> C;   // rho-correlated E{Y_i Y_i^H}, Y_i,m = h_hat_mk^H A_m h_mi[n]
    std::vector<RVec> Xi;  // aging residual of UE i, diagonal
    std::vector<RVec> D_rrf, D_adc;  // AP RF and ADC distortion driven by UE i, diagonal
    RVec adc_noise;        // sigma^2 tr(B_m GammaBar_mk)
    RVec Q;                // tr(A_m^2 GammaBar_mk)
    double sigma2 = 0.0;
    // coefficient pairs weighting C_i + Xi_i inside each term
    std::vector<double> iui_w, dac_w, trf_w;
    CMat Delta;
};

inline ClosedFormTerms closed_form_terms(const Scenario& sc, const HardwareProfile& hw, const ClosedFormBasis& cb,
                                         int k, int n) {
    const int M = sc.M(), K = sc.K();
    if (n < sc.lambda() || n > sc.cfg.tau_c) throw ContractError("closed_form_terms: n outside the data phase");
    const int off = n - sc.lambda();
    ClosedFormTerms t;
    t.k = k;
    t.n = n;
    t.sigma2 = sc.noise_mw;
    t.signal_scale = hw.alpha_d(k) * hw.alpha_d(k) * sc.data_mw[k];
    const TemporalCorrelation rk = sc.rho(k, off);
    const TemporalCorrelation rtk = sc.rho_pilot(k);

    RVec gamma(M);
    for (int m = 0; m < M; ++m) gamma(m) = cb.at(m, k).gamma;
    t.delta = rk.rho * gamma;

    t.C.assign(K, CMat::Zero(M, M));
    t.Xi.assign(K, RVec::Zero(M));
    t.D_rrf.assign(K, RVec::Zero(M));
    t.D_adc.assign(K, RVec::Zero(M));
    t.iui_w.assign(K, 0.0);
    t.dac_w.assign(K, 0.0);
    t.trf_w.assign(K, 0.0);
    for (int i = 0; i < K; ++i) {
        const TemporalCorrelation ri = sc.rho(i, off);
        const double r2 = ri.rho * ri.rho, rb2 = ri.rho_bar * ri.rho_bar;
        const double ep = hw.tx_power_factor(i) * sc.data_mw[i];
        const bool shares = sc.pilots.shares_pilot(k, i);
        const double ei_pilot = hw.tx_power_factor(i) * sc.pilot_mw[i];
        const double rti2 = sc.rho_pilot(i).rho * sc.rho_pilot(i).rho;
        for (int m = 0; m < M; ++m) {
            const LinkBasis& lb = cb.at(m, k);
            t.C[i](m, m) = r2 * lb.q1[i];
            t.Xi[i](m) = rb2 * lb.resid[i];
            const double kr2 = hw.kappa_r[m] * hw.kappa_r[m];
            t.D_rrf[i](m) = kr2 * ep * (r2 * lb.q2_a2[i] + rb2 * lb.base_a2[i]);
            t.D_adc[i](m) = (1.0 + kr2) * ep * (r2 * lb.q2_b[i] + rb2 * lb.base_b[i]);
            if (!shares) continue;
            for (int mp = 0; mp < M; ++mp)
                if (mp != m) t.C[i](m, mp) = ei_pilot * rti2 * r2 * lb.mu[i] * std::conj(cb.at(mp, k).mu[i]);
        }
        const double ad = hw.alpha_d(i);
        t.iui_w[i] = i == k ? 0.0 : ad * ad * sc.data_mw[i];
        t.dac_w[i] = hw.dac_rho[i] * ad * sc.data_mw[i];
        t.trf_w[i] = hw.kappa_t[i] * hw.kappa_t[i] * ad * sc.data_mw[i];
    }

    // UE k's own coherent part at lambda, minus its mean
    t.B = CMat::Zero(M, M);
    const double ek = hw.tx_power_factor(k) * sc.pilot_mw[k];
    for (int m = 0; m < M; ++m) {
        const LinkBasis& lb = cb.at(m, k);
        for (int mp = 0; mp < M; ++mp) {
            const cplx second = m == mp ? cplx{lb.q1[k], 0.0}
                                        : ek * rtk.rho * rtk.rho * lb.mu[k] * std::conj(cb.at(mp, k).mu[k]);
            t.B(m, mp) = t.signal_scale * rk.rho * rk.rho * (second - gamma(m) * gamma(mp));
        }
    }
    t.Lambda.resize(M);
    t.adc_noise.resize(M);
    t.Q.resize(M);
    for (int m = 0; m < M; ++m) {
        const LinkBasis& lb = cb.at(m, k);
        t.Lambda(m) = t.signal_scale * rk.rho_bar * rk.rho_bar * lb.resid[k];
        t.adc_noise(m) = t.sigma2 * lb.tr_bg;
        t.Q(m) = lb.tr_a2g;
    }

    CMat delta_mat = t.B;
    delta_mat.diagonal() += t.Lambda.cast<cplx>();
    for (int i = 0; i < K; ++i) {
        const double w = t.iui_w[i] + t.dac_w[i] + t.trf_w[i];
        if (w != 0.0) {
            delta_mat += w * t.C[i];
            delta_mat.diagonal() += (w * t.Xi[i]).cast<cplx>();
        }
        delta_mat.diagonal() += (t.D_rrf[i] + t.D_adc[i]).cast<cplx>();
    }
    delta_mat.diagonal() += (t.adc_noise + t.sigma2 * t.Q).cast<cplx>();
    const double asym = (delta_mat - delta_mat.adjoint()).norm();
    if (asym > 1e-8 * delta_mat.norm()) {
        std::ostringstream os;
        os << "closed_form_terms: denominator matrix of UE " << k << " is not Hermitian (" << asym << ")";
        throw NumericalError(os.str());
    }
    t.Delta = hermitian_part(delta_mat);
    return t;
}

/// a = Delta^{-1} delta, the maximizer of the generalized Rayleigh quotient.
inline CVec optimal_weights(const CMat& Delta, const RVec& delta) {
    return hermitian_solve(Delta, delta.cast<cplx>(), "optimal_weights");
}

inline CVec optimal_weights(const ClosedFormTerms& t) { return optimal_weights(t.Delta, t.delta); }

inline CVec weights_for(const ClosedFormTerms& t, WeightScheme s) {
    return s == WeightScheme::lsfd ? optimal_weights(t) : sld_weights(static_cast<int>(t.delta.size()));
}

/// Term powers of the analytical path for decoder weights a.
inline TermPowers closed_form_powers(const ClosedFormTerms& t, const CVec& a) {
    const int K = static_cast<int>(t.C.size());
    if (a.size() != t.delta.size()) throw ContractError("closed_form_powers: weight length mismatch");
    auto quad = [&](const CMat& x) { return a.dot(x * a).real(); };
    auto quad_diag = [&](const RVec& d) {
        double s = 0.0;
        for (Eigen::Index m = 0; m < a.size(); ++m) s += d(m) * std::norm(a(m));
        return s;
    };
    TermPowers p;
    p.DS = t.signal_scale * std::norm(a.dot(t.delta.cast<cplx>()));
    p.BU = quad(t.B);
    p.CA = quad_diag(t.Lambda);
    p.IUI.assign(K, 0.0);
    for (int i = 0; i < K; ++i) {
        const double full = quad(t.C[i]) + quad_diag(t.Xi[i]);
        p.IUI[i] = t.iui_w[i] * full;
        p.DAC += t.dac_w[i] * full;
        p.TRF += t.trf_w[i] * full;
        p.RRF += quad_diag(t.D_rrf[i]);
        p.ADC += quad_diag(t.D_adc[i]);
    }
    p.ADC += quad_diag(t.adc_noise);
    p.NS = t.sigma2 * quad_diag(t.Q);
    return p;
}

/// alpha^2 p |a^H delta|^2 / (a^H Delta a).
inline double closed_form_sinr(const ClosedFormTerms& t, const CVec& a) {
    const double den = a.dot(t.Delta * a).real();
    if (!(den > 0.0)) throw ContractError("closed_form_sinr: a^H Delta a is not positive");
    return t.signal_scale * std::norm(a.dot(t.delta.cast<cplx>())) / den;
}

/// Per-instant SINR, per-UE SE and sum SE.
struct SeSummary {
    std::vector<std::vector<double>> sinr;  // [k][n - lambda]
    std::vector<double> se_ue;              // (1 / tau_c) sum_n log2(1 + SINR)
    double se_sum = 0.0;
};

inline SeSummary summarize_se(const std::vector<std::vector<double>>& sinr, int tau_c) {
    SeSummary s;
    s.sinr = sinr;
    for (const auto& row : sinr) {
        double acc = 0.0;
        for (double x : row) acc += se_of_sinr(x, tau_c);
        s.se_ue.push_back(acc);
        s.se_sum += acc;
    }
    return s;
}

/// Closed-form SE over the whole data phase for a weight scheme.
inline SeSummary closed_form_se(const Scenario& sc, const HardwareProfile& hw, const ClosedFormBasis& cb,
                                WeightScheme scheme) {
    std::vector<std::vector<double>> sinr(sc.K());
    for (int k = 0; k < sc.K(); ++k)
        for (int n = sc.lambda(); n <= sc.cfg.tau_c; ++n) {
            const ClosedFormTerms t = closed_form_terms(sc, hw, cb, k, n);
            sinr[k].push_back(closed_form_sinr(t, weights_for(t, scheme)));
        }
    return summarize_se(sinr, sc.cfg.tau_c);
}

// --- ideal-hardware Rayleigh reduction ---------------------------------------

/// Throws unless every link is Rayleigh with R = beta I and the hardware is
/// ideal.
inline void require_ideal_rayleigh(const Scenario& sc, const HardwareProfile& hw, const char* who) {
    if (!hw.is_ideal()) throw ContractError(std::string(who) + ": hardware is not ideal");
    const int n = sc.N();
    for (const auto& l : sc.links) {
        const double tol = 1e-12 * l.beta;
        if (l.rician_k != 0.0 || l.hbar.norm() > 0.0 ||
            (l.R - l.beta * CMat::Identity(n, n)).cwiseAbs().maxCoeff() > tol)
            throw ContractError(std::string(who) + ": links are not uncorrelated Rayleigh");
    }
}

/// gamma-bar_mk = p~_k rho_k^2 beta_mk^2 / (sum_{i in P_k} p~_i beta_mi + sigma^2).
inline double rayleigh_gamma_bar(const Scenario& sc, int m, int k) {
    double den = sc.noise_mw;
    for (int i : sc.pilots.cohort[k]) den += sc.pilot_mw[i] * sc.link(m, i).beta;
    const double rt = sc.rho_pilot(k).rho;
    const double b = sc.link(m, k).beta;
    return sc.pilot_mw[k] * rt * rt * b * b / den;
}

/// Direct evaluation of the Rayleigh, ideal-hardware SINR with N gamma-bar
/// products; the contamination sum runs over the other cohort members.
inline double rayleigh_ideal_sinr(const Scenario& sc, const HardwareProfile& hw, int k, int n, const CVec& a) {
    require_ideal_rayleigh(sc, hw, "rayleigh_ideal_sinr");
    const int M = sc.M(), K = sc.K();
    const double N = sc.N();
    const int off = n - sc.lambda();
    const double rk = sc.rho(k, off).rho;
    cplx num{0.0, 0.0};
    double uncorrelated = 0.0, noise = 0.0;
    for (int m = 0; m < M; ++m) {
        const double g = rayleigh_gamma_bar(sc, m, k);
        num += std::conj(a(m)) * N * g;
        for (int i = 0; i < K; ++i) uncorrelated += std::norm(a(m)) * sc.data_mw[i] * N * g * sc.link(m, i).beta;
        noise += std::norm(a(m)) * N * g;
    }
    double contamination = 0.0;
    for (int i : sc.pilots.cohort[k]) {
        if (i == k) continue;
        const double ri = sc.rho(i, off).rho;
        cplx s{0.0, 0.0};
        for (int m = 0; m < M; ++m) s += std::conj(a(m)) * std::sqrt(rayleigh_gamma_bar(sc, m, k) * rayleigh_gamma_bar(sc, m, i));
        contamination += N * N * sc.data_mw[i] * ri * ri * std::norm(s);
    }
    return sc.data_mw[k] * rk * rk * std::norm(num) / (uncorrelated + sc.noise_mw * noise + contamination);
}

/// Single-antenna, no-aging, uniform-weight SINR in the form of the
/// original cell-free analysis: coherent gain (sum_m gamma_mk)^2 against
/// contamination (sum_m gamma_mk beta_mi / beta_mk)^2 over cohort members,
/// uncorrelated interference and noise. Requires equal pilot powers within
/// the cohort.
inline double single_antenna_sinr(const Scenario& sc, const HardwareProfile& hw, int k) {
    require_ideal_rayleigh(sc, hw, "single_antenna_sinr");
    if (sc.N() != 1) throw ContractError("single_antenna_sinr: N must be 1");
    for (int i : sc.pilots.cohort[k])
        if (sc.pilot_mw[i] != sc.pilot_mw[k]) throw ContractError("single_antenna_sinr: unequal pilot powers");
    for (int i = 0; i < sc.K(); ++i)
        if (sc.cfg.ue_velocities_kmh[i] != 0.0) throw ContractError("single_antenna_sinr: requires zero Doppler");
    const int M = sc.M();
    double coherent = 0.0, noise = 0.0, uncorrelated = 0.0;
    for (int m = 0; m < M; ++m) {
        const double g = rayleigh_gamma_bar(sc, m, k);
        coherent += g;
        noise += g;
        for (int i = 0; i < sc.K(); ++i) uncorrelated += sc.data_mw[i] * g * sc.link(m, i).beta;
    }
    double contamination = 0.0;
    for (int i : sc.pilots.cohort[k]) {
        if (i == k) continue;
        double s = 0.0;
        for (int m = 0; m < M; ++m) s += rayleigh_gamma_bar(sc, m, k) * sc.link(m, i).beta / sc.link(m, k).beta;
        contamination += sc.data_mw[i] * s * s;
    }
    return sc.data_mw[k] * coherent * coherent / (contamination + uncorrelated + sc.noise_mw * noise);
}

}  // namespace cfaging
