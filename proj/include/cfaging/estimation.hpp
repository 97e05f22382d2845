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

// Impaired pilot reception and the phase-unaware LMMSE estimator of the
// channel at the estimation instant lambda.

#include <sstream>
#include <vector>

#include "channel.hpp"
#include "hardware.hpp"
#include "linalg.hpp"
#include "scenario.hpp"

namespace cfaging {

/// Second-order description of the estimator for one AP-UE link.
struct EstimateMoments {
    CMat PsiInv;    // E{y y^H} of the quantized pilot observation
    CMat Psi;
    CMat P;         // sqrt(p~) rho R-bar A Psi
    CMat Gain;      // alpha_d P: h_hat = Gain y
    CMat GammaBar;  // E{h_hat h_hat^H}
    CMat C;         // R-bar - GammaBar
};

/// Sum over the cohort of alpha_d,i (1 + kappa_t,i^2) p~_i (A R-bar_mi A +
/// (B + kappa_r^2 A) diag(R-bar_mi)) + sigma^2 A. R-bar_mi is used in both
/// summands.
inline CMat psi_inverse(const Scenario& sc, const HardwareProfile& hw, int m, int k) {
    const auto& cohort = sc.pilots.cohort[k];
    if (cohort.empty()) throw ContractError("psi_inverse: empty cohort");
    const AdcBank& adc = hw.adc[m];
    const int n = sc.N();
    const double kr2 = hw.kappa_r[m] * hw.kappa_r[m];
    CMat s = CMat::Zero(n, n);
    for (int i : cohort) {
        const CMat& rb = sc.link(m, i).Rbar;
        const double e = hw.tx_power_factor(i) * sc.pilot_mw[i];
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) s(a, b) += e * adc.a(a) * rb(a, b) * adc.a(b);
            s(a, a) += e * (adc.b(a) + kr2 * adc.a(a)) * rb(a, a).real();
        }
    }
    for (int a = 0; a < n; ++a) s(a, a) += sc.noise_mw * adc.a(a);
    return hermitian_part(s);
}

inline CMat psi_mk(const Scenario& sc, const HardwareProfile& hw, int m, int k) {
    return hermitian_inverse(psi_inverse(sc, hw, m, k), "psi_mk");
}

inline EstimateMoments est_second_moments(const Scenario& sc, const HardwareProfile& hw, int m, int k) {
    EstimateMoments e;
    const LinkStats& s = sc.link(m, k);
    const RVec& a = hw.adc[m].a;
    e.PsiInv = psi_inverse(sc, hw, m, k);
    e.Psi = hermitian_inverse(e.PsiInv, "psi_mk");
    const double rho_t = sc.rho_pilot(k).rho;
    e.P = std::sqrt(sc.pilot_mw[k]) * rho_t * s.Rbar * a.asDiagonal() * e.Psi;
    e.Gain = hw.alpha_d(k) * e.P;
    e.GammaBar = hermitian_part(e.Gain * e.PsiInv * e.Gain.adjoint());
    e.C = hermitian_part(s.Rbar - e.GammaBar);
    const double tr = real_trace(s.Rbar);
    const double lo = min_eigenvalue(e.C);
    if (lo < -1e-6 * tr) {
        std::ostringstream os;
        os << "est_second_moments: error covariance of link (" << m << ", " << k << ") has eigenvalue " << lo;
        throw NumericalError(os.str());
    }
    return e;
}

/// Estimator moments for every link, index m * K + k.
struct MomentTable {
    int M = 0, K = 0;
    std::vector<EstimateMoments> entries;
    const EstimateMoments& at(int m, int k) const { return entries[static_cast<std::size_t>(m) * K + k]; }
};

inline MomentTable build_moments(const Scenario& sc, const HardwareProfile& hw) {
    MomentTable t;
    t.M = sc.M();
    t.K = sc.K();
    t.entries.reserve(static_cast<std::size_t>(t.M) * t.K);
    for (int m = 0; m < t.M; ++m)
        for (int k = 0; k < t.K; ++k) t.entries.push_back(est_second_moments(sc, hw, m, k));
    return t;
}

/// Quantized pilot observations of one trial plus the UE-side scalars that
/// multiply each channel.
struct PilotObservation {
    int M = 0, N = 0, tau_p = 0;
    std::vector<cplx> tx;             // s_RF of each UE's pilot
    std::vector<cplx> dac_noise;      // per UE
    std::vector<cplx> rf_distortion;  // per UE
    std::vector<cplx> y;              // [(m * tau_p + t - 1) * N + a]

    const cplx* at(int m, int t) const { return y.data() + (static_cast<std::size_t>(m) * tau_p + t - 1) * N; }
};

/// Every UE sends a unit pilot through its DAC and RF chain at t_k; AP m
/// observes the superposition of its cohort's channels at t_k through its
/// own front end.
inline void rx_pilot(const Scenario& sc, const HardwareProfile& hw, const ChannelBlock& block, Rng& rng,
                     PilotObservation& out) {
    const int M = sc.M(), K = sc.K(), N = sc.N(), tau_p = sc.cfg.tau_p;
    out.M = M;
    out.N = N;
    out.tau_p = tau_p;
    out.tx.resize(K);
    out.dac_noise.resize(K);
    out.rf_distortion.resize(K);
    out.y.assign(static_cast<std::size_t>(M) * tau_p * N, cplx{0.0, 0.0});
    std::vector<double> e(K);
    for (int k = 0; k < K; ++k) {
        const DacOutput d = dac_out(cplx{1.0, 0.0}, sc.pilot_mw[k], hw.dac_rho[k], rng);
        const RfOutput r = ue_rf_out(d.s_dac, hw.kappa_t[k], hw.alpha_d(k) * sc.pilot_mw[k], rng);
        out.tx[k] = r.s_rf;
        out.dac_noise[k] = d.quant_noise;
        out.rf_distortion[k] = r.distortion;
        e[k] = hw.tx_power_factor(k) * sc.pilot_mw[k];
    }
    // UEs grouped by pilot instant
    std::vector<std::vector<int>> groups(tau_p);
    for (int k = 0; k < K; ++k) groups[sc.pilots.pilot_instant[k] - 1].push_back(k);

    std::vector<cplx> y(N), ch;
    std::vector<double> pw;
    FrontEndOutput fe;
    for (int m = 0; m < M; ++m) {
        for (int t = 1; t <= tau_p; ++t) {
            const auto& g = groups[t - 1];
            std::fill(y.begin(), y.end(), cplx{0.0, 0.0});
            ch.resize(g.size() * N);
            pw.resize(g.size());
            for (std::size_t j = 0; j < g.size(); ++j) {
                const cplx* h = block.at(ChannelBlock::kPilotLayer, m, g[j]);
                for (int a = 0; a < N; ++a) {
                    y[a] += h[a] * out.tx[g[j]];
                    ch[j * N + a] = h[a];
                }
                pw[j] = e[g[j]];
            }
            ap_front_end(y, ch, pw, hw.kappa_r[m], hw.adc[m], sc.noise_mw, rng, fe);
            std::copy(fe.y_adc.begin(), fe.y_adc.end(),
                      out.y.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(m) * tau_p + t - 1) * N));
        }
    }
}

inline PilotObservation rx_pilot(const Scenario& sc, const HardwareProfile& hw, const ChannelBlock& block, Rng& rng) {
    PilotObservation o;
    rx_pilot(sc, hw, block, rng, o);
    return o;
}

/// h_hat = Gain y. The gain already carries sqrt(p~) rho alpha_d, so the
/// estimate has covariance GammaBar and is orthogonal to its error.
inline CVec lmmse(const CVec& y_pilot, const EstimateMoments& moments) { return moments.Gain * y_pilot; }

/// Estimates for every link, [(m * K + k) * N + a].
inline void estimate_all(const Scenario& sc, const MomentTable& mt, const PilotObservation& obs,
                         std::vector<cplx>& hhat) {
    const int M = sc.M(), K = sc.K(), N = sc.N();
    hhat.resize(static_cast<std::size_t>(M) * K * N);
    for (int m = 0; m < M; ++m) {
        for (int k = 0; k < K; ++k) {
            const CMat& g = mt.at(m, k).Gain;
            const cplx* y = obs.at(m, sc.pilots.pilot_instant[k]);
            cplx* out = hhat.data() + (static_cast<std::size_t>(m) * K + k) * N;
            for (int a = 0; a < N; ++a) {
                cplx acc{0.0, 0.0};
                for (int b = 0; b < N; ++b) acc += g(a, b) * y[b];
                out[a] = acc;
            }
        }
    }
}

}  // namespace cfaging
