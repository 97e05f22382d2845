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

// Simulated term powers of the decoded symbol. Each trial realizes the
// channels, the impaired pilot chain, the estimates and every data-phase
// noise source; each term is formed from its own component only.

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "channel.hpp"
#include "estimation.hpp"
#include "hardware.hpp"
#include "scenario.hpp"
#include "terms.hpp"

namespace cfaging {

/// s_km = h_hat^H y (local maximum-ratio combining).
inline cplx local_combine(std::span<const cplx> h_hat, std::span<const cplx> y) {
    if (h_hat.size() != y.size()) throw ContractError("local_combine: length mismatch");
    cplx s{0.0, 0.0};
    for (std::size_t a = 0; a < y.size(); ++a) s += std::conj(h_hat[a]) * y[a];
    return s;
}

/// s_k = sum_m conj(a_m) s_km.
inline cplx lsfd_combine(std::span<const cplx> s_local, std::span<const cplx> a) {
    if (s_local.size() != a.size()) throw ContractError("lsfd_combine: length mismatch");
    cplx s{0.0, 0.0};
    for (std::size_t m = 0; m < a.size(); ++m) s += std::conj(a[m]) * s_local[m];
    return s;
}

/// Decoder weights per UE and data instant, [k][n - lambda].
using WeightGrid = std::vector<std::vector<CVec>>;
/// Term powers per UE and data instant, [k][n - lambda].
using TermGrid = std::vector<std::vector<TermPowers>>;

struct McOptions {
    std::int64_t trials = 20000;
    int workers = 0;        // 0 = hardware concurrency
    int block_size = 128;   // trials per deterministic reduction unit
};

struct McResult {
    std::vector<TermGrid> terms;  // one grid per weight grid
    std::vector<std::string> warnings;
};

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

namespace detail {

// Per-(scheme, k, instant) sums: DS mean (re, im), E|DS stat|^2, then CA,
// DAC, TRF, RRF, ADC, NS and one slot per interferer.
enum Slot { kDsRe = 0, kDsIm, kDsAbs2, kCa, kDac, kTrf, kRrf, kAdc, kNs, kIui0 };

struct McLayout {
    int schemes = 0, K = 0, instants = 0;
    int stride() const { return kIui0 + K; }
    std::size_t size() const { return static_cast<std::size_t>(schemes) * K * instants * stride(); }
    std::size_t offset(int s, int k, int j) const {
        return ((static_cast<std::size_t>(s) * K + k) * instants + j) * stride();
    }
};

/// Workspace reused across trials by one worker.
struct McWorkspace {
    ChannelBlock block;
    PilotObservation pilot;
    std::vector<cplx> hhat;      // [(m K + k) N + a]
    std::vector<cplx> hat_conj;  // conj(h_hat)
    std::vector<cplx> hat_a;     // conj(h_hat) A
    std::vector<cplx> y_ref;     // h_hat^H A h_mk[lambda], [m K + k]
    std::vector<cplx> dac, rf;   // per UE, current instant
    std::vector<cplx> a_eta, a_z, q;  // [m N + a], current instant
    std::vector<cplx> x;         // h_hat_mk^H A h_mi[n], [i]
    std::vector<cplx> acc;       // [scheme][slot]
    FrontEndOutput fe;
    std::vector<cplx> zeros;
};

inline void run_trial(const Scenario& sc, const HardwareProfile& hw, const MomentTable& mt,
                      const std::vector<WeightGrid>& weights, std::uint64_t trial, const McLayout& lay,
                      McWorkspace& ws, double* sums) {
    const int M = sc.M(), K = sc.K(), N = sc.N();
    const int S = lay.schemes;
    generate_block(sc, trial, ws.block);
    Rng pilot_rng = Rng::stream(sc.cfg.seed, trial, Stream::pilot_noise);
    rx_pilot(sc, hw, ws.block, pilot_rng, ws.pilot);
    estimate_all(sc, mt, ws.pilot, ws.hhat);

    const std::size_t links = static_cast<std::size_t>(M) * K;
    ws.hat_conj.resize(links * N);
    ws.hat_a.resize(links * N);
    ws.y_ref.resize(links);
    for (int m = 0; m < M; ++m) {
        const RVec& av = hw.adc[m].a;
        for (int k = 0; k < K; ++k) {
            const std::size_t base = (static_cast<std::size_t>(m) * K + k) * N;
            const cplx* href = ws.block.at(ChannelBlock::kRefLayer, m, k);
            cplx y{0.0, 0.0};
            for (int a = 0; a < N; ++a) {
                ws.hat_conj[base + a] = std::conj(ws.hhat[base + a]);
                ws.hat_a[base + a] = ws.hat_conj[base + a] * av(a);
                y += ws.hat_a[base + a] * href[a];
            }
            ws.y_ref[static_cast<std::size_t>(m) * K + k] = y;
        }
    }

    std::vector<double> e_data(K), sqrt_p(K), ad_sqrt_p(K);
    for (int i = 0; i < K; ++i) {
        e_data[i] = hw.tx_power_factor(i) * sc.data_mw[i];
        sqrt_p[i] = std::sqrt(sc.data_mw[i]);
        ad_sqrt_p[i] = hw.alpha_d(i) * sqrt_p[i];
    }

    Rng data_rng = Rng::stream(sc.cfg.seed, trial, Stream::data_noise);
    ws.dac.resize(K);
    ws.rf.resize(K);
    ws.a_eta.resize(static_cast<std::size_t>(M) * N);
    ws.a_z.resize(static_cast<std::size_t>(M) * N);
    ws.q.resize(static_cast<std::size_t>(M) * N);
    ws.x.resize(K);
    ws.zeros.assign(N, cplx{0.0, 0.0});
    const int stride = lay.stride();
    ws.acc.resize(static_cast<std::size_t>(S) * stride);

    for (int j = 0; j < lay.instants; ++j) {
        const int l = ChannelBlock::data_layer(j);
        for (int i = 0; i < K; ++i) {
            const DacOutput d = dac_out(cplx{1.0, 0.0}, sc.data_mw[i], hw.dac_rho[i], data_rng);
            const RfOutput r = ue_rf_out(d.s_dac, hw.kappa_t[i], hw.alpha_d(i) * sc.data_mw[i], data_rng);
            ws.dac[i] = d.quant_noise;
            ws.rf[i] = r.distortion;
        }
        for (int m = 0; m < M; ++m) {
            const std::span<const cplx> ch(ws.block.at(l, m, 0), static_cast<std::size_t>(K) * N);
            ap_front_end(ws.zeros, ch, e_data, hw.kappa_r[m], hw.adc[m], sc.noise_mw, data_rng, ws.fe);
            const RVec& av = hw.adc[m].a;
            for (int a = 0; a < N; ++a) {
                ws.a_eta[static_cast<std::size_t>(m) * N + a] = av(a) * ws.fe.rf_distortion[a];
                ws.a_z[static_cast<std::size_t>(m) * N + a] = av(a) * ws.fe.noise[a];
                ws.q[static_cast<std::size_t>(m) * N + a] = ws.fe.quant_noise[a];
            }
        }

        for (int k = 0; k < K; ++k) {
            const TemporalCorrelation rk = sc.rho(k, j);
            const LinkStats* stats_k = nullptr;
            std::fill(ws.acc.begin(), ws.acc.end(), cplx{0.0, 0.0});
            for (int m = 0; m < M; ++m) {
                const std::size_t base = (static_cast<std::size_t>(m) * K + k) * N;
                const cplx* ha = ws.hat_a.data() + base;
                const cplx* hc = ws.hat_conj.data() + base;
                const cplx* eta = ws.a_eta.data() + static_cast<std::size_t>(m) * N;
                const cplx* z = ws.a_z.data() + static_cast<std::size_t>(m) * N;
                const cplx* q = ws.q.data() + static_cast<std::size_t>(m) * N;
                const cplx* hn = ws.block.at(l, m, 0);
                cplx rrf{0.0, 0.0}, adc{0.0, 0.0}, ns{0.0, 0.0};
                for (int a = 0; a < N; ++a) {
                    rrf += hc[a] * eta[a];
                    ns += hc[a] * z[a];
                    adc += hc[a] * q[a];
                }
                cplx dac{0.0, 0.0}, trf{0.0, 0.0};
                for (int i = 0; i < K; ++i) {
                    const cplx* hi = hn + static_cast<std::size_t>(i) * N;
                    cplx xi{0.0, 0.0};
                    for (int a = 0; a < N; ++a) xi += ha[a] * hi[a];
                    ws.x[i] = xi;
                    dac += xi * ws.dac[i];
                    trf += xi * ws.rf[i];
                }
                // aged-out component of UE k: hbar e^{j phi} + f at this instant
                stats_k = &sc.link(m, k);
                const std::size_t idx = ws.block.link_index(l, m, k);
                const cplx e = ws.block.rotor[idx];
                const cplx* f = ws.block.nlos_at(l, m, k);
                cplx ca{0.0, 0.0};
                for (int a = 0; a < N; ++a) ca += ha[a] * (stats_k->hbar(a) * e + f[a]);
                ca *= ad_sqrt_p[k] * rk.rho_bar;
                const cplx ds = ad_sqrt_p[k] * rk.rho * ws.y_ref[static_cast<std::size_t>(m) * K + k];

                for (int s = 0; s < S; ++s) {
                    const cplx w = std::conj(weights[s][k][j](m));
                    cplx* acc = ws.acc.data() + static_cast<std::size_t>(s) * stride;
                    acc[kDsRe] += w * ds;
                    acc[kCa] += w * ca;
                    acc[kDac] += w * dac;
                    acc[kTrf] += w * trf;
                    acc[kRrf] += w * rrf;
                    acc[kAdc] += w * adc;
                    acc[kNs] += w * ns;
                    for (int i = 0; i < K; ++i)
                        if (i != k) acc[kIui0 + i] += w * ad_sqrt_p[i] * ws.x[i];
                }
            }
            for (int s = 0; s < S; ++s) {
                const cplx* acc = ws.acc.data() + static_cast<std::size_t>(s) * stride;
                double* out = sums + lay.offset(s, k, j);
                out[kDsRe] += acc[kDsRe].real();
                out[kDsIm] += acc[kDsRe].imag();
                out[kDsAbs2] += std::norm(acc[kDsRe]);
                for (int t = kCa; t < stride; ++t) out[t] += std::norm(acc[t]);
            }
        }
    }
}

/// Fixed-shape pairwise reduction over block partials in block order.
inline void pairwise_reduce(std::vector<std::vector<double>>& parts) {
    for (std::size_t width = 1; width < parts.size(); width *= 2)
        for (std::size_t i = 0; i + width < parts.size(); i += 2 * width) {
            auto& dst = parts[i];
            const auto& src = parts[i + width];
            for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += src[t];
        }
}

}  // namespace detail

/// Sample estimates of every term for each weight grid. The scenario seed
/// and the trial index fix every draw, and trials are summed in fixed
/// blocks reduced in block order, so the result does not depend on the
/// worker count.
inline McResult mc_term_powers(const Scenario& sc, const HardwareProfile& hw, const MomentTable& mt,
                               const std::vector<WeightGrid>& weights, const McOptions& opt) {
    if (opt.trials < 1) throw ContractError("mc_term_powers: trials must be >= 1");
    if (opt.block_size < 1) throw ContractError("mc_term_powers: block_size must be >= 1");
    const int K = sc.K(), J = sc.data_instants();
    for (const auto& g : weights) {
        if (static_cast<int>(g.size()) != K) throw ContractError("mc_term_powers: weight grid must have K rows");
        for (const auto& row : g) {
            if (static_cast<int>(row.size()) != J) throw ContractError("mc_term_powers: weight grid instant count");
            for (const auto& a : row)
                if (a.size() != static_cast<Eigen::Index>(sc.M())) throw ContractError("mc_term_powers: weight length must be M");
        }
    }
    detail::McLayout lay{static_cast<int>(weights.size()), K, J};
    const std::int64_t bs = opt.block_size;
    const std::size_t n_blocks = static_cast<std::size_t>((opt.trials + bs - 1) / bs);
    std::vector<std::vector<double>> parts(n_blocks);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        detail::McWorkspace ws;
        for (std::size_t b = next++; b < n_blocks; b = next++) {
            std::vector<double> sums(lay.size(), 0.0);
            const std::int64_t lo = static_cast<std::int64_t>(b) * bs;
            const std::int64_t hi = std::min<std::int64_t>(lo + bs, opt.trials);
            for (std::int64_t t = lo; t < hi; ++t)
                detail::run_trial(sc, hw, mt, weights, static_cast<std::uint64_t>(t), lay, ws, sums.data());
            parts[b] = std::move(sums);
        }
    };
    const int n_workers = std::max(1, std::min<int>(resolve_workers(opt.workers), static_cast<int>(n_blocks)));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr err;
        std::mutex err_mu;
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                try {
                    worker();
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                    next = n_blocks;
                }
            });
        for (auto& t : pool) t.join();
        if (err) std::rethrow_exception(err);
    }
    detail::pairwise_reduce(parts);
    const std::vector<double>& total = parts[0];

    McResult res;
    const double inv = 1.0 / static_cast<double>(opt.trials);
    if (opt.trials < 1000)
        res.warnings.push_back("mc_term_powers: fewer than 1000 trials; term estimates are coarse");
    for (int s = 0; s < lay.schemes; ++s) {
        TermGrid grid(K, std::vector<TermPowers>(J));
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < J; ++j) {
                const double* v = total.data() + lay.offset(s, k, j);
                TermPowers& tp = grid[k][j];
                const double re = v[detail::kDsRe] * inv, im = v[detail::kDsIm] * inv;
                tp.DS = re * re + im * im;
                tp.BU = std::max(0.0, v[detail::kDsAbs2] * inv - tp.DS);
                tp.CA = v[detail::kCa] * inv;
                tp.DAC = v[detail::kDac] * inv;
                tp.TRF = v[detail::kTrf] * inv;
                tp.RRF = v[detail::kRrf] * inv;
                tp.ADC = v[detail::kAdc] * inv;
                tp.NS = v[detail::kNs] * inv;
                tp.IUI.assign(K, 0.0);
                for (int i = 0; i < K; ++i) tp.IUI[i] = v[detail::kIui0 + i] * inv;
            }
        res.terms.push_back(std::move(grid));
    }
    return res;
}

/// SINR grid of a term grid.
inline std::vector<std::vector<double>> sinr_grid(const TermGrid& g) {
    std::vector<std::vector<double>> out(g.size());
    for (std::size_t k = 0; k < g.size(); ++k)
        for (const auto& tp : g[k]) out[k].push_back(mc_sinr(tp));
    return out;
}

}  // namespace cfaging
