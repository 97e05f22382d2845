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

// Rician channel realizations with a fresh LoS phase per instant and Jakes
// aging around the estimation instant.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "rng.hpp"
#include "scenario.hpp"
#include "types.hpp"

namespace cfaging {

/// h = hbar e^{j phi} + R^{1/2} g, phi ~ U[-pi, pi), g ~ CN(0, I).
inline CVec draw_initial(const LinkStats& stats, Rng& rng) {
    const double phi = rng.phase();
    const auto n = stats.hbar.size();
    CVec g(n);
    for (Eigen::Index a = 0; a < n; ++a) g(a) = rng.complex_normal();
    return stats.hbar * std::polar(1.0, phi) + stats.R_sqrt * g;
}

/// h[n] = rho h0 + rho_bar (hbar e^{j phi_n} + f), f ~ CN(0, R), with a
/// fresh phase and innovation independent of h0.
inline CVec age_channel(const CVec& h0, const LinkStats& stats, const TemporalCorrelation& rho, Rng& rng) {
    return rho.rho * h0 + rho.rho_bar * draw_initial(stats, rng);
}

/// Channels of one trial at every instant the link budget needs.
///
/// Layer 0 holds the pilot instant t_k of each UE, layer 1 the estimation
/// instant lambda (drawn as the Rician starting point) and layer 1 + j the
/// data instant lambda + j. Every other layer is aged from layer 1. Each
/// entry keeps its LoS phase and NLoS part so it can be rebuilt exactly.
struct ChannelBlock {
    static constexpr int kPilotLayer = 0;
    static constexpr int kRefLayer = 1;

    int M = 0, K = 0, N = 0, L = 0;
    int lambda = 0;
    std::vector<std::vector<int>> instants;  // [layer][k]
    std::vector<cplx> h;       // [((l * M + m) * K + k) * N + a]
    std::vector<cplx> nlos;    // f (or R^{1/2} g on the reference layer)
    std::vector<double> phase; // [(l * M + m) * K + k]
    std::vector<cplx> rotor;   // e^{j phase}

    static int data_layer(int offset_from_lambda) { return kRefLayer + offset_from_lambda; }

    std::size_t link_index(int l, int m, int k) const {
        return (static_cast<std::size_t>(l) * M + m) * K + k;
    }
    const cplx* at(int l, int m, int k) const { return h.data() + link_index(l, m, k) * N; }
    cplx* at(int l, int m, int k) { return h.data() + link_index(l, m, k) * N; }
    const cplx* nlos_at(int l, int m, int k) const { return nlos.data() + link_index(l, m, k) * N; }

    CVec vec(int l, int m, int k) const { return Eigen::Map<const CVec>(at(l, m, k), N); }

    void resize(int m, int k, int n, int layers) {
        M = m;
        K = k;
        N = n;
        L = layers;
        const std::size_t links = static_cast<std::size_t>(layers) * m * k;
        h.resize(links * n);
        nlos.resize(links * n);
        phase.resize(links);
        rotor.resize(links);
        instants.assign(layers, std::vector<int>(k, 0));
    }
};

namespace detail {

inline void draw_link_entry(const LinkStats& s, int n, Rng& rng, cplx* nlos, double& phase, cplx& rotor) {
    phase = rng.phase();
    rotor = std::polar(1.0, phase);
    cplx g[16];
    std::vector<cplx> big;
    cplx* gp = g;
    if (n > 16) {
        big.resize(n);
        gp = big.data();
    }
    for (int a = 0; a < n; ++a) gp[a] = rng.complex_normal();
    for (int a = 0; a < n; ++a) {
        cplx acc{0.0, 0.0};
        for (int b = 0; b < n; ++b) acc += s.R_sqrt(a, b) * gp[b];
        nlos[a] = acc;
    }
}

inline void combine_aged(const LinkStats& s, const TemporalCorrelation& rho, const cplx* ref, const cplx* nlos,
                         cplx e, int n, cplx* out) {
    for (int a = 0; a < n; ++a) out[a] = rho.rho * ref[a] + rho.rho_bar * (s.hbar(a) * e + nlos[a]);
}

inline void combine_initial(const LinkStats& s, const cplx* nlos, cplx e, int n, cplx* out) {
    for (int a = 0; a < n; ++a) out[a] = s.hbar(a) * e + nlos[a];
}

}  // namespace detail

/// Correlation that ages layer `l` relative to the reference instant.
inline TemporalCorrelation layer_rho(const Scenario& sc, int l, int k) {
    if (l == ChannelBlock::kPilotLayer) return sc.rho_pilot(k);
    return sc.rho(k, l - ChannelBlock::kRefLayer);
}

/// Fills `block` for trial `trial` from the channel stream. Reuses the
/// block's storage across calls.
inline void generate_block(const Scenario& sc, std::uint64_t trial, ChannelBlock& block) {
    const int M = sc.M(), K = sc.K(), N = sc.N();
    const int layers = 1 + sc.data_instants();
    if (block.M != M || block.K != K || block.N != N || block.L != layers) block.resize(M, K, N, layers);
    block.lambda = sc.lambda();
    for (int k = 0; k < K; ++k) {
        block.instants[ChannelBlock::kPilotLayer][k] = sc.pilots.pilot_instant[k];
        for (int l = 1; l < layers; ++l) block.instants[l][k] = sc.lambda() + l - 1;
    }
    // rho per (layer, UE) is shared by all APs
    std::vector<TemporalCorrelation> rho(static_cast<std::size_t>(layers) * K);
    for (int l = 0; l < layers; ++l)
        for (int k = 0; k < K; ++k) rho[static_cast<std::size_t>(l) * K + k] = layer_rho(sc, l, k);

    Rng rng = Rng::stream(sc.cfg.seed, trial, Stream::channel);
    for (int m = 0; m < M; ++m) {
        for (int k = 0; k < K; ++k) {
            const LinkStats& s = sc.link(m, k);
            const std::size_t ref = block.link_index(ChannelBlock::kRefLayer, m, k);
            detail::draw_link_entry(s, N, rng, block.nlos.data() + ref * N, block.phase[ref], block.rotor[ref]);
            detail::combine_initial(s, block.nlos.data() + ref * N, block.rotor[ref], N, block.h.data() + ref * N);
            for (int l = 0; l < layers; ++l) {
                if (l == ChannelBlock::kRefLayer) continue;
                const std::size_t idx = block.link_index(l, m, k);
                detail::draw_link_entry(s, N, rng, block.nlos.data() + idx * N, block.phase[idx], block.rotor[idx]);
                detail::combine_aged(s, rho[static_cast<std::size_t>(l) * K + k], block.h.data() + ref * N,
                                     block.nlos.data() + idx * N, block.rotor[idx], N, block.h.data() + idx * N);
            }
        }
    }
}

inline ChannelBlock generate_block(const Scenario& sc, std::uint64_t trial) {
    ChannelBlock b;
    generate_block(sc, trial, b);
    return b;
}

/// Rebuilds h from the stored phase and NLoS part with the same arithmetic
/// used at generation, recomputing e^{j phase}.
inline CVec reconstruct(const Scenario& sc, const ChannelBlock& block, int l, int m, int k) {
    const LinkStats& s = sc.link(m, k);
    const std::size_t idx = block.link_index(l, m, k);
    CVec out(block.N);
    if (l == ChannelBlock::kRefLayer) {
        detail::combine_initial(s, block.nlos.data() + idx * block.N, std::polar(1.0, block.phase[idx]), block.N,
                                out.data());
    } else {
        detail::combine_aged(s, layer_rho(sc, l, k), block.at(ChannelBlock::kRefLayer, m, k),
                             block.nlos.data() + idx * block.N, std::polar(1.0, block.phase[idx]), block.N,
                             out.data());
    }
    return out;
}

// --- binary dump --------------------------------------------------------------
//
// "CFCB", u32 version, u32 M, K, N, L, then L x K int32 instants, then the
// channels as (re, im) float64 pairs in [l][m][k][n] order. Little-endian.

inline constexpr std::uint32_t kBlockFormatVersion = 1;

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ContractError("read_block: truncated stream");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
}

}  // namespace detail

inline void write_block(std::ostream& os, const ChannelBlock& b) {
    os.write("CFCB", 4);
    detail::put_le<std::uint32_t>(os, kBlockFormatVersion);
    for (int v : {b.M, b.K, b.N, b.L}) detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(v));
    for (const auto& layer : b.instants)
        for (int t : layer) detail::put_le<std::int32_t>(os, t);
    for (const cplx& z : b.h) {
        detail::put_le<double>(os, z.real());
        detail::put_le<double>(os, z.imag());
    }
}

/// Reads the channels and instants back; phases and NLoS parts are not part
/// of the format.
inline ChannelBlock read_block(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "CFCB", 4) != 0) throw ContractError("read_block: bad magic");
    if (detail::get_le<std::uint32_t>(is) != kBlockFormatVersion) throw ContractError("read_block: unsupported version");
    int dims[4];
    for (int& d : dims) d = static_cast<int>(detail::get_le<std::uint32_t>(is));
    ChannelBlock b;
    b.resize(dims[0], dims[1], dims[2], dims[3]);
    for (auto& layer : b.instants)
        for (int& t : layer) t = detail::get_le<std::int32_t>(is);
    if (b.L > ChannelBlock::kRefLayer && b.K > 0) b.lambda = b.instants[ChannelBlock::kRefLayer][0];
    for (cplx& z : b.h) {
        const double re = detail::get_le<double>(is);
        const double im = detail::get_le<double>(is);
        z = {re, im};
    }
    return b;
}

}  // namespace cfaging
