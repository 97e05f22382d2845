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

// Statistical (Bussgang / EVM) models of the transmit and receive chains.
// Every distortion is drawn as a Gaussian whose variance is fixed by the
// channel-conditioned power bookkeeping. A waveform-level Lloyd-Max
// quantizer is provided for checking the linearization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "types.hpp"

namespace cfaging {

/// Bit depth meaning "no quantization".
inline constexpr int kIdealBits = std::numeric_limits<int>::max();

/// Distortion factor rho of an MSE-optimal b-bit quantizer under Gaussian
/// input: tabulated for b <= 5, asymptotic (pi sqrt(3) / 2) 2^(-2b) above.
inline double bits_to_rho(int bits) {
    if (bits < 1) throw DomainError("bits_to_rho: bit depth must be >= 1");
    if (bits == kIdealBits) return 0.0;
    static constexpr double table[] = {0.3634, 0.1175, 0.03454, 0.009497, 0.002499};
    if (bits <= 5) return table[bits - 1];
    return (kPi * std::sqrt(3.0) / 2.0) * std::pow(2.0, -2.0 * bits);
}

/// Scalar quantizer for zero-mean, unit-variance real Gaussian input.
struct ScalarQuantizer {
    std::vector<double> thresholds;  // ascending, size levels - 1
    std::vector<double> levels;      // ascending reconstruction points
    double distortion = 0.0;         // E{(x - Q(x))^2}

    double operator()(double x) const {
        const auto it = std::upper_bound(thresholds.begin(), thresholds.end(), x);
        return levels[static_cast<std::size_t>(it - thresholds.begin())];
    }
};

namespace detail {

inline double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace detail

/// Lloyd-Max quantizer with 2^bits levels, iterated to a fixed point of the
/// centroid and nearest-neighbour conditions.
inline ScalarQuantizer lloyd_max_quantizer(int bits) {
    if (bits < 1 || bits > 12) throw DomainError("lloyd_max_quantizer: bit depth must lie in [1, 12]");
    const int L = 1 << bits;
    ScalarQuantizer q;
    q.levels.resize(L);
    q.thresholds.resize(L - 1);
    for (int i = 0; i < L; ++i) q.levels[i] = -3.0 + 6.0 * (i + 0.5) / L;
    std::vector<double> mass(L);
    for (int it = 0; it < 200000; ++it) {
        for (int i = 0; i + 1 < L; ++i) q.thresholds[i] = 0.5 * (q.levels[i] + q.levels[i + 1]);
        double moved = 0.0;
        for (int i = 0; i < L; ++i) {
            const double lo = i == 0 ? -INFINITY : q.thresholds[i - 1];
            const double hi = i + 1 == L ? INFINITY : q.thresholds[i];
            const double p = detail::std_normal_cdf(hi) - detail::std_normal_cdf(lo);
            const double c = (detail::std_normal_pdf(lo) - detail::std_normal_pdf(hi)) / p;
            moved = std::max(moved, std::abs(c - q.levels[i]));
            q.levels[i] = c;
            mass[i] = p;
        }
        if (moved < 1e-13) break;
    }
    for (int i = 0; i + 1 < L; ++i) q.thresholds[i] = 0.5 * (q.levels[i] + q.levels[i + 1]);
    // centroid condition: E{x Q(x)} = E{Q(x)^2}
    double energy = 0.0;
    for (int i = 0; i < L; ++i) energy += mass[i] * q.levels[i] * q.levels[i];
    q.distortion = 1.0 - energy;
    return q;
}

/// Quantizes the real and imaginary parts of x, scaled for input power
/// E{|x|^2} = power.
inline cplx quantize(const ScalarQuantizer& q, cplx x, double power) {
    const double s = std::sqrt(0.5 * power);
    return {s * q(x.real() / s), s * q(x.imag() / s)};
}

/// Bussgang gain A = diag(1 - rho_a,n) and quantization-noise weight
/// B = A (I - A) for one AP.
struct AdcBank {
    RVec a;
    RVec b;

    static AdcBank from_rho(const std::vector<double>& rho) {
        AdcBank bank;
        const auto n = static_cast<Eigen::Index>(rho.size());
        bank.a.resize(n);
        bank.b.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(rho[i] >= 0.0 && rho[i] < 1.0)) throw DomainError("AdcBank: distortion factor must lie in [0, 1)");
            bank.a(i) = 1.0 - rho[i];
            bank.b(i) = bank.a(i) * (1.0 - bank.a(i));
        }
        return bank;
    }
    static AdcBank ideal(int n) { return from_rho(std::vector<double>(n, 0.0)); }
    int size() const { return static_cast<int>(a.size()); }
};

/// Per-device impairment parameters, fully resolved.
struct HardwareProfile {
    std::vector<double> kappa_t;  // per UE
    std::vector<double> kappa_r;  // per AP
    std::vector<double> dac_rho;  // per UE
    std::vector<std::vector<int>> adc_bits;  // per AP, per antenna (kIdealBits = none)
    std::vector<AdcBank> adc;                // per AP

    double alpha_d(int k) const { return 1.0 - dac_rho[k]; }
    /// E{|s_RF|^2} / p for UE k: alpha_d (1 + kappa_t^2).
    double tx_power_factor(int k) const { return alpha_d(k) * (1.0 + kappa_t[k] * kappa_t[k]); }

    bool is_ideal() const {
        for (double x : kappa_t) if (x != 0.0) return false;
        for (double x : kappa_r) if (x != 0.0) return false;
        for (double x : dac_rho) if (x != 0.0) return false;
        for (const auto& bank : adc)
            for (Eigen::Index i = 0; i < bank.a.size(); ++i) if (bank.a(i) != 1.0) return false;
        return true;
    }
};

/// Declarative hardware section of a configuration. Vectors of length one
/// broadcast to every device.
struct HardwareConfig {
    std::vector<double> kappa_t{0.0};
    std::vector<double> kappa_r{0.0};
    std::vector<int> dac_bits{kIdealBits};
    // Either {{b}} (all antennas), M rows of one entry (per AP) or M x N.
    std::vector<std::vector<int>> adc_bits{{kIdealBits}};
    // When set, every antenna draws its resolution uniformly from [lo, hi].
    std::optional<std::pair<int, int>> adc_dynamic_range;
    // Optional per-antenna distortion factors overriding adc_bits (M x N).
    std::vector<std::vector<double>> adc_rho_override;
    std::string label;
};

inline HardwareProfile resolve_hardware(const HardwareConfig& hw, int n_ap, int n_ant, int n_ue,
                                        std::uint64_t seed) {
    auto broadcast = [](const auto& v, int n, const char* field) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        if (v.size() == 1) return std::vector<T>(n, v[0]);
        if (static_cast<int>(v.size()) != n) throw ConfigError(field, "expected a scalar or one entry per device");
        return std::vector<T>(v.begin(), v.end());
    };
    HardwareProfile p;
    p.kappa_t = broadcast(hw.kappa_t, n_ue, "kappa_t");
    p.kappa_r = broadcast(hw.kappa_r, n_ap, "kappa_r");
    for (double x : p.kappa_t) if (!(x >= 0.0)) throw ConfigError("kappa_t", "must be >= 0");
    for (double x : p.kappa_r) if (!(x >= 0.0)) throw ConfigError("kappa_r", "must be >= 0");
    for (int b : broadcast(hw.dac_bits, n_ue, "dac_bits")) {
        if (b < 1) throw ConfigError("dac_bits", "bit depth must be >= 1");
        p.dac_rho.push_back(bits_to_rho(b));
    }

    p.adc_bits.assign(n_ap, std::vector<int>(n_ant, kIdealBits));
    if (hw.adc_dynamic_range) {
        auto [lo, hi] = *hw.adc_dynamic_range;
        if (lo < 1 || hi < lo) throw ConfigError("adc_bits", "dynamic range must satisfy 1 <= lo <= hi");
        Rng rng = Rng::stream(seed, 0, Stream::hardware);
        for (auto& row : p.adc_bits)
            for (int& b : row) b = rng.uniform_int(lo, hi);
    } else if (hw.adc_bits.size() == 1 && hw.adc_bits[0].size() == 1) {
        for (auto& row : p.adc_bits) std::fill(row.begin(), row.end(), hw.adc_bits[0][0]);
    } else if (static_cast<int>(hw.adc_bits.size()) == n_ap) {
        for (int m = 0; m < n_ap; ++m) {
            const auto& row = hw.adc_bits[m];
            if (row.size() == 1) std::fill(p.adc_bits[m].begin(), p.adc_bits[m].end(), row[0]);
            else if (static_cast<int>(row.size()) == n_ant) p.adc_bits[m] = row;
            else throw ConfigError("adc_bits", "per-AP rows must have 1 or N entries");
        }
    } else {
        throw ConfigError("adc_bits", "expected a scalar, a per-AP list or a per-antenna matrix");
    }
    for (const auto& row : p.adc_bits)
        for (int b : row) if (b < 1) throw ConfigError("adc_bits", "bit depth must be >= 1");

    const bool override_rho = !hw.adc_rho_override.empty();
    if (override_rho && static_cast<int>(hw.adc_rho_override.size()) != n_ap)
        throw ConfigError("adc_rho", "expected M rows of N entries");
    for (int m = 0; m < n_ap; ++m) {
        std::vector<double> rho(n_ant);
        for (int n = 0; n < n_ant; ++n) rho[n] = bits_to_rho(p.adc_bits[m][n]);
        if (override_rho) {
            if (static_cast<int>(hw.adc_rho_override[m].size()) != n_ant)
                throw ConfigError("adc_rho", "expected M rows of N entries");
            rho = hw.adc_rho_override[m];
        }
        try {
            p.adc.push_back(AdcBank::from_rho(rho));
        } catch (const DomainError& e) {
            throw ConfigError("adc_rho", e.what());
        }
    }
    return p;
}

// --- transmit chain ---------------------------------------------------------

struct DacOutput {
    cplx s_dac;
    cplx quant_noise;
};

/// s_DAC = alpha sqrt(p) x + v, v ~ CN(0, rho alpha p), uncorrelated with x.
inline DacOutput dac_out(cplx symbol, double power, double rho_d, Rng& rng) {
    const double alpha = 1.0 - rho_d;
    const cplx noise = rng.complex_normal() * std::sqrt(rho_d * alpha * power);
    return {alpha * std::sqrt(power) * symbol + noise, noise};
}

struct RfOutput {
    cplx s_rf;
    cplx distortion;
};

/// EVM model: s_RF = s_DAC + xi, xi ~ CN(0, kappa^2 E{|s_DAC|^2}).
inline RfOutput ue_rf_out(cplx s_dac, double kappa_t, double s_dac_power, Rng& rng) {
    const cplx xi = rng.complex_normal() * (kappa_t * std::sqrt(s_dac_power));
    return {s_dac + xi, xi};
}

// --- receive chain ----------------------------------------------------------

struct FrontEndOutput {
    std::vector<cplx> rf_distortion;  // eta
    std::vector<cplx> noise;          // z
    std::vector<cplx> quant_noise;    // n_ADC
    std::vector<cplx> y_adc;

    void resize(std::size_t n) {
        rf_distortion.resize(n);
        noise.resize(n);
        quant_noise.resize(n);
        y_adc.resize(n);
    }
};

/// y_ADC = A (y + eta + z) + n_ADC.
///
/// `channels` holds the channels of the transmitting UEs at this instant,
/// UE-major (n_ue x N) and `tx_power` their total radiated powers
/// (1 + kappa_t^2) alpha_d p. The RF distortion covariance is
/// kappa_r^2 diag(sum_i tx_power_i |h_i|^2) and the quantization noise
/// covariance is B diag of the RF output power, both conditioned on the
/// channels.
inline void ap_front_end(std::span<const cplx> y, std::span<const cplx> channels,
                         std::span<const double> tx_power, double kappa_r, const AdcBank& adc,
                         double sigma2, Rng& rng, FrontEndOutput& out) {
    const std::size_t n = y.size();
    if (static_cast<std::size_t>(adc.size()) != n || channels.size() != tx_power.size() * n)
        throw ContractError("ap_front_end: dimension mismatch");
    out.resize(n);
    const double k2 = kappa_r * kappa_r;
    for (std::size_t a = 0; a < n; ++a) {
        double w = 0.0;
        for (std::size_t i = 0; i < tx_power.size(); ++i) w += tx_power[i] * std::norm(channels[i * n + a]);
        const double s = (1.0 + k2) * w + sigma2;
        out.rf_distortion[a] = rng.complex_normal() * std::sqrt(k2 * w);
        out.noise[a] = rng.complex_normal() * std::sqrt(sigma2);
        out.quant_noise[a] = rng.complex_normal() * std::sqrt(adc.b(static_cast<Eigen::Index>(a)) * s);
        out.y_adc[a] = adc.a(static_cast<Eigen::Index>(a)) * (y[a] + out.rf_distortion[a] + out.noise[a]) +
                       out.quant_noise[a];
    }
}

inline FrontEndOutput ap_front_end(std::span<const cplx> y, std::span<const cplx> channels,
                                   std::span<const double> tx_power, double kappa_r, const AdcBank& adc,
                                   double sigma2, Rng& rng) {
    FrontEndOutput out;
    ap_front_end(y, channels, tx_power, kappa_r, adc, sigma2, rng, out);
    return out;
}

}  // namespace cfaging
