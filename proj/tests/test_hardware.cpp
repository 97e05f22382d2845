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

#include <catch_amalgamated.hpp>

#include "cfaging/hardware.hpp"

using namespace cfaging;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("distortion table agrees with Lloyd-Max quantizers", "[hardware]") {
    CHECK(bits_to_rho(1) == 0.3634);
    CHECK(bits_to_rho(5) == 0.002499);
    CHECK(bits_to_rho(kIdealBits) == 0.0);
    CHECK_THAT(bits_to_rho(6), WithinRel(kPi * std::sqrt(3.0) / 2.0 / 4096.0, 1e-12));
    CHECK_THROWS_AS(bits_to_rho(0), DomainError);
    for (int b = 1; b <= 5; ++b) CHECK_THAT(lloyd_max_quantizer(b).distortion, WithinRel(bits_to_rho(b), 3e-3));
}

TEST_CASE("one-bit Lloyd-Max quantizer", "[hardware]") {
    const ScalarQuantizer q = lloyd_max_quantizer(1);
    REQUIRE(q.levels.size() == 2);
    CHECK_THAT(q.levels[1], WithinAbs(std::sqrt(2.0 / kPi), 1e-12));
    CHECK_THAT(q.thresholds[0], WithinAbs(0.0, 1e-14));
    CHECK_THAT(q.distortion, WithinAbs(1.0 - 2.0 / kPi, 1e-12));
    CHECK(q(-0.1) == q.levels[0]);
    CHECK(q(3.0) == q.levels[1]);
    CHECK_THROWS_AS(lloyd_max_quantizer(0), DomainError);
}

TEST_CASE("Bussgang error of a quantizer is uncorrelated with its input", "[hardware]") {
    const std::int64_t T = 100000;
    for (int b : {1, 3}) {
        const ScalarQuantizer q = lloyd_max_quantizer(b);
        Rng rng(100 + b);
        cplx cross{0.0, 0.0};
        double xx = 0.0, ee = 0.0;
        for (std::int64_t i = 0; i < T; ++i) {
            const cplx x = rng.complex_normal(2.0);
            const cplx e = quantize(q, x, 2.0) - (1.0 - bits_to_rho(b)) * x;
            cross += std::conj(x) * e;
            xx += std::norm(x);
            ee += std::norm(e);
        }
        CHECK(std::abs(cross) / std::sqrt(xx * ee) <= 3.0 / std::sqrt(static_cast<double>(T)));
        // error power rho (1 - rho) of the input power
        const double r = bits_to_rho(b);
        CHECK_THAT(ee / T, WithinRel(2.0 * r * (1.0 - r), 0.05));
    }
}

TEST_CASE("DAC output power bookkeeping", "[hardware]") {
    Rng rng(5);
    const double rho = 0.3634, p = 1.0;
    const int T = 200000;
    double noise = 0.0, total = 0.0;
    for (int i = 0; i < T; ++i) {
        const cplx x = rng.complex_normal();
        const DacOutput d = dac_out(x, p, rho, rng);
        noise += std::norm(d.quant_noise);
        total += std::norm(d.s_dac);
    }
    // var(v) = rho alpha p
    CHECK_THAT(noise / T, WithinRel(0.3634 * 0.6366, 0.02));
    // E|s_DAC|^2 = alpha p
    CHECK_THAT(total / T, WithinRel(0.6366, 0.02));
    const DacOutput ideal = dac_out(cplx{0.5, -1.0}, 4.0, 0.0, rng);
    CHECK(ideal.s_dac == cplx(1.0, -2.0));
    CHECK(ideal.quant_noise == cplx(0.0, 0.0));
}

TEST_CASE("RF distortion scales with EVM", "[hardware]") {
    Rng rng(6);
    double acc = 0.0;
    const int T = 100000;
    for (int i = 0; i < T; ++i) acc += std::norm(ue_rf_out(cplx{1.0, 0.0}, 0.1, 3.0, rng).distortion);
    CHECK_THAT(acc / T, WithinRel(0.01 * 3.0, 0.02));
}

TEST_CASE("AP front end variances are conditioned on the channels", "[hardware]") {
    const AdcBank adc = AdcBank::from_rho({0.1175, 0.0});
    CHECK_THAT(adc.b(0), WithinAbs(0.8825 * 0.1175, 1e-15));
    CHECK(adc.b(1) == 0.0);
    const std::vector<cplx> ch{{1.0, 1.0}, {0.5, 0.0}, {0.0, 2.0}, {1.0, 0.0}};  // 2 UEs x 2 antennas
    const std::vector<double> pw{2.0, 0.5};
    const std::vector<cplx> y{{0.3, 0.1}, {-0.2, 0.4}};
    const double kr = 0.2, s2 = 0.3;
    Rng rng(8);
    const int T = 100000;
    double eta[2] = {0, 0}, z[2] = {0, 0}, q[2] = {0, 0};
    FrontEndOutput fe;
    for (int t = 0; t < T; ++t) {
        ap_front_end(y, ch, pw, kr, adc, s2, rng, fe);
        for (int a = 0; a < 2; ++a) {
            eta[a] += std::norm(fe.rf_distortion[a]);
            z[a] += std::norm(fe.noise[a]);
            q[a] += std::norm(fe.quant_noise[a]);
            const cplx expect = adc.a(a) * (y[a] + fe.rf_distortion[a] + fe.noise[a]) + fe.quant_noise[a];
            REQUIRE(std::abs(fe.y_adc[a] - expect) < 1e-15);
        }
    }
    for (int a = 0; a < 2; ++a) {
        const double w = pw[0] * std::norm(ch[a]) + pw[1] * std::norm(ch[2 + a]);
        CHECK_THAT(eta[a] / T, WithinRel(kr * kr * w, 0.02));
        CHECK_THAT(z[a] / T, WithinRel(s2, 0.02));
        if (a == 0) CHECK_THAT(q[a] / T, WithinRel(adc.b(0) * ((1 + kr * kr) * w + s2), 0.02));
    }
    CHECK(q[1] == 0.0);
    CHECK_THROWS_AS(ap_front_end(y, std::span<const cplx>(ch).first(3), pw, kr, adc, s2, rng, fe), ContractError);
}

TEST_CASE("hardware resolution broadcasts and validates", "[hardware]") {
    HardwareConfig h;
    h.kappa_t = {0.1};
    h.kappa_r = {0.05, 0.1, 0.0};
    h.dac_bits = {2};
    h.adc_bits = {{1}, {2, 3}, {kIdealBits}};
    const HardwareProfile p = resolve_hardware(h, 3, 2, 4, 1);
    CHECK(p.kappa_t == std::vector<double>(4, 0.1));
    CHECK(p.kappa_r[1] == 0.1);
    CHECK(p.dac_rho == std::vector<double>(4, 0.1175));
    CHECK(p.adc_bits[0] == std::vector<int>{1, 1});
    CHECK(p.adc_bits[1] == std::vector<int>{2, 3});
    CHECK(p.adc[2].a(1) == 1.0);
    CHECK_THAT(p.tx_power_factor(0), WithinRel(0.8825 * 1.01, 1e-14));
    CHECK_FALSE(p.is_ideal());
    CHECK(resolve_hardware(HardwareConfig{}, 3, 2, 4, 1).is_ideal());

    auto field_of = [](const HardwareConfig& bad) {
        try {
            resolve_hardware(bad, 3, 2, 4, 1);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("none");
    };
    HardwareConfig bad = h;
    bad.kappa_t = {0.1, 0.2};
    CHECK(field_of(bad) == "kappa_t");
    bad = h;
    bad.adc_bits = {{1}, {2}};
    CHECK(field_of(bad) == "adc_bits");
    bad = h;
    bad.dac_bits = {0};
    CHECK(field_of(bad) == "dac_bits");
    bad = h;
    bad.adc_dynamic_range = std::make_pair(3, 2);
    CHECK(field_of(bad) == "adc_bits");
}

TEST_CASE("dynamic ADC resolutions are seeded and in range", "[hardware]") {
    HardwareConfig h;
    h.adc_dynamic_range = std::make_pair(1, 4);
    const HardwareProfile a = resolve_hardware(h, 16, 2, 8, 7);
    const HardwareProfile b = resolve_hardware(h, 16, 2, 8, 7);
    CHECK(a.adc_bits == b.adc_bits);
    std::vector<int> seen(5, 0);
    for (const auto& row : a.adc_bits)
        for (int x : row) {
            REQUIRE(x >= 1);
            REQUIRE(x <= 4);
            ++seen[x];
        }
    for (int x = 1; x <= 4; ++x) CHECK(seen[x] > 0);
    CHECK(resolve_hardware(h, 16, 2, 8, 8).adc_bits != a.adc_bits);
}
