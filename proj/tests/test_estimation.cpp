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

#include "cfaging/closed_form.hpp"
#include "cfaging/estimation.hpp"
#include "cfaging/presets.hpp"

using namespace cfaging;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ScenarioConfig small(std::uint64_t seed = 21) {
    ScenarioConfig c = desk_config(seed);
    c.M = 4;
    c.K = 4;
    c.tau_p = 2;
    c.tau_c = 10;
    c.area_side_m = 300.0;
    c.ue_velocities_kmh = {54.0, 212.0, 0.0, 500.0};
    c.pilot_powers_dbm = {10.0, 5.0, 10.0, 0.0};
    c.data_powers_dbm = {10.0, 10.0, 10.0, 10.0};
    return c;
}

HardwareConfig impaired() {
    HardwareConfig h;
    h.kappa_t = {0.1};
    h.kappa_r = {0.1};
    h.dac_bits = {2};
    h.adc_bits = {{1, 3}, {2}, {kIdealBits}, {4, 1}};
    return h;
}

}  // namespace

TEST_CASE("ideal hardware reduces to the textbook LMMSE estimator", "[estimation]") {
    const Scenario sc = build_scenario(small());
    const HardwareProfile hw = resolve_hardware(HardwareConfig{}, sc.M(), sc.N(), sc.K(), 1);
    for (int m = 0; m < sc.M(); ++m)
        for (int k = 0; k < sc.K(); ++k) {
            const EstimateMoments e = est_second_moments(sc, hw, m, k);
            CMat s = sc.noise_mw * CMat::Identity(sc.N(), sc.N());
            for (int i : sc.pilots.cohort[k]) s += sc.pilot_mw[i] * sc.link(m, i).Rbar;
            const CMat& rb = sc.link(m, k).Rbar;
            const double r = sc.rho_pilot(k).rho;
            const CMat ref = sc.pilot_mw[k] * r * r * rb * s.inverse() * rb;
            CHECK((e.GammaBar - ref).norm() <= 1e-10 * ref.norm());
            CHECK((e.PsiInv - s).norm() <= 1e-12 * s.norm());
        }
}

TEST_CASE("estimator moments are consistent", "[estimation]") {
    const Scenario sc = build_scenario(small());
    const HardwareProfile hw = resolve_hardware(impaired(), sc.M(), sc.N(), sc.K(), 1);
    const MomentTable mt = build_moments(sc, hw);
    for (int m = 0; m < sc.M(); ++m)
        for (int k = 0; k < sc.K(); ++k) {
            const EstimateMoments& e = mt.at(m, k);
            const double tr = real_trace(sc.link(m, k).Rbar);
            CHECK_THAT(real_trace(e.GammaBar) + real_trace(e.C), WithinRel(tr, 1e-12));
            CHECK(min_eigenvalue(e.PsiInv) > 0.0);
            CHECK(min_eigenvalue(e.GammaBar) > -1e-12 * tr);
            CHECK(min_eigenvalue(e.C) > -1e-9 * tr);
            CHECK((e.Psi * e.PsiInv - CMat::Identity(sc.N(), sc.N())).norm() < 1e-9);
            CHECK((e.Gain - hw.alpha_d(k) * e.P).norm() == 0.0);
        }
}

TEST_CASE("Rayleigh ideal estimates are scaled identities", "[estimation]") {
    const Scenario sc = rayleigh_iid_limit(build_scenario(small()));
    const HardwareProfile hw = resolve_hardware(HardwareConfig{}, sc.M(), sc.N(), sc.K(), 1);
    for (int m = 0; m < sc.M(); ++m)
        for (int k = 0; k < sc.K(); ++k) {
            const CMat g = est_second_moments(sc, hw, m, k).GammaBar;
            const double gb = rayleigh_gamma_bar(sc, m, k);
            CHECK((g - gb * CMat::Identity(sc.N(), sc.N())).norm() <= 1e-12 * gb);
        }
}

TEST_CASE("sample moments of the estimate match the analytical ones", "[estimation]") {
    const Scenario sc = build_scenario(small());
    const HardwareProfile hw = resolve_hardware(impaired(), sc.M(), sc.N(), sc.K(), 1);
    const MomentTable mt = build_moments(sc, hw);
    const int M = sc.M(), K = sc.K(), N = sc.N(), T = 20000;
    std::vector<CMat> cov(M * K, CMat::Zero(N, N)), cross(M * K, CMat::Zero(N, N)), yy(M * K, CMat::Zero(N, N));
    ChannelBlock b;
    PilotObservation obs;
    std::vector<cplx> hhat;
    for (int t = 0; t < T; ++t) {
        generate_block(sc, t, b);
        Rng rng = Rng::stream(sc.cfg.seed, t, Stream::pilot_noise);
        rx_pilot(sc, hw, b, rng, obs);
        estimate_all(sc, mt, obs, hhat);
        for (int m = 0; m < M; ++m)
            for (int k = 0; k < K; ++k) {
                const CVec h = Eigen::Map<const CVec>(hhat.data() + (m * K + k) * N, N);
                const CVec y = Eigen::Map<const CVec>(obs.at(m, sc.pilots.pilot_instant[k]), N);
                REQUIRE((h - lmmse(y, mt.at(m, k))).norm() <= 1e-12 * (1.0 + h.norm()));
                const CVec e = b.vec(ChannelBlock::kRefLayer, m, k) - h;
                cov[m * K + k] += h * h.adjoint();
                cross[m * K + k] += h * e.adjoint();
                yy[m * K + k] += y * y.adjoint();
            }
    }
    double worst_cov = 0.0, worst_orth = 0.0, worst_psi = 0.0;
    for (int m = 0; m < M; ++m)
        for (int k = 0; k < K; ++k) {
            const EstimateMoments& e = mt.at(m, k);
            worst_cov = std::max(worst_cov, (cov[m * K + k] / T - e.GammaBar).norm() / e.GammaBar.norm());
            worst_orth = std::max(worst_orth,
                                  (cross[m * K + k] / T).norm() / std::sqrt(e.GammaBar.norm() * e.C.norm()));
            worst_psi = std::max(worst_psi, (yy[m * K + k] / T - e.PsiInv).norm() / e.PsiInv.norm());
        }
    CHECK(worst_cov < 0.05);
    CHECK(worst_orth < 0.05);
    CHECK(worst_psi < 0.05);
}

TEST_CASE("pilot observation layout", "[estimation]") {
    const Scenario sc = build_scenario(small());
    const HardwareProfile hw = resolve_hardware(HardwareConfig{}, sc.M(), sc.N(), sc.K(), 1);
    const ChannelBlock b = generate_block(sc, 0);
    Rng rng(1);
    const PilotObservation o = rx_pilot(sc, hw, b, rng);
    CHECK(o.y.size() == static_cast<std::size_t>(sc.M() * sc.cfg.tau_p * sc.N()));
    // ideal transmit chain: unit pilot scaled by sqrt(p~)
    for (int k = 0; k < sc.K(); ++k) {
        CHECK_THAT(std::abs(o.tx[k] - std::sqrt(sc.pilot_mw[k])), WithinAbs(0.0, 1e-15));
        CHECK(o.dac_noise[k] == cplx(0.0, 0.0));
    }
}

TEST_CASE("estimator rejects an empty cohort", "[estimation]") {
    Scenario sc = build_scenario(small());
    const HardwareProfile hw = resolve_hardware(HardwareConfig{}, sc.M(), sc.N(), sc.K(), 1);
    sc.pilots.cohort[0].clear();
    CHECK_THROWS_AS(psi_inverse(sc, hw, 0, 0), ContractError);
}
