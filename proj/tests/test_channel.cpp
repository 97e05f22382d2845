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

#include <sstream>

#include <catch_amalgamated.hpp>

#include "cfaging/channel.hpp"
#include "cfaging/presets.hpp"

using namespace cfaging;

namespace {

Scenario tiny() {
    ScenarioConfig c = desk_config(11);
    c.M = 3;
    c.K = 3;
    c.tau_p = 2;
    c.tau_c = 12;
    c.area_side_m = 200.0;
    c.ue_velocities_kmh = {0.0, 54.0, 500.0};
    c.pilot_powers_dbm.resize(3);
    c.data_powers_dbm.resize(3);
    return build_scenario(c);
}

double rel(const CMat& a, const CMat& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("block layout and instants", "[channel]") {
    const Scenario sc = tiny();
    const ChannelBlock b = generate_block(sc, 0);
    CHECK(b.L == 1 + sc.data_instants());
    CHECK(b.lambda == 3);
    CHECK(b.instants[ChannelBlock::kPilotLayer] == std::vector<int>{1, 2, 1});
    CHECK(b.instants[ChannelBlock::kRefLayer] == std::vector<int>(3, 3));
    CHECK(b.instants[ChannelBlock::data_layer(9)][2] == 12);
}

TEST_CASE("blocks are a pure function of seed and trial", "[channel]") {
    const Scenario sc = tiny();
    const ChannelBlock a = generate_block(sc, 5);
    ChannelBlock b;
    generate_block(sc, 4, b);
    generate_block(sc, 5, b);
    CHECK(a.h == b.h);
    CHECK(generate_block(sc, 6).h != a.h);
}

TEST_CASE("stored phase and NLoS part rebuild every entry exactly", "[channel]") {
    const Scenario sc = tiny();
    const ChannelBlock b = generate_block(sc, 2);
    for (int l = 0; l < b.L; ++l)
        for (int m = 0; m < b.M; ++m)
            for (int k = 0; k < b.K; ++k) {
                const CVec r = reconstruct(sc, b, l, m, k);
                for (int a = 0; a < b.N; ++a) CHECK(r(a) == b.at(l, m, k)[a]);
            }
}

TEST_CASE("zero velocity keeps the channel fixed", "[channel]") {
    const Scenario sc = tiny();
    const ChannelBlock b = generate_block(sc, 1);
    for (int l = 0; l < b.L; ++l)
        for (int m = 0; m < b.M; ++m)
            for (int a = 0; a < b.N; ++a) CHECK(b.at(l, m, 0)[a] == b.at(ChannelBlock::kRefLayer, m, 0)[a]);
}

TEST_CASE("second-order statistics of aged channels", "[channel]") {
    const Scenario sc = tiny();
    const int trials = 40000, N = sc.N();
    const int m = 1, k = 2, j = 9;  // data instant lambda + 9
    const int l = ChannelBlock::data_layer(j);
    CMat ref = CMat::Zero(N, N), aged = CMat::Zero(N, N), cross = CMat::Zero(N, N), pil = CMat::Zero(N, N);
    CVec mean = CVec::Zero(N);
    ChannelBlock b;
    for (int t = 0; t < trials; ++t) {
        generate_block(sc, t, b);
        const CVec h = b.vec(ChannelBlock::kRefLayer, m, k);
        const CVec hn = b.vec(l, m, k);
        const CVec hp = b.vec(ChannelBlock::kPilotLayer, m, k);
        ref += h * h.adjoint();
        aged += hn * hn.adjoint();
        cross += hn * h.adjoint();
        pil += hp * h.adjoint();
        mean += h;
    }
    ref /= trials;
    aged /= trials;
    cross /= trials;
    pil /= trials;
    mean /= trials;
    const CMat& rb = sc.link(m, k).Rbar;
    const double r = sc.rho(k, j).rho;
    const double rp = sc.rho_pilot(k).rho;
    CHECK(rel(ref, rb) < 0.03);
    CHECK(rel(aged, rb) < 0.03);
    CHECK(rel(cross, r * rb) < 0.05);
    CHECK(rel(pil, rp * rb) < 0.05);
    // random LoS phase: zero mean
    CHECK(mean.norm() < 0.03 * std::sqrt(rb.trace().real()));
}

TEST_CASE("draw and age helpers", "[channel]") {
    const Scenario sc = tiny();
    const LinkStats& s = sc.link(0, 1);
    Rng rng(42);
    const TemporalCorrelation rho{0.6, 0.8};
    CMat cov = CMat::Zero(2, 2), cross = CMat::Zero(2, 2);
    const int trials = 40000;
    for (int t = 0; t < trials; ++t) {
        const CVec h0 = draw_initial(s, rng);
        const CVec h1 = age_channel(h0, s, rho, rng);
        cov += h1 * h1.adjoint();
        cross += h1 * h0.adjoint();
    }
    CHECK(rel(cov / trials, s.Rbar) < 0.03);
    CHECK(rel(cross / trials, 0.6 * s.Rbar) < 0.05);
}

TEST_CASE("binary dump round trip", "[channel]") {
    const Scenario sc = tiny();
    const ChannelBlock b = generate_block(sc, 3);
    std::stringstream ss;
    write_block(ss, b);
    const std::string bytes = ss.str();
    CHECK(bytes.substr(0, 4) == "CFCB");
    CHECK(bytes.size() == 4 + 4 + 16 + 4 * b.L * b.K + 16 * b.h.size());
    std::stringstream in(bytes);
    const ChannelBlock r = read_block(in);
    CHECK(r.h == b.h);
    CHECK(r.instants == b.instants);
    CHECK(r.lambda == b.lambda);

    std::stringstream bad("XXXX");
    CHECK_THROWS_AS(read_block(bad), ContractError);
    std::stringstream cut(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_block(cut), ContractError);
}
