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

#include <random>

#include <catch_amalgamated.hpp>

#include "cfaging/closed_form.hpp"
#include "cfaging/presets.hpp"

using namespace cfaging;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Two APs with two antennas, two UEs on one shared pilot.
ScenarioConfig pair_config() {
    ScenarioConfig c;
    c.M = 2;
    c.N = 2;
    c.K = 2;
    c.tau_p = 1;
    c.tau_c = 6;
    c.area_side_m = 150.0;
    c.sample_period_s = 1.0e-4;
    c.ue_velocities_kmh = {100.0, 300.0};
    c.pilot_powers_dbm = {10.0, 7.0};
    c.data_powers_dbm = {10.0, 4.0};
    c.seed = 17;
    return c;
}

HardwareConfig pair_hardware() {
    HardwareConfig h;
    h.kappa_t = {0.1, 0.15};
    h.kappa_r = {0.1, 0.05};
    h.dac_bits = {2, 3};
    h.adc_bits = {{1, 3}, {2, 4}};
    return h;
}

struct Prepared {
    Scenario sc;
    HardwareProfile hw;
    MomentTable mt;
    ClosedFormBasis cb;
};

Prepared prepare(const ScenarioConfig& c, const HardwareConfig& h) {
    Prepared p{build_scenario(c), {}, {}, {}};
    p.hw = resolve_hardware(h, c.M, c.N, c.K, c.seed);
    p.mt = build_moments(p.sc, p.hw);
    p.cb = build_closed_form_basis(p.sc, p.hw, p.mt);
    return p;
}

// Straight-line simulator of the whole chain with its own random source.
// It shares nothing with the library beyond the link statistics and the
// hardware parameters.
class BruteForce {
public:
    BruteForce(const Scenario& sc, const HardwareProfile& hw, std::uint64_t seed) : sc_(sc), hw_(hw), eng_(seed) {}

    cplx cn(double var) {
        const double s = std::sqrt(0.5 * var);
        return {s * nd_(eng_), s * nd_(eng_)};
    }
    double phase() { return std::uniform_real_distribution<double>(-kPi, kPi)(eng_); }

    CVec rician(const LinkStats& s) {
        CVec g(sc_.N());
        for (int a = 0; a < sc_.N(); ++a) g(a) = cn(1.0);
        return s.hbar * std::polar(1.0, phase()) + s.R_sqrt * g;
    }
    CVec aged(const CVec& h0, const LinkStats& s, const TemporalCorrelation& r) { return r.rho * h0 + r.rho_bar * rician(s); }

    // One pass of the AP front end. `h[i]` is the channel of UE i, `tx[i]`
    // the transmitted RF sample, `pw[i]` its mean power.
    struct Rx {
        CVec y, eta, z, q;
    };
    Rx front_end(int m, const std::vector<CVec>& h, const std::vector<cplx>& tx, const std::vector<double>& pw) {
        const int N = sc_.N();
        Rx r{CVec::Zero(N), CVec(N), CVec(N), CVec(N)};
        const double k2 = hw_.kappa_r[m] * hw_.kappa_r[m];
        for (int a = 0; a < N; ++a) {
            cplx clean{0.0, 0.0};
            double w = 0.0;
            for (std::size_t i = 0; i < h.size(); ++i) {
                clean += h[i](a) * tx[i];
                w += pw[i] * std::norm(h[i](a));
            }
            r.eta(a) = cn(k2 * w);
            r.z(a) = cn(sc_.noise_mw);
            const double rho = 1.0 - hw_.adc[m].a(a);
            const double alpha = 1.0 - rho;
            r.q(a) = cn(alpha * rho * ((1.0 + k2) * w + sc_.noise_mw));
            r.y(a) = alpha * (clean + r.eta(a) + r.z(a)) + r.q(a);
        }
        return r;
    }

    const Scenario& sc_;
    const HardwareProfile& hw_;
    std::mt19937_64 eng_;
    std::normal_distribution<double> nd_{0.0, 1.0};
};

}  // namespace

TEST_CASE("closed form matches a brute-force simulation of the two-AP case", "[closed_form]") {
    const Prepared p = prepare(pair_config(), pair_hardware());
    const Scenario& sc = p.sc;
    const HardwareProfile& hw = p.hw;
    const int M = sc.M(), K = sc.K(), N = sc.N(), lam = sc.lambda(), J = sc.data_instants();
    const int T = 200000;
    BruteForce bf(sc, hw, 2024);

    // decoder weights per (k, j): the optimal ones from the analytical path
    std::vector<std::vector<CVec>> wts(K);
    std::vector<std::vector<TermPowers>> cf(K);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < J; ++j) {
            const ClosedFormTerms t = closed_form_terms(sc, hw, p.cb, k, lam + j);
            wts[k].push_back(optimal_weights(t));
            cf[k].push_back(closed_form_powers(t, wts[k].back()));
        }

    struct Acc {
        cplx g{0.0, 0.0};
        double g2 = 0.0, iui = 0.0, dac = 0.0, trf = 0.0, rrf = 0.0, adc = 0.0, ns = 0.0;
    };
    std::vector<std::vector<Acc>> acc(K, std::vector<Acc>(J));
    // empirical LMMSE statistics of AP 0, UE 0
    CMat cyy = CMat::Zero(N, N), chy = CMat::Zero(N, N);

    std::vector<double> e_pilot(K), e_data(K);
    for (int i = 0; i < K; ++i) {
        e_pilot[i] = hw.tx_power_factor(i) * sc.pilot_mw[i];
        e_data[i] = hw.tx_power_factor(i) * sc.data_mw[i];
    }
    for (int t = 0; t < T; ++t) {
        // channels: reference instant, pilot instant, data instants
        std::vector<std::vector<CVec>> h_ref(M, std::vector<CVec>(K)), h_pil(M, std::vector<CVec>(K));
        std::vector<std::vector<std::vector<CVec>>> h_dat(J, std::vector<std::vector<CVec>>(M, std::vector<CVec>(K)));
        for (int m = 0; m < M; ++m)
            for (int k = 0; k < K; ++k) {
                const LinkStats& s = sc.link(m, k);
                h_ref[m][k] = bf.rician(s);
                h_pil[m][k] = bf.aged(h_ref[m][k], s, sc.rho_pilot(k));
                for (int j = 0; j < J; ++j) h_dat[j][m][k] = j == 0 ? h_ref[m][k] : bf.aged(h_ref[m][k], s, sc.rho(k, j));
            }
        // pilot: both UEs send a unit symbol at the single pilot instant
        std::vector<cplx> tx(K);
        for (int i = 0; i < K; ++i) {
            const double rho = hw.dac_rho[i], alpha = 1.0 - rho;
            const cplx sd = alpha * std::sqrt(sc.pilot_mw[i]) + bf.cn(rho * alpha * sc.pilot_mw[i]);
            tx[i] = sd + bf.cn(hw.kappa_t[i] * hw.kappa_t[i] * alpha * sc.pilot_mw[i]);
        }
        std::vector<std::vector<CVec>> hhat(M, std::vector<CVec>(K));
        for (int m = 0; m < M; ++m) {
            const BruteForce::Rx r = bf.front_end(m, h_pil[m], tx, e_pilot);
            for (int k = 0; k < K; ++k) hhat[m][k] = p.mt.at(m, k).Gain * r.y;
            if (m == 0) {
                cyy += r.y * r.y.adjoint();
                chy += h_ref[0][0] * r.y.adjoint();
            }
        }
        // data
        for (int j = 0; j < J; ++j) {
            std::vector<cplx> v(K), xi(K), zero(K, cplx{0.0, 0.0});
            for (int i = 0; i < K; ++i) {
                const double rho = hw.dac_rho[i], alpha = 1.0 - rho;
                v[i] = bf.cn(rho * alpha * sc.data_mw[i]);
                xi[i] = bf.cn(hw.kappa_t[i] * hw.kappa_t[i] * alpha * sc.data_mw[i]);
            }
            std::vector<BruteForce::Rx> rx;
            for (int m = 0; m < M; ++m) rx.push_back(bf.front_end(m, h_dat[j][m], zero, e_data));
            for (int k = 0; k < K; ++k) {
                const CVec& a = wts[k][j];
                cplx g{0.0, 0.0}, dac{0.0, 0.0}, trf{0.0, 0.0}, rrf{0.0, 0.0}, adc{0.0, 0.0}, ns{0.0, 0.0};
                std::vector<cplx> x(K, cplx{0.0, 0.0});
                for (int m = 0; m < M; ++m) {
                    const RVec& av = hw.adc[m].a;
                    const CVec ha = av.cast<cplx>().asDiagonal() * hhat[m][k];  // A h_hat
                    for (int i = 0; i < K; ++i) x[i] += std::conj(a(m)) * ha.dot(h_dat[j][m][i]);
                    rrf += std::conj(a(m)) * ha.dot(rx[m].eta);
                    ns += std::conj(a(m)) * ha.dot(rx[m].z);
                    adc += std::conj(a(m)) * hhat[m][k].dot(rx[m].q);
                }
                g = x[k];
                for (int i = 0; i < K; ++i) {
                    dac += x[i] * v[i];
                    trf += x[i] * xi[i];
                }
                Acc& s = acc[k][j];
                s.g += g;
                s.g2 += std::norm(g);
                for (int i = 0; i < K; ++i)
                    if (i != k) {
                        const double ad = 1.0 - hw.dac_rho[i];
                        s.iui += ad * ad * sc.data_mw[i] * std::norm(x[i]);
                    }
                s.dac += std::norm(dac);
                s.trf += std::norm(trf);
                s.rrf += std::norm(rrf);
                s.adc += std::norm(adc);
                s.ns += std::norm(ns);
            }
        }
    }

    // the library gain is the LMMSE gain of the simulated observation
    const CMat gain_emp = (chy / T) * (cyy / T).inverse();
    const cfaging::EstimateMoments& e00 = p.mt.at(0, 0);
    CHECK((gain_emp - e00.Gain).norm() / e00.Gain.norm() < 0.02);

    for (int k = 0; k < K; ++k) {
        const double ad = 1.0 - hw.dac_rho[k];
        const double scale = ad * ad * sc.data_mw[k];
        for (int j = 0; j < J; ++j) {
            INFO("k " << k << " n " << lam + j);
            const Acc& s = acc[k][j];
            const TermPowers& c = cf[k][j];
            const cplx mean = s.g / static_cast<double>(T);
            const double var = s.g2 / T - std::norm(mean);
            CHECK_THAT(scale * std::norm(mean), WithinRel(c.DS, 0.01));
            CHECK_THAT(scale * var, WithinRel(c.BU + c.CA, 0.03));
            CHECK_THAT(s.iui / T, WithinRel(c.iui_total(), 0.03));
            CHECK_THAT(s.dac / T, WithinRel(c.DAC, 0.03));
            CHECK_THAT(s.trf / T, WithinRel(c.TRF, 0.03));
            CHECK_THAT(s.rrf / T, WithinRel(c.RRF, 0.03));
            CHECK_THAT(s.adc / T, WithinRel(c.ADC, 0.03));
            CHECK_THAT(s.ns / T, WithinRel(c.NS, 0.03));
        }
    }
}

TEST_CASE("optimal weights attain the Rayleigh-quotient maximum", "[closed_form]") {
    const Prepared p = prepare(desk_config(7), rf_impaired_hardware());
    Rng rng(3);
    for (int k : {0, 5})
        for (int n : {5, 27, 50}) {
            const ClosedFormTerms t = closed_form_terms(p.sc, p.hw, p.cb, k, n);
            const CVec a = optimal_weights(t);
            const CVec d = t.delta.cast<cplx>();
            const CVec x = hermitian_solve(t.Delta, d);
            const cplx q = d.dot(x);
            const double s = closed_form_sinr(t, a);
            CHECK_THAT(s, WithinRel(t.signal_scale * q.real(), 1e-10));
            CHECK_THAT(closed_form_sinr(t, cplx(-2.5, 0.7) * a), WithinRel(s, 1e-12));
            CHECK(s >= closed_form_sinr(t, sld_weights(p.sc.M())));
            for (int r = 0; r < 20; ++r) {
                CVec b(p.sc.M());
                for (int m = 0; m < p.sc.M(); ++m) b(m) = rng.complex_normal();
                CHECK(s >= closed_form_sinr(t, b) * (1.0 - 1e-12));
            }
            CHECK(min_eigenvalue(t.Delta) > 0.0);
            CHECK((t.Delta - t.Delta.adjoint()).norm() == 0.0);
        }
}

TEST_CASE("identity Delta gives weights equal to delta", "[closed_form]") {
    const RVec d = RVec::LinSpaced(4, 1.0, 4.0);
    const CVec a = optimal_weights(CMat::Identity(4, 4), d);
    CHECK((a - d.cast<cplx>()).norm() < 1e-14);
}

TEST_CASE("a single AP makes the weights immaterial", "[closed_form]") {
    ScenarioConfig c = pair_config();
    c.M = 1;
    const Prepared p = prepare(c, HardwareConfig{});
    for (int n = p.sc.lambda(); n <= c.tau_c; ++n) {
        const ClosedFormTerms t = closed_form_terms(p.sc, p.hw, p.cb, 0, n);
        CHECK_THAT(closed_form_sinr(t, optimal_weights(t)), WithinRel(closed_form_sinr(t, sld_weights(1)), 1e-12));
    }
}

TEST_CASE("desired-signal power follows rho squared for fixed weights", "[closed_form]") {
    const Prepared p = prepare(desk_config(7), dynamic_adc_hardware());
    for (int k = 0; k < p.sc.K(); ++k) {
        const ClosedFormTerms t0 = closed_form_terms(p.sc, p.hw, p.cb, k, p.sc.lambda());
        const CVec a = optimal_weights(t0);
        const double ds0 = closed_form_powers(t0, a).DS;
        for (int n = p.sc.lambda(); n <= p.sc.cfg.tau_c; n += 5) {
            const ClosedFormTerms t = closed_form_terms(p.sc, p.hw, p.cb, k, n);
            const double r = p.sc.rho(k, n - p.sc.lambda()).rho;
            CHECK_THAT(closed_form_powers(t, a).DS, WithinRel(r * r * ds0, 1e-10));
            CHECK((t.delta - r * t0.delta).norm() <= 1e-12 * t0.delta.norm());
        }
    }
}

TEST_CASE("zero Doppler makes the SINR independent of n", "[closed_form]") {
    ScenarioConfig c = desk_config(7);
    c.ue_velocities_kmh.assign(c.K, 0.0);
    const Prepared p = prepare(c, converter_hardware(2));
    const SeSummary s = closed_form_se(p.sc, p.hw, p.cb, WeightScheme::lsfd);
    for (const auto& row : s.sinr)
        for (double x : row) CHECK_THAT(x, WithinRel(row.front(), 1e-12));
    CHECK_THAT(s.se_ue[0], WithinRel(s.sinr[0].size() * std::log2(1.0 + s.sinr[0][0]) / c.tau_c, 1e-12));
}

TEST_CASE("Rayleigh ideal reduction agrees with the general engine", "[closed_form]") {
    const Scenario sc = rayleigh_iid_limit(build_scenario(desk_config(9)));
    const HardwareProfile hw = resolve_hardware(HardwareConfig{}, sc.M(), sc.N(), sc.K(), 9);
    const MomentTable mt = build_moments(sc, hw);
    const ClosedFormBasis cb = build_closed_form_basis(sc, hw, mt);
    for (int k = 0; k < sc.K(); ++k)
        for (int n : {5, 30, 50}) {
            const ClosedFormTerms t = closed_form_terms(sc, hw, cb, k, n);
            const CVec a = optimal_weights(t);
            CHECK_THAT(rayleigh_ideal_sinr(sc, hw, k, n, a), WithinRel(closed_form_sinr(t, a), 1e-9));
        }
    const HardwareProfile rough = resolve_hardware(rf_impaired_hardware(), sc.M(), sc.N(), sc.K(), 9);
    CHECK_THROWS_AS(rayleigh_ideal_sinr(sc, rough, 0, 5, sld_weights(sc.M())), ContractError);
    const Scenario rician = build_scenario(desk_config(9));
    CHECK_THROWS_AS(rayleigh_ideal_sinr(rician, hw, 0, 5, sld_weights(sc.M())), ContractError);
    CHECK_THROWS_AS(single_antenna_sinr(sc, hw, 0), ContractError);  // N = 2
}

TEST_CASE("term bookkeeping", "[closed_form]") {
    TermPowers tp;
    tp.DS = 4.0;
    tp.BU = 0.5;
    tp.IUI = {0.0, 0.25, 0.25};
    tp.NS = 1.0;
    CHECK(tp.iui_total() == 0.5);
    CHECK(mc_sinr(tp) == 2.0);
    CHECK(term_value(tp, "IUI") == 0.5);
    CHECK_THROWS_AS(term_value(tp, "XYZ"), ContractError);
    CHECK_THROWS_AS(mc_sinr(TermPowers{}), ContractError);
    CHECK(parse_weight_scheme("sld") == WeightScheme::sld);
    CHECK_THROWS_AS(parse_weight_scheme("mmse"), ConfigError);
    CHECK_THAT(se_of_sinr(3.0, 50), WithinAbs(2.0 / 50.0, 1e-15));
}
