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

#include <cstdint>
#include <vector>

#include "linalg.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace cfaging {

/// Declarative description of a network realization. Powers are in dBm and
/// converted to linear mW when the scenario is built.
struct ScenarioConfig {
    double area_side_m = 1000.0;
    int M = 16;  // APs
    int N = 2;   // antennas per AP
    int K = 8;   // single-antenna UEs
    int tau_c = 200;
    int tau_p = 10;
    double carrier_hz = 2.0e9;
    double sample_period_s = 10.0e-6;
    std::vector<double> ue_velocities_kmh;  // size K
    std::vector<double> pilot_powers_dbm;   // size K
    std::vector<double> data_powers_dbm;    // size K
    double noise_dbm = -94.0;
    double asd_deg = 15.0;
    std::uint64_t seed = 1;

    double antenna_spacing_wavelengths = 0.5;
    double min_distance_m = 10.0;
};

/// Relaxed validation admits tau_p >= K (orthogonal pilots). Used for
/// single-UE reductions that the strict contamination regime excludes.
enum class Validation { strict, relaxed };

inline void validate(const ScenarioConfig& cfg, Validation mode = Validation::strict) {
    auto need = [](bool ok, const char* field, const char* what) {
        if (!ok) throw ConfigError(field, what);
    };
    need(cfg.M >= 1, "M", "must be >= 1");
    need(cfg.N >= 1, "N", "must be >= 1");
    need(cfg.K >= 1, "K", "must be >= 1");
    need(cfg.tau_p >= 1, "tau_p", "must be >= 1");
    if (mode == Validation::strict) need(cfg.tau_p < cfg.K, "tau_p", "must be < K");
    need(cfg.tau_c > cfg.tau_p, "tau_c", "must be > tau_p");
    need(std::isfinite(cfg.area_side_m) && cfg.area_side_m > 0.0, "area_side_m", "must be positive");
    need(std::isfinite(cfg.carrier_hz) && cfg.carrier_hz > 0.0, "carrier_hz", "must be positive");
    need(std::isfinite(cfg.sample_period_s) && cfg.sample_period_s > 0.0, "sample_period_s",
         "must be positive");
    need(std::isfinite(cfg.noise_dbm), "noise_dbm", "must be finite");
    need(std::isfinite(cfg.asd_deg) && cfg.asd_deg > 0.0, "asd_deg", "must be positive");
    need(cfg.antenna_spacing_wavelengths > 0.0, "antenna_spacing_wavelengths", "must be positive");
    need(cfg.min_distance_m > 0.0, "min_distance_m", "must be positive");
    auto per_ue = [&](const std::vector<double>& v, const char* field) {
        need(static_cast<int>(v.size()) == cfg.K, field, "must have exactly K entries");
        for (double x : v) need(std::isfinite(x), field, "entries must be finite");
    };
    per_ue(cfg.ue_velocities_kmh, "ue_velocities_kmh");
    per_ue(cfg.pilot_powers_dbm, "pilot_powers_dbm");
    per_ue(cfg.data_powers_dbm, "data_powers_dbm");
    for (double v : cfg.ue_velocities_kmh) need(v >= 0.0, "ue_velocities_kmh", "must be >= 0");
}

/// Long-term statistics of one AP-UE link.
struct LinkStats {
    double distance_m = 0.0;
    double beta = 0.0;       // linear large-scale gain
    double rician_k = 0.0;   // linear Rician factor
    double aoa_rad = 0.0;    // geometric angle of arrival
    double los_phase_step = 0.0;  // inter-element LoS phase increment
    CVec hbar;  // LoS component
    CMat R;     // NLoS correlation
    CMat Rbar;  // hbar hbar^H + R
    CMat R_sqrt;
};

struct PilotPlan {
    std::vector<int> pilot_instant;        // t_k in 1..tau_p
    std::vector<std::vector<int>> cohort;  // UEs sharing t_k (k itself included)

    bool shares_pilot(int k, int i) const { return pilot_instant[k] == pilot_instant[i]; }
};

// --- primitives -------------------------------------------------------------

/// Element n is exp(j n psi), n = 0..N-1, psi being the electrical phase step.
inline CVec steering_vector(double psi, int n_antennas) {
    CVec v(n_antennas);
    for (int n = 0; n < n_antennas; ++n) v(n) = std::polar(1.0, n * psi);
    return v;
}

inline double los_phase_step(double aoa_rad, double spacing_wavelengths) {
    return 2.0 * kPi * spacing_wavelengths * std::sin(aoa_rad);
}

namespace detail {

struct Quadrature {
    std::vector<double> nodes, weights;  // on [-1, 1]
};

inline Quadrature gauss_legendre(int n) {
    Quadrature q;
    q.nodes.resize(n);
    q.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        q.nodes[i] = x;
        q.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return q;
}

inline const Quadrature& gl16() {
    static const Quadrature q = gauss_legendre(16);
    return q;
}

}  // namespace detail

/// Local scattering correlation with a Gaussian distribution of the angular
/// deviation around aoa_rad. Entry (l, m) is the average of
/// exp(j 2 pi d (l - m) sin(aoa + delta)), delta ~ N(0, asd^2), evaluated by
/// composite Gauss-Legendre quadrature over +-20 standard deviations.
/// No PSD projection; see local_scattering().
inline CMat local_scattering_unclipped(double aoa_rad, double asd_deg, int n_antennas,
                                       double spacing_wavelengths = 0.5) {
    if (!(asd_deg > 0.0)) throw DomainError("local_scattering: asd_deg must be positive");
    const double sigma = asd_deg * kPi / 180.0;
    const double half_width = 20.0 * sigma;
    // Panels at most 0.05 rad wide keep the oscillatory integrand resolved
    // for any array length used here.
    const int panels = std::max(32, static_cast<int>(std::ceil(2.0 * half_width / 0.05)));
    const double h = 2.0 * half_width / panels;
    const auto& gl = detail::gl16();
    const double norm = 1.0 / (std::sqrt(2.0 * kPi) * sigma);

    std::vector<cplx> first_row(n_antennas, cplx{0.0, 0.0});
    for (int p = 0; p < panels; ++p) {
        const double mid = -half_width + (p + 0.5) * h;
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            const double delta = mid + 0.5 * h * gl.nodes[q];
            const double w = 0.5 * h * gl.weights[q] * norm * std::exp(-0.5 * delta * delta / (sigma * sigma));
            const double phase = 2.0 * kPi * spacing_wavelengths * std::sin(aoa_rad + delta);
            for (int d = 0; d < n_antennas; ++d) first_row[d] += w * std::polar(1.0, d * phase);
        }
    }
    CMat r(n_antennas, n_antennas);
    for (int l = 0; l < n_antennas; ++l)
        for (int m = 0; m < n_antennas; ++m)
            r(l, m) = l >= m ? first_row[l - m] : std::conj(first_row[m - l]);
    return r;
}

/// local_scattering_unclipped() with eigenvalues clipped at zero.
inline CMat local_scattering(double aoa_rad, double asd_deg, int n_antennas,
                             double spacing_wavelengths = 0.5) {
    const CMat r = local_scattering_unclipped(aoa_rad, asd_deg, n_antennas, spacing_wavelengths);
    const double tr = real_trace(r);
    CMat clipped = clip_psd(r);
    if (min_eigenvalue(clipped) < -1e-12 * tr)
        throw NumericalError("local_scattering: matrix not PSD after clipping");
    return clipped;
}

inline double pathloss_db(double distance_m) { return -30.5 - 36.7 * std::log10(distance_m); }
inline double rician_factor(double distance_m) { return std::pow(10.0, 1.3 - 0.003 * distance_m); }

/// Assembles LinkStats from explicit large-scale parameters.
inline LinkStats make_link_stats(double beta, double rician_k, double aoa_rad, int n_antennas,
                                 double asd_deg, double spacing_wavelengths) {
    LinkStats s;
    s.beta = beta;
    s.rician_k = rician_k;
    s.aoa_rad = aoa_rad;
    s.los_phase_step = los_phase_step(aoa_rad, spacing_wavelengths);
    s.hbar = std::sqrt(rician_k * beta / (rician_k + 1.0)) * steering_vector(s.los_phase_step, n_antennas);
    s.R = (beta / (rician_k + 1.0)) * local_scattering(aoa_rad, asd_deg, n_antennas, spacing_wavelengths);
    s.Rbar = s.hbar * s.hbar.adjoint() + s.R;
    s.R_sqrt = psd_sqrt(s.R);
    return s;
}

inline LinkStats link_stats(double distance_m, double aoa_rad, const ScenarioConfig& cfg) {
    if (!(distance_m > 0.0)) throw DomainError("link_stats: distance must be positive");
    LinkStats s = make_link_stats(std::pow(10.0, pathloss_db(distance_m) / 10.0), rician_factor(distance_m),
                                  aoa_rad, cfg.N, cfg.asd_deg, cfg.antenna_spacing_wavelengths);
    s.distance_m = distance_m;
    return s;
}

/// Round-robin: t_k = 1 + (k mod tau_p) with 0-based k.
inline PilotPlan assign_pilots(int n_ue, int tau_p, Validation mode = Validation::strict) {
    if (tau_p < 1) throw ConfigError("tau_p", "must be >= 1");
    if (mode == Validation::strict && tau_p >= n_ue) throw ConfigError("tau_p", "must be < K");
    PilotPlan plan;
    plan.pilot_instant.resize(n_ue);
    for (int k = 0; k < n_ue; ++k) plan.pilot_instant[k] = 1 + k % tau_p;
    plan.cohort.resize(n_ue);
    for (int k = 0; k < n_ue; ++k)
        for (int i = 0; i < n_ue; ++i)
            if (plan.pilot_instant[i] == plan.pilot_instant[k]) plan.cohort[k].push_back(i);
    return plan;
}

struct TemporalCorrelation {
    double rho = 1.0;
    double rho_bar = 0.0;  // sqrt(1 - rho^2)
};

inline double doppler_hz(double v_kmh, double carrier_hz) { return (v_kmh / 3.6) * carrier_hz / kSpeedOfLight; }

/// Jakes correlation rho = J0(2 pi f_d T_s n) at sample offset n.
inline TemporalCorrelation temporal_rho(double v_kmh, double carrier_hz, double sample_period_s, int offset) {
    if (offset < 0) throw DomainError("temporal_rho: offset must be >= 0");
    const double x = 2.0 * kPi * doppler_hz(v_kmh, carrier_hz) * sample_period_s * offset;
    TemporalCorrelation t;
    t.rho = x == 0.0 ? 1.0 : std::cyl_bessel_j(0.0, x);
    t.rho_bar = std::sqrt(std::max(0.0, 1.0 - t.rho * t.rho));
    return t;
}

// --- scenario ---------------------------------------------------------------

struct Point {
    double x = 0.0, y = 0.0;
};

/// Immutable after construction; shared read-only by trial workers.
struct Scenario {
    ScenarioConfig cfg;
    std::vector<Point> ap_pos, ue_pos;
    std::vector<LinkStats> links;  // index m * K + k
    PilotPlan pilots;
    std::vector<double> pilot_mw, data_mw;
    double noise_mw = 0.0;

    int M() const { return cfg.M; }
    int N() const { return cfg.N; }
    int K() const { return cfg.K; }
    int lambda() const { return cfg.tau_p + 1; }
    /// Data instants n = lambda..tau_c.
    int data_instants() const { return cfg.tau_c - cfg.tau_p; }

    const LinkStats& link(int m, int k) const { return links[static_cast<std::size_t>(m) * cfg.K + k]; }
    LinkStats& link(int m, int k) { return links[static_cast<std::size_t>(m) * cfg.K + k]; }

    TemporalCorrelation rho(int k, int offset) const {
        return temporal_rho(cfg.ue_velocities_kmh[k], cfg.carrier_hz, cfg.sample_period_s, offset);
    }
    /// Correlation between the pilot instant t_k and lambda.
    TemporalCorrelation rho_pilot(int k) const { return rho(k, lambda() - pilots.pilot_instant[k]); }
};

inline Scenario build_scenario(const ScenarioConfig& cfg, Validation mode = Validation::strict) {
    validate(cfg, mode);
    Scenario sc;
    sc.cfg = cfg;
    Rng rng = Rng::stream(cfg.seed, 0, Stream::geometry);
    auto draw = [&] { return Point{rng.uniform(0.0, cfg.area_side_m), rng.uniform(0.0, cfg.area_side_m)}; };
    for (int m = 0; m < cfg.M; ++m) sc.ap_pos.push_back(draw());
    for (int k = 0; k < cfg.K; ++k) sc.ue_pos.push_back(draw());

    sc.links.reserve(static_cast<std::size_t>(cfg.M) * cfg.K);
    for (int m = 0; m < cfg.M; ++m) {
        for (int k = 0; k < cfg.K; ++k) {
            const double dx = sc.ue_pos[k].x - sc.ap_pos[m].x;
            const double dy = sc.ue_pos[k].y - sc.ap_pos[m].y;
            const double d = std::max(std::hypot(dx, dy), cfg.min_distance_m);
            sc.links.push_back(link_stats(d, std::atan2(dy, dx), cfg));
        }
    }
    sc.pilots = assign_pilots(cfg.K, cfg.tau_p, mode);
    for (int k = 0; k < cfg.K; ++k) {
        sc.pilot_mw.push_back(dbm_to_mw(cfg.pilot_powers_dbm[k]));
        sc.data_mw.push_back(dbm_to_mw(cfg.data_powers_dbm[k]));
    }
    sc.noise_mw = dbm_to_mw(cfg.noise_dbm);
    return sc;
}

/// Same geometry, new per-UE velocities.
inline Scenario with_velocities(Scenario sc, const std::vector<double>& v_kmh) {
    if (static_cast<int>(v_kmh.size()) != sc.K()) throw ConfigError("ue_velocities_kmh", "must have exactly K entries");
    sc.cfg.ue_velocities_kmh = v_kmh;
    return sc;
}

/// Uncorrelated Rayleigh limit of every link: K_mk = 0, R = beta I.
inline Scenario rayleigh_iid_limit(Scenario sc) {
    const int n = sc.N();
    for (auto& l : sc.links) {
        l.rician_k = 0.0;
        l.hbar = CVec::Zero(n);
        l.R = l.beta * CMat::Identity(n, n);
        l.Rbar = l.R;
        l.R_sqrt = std::sqrt(l.beta) * CMat::Identity(n, n);
    }
    return sc;
}

}  // namespace cfaging
