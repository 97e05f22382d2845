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

// Experiment specs, sweep execution and the report and CSV formats.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "closed_form.hpp"
#include "hardware.hpp"
#include "monte_carlo.hpp"
#include "scenario.hpp"
#include "terms.hpp"

#ifndef CFAGING_VERSION
#define CFAGING_VERSION "0.1.0+unknown"
#endif

namespace cfaging {

using json = nlohmann::json;

inline constexpr int kReportSchema = 1;
inline constexpr const char* kStatusOk = "OK";
inline constexpr const char* kStatusFailedValidation = "FAILED-VALIDATION";
inline constexpr const char* kOutputDirEnv = "CFAGING_OUTPUT_DIR";

struct ExperimentSpec {
    ScenarioConfig scenario;
    Validation validation = Validation::strict;
    std::vector<std::vector<double>> velocity_profiles;  // each of size K
    std::vector<HardwareConfig> hardware;
    std::vector<WeightScheme> schemes{WeightScheme::lsfd, WeightScheme::sld};
    bool monte_carlo = true;
    McOptions mc;
    double tolerance = 0.03;  // per-UE relative SE deviation
    std::string outputs = "out";
};

// --- spec parsing -------------------------------------------------------------

namespace detail {

inline std::string join_path(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

inline double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError(field, "must be a number");
    return j.get<double>();
}

inline int get_int(const json& j, const std::string& field) {
    if (!j.is_number_integer()) throw ConfigError(field, "must be an integer");
    return j.get<int>();
}

/// Resolution in bits; "inf" or null selects an ideal converter.
inline int get_bits(const json& j, const std::string& field) {
    if (j.is_null() || (j.is_string() && j.get<std::string>() == "inf")) return kIdealBits;
    const int b = get_int(j, field);
    if (b < 1) throw ConfigError(field, "resolution must be >= 1 bit or \"inf\"");
    return b;
}

inline json bits_to_json(int b) { return b == kIdealBits ? json("inf") : json(b); }

/// A scalar broadcast to `n` entries or a list of exactly `n`.
inline std::vector<double> get_per_ue(const json& j, int n, const std::string& field) {
    if (j.is_number()) return std::vector<double>(n, j.get<double>());
    if (!j.is_array()) throw ConfigError(field, "must be a number or a list");
    std::vector<double> v;
    for (const auto& x : j) v.push_back(get_number(x, field));
    if (static_cast<int>(v.size()) != n) throw ConfigError(field, "must have exactly K entries");
    return v;
}

inline void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError(join_path(where, it.key()), "unknown field");
}

inline ScenarioConfig parse_scenario(const json& j) {
    if (!j.is_object()) throw ConfigError("scenario", "must be an object");
    check_keys(j,
               {"area_side_m", "M", "N", "K", "tau_c", "tau_p", "carrier_hz", "sample_period_s",
                "ue_velocities_kmh", "pilot_powers_dbm", "data_powers_dbm", "noise_dbm", "asd_deg", "seed",
                "antenna_spacing_wavelengths", "min_distance_m"},
               "scenario");
    ScenarioConfig c;
    auto num = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = get_number(j[key], std::string("scenario.") + key);
    };
    auto integer = [&](const char* key, int& dst) {
        if (j.contains(key)) dst = get_int(j[key], std::string("scenario.") + key);
    };
    integer("M", c.M);
    integer("N", c.N);
    integer("K", c.K);
    integer("tau_c", c.tau_c);
    integer("tau_p", c.tau_p);
    num("area_side_m", c.area_side_m);
    num("carrier_hz", c.carrier_hz);
    num("sample_period_s", c.sample_period_s);
    num("noise_dbm", c.noise_dbm);
    num("asd_deg", c.asd_deg);
    num("antenna_spacing_wavelengths", c.antenna_spacing_wavelengths);
    num("min_distance_m", c.min_distance_m);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("scenario.seed", "must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (c.K < 1) throw ConfigError("scenario.K", "must be >= 1");
    c.ue_velocities_kmh = j.contains("ue_velocities_kmh")
                              ? get_per_ue(j["ue_velocities_kmh"], c.K, "scenario.ue_velocities_kmh")
                              : std::vector<double>(c.K, 0.0);
    c.pilot_powers_dbm = j.contains("pilot_powers_dbm")
                             ? get_per_ue(j["pilot_powers_dbm"], c.K, "scenario.pilot_powers_dbm")
                             : std::vector<double>(c.K, 10.0);
    c.data_powers_dbm = j.contains("data_powers_dbm")
                            ? get_per_ue(j["data_powers_dbm"], c.K, "scenario.data_powers_dbm")
                            : std::vector<double>(c.K, 10.0);
    return c;
}

inline HardwareConfig parse_hardware(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where, "must be an object");
    check_keys(j, {"label", "kappa_t", "kappa_r", "kappa", "dac_bits", "adc_bits", "adc_dynamic_range"}, where);
    HardwareConfig h;
    auto real_list = [&](const json& v, const std::string& field) {
        std::vector<double> out;
        if (v.is_array())
            for (const auto& x : v) out.push_back(get_number(x, field));
        else
            out.push_back(get_number(v, field));
        return out;
    };
    if (j.contains("kappa")) h.kappa_t = h.kappa_r = real_list(j["kappa"], join_path(where, "kappa"));
    if (j.contains("kappa_t")) h.kappa_t = real_list(j["kappa_t"], join_path(where, "kappa_t"));
    if (j.contains("kappa_r")) h.kappa_r = real_list(j["kappa_r"], join_path(where, "kappa_r"));
    if (j.contains("dac_bits")) {
        const json& v = j["dac_bits"];
        h.dac_bits.clear();
        if (v.is_array())
            for (const auto& x : v) h.dac_bits.push_back(get_bits(x, join_path(where, "dac_bits")));
        else
            h.dac_bits.push_back(get_bits(v, join_path(where, "dac_bits")));
    }
    if (j.contains("adc_bits")) {
        const json& v = j["adc_bits"];
        const std::string f = join_path(where, "adc_bits");
        h.adc_bits.clear();
        if (!v.is_array()) {
            h.adc_bits.push_back({get_bits(v, f)});
        } else {
            for (const auto& row : v) {
                std::vector<int> r;
                if (row.is_array())
                    for (const auto& x : row) r.push_back(get_bits(x, f));
                else
                    r.push_back(get_bits(row, f));
                h.adc_bits.push_back(std::move(r));
            }
        }
    }
    if (j.contains("adc_dynamic_range")) {
        const json& v = j["adc_dynamic_range"];
        const std::string f = join_path(where, "adc_dynamic_range");
        if (!v.is_array() || v.size() != 2) throw ConfigError(f, "must be [lo, hi]");
        h.adc_dynamic_range = std::make_pair(get_int(v[0], f), get_int(v[1], f));
    }
    if (j.contains("label")) {
        if (!j["label"].is_string()) throw ConfigError(join_path(where, "label"), "must be a string");
        h.label = j["label"].get<std::string>();
    }
    return h;
}

inline std::string kappa_label(double k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", k);
    return buf;
}

}  // namespace detail

/// Hardware combo of one grid point: the same resolution on every ADC and
/// DAC and the same EVM at both ends.
inline HardwareConfig grid_hardware(int bits, double kappa) {
    HardwareConfig h;
    h.kappa_t = {kappa};
    h.kappa_r = {kappa};
    h.dac_bits = {bits};
    h.adc_bits = {{bits}};
    h.label = "b" + (bits == kIdealBits ? std::string("inf") : std::to_string(bits)) + "_k" +
              detail::kappa_label(kappa);
    return h;
}

inline ExperimentSpec parse_spec(const json& j) {
    using namespace detail;
    if (!j.is_object()) throw ConfigError("spec", "must be a JSON object");
    check_keys(j, {"schema", "scenario", "validation", "sweep", "monte_carlo", "trials", "workers", "block_size",
                   "tolerance", "outputs"},
               "");
    if (j.contains("schema") && (!j["schema"].is_number_integer() || j["schema"].get<int>() != kReportSchema))
        throw ConfigError("schema", "unsupported schema version");
    ExperimentSpec s;
    s.scenario = parse_scenario(j.value("scenario", json::object()));
    if (j.contains("validation")) {
        const std::string v = j["validation"].is_string() ? j["validation"].get<std::string>() : "";
        if (v == "strict")
            s.validation = Validation::strict;
        else if (v == "relaxed")
            s.validation = Validation::relaxed;
        else
            throw ConfigError("validation", "must be \"strict\" or \"relaxed\"");
    }
    const int K = s.scenario.K;

    const json sweep = j.value("sweep", json::object());
    if (!sweep.is_object()) throw ConfigError("sweep", "must be an object");
    check_keys(sweep, {"velocity_profiles", "hardware", "adc_bits", "kappa", "weights"}, "sweep");
    if (sweep.contains("velocity_profiles")) {
        const json& v = sweep["velocity_profiles"];
        if (!v.is_array() || v.empty()) throw ConfigError("sweep.velocity_profiles", "must be a nonempty list");
        for (const auto& p : v) s.velocity_profiles.push_back(get_per_ue(p, K, "sweep.velocity_profiles"));
    } else {
        s.velocity_profiles.push_back(s.scenario.ue_velocities_kmh);
    }
    if (sweep.contains("hardware")) {
        const json& v = sweep["hardware"];
        if (!v.is_array() || v.empty()) throw ConfigError("sweep.hardware", "must be a nonempty list");
        for (std::size_t i = 0; i < v.size(); ++i)
            s.hardware.push_back(parse_hardware(v[i], "sweep.hardware[" + std::to_string(i) + "]"));
    }
    if (sweep.contains("adc_bits") || sweep.contains("kappa")) {
        std::vector<int> bits{kIdealBits};
        std::vector<double> kappas{0.0};
        if (sweep.contains("adc_bits")) {
            const json& v = sweep["adc_bits"];
            if (!v.is_array() || v.empty()) throw ConfigError("sweep.adc_bits", "must be a nonempty list");
            bits.clear();
            for (const auto& x : v) bits.push_back(get_bits(x, "sweep.adc_bits"));
        }
        if (sweep.contains("kappa")) {
            const json& v = sweep["kappa"];
            if (!v.is_array() || v.empty()) throw ConfigError("sweep.kappa", "must be a nonempty list");
            kappas.clear();
            for (const auto& x : v) kappas.push_back(get_number(x, "sweep.kappa"));
        }
        for (int b : bits)
            for (double k : kappas) s.hardware.push_back(grid_hardware(b, k));
    }
    if (s.hardware.empty()) s.hardware.push_back(grid_hardware(kIdealBits, 0.0));
    for (std::size_t i = 0; i < s.hardware.size(); ++i)
        if (s.hardware[i].label.empty()) s.hardware[i].label = "hw" + std::to_string(i);
    if (sweep.contains("weights")) {
        const json& v = sweep["weights"];
        if (!v.is_array() || v.empty()) throw ConfigError("sweep.weights", "must be a nonempty list");
        s.schemes.clear();
        for (const auto& x : v) {
            if (!x.is_string()) throw ConfigError("sweep.weights", "entries must be strings");
            s.schemes.push_back(parse_weight_scheme(x.get<std::string>()));
        }
    }

    if (j.contains("monte_carlo")) {
        if (!j["monte_carlo"].is_boolean()) throw ConfigError("monte_carlo", "must be true or false");
        s.monte_carlo = j["monte_carlo"].get<bool>();
    }
    if (j.contains("trials")) {
        if (!j["trials"].is_number_integer()) throw ConfigError("trials", "must be an integer");
        s.mc.trials = j["trials"].get<std::int64_t>();
    }
    if (j.contains("workers")) s.mc.workers = get_int(j["workers"], "workers");
    if (j.contains("block_size")) s.mc.block_size = get_int(j["block_size"], "block_size");
    if (j.contains("tolerance")) s.tolerance = get_number(j["tolerance"], "tolerance");
    if (j.contains("outputs")) {
        if (!j["outputs"].is_string()) throw ConfigError("outputs", "must be a string");
        s.outputs = j["outputs"].get<std::string>();
    }
    return s;
}

/// Checks everything that does not need the scenario geometry.
inline void validate_spec(const ExperimentSpec& s) {
    validate(s.scenario, s.validation);
    if (s.velocity_profiles.empty()) throw ConfigError("sweep.velocity_profiles", "grid is empty");
    if (s.hardware.empty()) throw ConfigError("sweep.hardware", "grid is empty");
    if (s.schemes.empty()) throw ConfigError("sweep.weights", "grid is empty");
    for (const auto& p : s.velocity_profiles) {
        if (static_cast<int>(p.size()) != s.scenario.K)
            throw ConfigError("sweep.velocity_profiles", "must have exactly K entries");
        for (double v : p)
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("sweep.velocity_profiles", "must be finite and >= 0");
    }
    if (s.mc.trials < 1) throw ConfigError("trials", "must be >= 1");
    if (s.mc.workers < 0) throw ConfigError("workers", "must be >= 0");
    if (s.mc.block_size < 1) throw ConfigError("block_size", "must be >= 1");
    if (!(s.tolerance > 0.0)) throw ConfigError("tolerance", "must be positive");
    for (std::size_t i = 0; i < s.hardware.size(); ++i) {
        const std::string where = "sweep.hardware[" + std::to_string(i) + "]";
        const HardwareConfig& h = s.hardware[i];
        for (double k : h.kappa_t)
            if (!(k >= 0.0)) throw ConfigError(where + ".kappa_t", "must be >= 0");
        for (double k : h.kappa_r)
            if (!(k >= 0.0)) throw ConfigError(where + ".kappa_r", "must be >= 0");
        try {
            resolve_hardware(h, s.scenario.M, s.scenario.N, s.scenario.K, s.scenario.seed);
        } catch (const ConfigError& e) {
            throw ConfigError(where + "." + e.field(), e.what());
        } catch (const DomainError& e) {
            throw ConfigError(where, e.what());
        }
    }
}

inline ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("spec", "cannot read " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("spec", std::string("invalid JSON: ") + e.what());
    }
    ExperimentSpec s = parse_spec(j);
    validate_spec(s);
    return s;
}

// --- execution ------------------------------------------------------------------

/// SINR, SE and term powers of one path.
struct PathResult {
    TermGrid terms;  // [k][n - lambda]
    SeSummary se;
};

/// One sweep cell: a velocity profile, a hardware combo and a weight scheme.
struct CellResult {
    int combo_id = 0;
    int profile = 0;
    int hardware = 0;
    WeightScheme scheme = WeightScheme::lsfd;
    std::vector<double> velocities;
    PathResult cf;
    std::optional<PathResult> mc;
    std::vector<double> rel_dev;  // per UE, |SE_cf - SE_mc| / SE_cf
    double rel_dev_sum = 0.0;
    bool passed = true;
};

struct Report {
    ExperimentSpec spec;
    int lambda = 0;
    std::vector<CellResult> cells;
    std::string status = kStatusOk;
    double wall_time_s = 0.0;
    int workers = 1;
    std::vector<std::string> warnings;
};

inline double relative_deviation(double ref, double x) {
    if (ref == 0.0) return x == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(ref - x) / std::abs(ref);
}

inline PathResult make_path(TermGrid terms, int tau_c) {
    PathResult p;
    p.se = summarize_se(sinr_grid(terms), tau_c);
    p.terms = std::move(terms);
    return p;
}

/// Runs every cell. Cells whose deviation exceeds the tolerance mark the
/// report as failed; the remaining cells still run.
inline Report run_experiment(const ExperimentSpec& spec) {
    validate_spec(spec);
    const auto t0 = std::chrono::steady_clock::now();
    Report rep;
    rep.spec = spec;
    rep.workers = resolve_workers(spec.mc.workers);
    const Scenario base = build_scenario(spec.scenario, spec.validation);
    rep.lambda = base.lambda();
    const int K = base.K(), tau_c = base.cfg.tau_c;
    int combo = 0;
    for (std::size_t p = 0; p < spec.velocity_profiles.size(); ++p) {
        const Scenario sc = with_velocities(base, spec.velocity_profiles[p]);
        for (std::size_t h = 0; h < spec.hardware.size(); ++h) {
            const HardwareProfile hw = resolve_hardware(spec.hardware[h], sc.M(), sc.N(), K, sc.cfg.seed);
            const MomentTable mt = build_moments(sc, hw);
            const ClosedFormBasis cb = build_closed_form_basis(sc, hw, mt);
            std::vector<WeightGrid> weights(spec.schemes.size(), WeightGrid(K));
            std::vector<TermGrid> cf_terms(spec.schemes.size(), TermGrid(K));
            for (int k = 0; k < K; ++k) {
                for (int n = sc.lambda(); n <= tau_c; ++n) {
                    const ClosedFormTerms t = closed_form_terms(sc, hw, cb, k, n);
                    for (std::size_t s = 0; s < spec.schemes.size(); ++s) {
                        CVec a = weights_for(t, spec.schemes[s]);
                        cf_terms[s][k].push_back(closed_form_powers(t, a));
                        weights[s][k].push_back(std::move(a));
                    }
                }
            }
            std::optional<McResult> mc;
            if (spec.monte_carlo) {
                mc = mc_term_powers(sc, hw, mt, weights, spec.mc);
                for (const auto& w : mc->warnings)
                    if (std::find(rep.warnings.begin(), rep.warnings.end(), w) == rep.warnings.end())
                        rep.warnings.push_back(w);
            }
            for (std::size_t s = 0; s < spec.schemes.size(); ++s) {
                CellResult c;
                c.combo_id = combo++;
                c.profile = static_cast<int>(p);
                c.hardware = static_cast<int>(h);
                c.scheme = spec.schemes[s];
                c.velocities = spec.velocity_profiles[p];
                c.cf = make_path(std::move(cf_terms[s]), tau_c);
                if (mc) {
                    c.mc = make_path(std::move(mc->terms[s]), tau_c);
                    for (int k = 0; k < K; ++k) {
                        const double d = relative_deviation(c.cf.se.se_ue[k], c.mc->se.se_ue[k]);
                        c.rel_dev.push_back(d);
                        if (!(d <= spec.tolerance)) c.passed = false;
                    }
                    c.rel_dev_sum = relative_deviation(c.cf.se.se_sum, c.mc->se.se_sum);
                    if (!c.passed) rep.status = kStatusFailedValidation;
                }
                rep.cells.push_back(std::move(c));
            }
        }
    }
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// --- output ---------------------------------------------------------------------

inline std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

inline json hardware_to_json(const HardwareConfig& h) {
    json j;
    j["label"] = h.label;
    j["kappa_t"] = h.kappa_t;
    j["kappa_r"] = h.kappa_r;
    json dac = json::array();
    for (int b : h.dac_bits) dac.push_back(detail::bits_to_json(b));
    j["dac_bits"] = dac;
    json adc = json::array();
    for (const auto& row : h.adc_bits) {
        json r = json::array();
        for (int b : row) r.push_back(detail::bits_to_json(b));
        adc.push_back(r);
    }
    j["adc_bits"] = adc;
    if (h.adc_dynamic_range) j["adc_dynamic_range"] = {h.adc_dynamic_range->first, h.adc_dynamic_range->second};
    return j;
}

inline json scenario_to_json(const ScenarioConfig& c) {
    return {{"area_side_m", c.area_side_m},
            {"M", c.M},
            {"N", c.N},
            {"K", c.K},
            {"tau_c", c.tau_c},
            {"tau_p", c.tau_p},
            {"carrier_hz", c.carrier_hz},
            {"sample_period_s", c.sample_period_s},
            {"ue_velocities_kmh", c.ue_velocities_kmh},
            {"pilot_powers_dbm", c.pilot_powers_dbm},
            {"data_powers_dbm", c.data_powers_dbm},
            {"noise_dbm", c.noise_dbm},
            {"asd_deg", c.asd_deg},
            {"seed", c.seed},
            {"antenna_spacing_wavelengths", c.antenna_spacing_wavelengths},
            {"min_distance_m", c.min_distance_m}};
}

inline json terms_to_json(const TermPowers& tp) {
    json j;
    for (const auto& name : term_names()) j[name] = term_value(tp, name);
    j["DAC_TRF"] = tp.DAC + tp.TRF;
    j["IUI_per_ue"] = tp.IUI;
    return j;
}

inline json report_to_json(const Report& r) {
    json j;
    j["schema"] = kReportSchema;
    j["metadata"] = {{"seed", r.spec.scenario.seed},
                     {"version", CFAGING_VERSION},
                     {"wall_time_s", r.wall_time_s},
                     {"status", r.status},
                     {"trials", r.spec.monte_carlo ? r.spec.mc.trials : 0},
                     {"workers", r.workers},
                     {"block_size", r.spec.mc.block_size},
                     {"tolerance", r.spec.tolerance},
                     {"warnings", r.warnings}};
    j["scenario"] = scenario_to_json(r.spec.scenario);
    j["lambda"] = r.lambda;
    json cells = json::array();
    for (const auto& c : r.cells) {
        json cj;
        cj["combo_id"] = c.combo_id;
        cj["velocity_profile"] = c.profile;
        cj["velocities_kmh"] = c.velocities;
        cj["hardware"] = hardware_to_json(r.spec.hardware[c.hardware]);
        cj["weights"] = to_string(c.scheme);
        cj["passed"] = c.passed;
        json sum = {{"cf", c.cf.se.se_sum}};
        if (c.mc) {
            sum["mc"] = c.mc->se.se_sum;
            sum["rel_dev"] = c.rel_dev_sum;
        }
        cj["se_sum"] = sum;
        json ues = json::array();
        for (std::size_t k = 0; k < c.cf.terms.size(); ++k) {
            json u;
            u["k"] = k;
            u["velocity_kmh"] = c.velocities[k];
            json se = {{"cf", c.cf.se.se_ue[k]}};
            if (c.mc) {
                se["mc"] = c.mc->se.se_ue[k];
                se["rel_dev"] = c.rel_dev[k];
            }
            u["se"] = se;
            json inst = json::array();
            for (std::size_t j2 = 0; j2 < c.cf.terms[k].size(); ++j2) {
                json e;
                e["n"] = r.lambda + static_cast<int>(j2);
                const double s_cf = c.cf.se.sinr[k][j2];
                e["cf"] = {{"sinr", s_cf}, {"se", se_of_sinr(s_cf, r.spec.scenario.tau_c)},
                           {"terms", terms_to_json(c.cf.terms[k][j2])}};
                if (c.mc) {
                    const double s_mc = c.mc->se.sinr[k][j2];
                    e["mc"] = {{"sinr", s_mc}, {"se", se_of_sinr(s_mc, r.spec.scenario.tau_c)},
                               {"terms", terms_to_json(c.mc->terms[k][j2])}};
                    e["sinr_rel_dev"] = relative_deviation(s_cf, s_mc);
                }
                inst.push_back(std::move(e));
            }
            u["instants"] = std::move(inst);
            ues.push_back(std::move(u));
        }
        cj["ues"] = std::move(ues);
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    return j;
}

/// combo_id,k,n,path,metric,value. Per-instant rows carry SINR, SE and the
/// term powers; rows with an empty n hold per-UE SE totals, rows with empty
/// k and n the sum SE. Path "dev" holds relative deviations.
inline std::string summary_csv(const Report& r) {
    std::ostringstream os;
    os << "combo_id,k,n,path,metric,value\n";
    const int tau_c = r.spec.scenario.tau_c;
    auto row = [&](int combo, const std::string& k, const std::string& n, const char* path, const std::string& metric,
                   double v) {
        os << combo << ',' << k << ',' << n << ',' << path << ',' << metric << ',' << format_value(v) << '\n';
    };
    auto path_rows = [&](const CellResult& c, const PathResult& p, const char* name) {
        for (std::size_t k = 0; k < p.terms.size(); ++k) {
            const std::string ks = std::to_string(k);
            for (std::size_t j = 0; j < p.terms[k].size(); ++j) {
                const std::string ns = std::to_string(r.lambda + static_cast<int>(j));
                row(c.combo_id, ks, ns, name, "SINR", p.se.sinr[k][j]);
                row(c.combo_id, ks, ns, name, "SE", se_of_sinr(p.se.sinr[k][j], tau_c));
                for (const auto& t : term_names()) row(c.combo_id, ks, ns, name, t, term_value(p.terms[k][j], t));
            }
            row(c.combo_id, ks, "", name, "SE_ue", p.se.se_ue[k]);
        }
        row(c.combo_id, "", "", name, "SE_sum", p.se.se_sum);
    };
    for (const auto& c : r.cells) {
        path_rows(c, c.cf, "cf");
        if (c.mc) {
            path_rows(c, *c.mc, "mc");
            for (std::size_t k = 0; k < c.rel_dev.size(); ++k)
                row(c.combo_id, std::to_string(k), "", "dev", "SE_ue", c.rel_dev[k]);
            row(c.combo_id, "", "", "dev", "SE_sum", c.rel_dev_sum);
        }
    }
    return os.str();
}

/// Output directory: an explicit override, then the environment, then the
/// spec.
inline std::string output_dir(const ExperimentSpec& spec, const std::string& override_dir = "") {
    if (!override_dir.empty()) return override_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return spec.outputs;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("outputs", "cannot write " + p.string());
    out << text;
    if (!out) throw ConfigError("outputs", "write failed for " + p.string());
}

/// Writes report.json and summary.csv into `dir`.
inline void write_report(const Report& r, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("outputs", "cannot create " + dir + ": " + ec.message());
    write_text(std::filesystem::path(dir) / "report.json", report_to_json(r).dump(2) + "\n");
    write_text(std::filesystem::path(dir) / "summary.csv", summary_csv(r));
}

inline json load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("report", "cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("report", std::string("invalid JSON: ") + e.what());
    }
}

namespace detail {

inline const json& report_cells(const json& report) {
    if (!report.is_object() || !report.contains("cells") || !report["cells"].is_array())
        throw ConfigError("report", "missing cells");
    if (report["cells"].empty()) throw ConfigError("report", "contains no cells");
    return report["cells"];
}

inline std::vector<std::string> report_paths(const json& cell) {
    std::vector<std::string> paths{"cf"};
    if (!cell["ues"].empty() && cell["ues"][0]["se"].contains("mc")) paths.push_back("mc");
    return paths;
}

}  // namespace detail

/// An ECDF point: the CDF reaches `fraction` at `value`.
struct CdfPoint {
    double value = 0.0;
    double fraction = 0.0;
};

/// Empirical CDF with ties merged; the last fraction is 1.
inline std::vector<CdfPoint> empirical_cdf(std::vector<double> xs) {
    std::vector<CdfPoint> out;
    if (xs.empty()) return out;
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i + 1 < xs.size() && xs[i + 1] == xs[i]) continue;
        out.push_back({xs[i], static_cast<double>(i + 1) / n});
    }
    return out;
}

/// combo_id,path,velocity_kmh,se,cdf: per-UE SE distribution of each cell
/// and path, one curve per velocity class.
inline std::string se_cdf_csv(const json& report) {
    const json& cells = detail::report_cells(report);
    std::ostringstream os;
    os << "combo_id,path,velocity_kmh,se,cdf\n";
    for (const auto& c : cells) {
        for (const auto& path : detail::report_paths(c)) {
            std::map<double, std::vector<double>> by_v;
            for (const auto& u : c["ues"]) by_v[u["velocity_kmh"].get<double>()].push_back(u["se"][path].get<double>());
            for (const auto& [v, ses] : by_v)
                for (const auto& pt : empirical_cdf(ses))
                    os << c["combo_id"].get<int>() << ',' << path << ',' << format_value(v) << ','
                       << format_value(pt.value) << ',' << format_value(pt.fraction) << '\n';
        }
    }
    return os.str();
}

/// combo_id,path,n,DS_db,CA_db,IUI_db,DAC_TRF_db for UE k, in dB relative
/// to the DS power at n = lambda of the same cell and path.
inline std::string term_trace_csv(const json& report, int k) {
    const json& cells = detail::report_cells(report);
    std::ostringstream os;
    os << "combo_id,path,n,DS_db,CA_db,IUI_db,DAC_TRF_db\n";
    for (const auto& c : cells) {
        if (k < 0 || k >= static_cast<int>(c["ues"].size()))
            throw ConfigError("ue", "unknown UE index " + std::to_string(k));
        const json& inst = c["ues"][k]["instants"];
        for (const auto& path : detail::report_paths(c)) {
            const double ref = inst[0][path]["terms"]["DS"].get<double>();
            auto db = [&](double x) { return 10.0 * std::log10(x / ref); };
            for (const auto& e : inst) {
                const json& t = e[path]["terms"];
                os << c["combo_id"].get<int>() << ',' << path << ',' << e["n"].get<int>() << ','
                   << format_value(db(t["DS"].get<double>())) << ',' << format_value(db(t["CA"].get<double>())) << ','
                   << format_value(db(t["IUI"].get<double>())) << ','
                   << format_value(db(t["DAC"].get<double>() + t["TRF"].get<double>())) << '\n';
            }
        }
    }
    return os.str();
}

}  // namespace cfaging
