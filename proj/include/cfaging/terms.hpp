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

// Signal and interference powers of the decoded stream shared by the
// analytical and simulated paths.

#include <cmath>
#include <string>
#include <vector>

#include "types.hpp"

namespace cfaging {

enum class WeightScheme { lsfd, sld };

inline const char* to_string(WeightScheme s) { return s == WeightScheme::lsfd ? "lsfd" : "sld"; }

inline WeightScheme parse_weight_scheme(const std::string& s) {
    if (s == "lsfd") return WeightScheme::lsfd;
    if (s == "sld") return WeightScheme::sld;
    throw ConfigError("weights", "unknown weight scheme '" + s + "' (expected lsfd or sld)");
}

/// Power of each component of the decoded symbol of UE k at one instant.
struct TermPowers {
    double DS = 0.0;   // squared magnitude of the mean effective gain
    double BU = 0.0;   // gain uncertainty
    double CA = 0.0;   // aged-out channel component
    std::vector<double> IUI;  // per interferer, entry k is zero
    double DAC = 0.0;
    double TRF = 0.0;
    double RRF = 0.0;
    double ADC = 0.0;
    double NS = 0.0;

    double iui_total() const {
        double s = 0.0;
        for (double x : IUI) s += x;
        return s;
    }
    double interference() const { return BU + CA + iui_total() + DAC + TRF + RRF + ADC + NS; }
};

/// DS over the sum of every other term.
inline double mc_sinr(const TermPowers& tp) {
    const double den = tp.interference();
    if (!(den > 0.0)) throw ContractError("mc_sinr: interference-plus-noise power is zero");
    return tp.DS / den;
}

/// Contribution of one instant to the per-UE SE, in bit/s/Hz.
inline double se_of_sinr(double sinr, int tau_c) { return std::log2(1.0 + sinr) / tau_c; }

inline CVec sld_weights(int n_ap) { return CVec::Constant(n_ap, cplx{1.0 / n_ap, 0.0}); }

/// Names used for term columns in reports.
inline const std::vector<std::string>& term_names() {
    static const std::vector<std::string> names{"DS", "BU", "CA", "IUI", "DAC", "TRF", "RRF", "ADC", "NS"};
    return names;
}

inline double term_value(const TermPowers& tp, const std::string& name) {
    if (name == "DS") return tp.DS;
    if (name == "BU") return tp.BU;
    if (name == "CA") return tp.CA;
    if (name == "IUI") return tp.iui_total();
    if (name == "DAC") return tp.DAC;
    if (name == "TRF") return tp.TRF;
    if (name == "RRF") return tp.RRF;
    if (name == "ADC") return tp.ADC;
    if (name == "NS") return tp.NS;
    throw ContractError("term_value: unknown term " + name);
}

}  // namespace cfaging
