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

// Desk-scale scenario and the hardware combos used by the validation runs.

#include <vector>

#include "hardware.hpp"
#include "scenario.hpp"

namespace cfaging {

/// 16 APs with 2 antennas on a 500 m square, 8 UEs on 4 pilots, a 50-sample
/// block. UEs 0-3 move at 54 km/h and UEs 4-7 at 212 km/h.
inline ScenarioConfig desk_config(std::uint64_t seed = 7) {
    ScenarioConfig c;
    c.area_side_m = 500.0;
    c.M = 16;
    c.N = 2;
    c.K = 8;
    c.tau_p = 4;
    c.tau_c = 50;
    c.seed = seed;
    for (int k = 0; k < c.K; ++k) {
        c.ue_velocities_kmh.push_back(k < 4 ? 54.0 : 212.0);
        c.pilot_powers_dbm.push_back(10.0);
        c.data_powers_dbm.push_back(10.0);
    }
    return c;
}

/// Ideal RF with ideal converters.
inline HardwareConfig ideal_hardware() {
    HardwareConfig h;
    h.label = "ideal";
    return h;
}

/// EVM 0.1 at the UEs and APs with ideal converters.
inline HardwareConfig rf_impaired_hardware(double kappa = 0.1) {
    HardwareConfig h;
    h.kappa_t = {kappa};
    h.kappa_r = {kappa};
    h.label = "rf";
    return h;
}

/// EVM 0.1 with per-antenna ADC resolutions drawn from [1, 4] and ideal DACs.
inline HardwareConfig dynamic_adc_hardware(double kappa = 0.1) {
    HardwareConfig h = rf_impaired_hardware(kappa);
    h.adc_dynamic_range = std::make_pair(1, 4);
    h.label = "rf_dyn_adc";
    return h;
}

/// Ideal RF with b-bit ADCs and DACs.
inline HardwareConfig converter_hardware(int bits) {
    HardwareConfig h;
    h.dac_bits = {bits};
    h.adc_bits = {{bits}};
    h.label = bits == kIdealBits ? "conv_inf" : "conv" + std::to_string(bits);
    return h;
}

/// The four validation combos, ideal first.
inline std::vector<HardwareConfig> validation_combos() {
    return {ideal_hardware(), rf_impaired_hardware(), dynamic_adc_hardware(), converter_hardware(1)};
}

}  // namespace cfaging
