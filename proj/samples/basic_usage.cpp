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

// Closed-form sum SE of the desk scenario for a few converter resolutions.

#include <cstdio>

#include "cfaging/cfaging.hpp"

using namespace cfaging;

int main() {
    const Scenario sc = build_scenario(desk_config());
    std::printf("%-10s %12s %12s\n", "hardware", "lsfd", "sld");
    for (int bits : {1, 2, 3, 4, kIdealBits}) {
        const HardwareProfile hw = resolve_hardware(grid_hardware(bits, 0.1), sc.M(), sc.N(), sc.K(), sc.cfg.seed);
        const MomentTable mt = build_moments(sc, hw);
        const ClosedFormBasis cb = build_closed_form_basis(sc, hw, mt);
        const double lsfd = closed_form_se(sc, hw, cb, WeightScheme::lsfd).se_sum;
        const double sld = closed_form_se(sc, hw, cb, WeightScheme::sld).se_sum;
        std::printf("%-10s %12.6f %12.6f\n", grid_hardware(bits, 0.1).label.c_str(), lsfd, sld);
    }
    return 0;
}
