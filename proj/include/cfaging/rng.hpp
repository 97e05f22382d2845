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
#include <random>

#include "types.hpp"

namespace cfaging {

// Independent purposes get independent streams so that changing one noise
// source (e.g. turning on ADC noise) never shifts the draws of another.
// That is what makes common-random-number comparisons across hardware
// combinations meaningful.
enum class Stream : std::uint64_t {
    geometry = 1,
    hardware = 2,
    channel = 3,
    pilot_noise = 4,
    data_noise = 5,
    test = 99,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Stream for (master seed, trial index, purpose); a pure function of
    /// its arguments.
    static Rng stream(std::uint64_t master, std::uint64_t trial, Stream purpose) {
        std::uint64_t s = splitmix64(master);
        s = splitmix64(s ^ (trial * 0xd1b54a32d192ed03ULL));
        s = splitmix64(s ^ static_cast<std::uint64_t>(purpose));
        return Rng(s);
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double phase() { return uniform(-kPi, kPi); }
    double normal() { return normal_(engine_); }

    /// Circularly-symmetric complex normal with the given variance.
    cplx complex_normal(double variance = 1.0) {
        const double s = std::sqrt(0.5 * variance);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace cfaging
