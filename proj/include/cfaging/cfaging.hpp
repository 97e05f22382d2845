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

#include "channel.hpp"
#include "closed_form.hpp"
#include "estimation.hpp"
#include "hardware.hpp"
#include "harness.hpp"
#include "linalg.hpp"
#include "monte_carlo.hpp"
#include "presets.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "terms.hpp"
#include "types.hpp"
