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

// Command-line front end: run a sweep, export SE CDFs and term traces, dump
// channel realizations.
//
// Exit codes: 0 success, 1 a cell failed validation, 2 invalid input,
// 3 numerical or internal failure.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cfaging/cfaging.hpp"

namespace {

enum Exit { kOk = 0, kFailedValidation = 1, kBadInput = 2, kNumerical = 3 };

void write_or_print(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    cfaging::write_text(path, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cell-free uplink SE under channel aging and hardware impairments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(CFAGING_VERSION));

    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> trials;
    std::optional<int> workers;
    std::optional<double> tolerance;
    std::string spec_path, report_path, out;
    int ue = -1;
    std::uint64_t trial = 0;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Run an experiment spec; writes report.json and summary.csv");
    run->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--trials", trials, "Override the Monte Carlo trial count");
    run->add_option("--workers", workers, "Worker threads (0 = available parallelism)");
    run->add_option("--tolerance", tolerance, "Per-UE relative SE tolerance");
    run->add_option("--out", out, "Output directory (overrides CFAGING_OUTPUT_DIR and the spec)");
    run->add_flag("-q,--quiet", quiet, "Suppress the per-cell summary");

    auto* cdf = app.add_subcommand("cdf", "Empirical CDF of per-UE SE from a report");
    cdf->add_option("report", report_path, "report.json")->required();
    cdf->add_option("--out", out, "Output CSV ('-' for stdout)");

    auto* trace = app.add_subcommand("trace", "Term powers of one UE against n from a report");
    trace->add_option("report", report_path, "report.json")->required();
    trace->add_option("--ue", ue, "UE index (0-based)")->required();
    trace->add_option("--out", out, "Output CSV ('-' for stdout)");

    auto* dump = app.add_subcommand("dump", "Write the channel block of one trial in binary form");
    dump->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
    dump->add_option("--trial", trial, "Trial index");
    dump->add_option("--seed", seed, "Override the scenario seed");
    dump->add_option("--out", out, "Output file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            cfaging::ExperimentSpec spec = cfaging::load_spec(spec_path);
            if (seed) spec.scenario.seed = *seed;
            if (trials) spec.mc.trials = *trials;
            if (workers) spec.mc.workers = *workers;
            if (tolerance) spec.tolerance = *tolerance;
            cfaging::validate_spec(spec);
            const cfaging::Report rep = cfaging::run_experiment(spec);
            const std::string dir = cfaging::output_dir(spec, out);
            cfaging::write_report(rep, dir);
            for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
            if (!quiet) {
                for (const auto& c : rep.cells) {
                    std::printf("combo %d  %-10s %-4s  SE_sum cf %.6f", c.combo_id,
                                spec.hardware[c.hardware].label.c_str(), cfaging::to_string(c.scheme),
                                c.cf.se.se_sum);
                    if (c.mc) {
                        double worst = 0.0;
                        for (double d : c.rel_dev) worst = std::max(worst, d);
                        std::printf("  mc %.6f  worst UE dev %.4f  %s", c.mc->se.se_sum, worst,
                                    c.passed ? "ok" : "FAIL");
                    }
                    std::printf("\n");
                }
                std::printf("status %s  wall %.1f s  -> %s\n", rep.status.c_str(), rep.wall_time_s, dir.c_str());
            }
            return rep.status == cfaging::kStatusOk ? kOk : kFailedValidation;
        }
        if (*cdf) {
            write_or_print(cfaging::se_cdf_csv(cfaging::load_report(report_path)), out);
            return kOk;
        }
        if (*trace) {
            write_or_print(cfaging::term_trace_csv(cfaging::load_report(report_path), ue), out);
            return kOk;
        }
        if (*dump) {
            cfaging::ExperimentSpec spec = cfaging::load_spec(spec_path);
            if (seed) spec.scenario.seed = *seed;
            const cfaging::Scenario sc = cfaging::build_scenario(spec.scenario, spec.validation);
            const cfaging::ChannelBlock b = cfaging::generate_block(sc, trial);
            std::ofstream os(out, std::ios::binary);
            if (!os) throw cfaging::ConfigError("out", "cannot write " + out);
            cfaging::write_block(os, b);
            return kOk;
        }
    } catch (const cfaging::ConfigError& e) {
        std::cerr << "error: invalid input: " << e.what() << '\n';
        return kBadInput;
    } catch (const cfaging::DomainError& e) {
        std::cerr << "error: invalid input: " << e.what() << '\n';
        return kBadInput;
    } catch (const cfaging::NumericalError& e) {
        std::cerr << "error: numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}
