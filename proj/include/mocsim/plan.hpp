// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "mocsim/clayer.hpp"
#include "mocsim/common.hpp"
#include "mocsim/moclib.hpp"
#include "mocsim/noc_model.hpp"
#include "mocsim/sim_engine.hpp"

namespace mocsim {

// ---------------------------------------------------------------------------
// Experiment plans: one file describing topology, traffic, sweep axes,
// seeds and report options. See README for the key-by-key schema.
// ---------------------------------------------------------------------------

struct ExperimentPlan {
    std::string plan_path;
    std::string topology_path;
    std::string schedule_path;  // empty when the topology has no C members

    MeshTopology topology;
    std::vector<ScheduleMemory> schedules;  // per router, empty where unused

    Tick duration_ps = 0;
    bool drain = true;
    std::vector<std::uint64_t> seeds;
    TrafficPattern traffic;  // seed field is overwritten per run

    std::vector<double> sweep_injection_rate;    // empty = single point
    std::vector<std::array<int, 3>> sweep_mc;    // MoClib bandwidth rows

    bool moclib_comparison = false;
    double tolerance_pct = 5.0;
    std::string accounting = "both";  // aggregate | tdm-shared | both
    std::string out_dir;              // plan-level default, CLI may override
};

// Validates everything it can reach: all referenced files must exist and
// parse; every error is reported with its file position.
Parsed<ExperimentPlan> parse_plan(const std::string& path);

struct RunPlanOptions {
    std::string out_dir;  // overrides the plan's
    bool trace = false;
    int jobs = 1;
    std::string accounting_override;  // empty = plan's choice
};

// Executes every sweep point x seed, writes the artifact set into the
// output directory, and returns the process exit code: 0 all drained,
// 2 simulation pathology. Artifacts are byte-reproducible for a fixed plan.
int run_plan(const ExperimentPlan& plan, const RunPlanOptions& options);

// Gains reported next to the computed ones; from the published
// characterization of this router family.
inline constexpr double kReferenceMeanGainPct = 20.4;
inline constexpr double kReferenceMaxGainPct = 24.0;

std::vector<BandwidthAccounting> accountings_from_name(const std::string& name);

}  // namespace mocsim
