// SPDX-License-Identifier: Apache-2.0
//
// mocsim: experiment runner for the hybrid two-layer NoC model.
//
//   mocsim validate     --plan FILE | --topology FILE [--schedule FILE]
//   mocsim simulate     --plan FILE [--out DIR] [--trace] [--jobs N]
//   mocsim figure6      [--calibration FILE] [--tolerance PCT]
//                       [--accounting MODE] [--out DIR]
//   mocsim moclib-table [--calibration FILE] [--schedule-scaling SMAX]
//
// Exit codes: 0 success, 1 configuration error, 2 simulation pathology.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mocsim/clayer.hpp"
#include "mocsim/moclib.hpp"
#include "mocsim/plan.hpp"

using namespace mocsim;

namespace {

int cmd_validate(const std::string& plan_path, const std::string& topo_path,
                 const std::string& sched_path) {
    std::vector<Issue> issues;
    if (!plan_path.empty()) {
        auto plan = parse_plan(plan_path);
        issues = std::move(plan.issues);
    } else if (!topo_path.empty()) {
        auto topo = parse_topology_file(topo_path);
        issues = std::move(topo.issues);
        if (topo.ok() && !sched_path.empty()) {
            auto sf = parse_schedule_file(sched_path);
            if (!sf.ok()) {
                issues.insert(issues.end(), sf.issues.begin(), sf.issues.end());
            } else {
                auto bound = bind_schedules(*sf.value, *topo.value);
                issues.insert(issues.end(), bound.issues.begin(), bound.issues.end());
            }
        } else if (topo.ok() && topo.value->has_c_members()) {
            issues.push_back({"MissingFile", "topology has C-layer members; pass --schedule", -1});
        }
    } else {
        std::cerr << "validate needs --plan or --topology\n";
        return 1;
    }
    for (const auto& issue : issues) std::cerr << issue.to_string() << "\n";
    if (issues.empty()) {
        std::cout << "ok\n";
        return 0;
    }
    return 1;
}

int cmd_simulate(const std::string& plan_path, const std::string& out_dir, bool trace, int jobs,
                 const std::string& accounting) {
    auto plan = parse_plan(plan_path);
    if (!plan.ok()) {
        for (const auto& issue : plan.issues) std::cerr << issue.to_string() << "\n";
        return 1;
    }
    RunPlanOptions options;
    options.out_dir = out_dir;
    options.trace = trace;
    options.jobs = jobs;
    options.accounting_override = accounting;
    try {
        int rc = run_plan(*plan.value, options);
        if (rc != 0) std::cerr << "simulation pathology; see summary.txt\n";
        return rc;
    } catch (const SimError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}

MoclibLibrary load_library(const std::string& calibration) {
    if (calibration.empty()) return MoclibLibrary::builtin();
    auto lib = MoclibLibrary::parse_file(calibration);
    if (!lib.ok()) {
        for (const auto& issue : lib.issues) std::cerr << issue.to_string() << "\n";
        throw SimError("MissingFile", "bad calibration file");
    }
    return *lib.value;
}

int cmd_figure6(const std::string& calibration, double tolerance, const std::string& accounting,
                const std::string& out_dir) {
    try {
        auto lib = load_library(calibration);
        auto report =
            area_matched_comparison(lib, tolerance, accountings_from_name(accounting));
        std::cout << report.to_csv();
        for (const auto& acc : accountings_from_name(accounting)) {
            std::cout << "# " << acc.name() << " mean_gain_pct "
                      << format_fixed(report.mean_gain(acc.mode), 2) << " max_gain_pct "
                      << format_fixed(report.max_gain(acc.mode), 2) << "\n";
        }
        std::cout << "# reference_gain_pct mean " << format_fixed(kReferenceMeanGainPct, 1)
                  << " max " << format_fixed(kReferenceMaxGainPct, 1) << "\n";
        for (const auto& h : report.unmatched) {
            std::cout << "# unmatched " << h.label() << " (no baseline within "
                      << format_fixed(tolerance, 2) << "%)\n";
        }
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            std::ofstream out(std::filesystem::path(out_dir) / "gain_report.csv",
                              std::ios::binary);
            out << report.to_csv();
        }
        return 0;
    } catch (const SimError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}

int cmd_moclib_table(const std::string& calibration, int schedule_scaling) {
    try {
        auto lib = load_library(calibration);
        std::cout << lib.to_table_text();
        if (schedule_scaling > 0) {
            std::cout << "c_ports,slots,schedule_bits,slice_equiv\n";
            for (int c : {2, 4}) {
                for (int s = 1; s <= schedule_scaling; s *= 2) {
                    std::cout << c << "," << s << "," << schedule_bits(c, s) << ","
                              << format_fixed(schedule_memory_slices(c, s), 3) << "\n";
                }
            }
        }
        return 0;
    } catch (const SimError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid two-layer NoC simulator and component-library explorer"};
    app.require_subcommand(1);

    std::string plan_path, topo_path, sched_path, out_dir, calibration;
    std::string accounting = "both";
    bool trace = false;
    int jobs = 1;
    double tolerance = 5.0;
    int schedule_scaling = 0;

    auto* validate = app.add_subcommand("validate", "validate a plan or topology");
    validate->add_option("--plan", plan_path, "experiment plan file");
    validate->add_option("--topology", topo_path, "topology file");
    validate->add_option("--schedule", sched_path, "schedule file");

    auto* simulate = app.add_subcommand("simulate", "run every sweep point of a plan");
    simulate->add_option("--plan", plan_path, "experiment plan file")->required();
    simulate->add_option("--out", out_dir, "output directory");
    simulate->add_flag("--trace", trace, "emit per-cycle trace CSVs");
    simulate->add_option("--jobs", jobs, "parallel sweep workers");
    simulate->add_option("--accounting", accounting, "aggregate | tdm-shared | both");

    auto* figure6 = app.add_subcommand("figure6", "area-matched hybrid vs baseline gain report");
    figure6->add_option("--calibration", calibration, "calibration table file");
    figure6->add_option("--tolerance", tolerance, "area match tolerance in percent");
    figure6->add_option("--accounting", accounting, "aggregate | tdm-shared | both");
    figure6->add_option("--out", out_dir, "also write gain_report.csv here");

    auto* table = app.add_subcommand("moclib-table", "print the calibration table");
    table->add_option("--calibration", calibration, "calibration table file");
    table->add_option("--schedule-scaling", schedule_scaling,
                      "also print schedule memory growth up to S slots");

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return cmd_validate(plan_path, topo_path, sched_path);
    if (simulate->parsed()) return cmd_simulate(plan_path, out_dir, trace, jobs, accounting);
    if (figure6->parsed()) return cmd_figure6(calibration, tolerance, accounting, out_dir);
    if (table->parsed()) return cmd_moclib_table(calibration, schedule_scaling);
    return 1;
}
