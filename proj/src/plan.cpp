// SPDX-License-Identifier: Apache-2.0
#include "mocsim/plan.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "mocsim/kvfile.hpp"

namespace fs = std::filesystem;

namespace mocsim {

namespace {

std::string resolve_relative(const std::string& plan_path, const std::string& ref) {
    fs::path p(ref);
    if (p.is_absolute()) return ref;
    return (fs::path(plan_path).parent_path() / p).string();
}

Parsed<std::vector<TrafficEvent>> parse_trace_file(const std::string& path) {
    Parsed<std::vector<TrafficEvent>> result;
    std::ifstream in(path);
    if (!in) {
        result.issues.push_back({"MissingFile", "cannot open " + path, -1});
        return result;
    }
    std::vector<TrafficEvent> events;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::uint64_t at;
        int src, dst;
        std::uint32_t bytes;
        if (!(ls >> at)) continue;  // blank
        if (!(ls >> src >> dst >> bytes)) {
            result.issues.push_back({"ParseError", "expected `at_ps src dst bytes`", line});
            continue;
        }
        TrafficEvent ev;
        ev.at = at;
        ev.src_ip = src;
        ev.dst_ip = dst;
        ev.bytes = bytes;
        ev.cls = bytes <= 8 ? MessageClass::Control : MessageClass::Data;
        events.push_back(ev);
    }
    if (result.issues.empty()) result.value = std::move(events);
    return result;
}

bool parse_mc_label(const std::string& token, std::array<int, 3>& out) {
    // MC(x,y,z)
    if (token.rfind("MC(", 0) != 0 || token.back() != ')') return false;
    std::string body = token.substr(3, token.size() - 4);
    std::replace(body.begin(), body.end(), ',', ' ');
    std::istringstream is(body);
    int x, y, z;
    if (!(is >> x >> y >> z)) return false;
    out = {x, y, z};
    return true;
}

}  // namespace

std::vector<BandwidthAccounting> accountings_from_name(const std::string& name) {
    if (name == "aggregate") return {BandwidthAccounting::aggregate()};
    if (name == "tdm-shared") return {BandwidthAccounting::tdm_shared()};
    if (name == "both") {
        return {BandwidthAccounting::aggregate(), BandwidthAccounting::tdm_shared()};
    }
    throw SimError("InvalidSweep", "accounting must be aggregate, tdm-shared or both");
}

Parsed<ExperimentPlan> parse_plan(const std::string& path) {
    Parsed<ExperimentPlan> result;
    auto kv = KvFile::parse_file(path);
    if (!kv.ok()) {
        result.issues = std::move(kv.issues);
        return result;
    }
    KvReader r(*kv);
    ExperimentPlan plan;
    plan.plan_path = path;

    // --- files ---
    std::string topo_ref = r.get_string("topology", "");
    if (topo_ref.empty()) {
        r.add_issue("MissingFile", "plan must name a topology file");
    } else {
        plan.topology_path = resolve_relative(path, topo_ref);
        auto topo = parse_topology_file(plan.topology_path);
        if (!topo.ok()) {
            for (auto& issue : topo.issues) {
                issue.message = plan.topology_path + ": " + issue.message;
                r.issues().push_back(issue);
            }
        } else {
            plan.topology = std::move(*topo.value);
        }
    }

    std::string sched_ref = r.get_string("schedule", "");
    if (!sched_ref.empty()) {
        plan.schedule_path = resolve_relative(path, sched_ref);
    }

    // --- timing / seeds ---
    long duration_ps = r.get_int("duration_ps", 0);
    double duration_us = r.get_double("duration_us", 0.0);
    if (duration_ps > 0) {
        plan.duration_ps = static_cast<Tick>(duration_ps);
    } else if (duration_us > 0) {
        plan.duration_ps = static_cast<Tick>(duration_us * 1e6);
    } else {
        r.add_issue("ParseError", "plan needs duration_ps or duration_us > 0");
    }
    plan.drain = r.get_bool("drain", true);

    auto seed_tokens = r.get_tokens("seeds");
    for (const auto& tok : seed_tokens) {
        long v;
        if (!parse_long(tok, v) || v < 0) {
            r.add_issue("InvalidSweep", "seed `" + tok + "` is not a non-negative integer");
            continue;
        }
        plan.seeds.push_back(static_cast<std::uint64_t>(v));
    }
    if (plan.seeds.empty()) {
        r.add_issue("InvalidSweep", "plan needs a non-empty seeds list");
    }

    // --- traffic ---
    std::string kind = r.get_string("traffic.kind", "");
    if (kind == "uniform-random") plan.traffic.kind = TrafficKind::UniformRandom;
    else if (kind == "hotspot") plan.traffic.kind = TrafficKind::Hotspot;
    else if (kind == "pairwise-trace") plan.traffic.kind = TrafficKind::PairwiseTrace;
    else r.add_issue("ParseError", "traffic.kind must be uniform-random, hotspot or pairwise-trace");

    plan.traffic.injection_rate = r.get_double("traffic.injection_rate", 0.0);
    if (plan.traffic.injection_rate < 0.0 || plan.traffic.injection_rate > 1.0) {
        r.add_issue("InvalidSweep", "traffic.injection_rate must be in [0, 1]");
    }
    auto size_tokens = r.get_tokens("traffic.message_bytes");
    if (!size_tokens.empty()) {
        plan.traffic.message_bytes.clear();
        for (const auto& tok : size_tokens) {
            long v;
            if (!parse_long(tok, v) || v < 1) {
                r.add_issue("ParseError", "message size `" + tok + "` must be >= 1 byte");
                continue;
            }
            plan.traffic.message_bytes.push_back(static_cast<std::uint32_t>(v));
        }
    }
    plan.traffic.hotspot_ip = static_cast<int>(r.get_int("traffic.hotspot_ip", 0));
    plan.traffic.hotspot_fraction = r.get_double("traffic.hotspot_fraction", 0.5);
    std::string trace_ref = r.get_string("traffic.trace", "");
    if (plan.traffic.kind == TrafficKind::PairwiseTrace) {
        if (trace_ref.empty()) {
            r.add_issue("MissingFile", "pairwise-trace traffic needs traffic.trace");
        } else {
            auto tr = parse_trace_file(resolve_relative(path, trace_ref));
            if (!tr.ok()) {
                for (auto& issue : tr.issues) r.issues().push_back(issue);
            } else {
                plan.traffic.trace = std::move(*tr.value);
            }
        }
    } else if (!trace_ref.empty()) {
        r.add_issue("ParseError", "traffic.trace is only valid with traffic.kind = pairwise-trace");
    }

    // --- sweeps ---
    if (r.has("sweep.injection_rate")) {
        for (const auto& tok : r.get_tokens("sweep.injection_rate")) {
            double v;
            if (!parse_double(tok, v) || v < 0.0 || v > 1.0) {
                r.add_issue("InvalidSweep", "sweep rate `" + tok + "` must be in [0, 1]");
                continue;
            }
            plan.sweep_injection_rate.push_back(v);
        }
        if (plan.sweep_injection_rate.empty()) {
            r.add_issue("InvalidSweep", "sweep.injection_rate axis is empty");
        }
    }
    if (r.has("sweep.mc")) {
        for (const auto& tok : r.get_tokens("sweep.mc")) {
            std::array<int, 3> mc;
            if (!parse_mc_label(tok, mc) || mc[0] != mc[1] + mc[2]) {
                r.add_issue("InvalidSweep", "bad MoClib instance `" + tok + "`");
                continue;
            }
            plan.sweep_mc.push_back(mc);
        }
        if (plan.sweep_mc.empty()) r.add_issue("InvalidSweep", "sweep.mc axis is empty");
    }

    // --- reporting ---
    plan.moclib_comparison = r.get_bool("report.moclib_comparison", false);
    plan.tolerance_pct = r.get_double("report.tolerance_pct", 5.0);
    plan.accounting = r.get_string("report.accounting", "both");
    if (plan.accounting != "aggregate" && plan.accounting != "tdm-shared" &&
        plan.accounting != "both") {
        r.add_issue("ParseError", "report.accounting must be aggregate, tdm-shared or both");
    }
    plan.out_dir = r.get_string("out", "");

    r.flag_unknown_keys();

    // --- schedule binding (needs the topology) ---
    if (r.issues().empty() && plan.topology.width > 0) {
        if (!plan.schedule_path.empty()) {
            auto sf = parse_schedule_file(plan.schedule_path);
            if (!sf.ok()) {
                for (auto& issue : sf.issues) r.issues().push_back(issue);
            } else {
                auto bound = bind_schedules(*sf.value, plan.topology);
                if (!bound.ok()) {
                    for (auto& issue : bound.issues) r.issues().push_back(issue);
                } else {
                    plan.schedules = std::move(*bound.value);
                }
            }
        } else if (plan.topology.has_c_members()) {
            r.add_issue("MissingFile", "topology has C-layer members but the plan names no schedule");
        } else {
            plan.schedules.assign(plan.topology.routers.size(), ScheduleMemory{});
        }
    }

    result.issues = std::move(r.issues());
    if (result.issues.empty()) result.value = std::move(plan);
    return result;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace {

void merge_stats(SimStats& into, const SimStats& from) {
    into.end_ps += from.end_ps;  // summed spans keep rate math meaningful
    into.drained = into.drained && from.drained;
    into.deadlock_suspected = into.deadlock_suspected || from.deadlock_suspected;
    into.generated_messages += from.generated_messages;
    into.planned_flits += from.planned_flits;
    into.injected_flits += from.injected_flits;
    into.delivered_flits += from.delivered_flits;
    into.planned_words += from.planned_words;
    into.delivered_words += from.delivered_words;
    into.ordering_violations += from.ordering_violations;
    for (const auto& [key, fs] : from.flows) {
        FlowStats& dst = into.flows[key];
        dst.packets += fs.packets;
        dst.payload_bits += fs.payload_bits;
        dst.latency_ps.insert(dst.latency_ps.end(), fs.latency_ps.begin(), fs.latency_ps.end());
    }
    auto add_vec = [](auto& a, const auto& b) {
        if (a.size() < b.size()) a.resize(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    };
    add_vec(into.ip_delivered_payload_bits, from.ip_delivered_payload_bits);
    add_vec(into.occupancy_hist, from.occupancy_hist);
    add_vec(into.hop_hist, from.hop_hist);
    if (into.grants_per_output.size() < from.grants_per_output.size()) {
        into.grants_per_output.resize(from.grants_per_output.size());
    }
    for (std::size_t r = 0; r < from.grants_per_output.size(); ++r) {
        add_vec(into.grants_per_output[r], from.grants_per_output[r]);
    }
    add_vec(into.domain_cycles, from.domain_cycles);
    if (into.domain_names.empty()) into.domain_names = from.domain_names;
    for (const auto& [key, bytes] : from.flow_payloads) {
        auto& dst = into.flow_payloads[key];
        dst.insert(dst.end(), bytes.begin(), bytes.end());
    }
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

}  // namespace

int run_plan(const ExperimentPlan& plan, const RunPlanOptions& options) {
    const std::string out_dir = !options.out_dir.empty() ? options.out_dir
                                : !plan.out_dir.empty()  ? plan.out_dir
                                                         : std::string("out");
    fs::create_directories(out_dir);

    std::vector<double> rates = plan.sweep_injection_rate;
    if (rates.empty()) rates.push_back(plan.traffic.injection_rate);

    struct Task {
        std::size_t point;
        std::size_t seed_idx;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < rates.size(); ++p) {
        for (std::size_t s = 0; s < plan.seeds.size(); ++s) tasks.push_back({p, s});
    }

    std::vector<SimStats> results(tasks.size());
    std::vector<std::string> traces(tasks.size());
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::vector<std::string> errors(tasks.size());

    auto worker = [&]() {
        for (;;) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            TrafficPattern traffic = plan.traffic;
            traffic.injection_rate = rates[task.point];
            traffic.seed = plan.seeds[task.seed_idx];
            RunOptions ro;
            ro.duration_ps = plan.duration_ps;
            ro.drain = plan.drain;
            std::string trace_buf;
            if (options.trace) {
                trace_buf = trace_csv_header();
                ro.trace = [&trace_buf](const TraceEvent& ev) { trace_buf += trace_csv_line(ev); };
            }
            try {
                results[i] = run(plan.topology, plan.schedules, traffic, ro);
            } catch (const std::exception& e) {
                errors[i] = e.what();
                failed = true;
            }
            traces[i] = std::move(trace_buf);
        }
    };
    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!errors[i].empty()) {
            write_file(fs::path(out_dir) / "summary.txt", "error: " + errors[i] + "\n");
            return 2;
        }
    }

    bool all_drained = true;
    std::string points_csv = "point,injection_rate,seeds,drained\n";
    std::string global_summary;
    for (std::size_t p = 0; p < rates.size(); ++p) {
        SimStats merged;
        merged.drained = true;
        bool first = true;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].point != p) continue;
            if (first) {
                merged = results[i];
                first = false;
            } else {
                merge_stats(merged, results[i]);
            }
            if (options.trace) {
                write_file(fs::path(out_dir) / ("point" + std::to_string(p) + "_seed" +
                                                std::to_string(plan.seeds[tasks[i].seed_idx]) +
                                                "_trace.csv"),
                           traces[i]);
            }
        }
        all_drained = all_drained && merged.drained && !merged.deadlock_suspected;
        const std::string stem = "point" + std::to_string(p);
        write_file(fs::path(out_dir) / (stem + "_flows.csv"), flows_csv(merged));
        write_file(fs::path(out_dir) / (stem + "_ports.csv"), ports_csv(merged));
        write_file(fs::path(out_dir) / (stem + "_summary.txt"), summary_text(merged));
        points_csv += std::to_string(p) + "," + format_fixed(rates[p], 4) + "," +
                      std::to_string(plan.seeds.size()) + "," +
                      (merged.drained ? "true" : "false") + "\n";
        global_summary += stem + " rate=" + format_fixed(rates[p], 4) +
                          (merged.drained ? " drained" : " NOT-DRAINED") + "\n";
    }
    write_file(fs::path(out_dir) / "points.csv", points_csv);

    const std::string accounting =
        !options.accounting_override.empty() ? options.accounting_override : plan.accounting;
    if (plan.moclib_comparison) {
        auto report = area_matched_comparison(MoclibLibrary::builtin(), plan.tolerance_pct,
                                              accountings_from_name(accounting));
        write_file(fs::path(out_dir) / "gain_report.csv", report.to_csv());
        for (const auto& acc : accountings_from_name(accounting)) {
            global_summary += std::string("gain ") + acc.name() + " mean=" +
                              format_fixed(report.mean_gain(acc.mode), 2) + "% max=" +
                              format_fixed(report.max_gain(acc.mode), 2) + "%\n";
        }
        global_summary += "reference_gain mean=" + format_fixed(kReferenceMeanGainPct, 1) +
                          "% max=" + format_fixed(kReferenceMaxGainPct, 1) + "%\n";
    }
    if (!plan.sweep_mc.empty()) {
        std::string mc_csv = "instance,area_slices,frequency_mhz,source,per_port_mbps,accounting\n";
        for (const auto& mc : plan.sweep_mc) {
            auto entry = MoclibLibrary::builtin().lookup(mc[0], mc[1], mc[2]);
            for (const auto& acc : accountings_from_name(accounting)) {
                auto bw = switch_bandwidth(entry, acc);
                mc_csv += entry.label() + "," + format_fixed(entry.area_slices, 1) + "," +
                          format_fixed(entry.frequency_mhz, 1) + "," + to_string(entry.source) +
                          "," + format_fixed(bw.per_port_mbps, 3) + "," + acc.name() + "\n";
            }
        }
        write_file(fs::path(out_dir) / "mc_bandwidth.csv", mc_csv);
    }

    global_summary += std::string("status ") + (all_drained ? "ok" : "pathology") + "\n";
    write_file(fs::path(out_dir) / "summary.txt", global_summary);
    return all_drained ? 0 : 2;
}

}  // namespace mocsim
