// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mocsim/clayer.hpp"
#include "mocsim/common.hpp"
#include "mocsim/network_interface.hpp"
#include "mocsim/noc_model.hpp"
#include "mocsim/player_router.hpp"

namespace mocsim {

// ---------------------------------------------------------------------------
// Deterministic multi-clock cycle-driven kernel. Every NI, router P-layer
// and router C-layer is a component in its own clock domain; edges execute
// in ascending time, ties broken by domain id (NIs, then P-layers, then
// C-layers, each in index order). A value written at time t becomes visible
// to any reader strictly after t, so coincident edges cannot leak data
// within the same tick regardless of processing order.
// ---------------------------------------------------------------------------

struct ClockDomain {
    int id = 0;
    int frequency_mhz = 0;
    Tick period_ps = 0;
    std::string name;

    static ClockDomain at(int id, int frequency_mhz, std::string name) {
        return {id, frequency_mhz, period_ps_from_mhz(frequency_mhz), std::move(name)};
    }
};

// ---------------------------------------------------------------------------
// Traffic
// ---------------------------------------------------------------------------

enum class TrafficKind : std::uint8_t { UniformRandom, Hotspot, PairwiseTrace };

struct TrafficEvent {
    Tick at = 0;
    int src_ip = 0;
    int dst_ip = 0;
    std::uint32_t bytes = 0;
    MessageClass cls = MessageClass::Data;
};

struct TrafficPattern {
    TrafficKind kind = TrafficKind::UniformRandom;
    double injection_rate = 0.0;  // flits per cycle per IP
    std::uint64_t seed = 1;
    std::vector<std::uint32_t> message_bytes = {7};  // uniform choice
    int hotspot_ip = 0;
    double hotspot_fraction = 0.5;
    std::vector<TrafficEvent> trace;  // PairwiseTrace replay
};

// Reproducible injection events, ordered by (time, src_ip). Uniform and
// hotspot traffic target only Packet-mode destinations: same-router C-layer
// pairs have no P-layer path between themselves, so the generator never
// aims there.
std::vector<TrafficEvent> generate(const TrafficPattern& pattern, const MeshTopology& topo,
                                   Tick until_ps);

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct FlowKey {
    int src = 0;
    int dst = 0;
    auto operator<=>(const FlowKey&) const = default;
};

struct FlowStats {
    std::uint64_t packets = 0;       // delivered packets (or C-layer messages)
    std::uint64_t payload_bits = 0;  // delivered payload bits
    std::vector<Tick> latency_ps;    // injection-at-NI to last-flit-at-NI
};

struct SimStats {
    Tick duration_ps = 0;  // injection window
    Tick end_ps = 0;       // last executed edge (== duration when not draining)
    bool drained = false;
    bool deadlock_suspected = false;

    std::uint64_t generated_messages = 0;
    std::uint64_t planned_flits = 0;    // flits all generated messages will need
    std::uint64_t injected_flits = 0;   // written into injection FIFOs
    std::uint64_t delivered_flits = 0;  // read out of ejection FIFOs
    std::uint64_t planned_words = 0;    // C-layer words of all generated messages
    std::uint64_t delivered_words = 0;  // words taken across the cross-point
    std::uint64_t ordering_violations = 0;

    std::map<FlowKey, FlowStats> flows;
    std::vector<std::uint64_t> ip_delivered_payload_bits;   // per destination IP
    std::vector<std::uint64_t> occupancy_hist;              // VC occupancy, sampled per cycle
    std::vector<std::uint64_t> hop_hist;                    // per delivered packet
    std::vector<std::vector<std::uint64_t>> grants_per_output;  // [router][port]
    std::vector<std::uint64_t> domain_cycles;  // edges executed within the window
    std::vector<std::string> domain_names;

    // Filled only when RunOptions::capture_payloads is set: delivered bytes
    // per flow, in arrival order. Used by reassembly and multicast checks.
    std::map<FlowKey, std::vector<std::uint8_t>> flow_payloads;
};

struct TraceEvent {
    Tick tick = 0;
    Coord router;
    const char* event = "";  // flit_in | grant | flit_out | c_xfer
    int port = 0;
    int vc = 0;
    std::uint64_t packet_id = 0;
};

using TraceSink = std::function<void(const TraceEvent&)>;

struct RunOptions {
    Tick duration_ps = 0;
    bool drain = true;
    SetupPipeline pipeline{};
    TraceSink trace;  // optional; events are emitted only when set
    bool capture_payloads = false;
    int watchdog_multiplier = 10;  // drain gives up at multiplier x duration
    int cdc_fifo_depth = 0;        // 0 = router buffer_depth
};

// Runs the whole NoC. `schedules` is indexed by router (row-major); routers
// with C-layer members must have a non-empty schedule. Deterministic: the
// same inputs give bit-identical stats.
SimStats run(const MeshTopology& topo, const std::vector<ScheduleMemory>& schedules,
             const TrafficPattern& traffic, const RunOptions& options);

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

struct Summary {
    std::optional<double> mean_latency_ns;
    std::optional<double> median_latency_ns;
    std::optional<double> p99_latency_ns;
    double avg_hop_count = 0.0;
    std::uint64_t delivered_packets = 0;
    double total_throughput_mbps = 0.0;  // delivered payload over simulated time
};

Summary summarize(const SimStats& stats);

std::string flows_csv(const SimStats& stats);
std::string ports_csv(const SimStats& stats);
std::string summary_text(const SimStats& stats);
std::string trace_csv_header();
std::string trace_csv_line(const TraceEvent& ev);

}  // namespace mocsim
