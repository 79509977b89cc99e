// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mocsim/common.hpp"
#include "mocsim/noc_model.hpp"

namespace mocsim {

// ---------------------------------------------------------------------------
// Time-multiplexed circuit-switched layer: a 32-bit multiplexer cross-point
// between the C-layer member ports of one router, configured per TDM slot
// by a static schedule. Strictly intra-router; the schedule is the
// addressing (no headers, no buffering).
// ---------------------------------------------------------------------------

// Source select for one output in one slot: a C-layer input index, or idle.
struct SourceSelect {
    int input = -1;

    bool is_idle() const { return input < 0; }
    static SourceSelect idle() { return {}; }
    static SourceSelect from(int input_port) { return {input_port}; }
    bool operator==(const SourceSelect&) const = default;
};

// One slot: every C-layer output gets a source select (idle counts).
struct SlotConfig {
    std::vector<SourceSelect> out_source;
};

struct ScheduleMemory {
    int c_ports = 0;
    std::vector<SlotConfig> slots;

    int slot_count() const { return static_cast<int>(slots.size()); }
};

// Rejects schedules that reference ports outside [0, c_ports) or that do
// not configure every output in every slot.
Parsed<ScheduleMemory> validate_schedule(const ScheduleMemory& schedule, int c_ports);

struct CLayerState {
    int current_slot = 0;
    int c_clock_mhz = 0;
    int width_bits = 32;
};

// Slot wheel: advances once per C-layer clock cycle, wrapping at S.
int advance_slot(CLayerState& state, const ScheduleMemory& schedule);

// One cross-point cycle: every output receives its selected source's word,
// in the same cycle; idle outputs emit nothing. Multicast is any slot where
// several outputs select the same input.
template <typename Word>
std::vector<std::optional<Word>> transfer_slot(const SlotConfig& config,
                                               const std::vector<std::optional<Word>>& inputs) {
    std::vector<std::optional<Word>> outputs(config.out_source.size());
    for (size_t o = 0; o < config.out_source.size(); ++o) {
        const SourceSelect& sel = config.out_source[o];
        if (sel.is_idle()) continue;
        if (sel.input < 0 || static_cast<size_t>(sel.input) >= inputs.size()) {
            throw SimError("UnknownPort", "slot selects input " + std::to_string(sel.input) +
                                              " of " + std::to_string(inputs.size()));
        }
        outputs[o] = inputs[sel.input];
    }
    return outputs;
}

// Configuration bits for a whole schedule: S slots x C outputs x ceil(log2 C)
// select bits. This is the nominal sizing rule; it has no code left for an
// explicit idle select. Throws SimError("DegenerateCLayer") for C < 2.
std::uint64_t schedule_bits(int c_ports, int slot_count);

// Sizing with idle made encodable: a spare code is used when the power of
// two leaves one, otherwise each select carries one extra bit.
std::uint64_t schedule_bits_with_idle(int c_ports, int slot_count);

unsigned select_bits(int c_ports);
unsigned select_bits_with_idle(int c_ports);

// ---------------------------------------------------------------------------
// Schedule file: one block per router.
//
//   router <x> <y>
//   slot 0: out0 <- in1, out1 <- in0
//   slot 1: out0 <- idle, out1 <- in0
//
// Every slot line must configure every C-layer output of that router.
// ---------------------------------------------------------------------------

struct ScheduleFile {
    // keyed by (x, y); map keeps router order deterministic
    std::map<std::pair<int, int>, ScheduleMemory> per_router;
};

Parsed<ScheduleFile> parse_schedule_text(const std::string& text);
Parsed<ScheduleFile> parse_schedule_file(const std::string& path);

// Bind a schedule file to a topology: checks that each block names a router
// that exists and matches its c_ports; routers with C members and no block
// are an error. Result is indexed by router (row-major), empty ScheduleMemory
// where a router has no C-layer.
Parsed<std::vector<ScheduleMemory>> bind_schedules(const ScheduleFile& file,
                                                   const MeshTopology& topo);

}  // namespace mocsim
