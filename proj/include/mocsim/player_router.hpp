// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "mocsim/common.hpp"
#include "mocsim/noc_model.hpp"

namespace mocsim {

// ---------------------------------------------------------------------------
// Packet-switched layer primitives: VC buffers with virtual cut-through
// admission, the central arbitrator (parallel per-pair FSMs, round-robin
// conflict resolution, state reduction for C-layer local pairs), and the
// multiplexer-based cross-point. The cycle loop that drives these lives in
// the simulation kernel.
// ---------------------------------------------------------------------------

// Connection setup pipeline. Stage latencies are in router cycles, each at
// least 1; the total is the fixed setup overhead between a header landing
// in an input buffer and appearing at the downstream input.
struct SetupPipeline {
    int route_compute = 1;
    int request = 1;
    int arbitrate = 1;
    int grant = 1;
    int crossbar_set = 1;
    int traversal = 1;

    int total() const {
        return route_compute + request + arbitrate + grant + crossbar_set + traversal;
    }
};

Parsed<SetupPipeline> validate_pipeline(const SetupPipeline& p);

// Uncontended setup latency in cycles: the pipeline total.
int setup_latency(const SetupPipeline& p);

// Virtual cut-through admission: forward only when the downstream buffer
// can hold the entire packet.
inline bool vct_admit(int packet_flit_count, int downstream_free_slots) {
    return downstream_free_slots >= packet_flit_count;
}

// ---------------------------------------------------------------------------
// VC buffer: one virtual channel's flit queue. Writes are timestamped; a
// flit becomes visible to the reader strictly after the cycle that wrote
// it, which is what lets upstream and downstream routers run on different
// clocks without a separate link register.
// ---------------------------------------------------------------------------

enum class AcceptResult : std::uint8_t { Accepted, Backpressured };

class VcBuffer {
public:
    VcBuffer() = default;
    explicit VcBuffer(int capacity) : capacity_(capacity) {}

    int capacity() const { return capacity_; }
    int occupancy() const { return static_cast<int>(q_.size()); }
    int reserved() const { return reserved_; }
    // Slots available to a new whole-packet reservation.
    int free_for_reservation() const { return capacity_ - occupancy() - reserved_; }

    void reserve(int flits) { reserved_ += flits; }

    // Link-level handoff. Backpressured when full. A payload flit with no
    // in-progress packet in this VC is a protocol violation: headers lead.
    AcceptResult accept_flit(const Flit& flit, Tick now);

    const Flit* visible_head(Tick now) const {
        if (q_.empty() || q_.front().at >= now) return nullptr;
        return &q_.front().flit;
    }
    Flit pop_head();

    bool empty() const { return q_.empty(); }

private:
    struct Timed {
        Flit flit;
        Tick at;
    };
    int capacity_ = 0;
    int reserved_ = 0;
    int expected_ = 0;  // flits of the in-progress packet still to arrive
    std::deque<Timed> q_;
};

// ---------------------------------------------------------------------------
// Central arbitrator
// ---------------------------------------------------------------------------

enum class FsmState : std::uint8_t { Idle, Requested, Granted, Transferring };

struct ArbiterRequest {
    int input_port = 0;
    int output_port = 0;
};

// One FSM per (input, output) pair, except the reduced pairs: local port
// pairs whose IPs are both C-layer members have no P-layer path between
// themselves and no FSM at all. Requests naming a reduced pair are a hard
// error, not a drop: they mean the NI picked the wrong layer.
class Arbiter {
public:
    Arbiter() = default;
    Arbiter(int num_ports, const std::vector<std::pair<int, int>>& reduced_pairs);

    int num_ports() const { return num_ports_; }
    bool is_reduced(int input_port, int output_port) const;
    FsmState state(int input_port, int output_port) const;
    int rr_pointer(int output_port) const { return rr_[output_port]; }

    void mark_requested(int input_port, int output_port);
    void mark_transferring(int input_port, int output_port);
    void release(int input_port, int output_port);

    // One arbitration cycle. Mutually exclusive requests are all granted
    // together; conflicting requests for one output are granted one per
    // cycle in round-robin order from the output's pointer, which then
    // advances past the granted input. At most one grant per input port
    // per cycle (single buffer read port). Busy inputs/outputs take no
    // new grant. Throws SimError("ReducedPairRequest") on a reduced pair.
    std::vector<ArbiterRequest> arbitrate(const std::vector<ArbiterRequest>& requests,
                                          const std::vector<std::uint8_t>& output_busy,
                                          const std::vector<std::uint8_t>& input_busy);

private:
    int idx(int input_port, int output_port) const { return input_port * num_ports_ + output_port; }

    int num_ports_ = 0;
    std::vector<int> rr_;             // per-output round-robin pointer
    std::vector<FsmState> fsm_;       // num_ports^2
    std::vector<std::uint8_t> reduced_;
};

// ---------------------------------------------------------------------------
// Cross-point transfers
// ---------------------------------------------------------------------------

// One granted P-layer connection being served by the cross-point.
struct Connection {
    int input_port = 0;
    int vc = 0;
    int output_port = 0;
    int flits_remaining = 0;
    // Cycles until the first flit may traverse (grant + crossbar-set +
    // traversal stages after the arbitration decision).
    int start_delay = 0;
    std::uint64_t packet_id = 0;
};

struct CrossbarMove {
    int input_port = 0;
    int vc = 0;
    int output_port = 0;
    std::size_t connection_index = 0;  // index into the connections vector
    Flit flit;
};

// One cross-point cycle: each live connection whose start delay has
// elapsed moves one visible flit from its input VC toward its output.
// Each output is driven by at most one input per cycle (checked). A
// connection whose head flit has not arrived yet simply idles this cycle.
std::vector<CrossbarMove> crossbar_transfer(std::vector<Connection>& connections,
                                            std::vector<std::vector<VcBuffer>>& buffers,
                                            Tick now);

}  // namespace mocsim
