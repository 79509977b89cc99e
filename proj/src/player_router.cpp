// SPDX-License-Identifier: Apache-2.0
#include "mocsim/player_router.hpp"

#include <algorithm>

namespace mocsim {

Parsed<SetupPipeline> validate_pipeline(const SetupPipeline& p) {
    Parsed<SetupPipeline> result;
    auto stage = [&](int v, const char* name) {
        if (v < 1) {
            result.issues.push_back(
                {"InvalidPipeline", std::string(name) + " stage must be >= 1 cycle", -1});
        }
    };
    stage(p.route_compute, "route_compute");
    stage(p.request, "request");
    stage(p.arbitrate, "arbitrate");
    stage(p.grant, "grant");
    stage(p.crossbar_set, "crossbar_set");
    stage(p.traversal, "traversal");
    if (p.total() < 6) {
        result.issues.push_back({"InvalidPipeline", "pipeline total must be >= 6 cycles", -1});
    }
    if (result.issues.empty()) result.value = p;
    return result;
}

int setup_latency(const SetupPipeline& p) { return p.total(); }

AcceptResult VcBuffer::accept_flit(const Flit& flit, Tick now) {
    if (occupancy() >= capacity_) return AcceptResult::Backpressured;
    if (flit.kind == FlitKind::Header) {
        if (expected_ != 0) {
            throw SimError("ProtocolViolation", "header flit arrived mid-packet in this VC");
        }
        expected_ = flit.packet->flit_count - 1;
    } else {
        if (expected_ == 0) {
            throw SimError("ProtocolViolation", "payload flit with no preceding header in this VC");
        }
        --expected_;
    }
    q_.push_back({flit, now});
    if (reserved_ > 0) --reserved_;
    return AcceptResult::Accepted;
}

Flit VcBuffer::pop_head() {
    Flit f = q_.front().flit;
    q_.pop_front();
    return f;
}

Arbiter::Arbiter(int num_ports, const std::vector<std::pair<int, int>>& reduced_pairs)
    : num_ports_(num_ports),
      rr_(num_ports, 0),
      fsm_(static_cast<size_t>(num_ports) * num_ports, FsmState::Idle),
      reduced_(static_cast<size_t>(num_ports) * num_ports, 0) {
    for (auto [in, out] : reduced_pairs) {
        reduced_[idx(in, out)] = 1;
    }
}

bool Arbiter::is_reduced(int input_port, int output_port) const {
    return reduced_[idx(input_port, output_port)] != 0;
}

FsmState Arbiter::state(int input_port, int output_port) const {
    if (is_reduced(input_port, output_port)) {
        throw SimError("ReducedPairRequest", "no FSM exists for a reduced pair");
    }
    return fsm_[idx(input_port, output_port)];
}

void Arbiter::mark_requested(int input_port, int output_port) {
    if (is_reduced(input_port, output_port)) {
        throw SimError("ReducedPairRequest",
                       "P-layer request between C-layer members of one router (" +
                           std::to_string(input_port) + "->" + std::to_string(output_port) + ")");
    }
    fsm_[idx(input_port, output_port)] = FsmState::Requested;
}

void Arbiter::mark_transferring(int input_port, int output_port) {
    fsm_[idx(input_port, output_port)] = FsmState::Transferring;
}

void Arbiter::release(int input_port, int output_port) {
    fsm_[idx(input_port, output_port)] = FsmState::Idle;
}

std::vector<ArbiterRequest> Arbiter::arbitrate(const std::vector<ArbiterRequest>& requests,
                                               const std::vector<std::uint8_t>& output_busy,
                                               const std::vector<std::uint8_t>& input_busy) {
    // requested[out] = input ports wanting it this cycle
    std::vector<std::vector<int>> wanting(num_ports_);
    for (const auto& r : requests) {
        if (is_reduced(r.input_port, r.output_port)) {
            throw SimError("ReducedPairRequest",
                           "P-layer request between C-layer members of one router (" +
                               std::to_string(r.input_port) + "->" +
                               std::to_string(r.output_port) + ")");
        }
        fsm_[idx(r.input_port, r.output_port)] = FsmState::Requested;
        wanting[r.output_port].push_back(r.input_port);
    }

    std::vector<std::uint8_t> input_taken = input_busy;
    std::vector<ArbiterRequest> grants;
    for (int out = 0; out < num_ports_; ++out) {
        if (wanting[out].empty() || output_busy[out]) continue;
        // Round-robin scan from the pointer; first requesting, free input wins.
        int chosen = -1;
        for (int step = 0; step < num_ports_; ++step) {
            int candidate = (rr_[out] + step) % num_ports_;
            if (input_taken[candidate]) continue;
            if (std::find(wanting[out].begin(), wanting[out].end(), candidate) !=
                wanting[out].end()) {
                chosen = candidate;
                break;
            }
        }
        if (chosen < 0) continue;
        input_taken[chosen] = 1;
        rr_[out] = (chosen + 1) % num_ports_;
        fsm_[idx(chosen, out)] = FsmState::Granted;
        grants.push_back({chosen, out});
    }
    return grants;
}

std::vector<CrossbarMove> crossbar_transfer(std::vector<Connection>& connections,
                                            std::vector<std::vector<VcBuffer>>& buffers,
                                            Tick now) {
    std::vector<CrossbarMove> moves;
    std::vector<int> output_driven;
    for (std::size_t i = 0; i < connections.size(); ++i) {
        Connection& conn = connections[i];
        if (conn.flits_remaining <= 0) continue;
        if (conn.start_delay > 0) {
            --conn.start_delay;
            continue;
        }
        VcBuffer& buf = buffers[conn.input_port][conn.vc];
        const Flit* head = buf.visible_head(now);
        if (!head) continue;  // upstream has not produced the next flit yet
        if (head->packet->id != conn.packet_id) {
            throw SimError("ProtocolViolation", "VC head does not belong to the granted packet");
        }
        if (std::find(output_driven.begin(), output_driven.end(), conn.output_port) !=
            output_driven.end()) {
            throw SimError("ProtocolViolation", "two connections drive one output port");
        }
        output_driven.push_back(conn.output_port);
        CrossbarMove mv;
        mv.input_port = conn.input_port;
        mv.vc = conn.vc;
        mv.output_port = conn.output_port;
        mv.connection_index = i;
        mv.flit = buf.pop_head();
        moves.push_back(std::move(mv));
        --conn.flits_remaining;
    }
    return moves;
}

}  // namespace mocsim
