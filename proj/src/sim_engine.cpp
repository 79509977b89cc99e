// SPDX-License-Identifier: Apache-2.0
#include "mocsim/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>

namespace mocsim {

namespace {

//////////////////////////////////////////////////////////////////////////////
//
// Packetization parameters shared by the generator and the kernel
//
//////////////////////////////////////////////////////////////////////////////

struct PacketParams {
    int channel_width_p = 8;
    int buffer_depth = 16;  // min over the mesh; bounds packet size on any path
    HeaderLayout layout;
};

PacketParams packet_params_for(const MeshTopology& topo) {
    PacketParams pp;
    pp.channel_width_p = topo.routers.front().channel_width_p;
    pp.buffer_depth = topo.routers.front().buffer_depth;
    for (const auto& r : topo.routers) {
        if (r.channel_width_p != pp.channel_width_p) {
            throw SimError("HeterogeneousChannel",
                           "P-layer channel width must be uniform across the mesh");
        }
        pp.buffer_depth = std::min(pp.buffer_depth, r.buffer_depth);
    }
    pp.layout = HeaderLayout::for_mesh(pp.buffer_depth, topo.width, topo.height);
    return pp;
}

std::vector<std::uint8_t> make_payload(std::uint64_t seed, std::uint64_t msg_id,
                                       std::uint32_t bytes) {
    SplitMix64 rng(SplitMix64::mix(seed, msg_id ^ 0xA5A5A5A5ULL));
    std::vector<std::uint8_t> out(bytes);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng.next_u64() & 0xFF);
    return out;
}

}  // namespace

//////////////////////////////////////////////////////////////////////////////
//
// Traffic generation
//
//////////////////////////////////////////////////////////////////////////////

std::vector<TrafficEvent> generate(const TrafficPattern& pattern, const MeshTopology& topo,
                                   Tick until_ps) {
    if (pattern.kind == TrafficKind::PairwiseTrace) {
        std::vector<TrafficEvent> events;
        for (const auto& ev : pattern.trace) {
            if (ev.at < until_ps) events.push_back(ev);
        }
        std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
            return std::tie(a.at, a.src_ip) < std::tie(b.at, b.src_ip);
        });
        return events;
    }

    if (pattern.injection_rate < 0.0 || pattern.injection_rate > 1.0) {
        throw SimError("InvalidTraffic", "injection_rate must be in [0, 1] flits/cycle/IP");
    }
    if (pattern.message_bytes.empty()) {
        throw SimError("InvalidTraffic", "message size distribution is empty");
    }
    std::vector<TrafficEvent> events;
    if (pattern.injection_rate == 0.0) return events;

    const PacketParams pp = packet_params_for(topo);
    double mean_flits = 0.0;
    for (auto b : pattern.message_bytes) {
        if (b < 1) throw SimError("InvalidTraffic", "message size must be >= 1 byte");
        mean_flits += static_cast<double>(
            flits_for_message(b, pp.channel_width_p, pp.buffer_depth, pp.layout));
    }
    mean_flits /= static_cast<double>(pattern.message_bytes.size());
    const double p_msg = pattern.injection_rate / mean_flits;

    for (const auto& src : topo.ips) {
        SplitMix64 rng(SplitMix64::mix(pattern.seed, static_cast<std::uint64_t>(src.ip)));
        // Destinations reachable over the P-layer only; same-router C pairs
        // are served by the C-layer schedule, never generated here.
        std::vector<int> eligible;
        for (const auto& dst : topo.ips) {
            if (dst.ip == src.ip) continue;
            if (choose_mode(topo, src.ip, dst.ip) == TransferMode::Packet) {
                eligible.push_back(dst.ip);
            }
        }
        if (eligible.empty()) continue;

        bool hotspot_ok = pattern.kind == TrafficKind::Hotspot &&
                          pattern.hotspot_ip != src.ip &&
                          std::find(eligible.begin(), eligible.end(), pattern.hotspot_ip) !=
                              eligible.end();

        const Tick period = period_ps_from_mhz(src.clock_mhz);
        const std::uint64_t cycles = until_ps / period;
        for (std::uint64_t k = 0; k < cycles; ++k) {
            if (!rng.chance(p_msg)) continue;
            TrafficEvent ev;
            ev.at = k * period;
            ev.src_ip = src.ip;
            ev.bytes = pattern.message_bytes[rng.next_below(pattern.message_bytes.size())];
            if (hotspot_ok && rng.chance(pattern.hotspot_fraction)) {
                ev.dst_ip = pattern.hotspot_ip;
            } else {
                ev.dst_ip = eligible[rng.next_below(eligible.size())];
            }
            ev.cls = ev.bytes <= 8 ? MessageClass::Control : MessageClass::Data;
            events.push_back(ev);
        }
    }
    std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
        return std::tie(a.at, a.src_ip) < std::tie(b.at, b.src_ip);
    });
    return events;
}

//////////////////////////////////////////////////////////////////////////////
//
// Kernel
//
//////////////////////////////////////////////////////////////////////////////

namespace {

struct WordInFlight {
    std::uint64_t message_id = 0;
    int src_ip = 0;
    std::uint8_t bytes[4] = {0, 0, 0, 0};
    int byte_count = 0;
    bool last = false;
    Tick created_at = 0;
};

struct PendingSetup {
    int vc = 0;
    PacketPtr packet;
};

enum class Stage : std::uint8_t { Idle, Route, Request, ArbWait };

// Setup pipeline state for the oldest un-granted packet of one input port.
// Packets of a port are set up strictly in arrival order, which is what
// makes per-flow delivery order equal injection order.
struct PortPipeline {
    Stage stage = Stage::Idle;
    int counter = 0;
    bool arb_eligible = false;
    Direction dir = Direction::Local;
    int out_port = -1;
};

struct ConnTarget {
    bool to_neighbor = false;
    int neighbor_router = -1;
    int neighbor_port = -1;
    int target_vc = 0;
    int dst_ip = -1;  // ejection target
};

struct RouterState {
    Coord coord;
    RouterConfig cfg;
    int num_ports = 0;  // 0..3 directional, 4.. local
    std::vector<std::uint8_t> port_exists;
    std::vector<int> local_ip;  // -1 for directional / unattached local ports
    std::vector<std::vector<VcBuffer>> vcs;
    std::vector<std::deque<PendingSetup>> pending;
    std::vector<PortPipeline> pipe;
    Arbiter arbiter;
    std::vector<Connection> conns;
    std::vector<ConnTarget> targets;
    std::vector<std::uint8_t> conn_started;
    std::vector<int> drain_remaining;  // local ingest: flits left of current packet
    std::vector<int> drain_vc;
};

struct TimedEvent {
    TrafficEvent ev;
    std::uint64_t msg_id = 0;
};

struct NiState {
    int ip = 0;
    int router = -1;
    int port = -1;  // engine port index on the router
    ClockCrossingFifo<Flit> inj{1};
    ClockCrossingFifo<Flit> ej{1};
    std::deque<Flit> out_flits;
    std::deque<WordInFlight> c_out;
    std::vector<TimedEvent> events;
    std::size_t cursor = 0;
    std::map<int, std::uint64_t> flow_seq_next;  // per destination
    std::map<int, std::uint64_t> expect_seq;     // per source, at the sink side
};

struct CState {
    ScheduleMemory sched;
    CLayerState st;
    std::vector<int> member_ips;  // C port index -> ip
    // per slot: (source C index, listening output C indexes), sources ascending
    std::vector<std::vector<std::pair<int, std::vector<int>>>> slot_sources;
};

class Engine {
public:
    Engine(const MeshTopology& topo, const std::vector<ScheduleMemory>& schedules,
           const TrafficPattern& traffic, const RunOptions& options)
        : topo_(topo), opt_(options) {
        auto pipe_ok = validate_pipeline(opt_.pipeline);
        if (!pipe_ok.ok()) {
            throw SimError("InvalidPipeline", pipe_ok.issues_text());
        }
        pp_ = packet_params_for(topo);
        build_routers(schedules);
        build_nis();
        build_domains();
        load_traffic(traffic);
    }

    SimStats run_all();

private:
    void build_routers(const std::vector<ScheduleMemory>& schedules);
    void build_nis();
    void build_domains();
    void load_traffic(const TrafficPattern& traffic);

    void step_ni(int i, Tick now);
    void step_router(int r, Tick now);
    void step_clayer(int c, Tick now);
    void audit(Tick now) const;
    bool drained() const {
        return stats_.delivered_flits == stats_.planned_flits &&
               stats_.delivered_words == stats_.planned_words;
    }

    void trace(Tick tick, const Coord& router, const char* event, int port, int vc,
               std::uint64_t packet_id) {
        if (opt_.trace) opt_.trace(TraceEvent{tick, router, event, port, vc, packet_id});
    }

    const MeshTopology& topo_;
    RunOptions opt_;
    PacketParams pp_;
    std::uint64_t next_packet_id_ = 1;
    std::uint64_t traffic_seed_ = 1;

    std::vector<NiState> nis_;
    std::vector<RouterState> routers_;
    std::vector<std::optional<CState>> cstates_;
    std::vector<int> clayer_router_;  // C component index -> router index

    struct DomainTarget {
        int kind;  // 0 = NI, 1 = router P, 2 = router C
        int index;
    };
    std::vector<ClockDomain> domains_;
    std::vector<DomainTarget> dispatch_;

    SimStats stats_;
};

void Engine::build_routers(const std::vector<ScheduleMemory>& schedules) {
    if (schedules.size() != topo_.routers.size()) {
        throw SimError("MissingSchedule", "need one (possibly empty) schedule per router");
    }
    const int R = static_cast<int>(topo_.routers.size());
    routers_.reserve(R);
    cstates_.resize(R);
    int max_depth = 0;
    for (int r = 0; r < R; ++r) {
        const RouterConfig& cfg = topo_.routers[r];
        RouterState rs;
        rs.coord = topo_.coord_of(r);
        rs.cfg = cfg;
        rs.num_ports = 4 + cfg.local_ips;
        rs.port_exists.assign(rs.num_ports, 0);
        rs.local_ip.assign(rs.num_ports, -1);
        for (int d = 0; d < 4; ++d) {
            if (topo_.neighbor(rs.coord, static_cast<Direction>(d))) rs.port_exists[d] = 1;
        }
        for (int l = 0; l < cfg.local_ips; ++l) rs.port_exists[4 + l] = 1;
        for (int ip : topo_.ips_at(r)) {
            rs.local_ip[4 + topo_.ips[ip].local_port] = ip;
        }

        // C-layer member pairs are removed from the P-layer cross-point and
        // their arbiter FSMs are reduced away.
        std::vector<std::pair<int, int>> reduced;
        auto members = topo_.c_members_at(r);
        for (int a : members) {
            for (int b : members) {
                if (a == b) continue;
                reduced.emplace_back(4 + topo_.ips[a].local_port, 4 + topo_.ips[b].local_port);
            }
        }
        rs.arbiter = Arbiter(rs.num_ports, reduced);

        rs.vcs.resize(rs.num_ports);
        for (auto& port_vcs : rs.vcs) {
            port_vcs.assign(cfg.vcs_per_port, VcBuffer(cfg.buffer_depth));
        }
        rs.pending.resize(rs.num_ports);
        rs.pipe.resize(rs.num_ports);
        rs.drain_remaining.assign(rs.num_ports, 0);
        rs.drain_vc.assign(rs.num_ports, 0);
        routers_.push_back(std::move(rs));
        max_depth = std::max(max_depth, cfg.buffer_depth);

        if (!members.empty()) {
            if (schedules[r].slots.empty()) {
                throw SimError("MissingSchedule", "router " + topo_.coord_of(r).to_string() +
                                                      " has C members but no schedule");
            }
            auto v = validate_schedule(schedules[r], cfg.c_ports);
            if (!v.ok()) throw SimError("UnknownPort", v.issues_text());
            CState cs;
            cs.sched = *v.value;
            cs.st.c_clock_mhz = topo_.c_clock_mhz[r];
            cs.st.width_bits = cfg.channel_width_c;
            cs.member_ips = members;
            cs.slot_sources.resize(cs.sched.slot_count());
            for (int s = 0; s < cs.sched.slot_count(); ++s) {
                std::map<int, std::vector<int>> by_source;
                const SlotConfig& slot = cs.sched.slots[s];
                for (int o = 0; o < static_cast<int>(slot.out_source.size()); ++o) {
                    if (!slot.out_source[o].is_idle()) {
                        by_source[slot.out_source[o].input].push_back(o);
                    }
                }
                for (auto& [src, outs] : by_source) {
                    // Sources beyond the attached members are legal but inert.
                    cs.slot_sources[s].emplace_back(src, outs);
                }
            }
            cstates_[r] = std::move(cs);
            clayer_router_.push_back(r);
        }
    }
    stats_.grants_per_output.resize(R);
    for (int r = 0; r < R; ++r) {
        stats_.grants_per_output[r].assign(routers_[r].num_ports, 0);
    }
    stats_.occupancy_hist.assign(max_depth + 1, 0);
}

void Engine::build_nis() {
    nis_.resize(topo_.ips.size());
    for (const auto& a : topo_.ips) {
        NiState& ni = nis_[a.ip];
        ni.ip = a.ip;
        ni.router = topo_.router_index(a.router);
        ni.port = 4 + a.local_port;
        int depth = opt_.cdc_fifo_depth > 0 ? opt_.cdc_fifo_depth
                                            : topo_.routers[ni.router].buffer_depth;
        ni.inj = ClockCrossingFifo<Flit>(depth);
        ni.ej = ClockCrossingFifo<Flit>(depth);
    }
    stats_.ip_delivered_payload_bits.assign(topo_.ips.size(), 0);
    stats_.hop_hist.assign(topo_.width + topo_.height + 1, 0);
}

void Engine::build_domains() {
    int id = 0;
    for (const auto& a : topo_.ips) {
        domains_.push_back(ClockDomain::at(id++, a.clock_mhz, "ni" + std::to_string(a.ip)));
        dispatch_.push_back({0, a.ip});
    }
    for (std::size_t r = 0; r < topo_.routers.size(); ++r) {
        domains_.push_back(ClockDomain::at(id++, topo_.router_clock_mhz[r],
                                           "router" + topo_.coord_of(static_cast<int>(r)).to_string()));
        dispatch_.push_back({1, static_cast<int>(r)});
    }
    for (std::size_t c = 0; c < clayer_router_.size(); ++c) {
        int r = clayer_router_[c];
        domains_.push_back(
            ClockDomain::at(id++, topo_.c_clock_mhz[r], "clayer" + topo_.coord_of(r).to_string()));
        dispatch_.push_back({2, static_cast<int>(c)});
    }
    stats_.domain_cycles.assign(domains_.size(), 0);
    for (const auto& d : domains_) stats_.domain_names.push_back(d.name);
}

void Engine::load_traffic(const TrafficPattern& traffic) {
    traffic_seed_ = traffic.seed;
    auto events = generate(traffic, topo_, opt_.duration_ps);
    stats_.generated_messages = events.size();
    for (std::size_t i = 0; i < events.size(); ++i) {
        const TrafficEvent& ev = events[i];
        const std::uint64_t msg_id = i;
        if (choose_mode(topo_, ev.src_ip, ev.dst_ip) == TransferMode::Circuit) {
            // A C-layer word is ready in the source IP from its creation
            // tick onward; the wheel picks it up whenever the schedule
            // selects the source. Visibility is gated by created_at.
            auto payload = make_payload(traffic.seed, msg_id, ev.bytes);
            std::uint64_t words = ceil_div_u64(payload.size(), 4);
            stats_.planned_words += words;
            for (std::uint64_t w = 0; w < words; ++w) {
                WordInFlight word;
                word.message_id = msg_id;
                word.src_ip = ev.src_ip;
                word.created_at = ev.at;
                word.last = (w + 1 == words);
                word.byte_count = static_cast<int>(
                    std::min<std::uint64_t>(4, payload.size() - w * 4));
                for (int b = 0; b < word.byte_count; ++b) word.bytes[b] = payload[w * 4 + b];
                nis_[ev.src_ip].c_out.push_back(word);
            }
        } else {
            stats_.planned_flits +=
                flits_for_message(ev.bytes, pp_.channel_width_p, pp_.buffer_depth, pp_.layout);
            nis_[ev.src_ip].events.push_back({ev, msg_id});
        }
    }
}

void Engine::step_ni(int i, Tick now) {
    NiState& ni = nis_[i];

    // Injection-side: turn due traffic events into packets.
    while (ni.cursor < ni.events.size() && ni.events[ni.cursor].ev.at < now) {
        const TimedEvent& te = ni.events[ni.cursor++];
        Message msg;
        msg.id = te.msg_id;
        msg.src_ip = te.ev.src_ip;
        msg.dst_ip = te.ev.dst_ip;
        msg.payload = make_payload(traffic_seed_, te.msg_id, te.ev.bytes);
        msg.cls = te.ev.cls;
        msg.created_at = te.ev.at;

        PacketizeContext ctx;
        ctx.channel_width_p = pp_.channel_width_p;
        ctx.buffer_depth = pp_.buffer_depth;
        ctx.layout = pp_.layout;
        ctx.next_packet_id = &next_packet_id_;
        ctx.next_flow_seq = &ni.flow_seq_next[msg.dst_ip];
        ctx.dest = topo_.ips[msg.dst_ip].router;
        for (const auto& pkt : packetize(msg, ctx)) {
            pkt->header_bits = encode_header({pkt->flit_count, pkt->dest}, pp_.layout);
            for (int f = 0; f < pkt->flit_count; ++f) {
                ni.out_flits.push_back(
                    Flit{pkt, f == 0 ? FlitKind::Header : FlitKind::Payload, f});
            }
        }
    }

    // One flit per cycle onto the injection link; stall when the FIFO is full.
    if (!ni.out_flits.empty() && ni.inj.try_write(ni.out_flits.front(), now)) {
        ni.out_flits.pop_front();
        ++stats_.injected_flits;
    }

    // One flit per cycle off the ejection FIFO.
    if (auto f = ni.ej.try_read(now)) {
        ++stats_.delivered_flits;
        const PacketPtr& p = f->packet;
        if (f->kind == FlitKind::Header) {
            HeaderFields decoded = decode_header(p->header_bits, pp_.layout);
            if (decoded.flit_count != p->flit_count || !(decoded.dest == p->dest)) {
                throw SimError("ProtocolViolation", "header did not survive the wire");
            }
        }
        if (f->last()) {
            FlowKey key{p->src_ip, p->dst_ip};
            FlowStats& fs = stats_.flows[key];
            ++fs.packets;
            fs.payload_bits += p->payload.size() * 8;
            fs.latency_ps.push_back(now - p->created_at);
            stats_.ip_delivered_payload_bits[ni.ip] += p->payload.size() * 8;
            if (p->hops < static_cast<int>(stats_.hop_hist.size())) ++stats_.hop_hist[p->hops];
            std::uint64_t& expect = ni.expect_seq[p->src_ip];
            if (p->flow_seq != expect) {
                ++stats_.ordering_violations;
                expect = p->flow_seq + 1;
            } else {
                ++expect;
            }
            if (opt_.capture_payloads) {
                auto& buf = stats_.flow_payloads[key];
                buf.insert(buf.end(), p->payload.begin(), p->payload.end());
            }
        }
    }
}

void Engine::step_router(int r, Tick now) {
    RouterState& R = routers_[r];
    const SetupPipeline& pl = opt_.pipeline;

    // Occupancy sampling at cycle start.
    for (int port = 0; port < R.num_ports; ++port) {
        if (!R.port_exists[port]) continue;
        for (const auto& vc : R.vcs[port]) ++stats_.occupancy_hist[vc.occupancy()];
    }

    // Local ingest: drain each attached NI's injection FIFO, one flit per
    // cycle, into a VC with room for the whole packet (cut-through applies
    // at injection too).
    for (int port = 4; port < R.num_ports; ++port) {
        int ip = R.local_ip[port];
        if (ip < 0) continue;
        NiState& ni = nis_[ip];
        if (R.drain_remaining[port] > 0) {
            if (auto f = ni.inj.try_read(now)) {
                R.vcs[port][R.drain_vc[port]].accept_flit(*f, now);
                trace(now, R.coord, "flit_in", port, R.drain_vc[port], f->packet->id);
                --R.drain_remaining[port];
            }
        } else if (const Flit* head = ni.inj.peek(now)) {
            if (head->kind != FlitKind::Header) {
                throw SimError("ProtocolViolation", "injection stream does not start with a header");
            }
            const int flit_count = head->packet->flit_count;
            int chosen = -1;
            for (int vc = 0; vc < R.cfg.vcs_per_port; ++vc) {
                if (R.vcs[port][vc].free_for_reservation() >= flit_count) {
                    chosen = vc;
                    break;
                }
            }
            if (chosen >= 0) {
                R.vcs[port][chosen].reserve(flit_count);
                auto f = ni.inj.try_read(now);
                R.vcs[port][chosen].accept_flit(*f, now);
                trace(now, R.coord, "flit_in", port, chosen, f->packet->id);
                R.pending[port].push_back({chosen, f->packet});
                R.drain_vc[port] = chosen;
                R.drain_remaining[port] = flit_count - 1;
            }
        }
    }

    // Setup pipeline progress for the oldest pending packet of each port.
    for (int port = 0; port < R.num_ports; ++port) {
        if (!R.port_exists[port] || R.pending[port].empty()) continue;
        PortPipeline& pp = R.pipe[port];
        const PendingSetup& front = R.pending[port].front();
        if (pp.stage == Stage::Idle) {
            const Flit* h = R.vcs[port][front.vc].visible_head(now);
            if (!h || h->kind != FlitKind::Header || h->packet->id != front.packet->id) continue;
            pp.stage = Stage::Route;
            pp.counter = pl.route_compute;
        }
        if (pp.stage == Stage::Route) {
            if (--pp.counter == 0) {
                pp.dir = xy_route(R.coord, front.packet->dest);
                pp.out_port = pp.dir == Direction::Local
                                  ? 4 + topo_.ips[front.packet->dst_ip].local_port
                                  : static_cast<int>(pp.dir);
                pp.stage = Stage::Request;
                pp.counter = pl.request;
            }
            continue;
        }
        if (pp.stage == Stage::Request) {
            if (--pp.counter == 0) {
                pp.stage = Stage::ArbWait;
                pp.counter = pl.arbitrate;
            }
            continue;
        }
        if (pp.stage == Stage::ArbWait) {
            if (pp.counter > 1) {
                --pp.counter;
                continue;
            }
            pp.arb_eligible = true;  // request is now visible to the arbitrator
        }
    }

    // Arbitration: virtual cut-through admission gates the requests; the
    // arbitrator resolves conflicts round-robin per output.
    std::vector<std::uint8_t> output_busy(R.num_ports, 0), input_busy(R.num_ports, 0);
    for (const auto& conn : R.conns) {
        output_busy[conn.output_port] = 1;
        input_busy[conn.input_port] = 1;
    }
    std::vector<ArbiterRequest> requests;
    std::vector<ConnTarget> request_targets(R.num_ports);
    for (int port = 0; port < R.num_ports; ++port) {
        if (!R.port_exists[port] || R.pending[port].empty()) continue;
        PortPipeline& pp = R.pipe[port];
        if (pp.stage != Stage::ArbWait || !pp.arb_eligible) continue;
        if (input_busy[port] || output_busy[pp.out_port]) continue;
        const PendingSetup& front = R.pending[port].front();
        const int flit_count = front.packet->flit_count;

        ConnTarget target;
        if (pp.dir == Direction::Local) {
            int dst_ip = R.local_ip[pp.out_port];
            if (dst_ip < 0 || dst_ip != front.packet->dst_ip) {
                throw SimError("ProtocolViolation", "local route does not match the packet sink");
            }
            if (nis_[dst_ip].ej.free_for_reservation() < flit_count) continue;
            target.to_neighbor = false;
            target.dst_ip = dst_ip;
        } else {
            auto ncoord = topo_.neighbor(R.coord, pp.dir);
            if (!ncoord) throw SimError("ProtocolViolation", "route points off the mesh");
            int nidx = topo_.router_index(*ncoord);
            RouterState& N = routers_[nidx];
            // Opposite side: our North output feeds their South input, etc.
            static constexpr int opposite[4] = {2, 3, 0, 1};
            int nport = opposite[static_cast<int>(pp.dir)];
            int chosen = -1;
            for (int vc = 0; vc < N.cfg.vcs_per_port; ++vc) {
                if (N.vcs[nport][vc].free_for_reservation() >= flit_count) {
                    chosen = vc;
                    break;
                }
            }
            if (chosen < 0) continue;
            target.to_neighbor = true;
            target.neighbor_router = nidx;
            target.neighbor_port = nport;
            target.target_vc = chosen;
        }
        request_targets[port] = target;
        requests.push_back({port, pp.out_port});
    }
    if (!requests.empty()) {
        auto grants = R.arbiter.arbitrate(requests, output_busy, input_busy);
        for (const auto& g : grants) {
            const PendingSetup front = R.pending[g.input_port].front();
            R.pending[g.input_port].pop_front();
            const ConnTarget& target = request_targets[g.input_port];
            if (target.to_neighbor) {
                routers_[target.neighbor_router]
                    .vcs[target.neighbor_port][target.target_vc]
                    .reserve(front.packet->flit_count);
            } else {
                nis_[target.dst_ip].ej.reserve(front.packet->flit_count);
            }
            Connection conn;
            conn.input_port = g.input_port;
            conn.vc = front.vc;
            conn.output_port = g.output_port;
            conn.flits_remaining = front.packet->flit_count;
            conn.start_delay = pl.grant + pl.crossbar_set + pl.traversal;
            conn.packet_id = front.packet->id;
            R.conns.push_back(conn);
            R.targets.push_back(target);
            R.conn_started.push_back(0);
            ++stats_.grants_per_output[r][g.output_port];
            trace(now, R.coord, "grant", g.output_port, front.vc, front.packet->id);
            R.pipe[g.input_port] = PortPipeline{};
        }
    }

    // Cross-point transfers: one flit per live connection per cycle.
    if (!R.conns.empty()) {
        auto moves = crossbar_transfer(R.conns, R.vcs, now);
        for (auto& mv : moves) {
            const ConnTarget& target = R.targets[mv.connection_index];
            if (!R.conn_started[mv.connection_index]) {
                R.conn_started[mv.connection_index] = 1;
                R.arbiter.mark_transferring(mv.input_port, mv.output_port);
            }
            trace(now, R.coord, "flit_out", mv.output_port, mv.vc, mv.flit.packet->id);
            if (target.to_neighbor) {
                if (mv.flit.kind == FlitKind::Header) ++mv.flit.packet->hops;
                RouterState& N = routers_[target.neighbor_router];
                if (N.vcs[target.neighbor_port][target.target_vc].accept_flit(mv.flit, now) !=
                    AcceptResult::Accepted) {
                    throw SimError("ProtocolViolation", "reserved downstream VC rejected a flit");
                }
                trace(now, N.coord, "flit_in", target.neighbor_port, target.target_vc,
                      mv.flit.packet->id);
                if (mv.flit.kind == FlitKind::Header) {
                    N.pending[target.neighbor_port].push_back({target.target_vc, mv.flit.packet});
                }
            } else {
                if (!nis_[target.dst_ip].ej.try_write(mv.flit, now)) {
                    throw SimError("ProtocolViolation", "reserved ejection FIFO rejected a flit");
                }
            }
        }
        for (std::size_t i = R.conns.size(); i-- > 0;) {
            if (R.conns[i].flits_remaining == 0) {
                R.arbiter.release(R.conns[i].input_port, R.conns[i].output_port);
                R.conns.erase(R.conns.begin() + i);
                R.targets.erase(R.targets.begin() + i);
                R.conn_started.erase(R.conn_started.begin() + i);
            }
        }
    }
}

void Engine::step_clayer(int c, Tick now) {
    const int r = clayer_router_[c];
    CState& C = *cstates_[r];

    int active_connections = 0;
    for (const auto& [src_idx, outs] : C.slot_sources[C.st.current_slot]) {
        if (src_idx >= static_cast<int>(C.member_ips.size())) continue;  // unattached C port
        NiState& src = nis_[C.member_ips[src_idx]];
        if (src.c_out.empty() || src.c_out.front().created_at >= now) continue;
        WordInFlight word = src.c_out.front();
        src.c_out.pop_front();
        ++stats_.delivered_words;
        for (int out_idx : outs) {
            if (out_idx >= static_cast<int>(C.member_ips.size())) continue;
            int dst_ip = C.member_ips[out_idx];
            ++active_connections;
            stats_.ip_delivered_payload_bits[dst_ip] +=
                static_cast<std::uint64_t>(word.byte_count) * 8;
            FlowKey key{word.src_ip, dst_ip};
            FlowStats& fs = stats_.flows[key];
            fs.payload_bits += static_cast<std::uint64_t>(word.byte_count) * 8;
            if (word.last) {
                ++fs.packets;
                fs.latency_ps.push_back(now - word.created_at);
            }
            if (opt_.capture_payloads) {
                auto& buf = stats_.flow_payloads[key];
                buf.insert(buf.end(), word.bytes, word.bytes + word.byte_count);
            }
            trace(now, topo_.coord_of(r), "c_xfer", out_idx, 0, word.message_id);
        }
    }
    if (active_connections > routers_[r].cfg.c_ports) {
        throw SimError("ProtocolViolation", "cross-point exceeded its parallel connection limit");
    }
    advance_slot(C.st, C.sched);
}

void Engine::audit(Tick) const {
    std::uint64_t in_network = 0;
    for (const auto& ni : nis_) in_network += ni.inj.occupancy() + ni.ej.occupancy();
    for (const auto& R : routers_) {
        for (const auto& port_vcs : R.vcs) {
            for (const auto& vc : port_vcs) in_network += vc.occupancy();
        }
    }
    if (stats_.injected_flits != stats_.delivered_flits + in_network) {
        throw SimError("ConservationViolation",
                       "injected " + std::to_string(stats_.injected_flits) + " != delivered " +
                           std::to_string(stats_.delivered_flits) + " + in-network " +
                           std::to_string(in_network));
    }
}

SimStats Engine::run_all() {
    stats_.duration_ps = opt_.duration_ps;
    const Tick duration = opt_.duration_ps;
    const Tick watchdog =
        duration * static_cast<Tick>(std::max(1, opt_.watchdog_multiplier));

    using Edge = std::pair<Tick, int>;
    std::priority_queue<Edge, std::vector<Edge>, std::greater<Edge>> queue;
    for (const auto& d : domains_) queue.push({d.period_ps, d.id});

    std::uint64_t edges = 0;
    while (!queue.empty()) {
        auto [t, id] = queue.top();
        if (!opt_.drain) {
            if (t > duration) break;
        } else {
            if (drained()) break;
            if (t > watchdog) {
                stats_.deadlock_suspected = true;
                break;
            }
        }
        queue.pop();
        const DomainTarget& target = dispatch_[id];
        switch (target.kind) {
            case 0: step_ni(target.index, t); break;
            case 1: step_router(target.index, t); break;
            default: step_clayer(target.index, t); break;
        }
        if (t <= duration) ++stats_.domain_cycles[id];
        stats_.end_ps = t;
        queue.push({t + domains_[id].period_ps, id});
        if ((++edges & 1023ULL) == 0) audit(t);
    }
    if (!opt_.drain) stats_.end_ps = duration;
    audit(stats_.end_ps);
    stats_.drained = drained();
    return stats_;
}

}  // namespace

SimStats run(const MeshTopology& topo, const std::vector<ScheduleMemory>& schedules,
             const TrafficPattern& traffic, const RunOptions& options) {
    Engine engine(topo, schedules, traffic, options);
    return engine.run_all();
}

//////////////////////////////////////////////////////////////////////////////
//
// Reporting
//
//////////////////////////////////////////////////////////////////////////////

namespace {

std::vector<Tick> all_latencies(const SimStats& stats) {
    std::vector<Tick> out;
    for (const auto& [key, fs] : stats.flows) {
        out.insert(out.end(), fs.latency_ps.begin(), fs.latency_ps.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

double mean_ns(const std::vector<Tick>& v) {
    double sum = 0.0;
    for (Tick t : v) sum += static_cast<double>(t);
    return sum / static_cast<double>(v.size()) / 1000.0;
}

double quantile_ns(const std::vector<Tick>& sorted, double q) {
    std::size_t idx = static_cast<std::size_t>(std::ceil(q * sorted.size()));
    if (idx > 0) --idx;
    return static_cast<double>(sorted[idx]) / 1000.0;
}

double throughput_mbps(std::uint64_t bits, Tick span_ps) {
    if (span_ps == 0) return 0.0;
    double bytes = static_cast<double>(bits) / 8.0;
    double seconds = static_cast<double>(span_ps) / 1e12;
    return bytes / 1e6 / seconds;
}

}  // namespace

Summary summarize(const SimStats& stats) {
    Summary s;
    auto lat = all_latencies(stats);
    if (!lat.empty()) {
        s.mean_latency_ns = mean_ns(lat);
        s.median_latency_ns = quantile_ns(lat, 0.5);
        s.p99_latency_ns = quantile_ns(lat, 0.99);
    }
    std::uint64_t hops = 0, packets = 0;
    for (std::size_t h = 0; h < stats.hop_hist.size(); ++h) {
        hops += h * stats.hop_hist[h];
        packets += stats.hop_hist[h];
    }
    s.avg_hop_count = packets > 0 ? static_cast<double>(hops) / packets : 0.0;
    for (const auto& [key, fs] : stats.flows) s.delivered_packets += fs.packets;
    std::uint64_t bits = 0;
    for (auto b : stats.ip_delivered_payload_bits) bits += b;
    s.total_throughput_mbps = throughput_mbps(bits, stats.end_ps);
    return s;
}

std::string flows_csv(const SimStats& stats) {
    std::string out = "src_ip,dst_ip,packets,payload_bits,mean_latency_ns,median_latency_ns,p99_latency_ns\n";
    for (const auto& [key, fs] : stats.flows) {
        auto lat = fs.latency_ps;
        std::sort(lat.begin(), lat.end());
        out += std::to_string(key.src) + "," + std::to_string(key.dst) + "," +
               std::to_string(fs.packets) + "," + std::to_string(fs.payload_bits);
        if (lat.empty()) {
            out += ",,,";
        } else {
            out += "," + format_fixed(mean_ns(lat), 3) + "," + format_fixed(quantile_ns(lat, 0.5), 3) +
                   "," + format_fixed(quantile_ns(lat, 0.99), 3);
        }
        out += "\n";
    }
    return out;
}

std::string ports_csv(const SimStats& stats) {
    std::string out = "ip,delivered_payload_bits,throughput_mbps\n";
    for (std::size_t ip = 0; ip < stats.ip_delivered_payload_bits.size(); ++ip) {
        out += std::to_string(ip) + "," + std::to_string(stats.ip_delivered_payload_bits[ip]) +
               "," + format_fixed(throughput_mbps(stats.ip_delivered_payload_bits[ip], stats.end_ps), 3) +
               "\n";
    }
    return out;
}

std::string summary_text(const SimStats& stats) {
    Summary s = summarize(stats);
    std::string out;
    out += "duration_ps " + std::to_string(stats.duration_ps) + "\n";
    out += "end_ps " + std::to_string(stats.end_ps) + "\n";
    out += std::string("drained ") + (stats.drained ? "true" : "false") + "\n";
    out += std::string("deadlock_suspected ") + (stats.deadlock_suspected ? "true" : "false") + "\n";
    out += "generated_messages " + std::to_string(stats.generated_messages) + "\n";
    out += "injected_flits " + std::to_string(stats.injected_flits) + "\n";
    out += "delivered_flits " + std::to_string(stats.delivered_flits) + "\n";
    out += "delivered_words " + std::to_string(stats.delivered_words) + "\n";
    out += "ordering_violations " + std::to_string(stats.ordering_violations) + "\n";
    out += "delivered_packets " + std::to_string(s.delivered_packets) + "\n";
    if (s.mean_latency_ns) {
        out += "mean_latency_ns " + format_fixed(*s.mean_latency_ns, 3) + "\n";
        out += "median_latency_ns " + format_fixed(*s.median_latency_ns, 3) + "\n";
        out += "p99_latency_ns " + format_fixed(*s.p99_latency_ns, 3) + "\n";
    } else {
        out += "mean_latency_ns absent\nmedian_latency_ns absent\np99_latency_ns absent\n";
    }
    out += "avg_hop_count " + format_fixed(s.avg_hop_count, 4) + "\n";
    out += "total_throughput_mbps " + format_fixed(s.total_throughput_mbps, 3) + "\n";
    for (std::size_t r = 0; r < stats.grants_per_output.size(); ++r) {
        std::uint64_t total = 0;
        for (auto g : stats.grants_per_output[r]) total += g;
        out += "grants router" + std::to_string(r) + " " + std::to_string(total) + "\n";
    }
    return out;
}

std::string trace_csv_header() { return "tick,router,event,port,vc,packet_id\n"; }

std::string trace_csv_line(const TraceEvent& ev) {
    return std::to_string(ev.tick) + ",\"" + ev.router.to_string() + "\"," + ev.event + "," +
           std::to_string(ev.port) + "," + std::to_string(ev.vc) + "," +
           std::to_string(ev.packet_id) + "\n";
}

}  // namespace mocsim
