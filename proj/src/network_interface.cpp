// SPDX-License-Identifier: Apache-2.0
#include "mocsim/network_interface.hpp"

#include <algorithm>

namespace mocsim {

TransferMode choose_mode(const MeshTopology& topo, int src_ip, int dst_ip) {
    if (src_ip < 0 || src_ip >= static_cast<int>(topo.ips.size()) || dst_ip < 0 ||
        dst_ip >= static_cast<int>(topo.ips.size())) {
        throw SimError("UnknownIp", "ip pair (" + std::to_string(src_ip) + "," +
                                        std::to_string(dst_ip) + ") not in topology");
    }
    const IpAssignment& src = topo.ips[src_ip];
    const IpAssignment& dst = topo.ips[dst_ip];
    if (src.router == dst.router && src.c_member && dst.c_member) return TransferMode::Circuit;
    return TransferMode::Packet;
}

HeaderLayout HeaderLayout::for_mesh(int buffer_depth, int mesh_width, int mesh_height) {
    HeaderLayout l;
    l.buffer_depth = buffer_depth;
    // +1 so the depth itself (max legal flit count) is representable.
    l.size_bits = static_cast<int>(ceil_log2(static_cast<std::uint64_t>(buffer_depth))) + 1;
    l.x_bits = std::max(1, static_cast<int>(ceil_log2(static_cast<std::uint64_t>(mesh_width))));
    l.y_bits = std::max(1, static_cast<int>(ceil_log2(static_cast<std::uint64_t>(mesh_height))));
    return l;
}

std::uint64_t encode_header(const HeaderFields& fields, const HeaderLayout& layout) {
    if (fields.flit_count < 1 || fields.flit_count > layout.buffer_depth) {
        throw SimError("SizeOutOfRange", "flit count " + std::to_string(fields.flit_count) +
                                             " not in [1, " + std::to_string(layout.buffer_depth) +
                                             "]");
    }
    std::uint64_t bits = 0;
    bits = static_cast<std::uint64_t>(fields.flit_count);
    bits = (bits << layout.x_bits) | static_cast<std::uint64_t>(fields.dest.x);
    bits = (bits << layout.y_bits) | static_cast<std::uint64_t>(fields.dest.y);
    return bits;
}

HeaderFields decode_header(std::uint64_t bits, const HeaderLayout& layout) {
    HeaderFields f;
    f.dest.y = static_cast<int>(bits & ((1ULL << layout.y_bits) - 1));
    bits >>= layout.y_bits;
    f.dest.x = static_cast<int>(bits & ((1ULL << layout.x_bits) - 1));
    bits >>= layout.x_bits;
    f.flit_count = static_cast<int>(bits & ((1ULL << layout.size_bits) - 1));
    if (f.flit_count < 1 || f.flit_count > layout.buffer_depth) {
        throw SimError("SizeOutOfRange", "decoded flit count " + std::to_string(f.flit_count) +
                                             " not in [1, " + std::to_string(layout.buffer_depth) +
                                             "]");
    }
    return f;
}

// Packets are sliced on byte boundaries so that concatenating delivered
// payloads reproduces the message byte stream exactly.
static std::uint64_t max_payload_bytes_per_packet(int channel_width_p, int buffer_depth,
                                                  const HeaderLayout& layout) {
    const int header_flits = layout.header_flits(channel_width_p);
    const long long capacity_flits = buffer_depth - header_flits;
    const long long max_bytes = capacity_flits * channel_width_p / 8;
    if (max_bytes < 1) {
        throw SimError("SizeOutOfRange",
                       "buffer_depth leaves no room for payload after the header");
    }
    return static_cast<std::uint64_t>(max_bytes);
}

std::vector<PacketPtr> packetize(const Message& msg, const PacketizeContext& ctx) {
    if (msg.payload.empty()) {
        throw SimError("SizeOutOfRange", "message payload must be at least 1 byte");
    }
    const int header_flits = ctx.layout.header_flits(ctx.channel_width_p);
    const std::uint64_t max_bytes =
        max_payload_bytes_per_packet(ctx.channel_width_p, ctx.buffer_depth, ctx.layout);

    std::vector<PacketPtr> packets;
    std::uint64_t cursor = 0;
    while (cursor < msg.payload.size()) {
        const std::uint64_t bytes_here = std::min<std::uint64_t>(max_bytes, msg.payload.size() - cursor);
        const std::uint64_t flits_here = ceil_div_u64(bytes_here * 8ULL, ctx.channel_width_p);

        auto p = std::make_shared<PacketRecord>();
        p->id = (*ctx.next_packet_id)++;
        p->src_ip = msg.src_ip;
        p->dst_ip = msg.dst_ip;
        p->header_flits = header_flits;
        p->flit_count = header_flits + static_cast<int>(flits_here);
        p->flow_seq = ctx.next_flow_seq ? (*ctx.next_flow_seq)++ : 0;
        p->created_at = msg.created_at;
        p->dest = ctx.dest;
        p->payload.assign(msg.payload.begin() + cursor, msg.payload.begin() + cursor + bytes_here);
        packets.push_back(std::move(p));
        cursor += bytes_here;
    }
    return packets;
}

std::uint64_t flits_for_message(std::uint64_t payload_bytes, int channel_width_p,
                                int buffer_depth, const HeaderLayout& layout) {
    const int header_flits = layout.header_flits(channel_width_p);
    const std::uint64_t max_bytes =
        max_payload_bytes_per_packet(channel_width_p, buffer_depth, layout);
    std::uint64_t flits = 0;
    std::uint64_t remaining = payload_bytes;
    while (remaining > 0) {
        std::uint64_t bytes_here = std::min(max_bytes, remaining);
        flits += header_flits + ceil_div_u64(bytes_here * 8ULL, channel_width_p);
        remaining -= bytes_here;
    }
    return flits;
}

FifoCrossResult fifo_cross(int depth, int f_w_mhz, int f_r_mhz, Tick duration_ps) {
    if (f_w_mhz <= 0 || f_r_mhz <= 0) {
        throw SimError("InvalidClock", "fifo_cross needs positive clock frequencies");
    }
    ClockCrossingFifo<std::uint32_t> fifo(depth);
    FifoCrossResult result;

    const Tick pw = period_ps_from_mhz(f_w_mhz);
    const Tick pr = period_ps_from_mhz(f_r_mhz);
    Tick tw = pw, tr = pr;
    std::uint32_t next_word = 0;

    // Merge the two edge streams in time order; the writer goes first on a
    // shared timestamp, but visibility is strict (write at t readable > t),
    // so the order of coincident edges cannot leak a word early.
    while (tw <= duration_ps || tr <= duration_ps) {
        bool do_write = tw <= duration_ps && (tr > duration_ps || tw <= tr);
        if (do_write) {
            if (fifo.try_write(next_word, tw)) {
                ++next_word;
                ++result.words_written;
            } else {
                ++result.writer_stalls;
            }
            tw += pw;
        } else {
            if (auto w = fifo.try_read(tr)) {
                result.delivered.emplace_back(tr, *w);
            }
            tr += pr;
        }
    }
    return result;
}

}  // namespace mocsim
