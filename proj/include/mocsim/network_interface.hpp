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
// Per-IP network interface: mode switching between layers, packetization
// into variable-size packets with encoded headers, and dual-clock FIFOs
// into and out of the P-layer.
// ---------------------------------------------------------------------------

enum class MessageClass : std::uint8_t { Control, Data };

struct Message {
    std::uint64_t id = 0;
    int src_ip = 0;
    int dst_ip = 0;
    std::vector<std::uint8_t> payload;  // at least 1 byte
    MessageClass cls = MessageClass::Data;
    Tick created_at = 0;
};

enum class TransferMode : std::uint8_t { Circuit, Packet };

// Circuit iff both IPs sit on the same router and both are C-layer members;
// those local pairs have no P-layer path between themselves.
TransferMode choose_mode(const MeshTopology& topo, int src_ip, int dst_ip);

// ---------------------------------------------------------------------------
// Header codec. Wire layout, most significant first:
//   size_code  (ceil(log2 depth) + 1 bits, raw flit count so depth itself fits)
//   dest_x     (max(1, ceil(log2 width)) bits)
//   dest_y     (max(1, ceil(log2 height)) bits)
// ---------------------------------------------------------------------------

struct HeaderLayout {
    int size_bits = 0;
    int x_bits = 0;
    int y_bits = 0;
    int buffer_depth = 0;

    static HeaderLayout for_mesh(int buffer_depth, int mesh_width, int mesh_height);

    int total_bits() const { return size_bits + x_bits + y_bits; }
    int header_flits(int channel_width_p) const {
        return static_cast<int>(ceil_div_u64(total_bits(), channel_width_p));
    }
};

struct HeaderFields {
    int flit_count = 0;  // total flits, header included
    Coord dest;
};

// Throws SimError("SizeOutOfRange") unless flit_count is in [1, depth].
std::uint64_t encode_header(const HeaderFields& fields, const HeaderLayout& layout);
HeaderFields decode_header(std::uint64_t bits, const HeaderLayout& layout);

// ---------------------------------------------------------------------------
// Packetization: greedy split into packets of at most buffer_depth flits
// (header flits included in the count). Total payload bits are preserved;
// the last packet may be shorter.
// ---------------------------------------------------------------------------

struct PacketizeContext {
    int channel_width_p = 8;
    int buffer_depth = 16;
    HeaderLayout layout;
    std::uint64_t* next_packet_id = nullptr;  // required
    std::uint64_t* next_flow_seq = nullptr;   // optional per-flow counter
    Coord dest;
};

std::vector<PacketPtr> packetize(const Message& msg, const PacketizeContext& ctx);

// Flits per packetized message, headers included (used by traffic sizing).
std::uint64_t flits_for_message(std::uint64_t payload_bytes, int channel_width_p,
                                int buffer_depth, const HeaderLayout& layout);

// ---------------------------------------------------------------------------
// Clock-domain-crossing FIFO. Writes and reads happen on the edges of their
// respective clocks; a word becomes visible to the reader strictly after
// the edge that wrote it. The writer stalls when full (no overflow drop).
// ---------------------------------------------------------------------------

template <typename T>
class ClockCrossingFifo {
public:
    explicit ClockCrossingFifo(int depth) : depth_(depth) {}

    int depth() const { return depth_; }
    int occupancy() const { return static_cast<int>(q_.size()); }
    bool full() const { return occupancy() >= depth_; }
    bool empty() const { return q_.empty(); }

    // Whole-packet admission bookkeeping for virtual cut-through.
    int reserved() const { return reserved_; }
    int free_for_reservation() const { return depth_ - occupancy() - reserved_; }
    void reserve(int n) { reserved_ += n; }

    bool try_write(const T& item, Tick now) {
        if (full()) return false;
        q_.push_back({item, now});
        if (reserved_ > 0) --reserved_;
        return true;
    }

    const T* peek(Tick now) const {
        if (q_.empty() || q_.front().at >= now) return nullptr;
        return &q_.front().item;
    }

    std::optional<T> try_read(Tick now) {
        if (q_.empty() || q_.front().at >= now) return std::nullopt;
        T item = std::move(q_.front().item);
        q_.pop_front();
        return item;
    }

private:
    struct Timed {
        T item;
        Tick at;
    };
    int depth_;
    int reserved_ = 0;
    std::deque<Timed> q_;
};

// Drives one FIFO with a saturating writer at f_w and a reader at f_r for
// `duration_ps`: words are consecutive integers, the writer stalls when
// full. Used to characterize CDC throughput and ordering.
struct FifoCrossResult {
    std::vector<std::pair<Tick, std::uint32_t>> delivered;
    std::uint64_t writer_stalls = 0;
    std::uint64_t words_written = 0;
};

FifoCrossResult fifo_cross(int depth, int f_w_mhz, int f_r_mhz, Tick duration_ps);

}  // namespace mocsim
