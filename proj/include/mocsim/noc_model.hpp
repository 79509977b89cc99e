// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mocsim/common.hpp"

namespace mocsim {

// ---------------------------------------------------------------------------
// Core domain types: mesh coordinates, router configuration, packets/flits.
// All of these are immutable after construction and safe to share.
// ---------------------------------------------------------------------------

enum class Direction : std::uint8_t { North = 0, East = 1, South = 2, West = 3, Local = 4 };

const char* to_string(Direction d);

// Router grid position. x grows eastward, y grows northward.
struct Coord {
    int x = 0;
    int y = 0;

    bool operator==(const Coord&) const = default;
    std::string to_string() const {
        return "(" + std::to_string(x) + "," + std::to_string(y) + ")";
    }
};

// Per-router switch configuration. total_ports = c_ports + p_ports always;
// for mesh placements p_ports covers the directional ports that exist plus
// the local ports that are not C-layer members.
struct RouterConfig {
    int total_ports = 0;
    int c_ports = 0;
    int p_ports = 0;
    int channel_width_p = 8;   // bits per P-layer channel
    int channel_width_c = 32;  // bits across the C-layer cross-point
    int vcs_per_port = 1;
    int buffer_depth = 16;     // flits per VC
    int local_ips = 4;         // IPs attached to this router, at most 4
    int c_port_cap = 4;        // signal-integrity cap on C-layer membership
};

// Names every violated invariant; returns the config only if clean.
Parsed<RouterConfig> validate_config(const RouterConfig& cfg);

// Mesh-placement view of a base config: directional ports that exist at the
// position plus non-C local ports form the P-layer side.
RouterConfig derive_mesh_router(const RouterConfig& base, int dirs_present);

struct IpAssignment {
    int ip = 0;
    Coord router;
    int local_port = 0;  // 0 .. local_ips-1 on that router
    bool c_member = false;
    int clock_mhz = 0;
};

struct MeshTopology {
    int width = 0;
    int height = 0;
    std::vector<RouterConfig> routers;  // row-major: index = y*width + x
    std::vector<int> router_clock_mhz;  // P-layer clock per router
    std::vector<int> c_clock_mhz;       // C-layer clock per router
    std::vector<IpAssignment> ips;      // index == IP id (dense)

    int router_index(Coord c) const { return c.y * width + c.x; }
    bool in_bounds(Coord c) const {
        return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height;
    }
    Coord coord_of(int router_idx) const {
        return Coord{router_idx % width, router_idx / width};
    }
    std::optional<Coord> neighbor(Coord c, Direction d) const;
    int dirs_present(Coord c) const;

    // IP ids at a router, ordered by local port index.
    std::vector<int> ips_at(int router_idx) const;
    // C-layer member IPs at a router, ordered by local port index. Position
    // in this list is the IP's C-layer port index (schedule in/out index).
    std::vector<int> c_members_at(int router_idx) const;

    int inter_router_link_count() const;  // bidirectional links
    bool has_c_members() const;
};

// ---------------------------------------------------------------------------
// Packets and flits
// ---------------------------------------------------------------------------

// One packet as produced by packetization. Shared immutably between the
// flits that reference it; `hops` is the only field the kernel mutates.
struct PacketRecord {
    std::uint64_t id = 0;       // unique per simulation
    int src_ip = 0;
    int dst_ip = 0;
    int flit_count = 0;         // total flits incl. header flit(s)
    int header_flits = 1;
    std::uint64_t flow_seq = 0; // per-(src,dst) sequence, for ordering checks
    Tick created_at = 0;        // message injection tick at the source NI
    Coord dest;
    std::uint64_t header_bits = 0;      // encoded wire header, decoded at the sink
    std::vector<std::uint8_t> payload;  // this packet's payload slice
    int hops = 0;               // inter-router links crossed so far
};

using PacketPtr = std::shared_ptr<PacketRecord>;

enum class FlitKind : std::uint8_t { Header, Payload };

struct Flit {
    PacketPtr packet;
    FlitKind kind = FlitKind::Payload;
    int index = 0;  // position within the packet

    bool last() const { return packet && index + 1 == packet->flit_count; }
};

// ---------------------------------------------------------------------------
// Routing and topology construction
// ---------------------------------------------------------------------------

// Dimension-ordered routing: resolve X fully, then Y. Local iff equal.
// Deadlock-free on meshes; total on in-bounds coordinates.
Direction xy_route(Coord current, Coord dest);

Parsed<MeshTopology> build_mesh(int width, int height,
                                const std::vector<RouterConfig>& router_cfgs,
                                const std::vector<IpAssignment>& ips,
                                const std::vector<int>& router_clock_mhz,
                                const std::vector<int>& c_clock_mhz);

// Topology file schema (see README): mesh.width, mesh.height,
// router.default.<field>, router.<x>.<y>.<field>, ip.<id>.<field>.
Parsed<MeshTopology> parse_topology_text(const std::string& text);
Parsed<MeshTopology> parse_topology_file(const std::string& path);

}  // namespace mocsim
