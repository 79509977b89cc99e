// SPDX-License-Identifier: Apache-2.0
#include "mocsim/noc_model.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mocsim/kvfile.hpp"

namespace mocsim {

const char* to_string(Direction d) {
    switch (d) {
        case Direction::North: return "N";
        case Direction::East: return "E";
        case Direction::South: return "S";
        case Direction::West: return "W";
        case Direction::Local: return "L";
    }
    return "?";
}

Parsed<RouterConfig> validate_config(const RouterConfig& cfg) {
    Parsed<RouterConfig> result;
    auto bad = [&](const char* code, const std::string& msg) {
        result.issues.push_back({code, msg, -1});
    };

    if (cfg.total_ports != cfg.c_ports + cfg.p_ports) {
        bad("InvalidPortArithmetic",
            "total_ports " + std::to_string(cfg.total_ports) + " != c_ports " +
                std::to_string(cfg.c_ports) + " + p_ports " + std::to_string(cfg.p_ports));
    }
    if (cfg.local_ips > 4) {
        bad("TooManyLocalIps", "local_ips " + std::to_string(cfg.local_ips) + " exceeds 4");
    }
    if (cfg.c_ports > cfg.local_ips) {
        bad("TooManyLocalIps", "c_ports " + std::to_string(cfg.c_ports) +
                                   " exceeds local_ips " + std::to_string(cfg.local_ips));
    }
    if (cfg.c_ports > cfg.c_port_cap) {
        bad("CLayerOverCap", "c_ports " + std::to_string(cfg.c_ports) + " exceeds cap " +
                                 std::to_string(cfg.c_port_cap));
    }
    if (cfg.c_ports < 0 || cfg.p_ports < 0 || cfg.total_ports <= 0) {
        bad("InvalidPortArithmetic", "port counts must be non-negative and total > 0");
    }
    if (cfg.channel_width_p < 1) bad("InvalidChannelWidth", "channel_width_p must be >= 1");
    if (cfg.channel_width_c < 1) bad("InvalidChannelWidth", "channel_width_c must be >= 1");
    if (cfg.buffer_depth < 1) bad("InvalidBufferDepth", "buffer_depth must be >= 1");
    if (cfg.vcs_per_port < 1) bad("InvalidVcCount", "vcs_per_port must be >= 1");

    if (result.issues.empty()) result.value = cfg;
    return result;
}

RouterConfig derive_mesh_router(const RouterConfig& base, int dirs_present) {
    RouterConfig cfg = base;
    cfg.p_ports = dirs_present + (base.local_ips - base.c_ports);
    cfg.total_ports = cfg.p_ports + cfg.c_ports;
    return cfg;
}

std::optional<Coord> MeshTopology::neighbor(Coord c, Direction d) const {
    Coord n = c;
    switch (d) {
        case Direction::North: n.y += 1; break;
        case Direction::South: n.y -= 1; break;
        case Direction::East: n.x += 1; break;
        case Direction::West: n.x -= 1; break;
        case Direction::Local: return std::nullopt;
    }
    if (!in_bounds(n)) return std::nullopt;
    return n;
}

int MeshTopology::dirs_present(Coord c) const {
    int n = 0;
    for (Direction d : {Direction::North, Direction::East, Direction::South, Direction::West}) {
        if (neighbor(c, d)) ++n;
    }
    return n;
}

std::vector<int> MeshTopology::ips_at(int router_idx) const {
    std::vector<int> out;
    for (const auto& ip : ips) {
        if (router_index(ip.router) == router_idx) out.push_back(ip.ip);
    }
    std::sort(out.begin(), out.end(), [&](int a, int b) {
        return ips[a].local_port < ips[b].local_port;
    });
    return out;
}

std::vector<int> MeshTopology::c_members_at(int router_idx) const {
    std::vector<int> out;
    for (int id : ips_at(router_idx)) {
        if (ips[id].c_member) out.push_back(id);
    }
    return out;
}

int MeshTopology::inter_router_link_count() const {
    // Grid edges: horizontal (width-1)*height + vertical width*(height-1).
    return (width - 1) * height + width * (height - 1);
}

bool MeshTopology::has_c_members() const {
    return std::any_of(ips.begin(), ips.end(), [](const IpAssignment& a) { return a.c_member; });
}

Direction xy_route(Coord current, Coord dest) {
    if (dest.x > current.x) return Direction::East;
    if (dest.x < current.x) return Direction::West;
    if (dest.y > current.y) return Direction::North;
    if (dest.y < current.y) return Direction::South;
    return Direction::Local;
}

Parsed<MeshTopology> build_mesh(int width, int height,
                                const std::vector<RouterConfig>& router_cfgs,
                                const std::vector<IpAssignment>& ips,
                                const std::vector<int>& router_clock_mhz,
                                const std::vector<int>& c_clock_mhz) {
    Parsed<MeshTopology> result;
    auto bad = [&](const char* code, const std::string& msg) {
        result.issues.push_back({code, msg, -1});
    };

    if (width < 1 || height < 1) {
        bad("InvalidMesh", "mesh dimensions must be >= 1");
        return result;
    }
    const size_t n = static_cast<size_t>(width) * height;
    if (router_cfgs.size() != n || router_clock_mhz.size() != n || c_clock_mhz.size() != n) {
        bad("InvalidMesh", "need one config and clock per router");
        return result;
    }

    MeshTopology topo;
    topo.width = width;
    topo.height = height;
    topo.routers = router_cfgs;
    topo.router_clock_mhz = router_clock_mhz;
    topo.c_clock_mhz = c_clock_mhz;
    topo.ips = ips;

    for (size_t r = 0; r < n; ++r) {
        auto v = validate_config(topo.routers[r]);
        for (auto& issue : v.issues) {
            issue.message = "router " + topo.coord_of(static_cast<int>(r)).to_string() + ": " +
                            issue.message;
            result.issues.push_back(issue);
        }
        if (topo.router_clock_mhz[r] <= 0 || topo.c_clock_mhz[r] <= 0) {
            bad("InvalidClock",
                "router " + topo.coord_of(static_cast<int>(r)).to_string() + ": clock must be > 0 MHz");
        }
    }

    // IPs must be densely numbered 0..n-1 (they double as vector indices).
    for (size_t i = 0; i < ips.size(); ++i) {
        if (ips[i].ip != static_cast<int>(i)) {
            bad("DanglingIp", "IP ids must be dense 0..n-1; missing ip " + std::to_string(i));
            return result;
        }
    }

    std::set<std::pair<int, int>> used_ports;  // (router_idx, local_port)
    for (const auto& ip : ips) {
        if (!topo.in_bounds(ip.router)) {
            bad("DanglingIp", "ip " + std::to_string(ip.ip) + " assigned to nonexistent router " +
                                  ip.router.to_string());
            continue;
        }
        const RouterConfig& rc = topo.routers[topo.router_index(ip.router)];
        if (ip.local_port < 0 || ip.local_port >= rc.local_ips) {
            bad("DanglingIp", "ip " + std::to_string(ip.ip) + " assigned to nonexistent local port " +
                                  std::to_string(ip.local_port) + " on router " + ip.router.to_string());
            continue;
        }
        auto key = std::make_pair(topo.router_index(ip.router), ip.local_port);
        if (!used_ports.insert(key).second) {
            bad("DuplicatePortAssignment",
                "local port " + std::to_string(ip.local_port) + " on router " +
                    ip.router.to_string() + " assigned twice");
        }
        if (ip.clock_mhz <= 0) {
            bad("InvalidClock", "ip " + std::to_string(ip.ip) + ": clock must be > 0 MHz");
        }
    }

    // C-layer membership checks: enough C ports, and all members synchronous
    // with the router's C clock (the cross-point has no buffering).
    for (size_t r = 0; r < n; ++r) {
        auto members = topo.c_members_at(static_cast<int>(r));
        if (static_cast<int>(members.size()) > topo.routers[r].c_ports) {
            bad("CMemberOverflow",
                "router " + topo.coord_of(static_cast<int>(r)).to_string() + " has " +
                    std::to_string(members.size()) + " C-layer IPs but only " +
                    std::to_string(topo.routers[r].c_ports) + " C ports");
        }
        for (int id : members) {
            if (ips[id].clock_mhz != topo.c_clock_mhz[r]) {
                bad("CClockMismatch",
                    "ip " + std::to_string(id) + " at " + std::to_string(ips[id].clock_mhz) +
                        " MHz but C-layer of router " +
                        topo.coord_of(static_cast<int>(r)).to_string() + " runs at " +
                        std::to_string(topo.c_clock_mhz[r]) + " MHz");
            }
        }
    }

    if (result.issues.empty()) result.value = std::move(topo);
    return result;
}

// ---------------------------------------------------------------------------
// Topology file parsing
// ---------------------------------------------------------------------------

namespace {

struct RouterFields {
    RouterConfig cfg;
    int clock_mhz = 100;
    int c_clock_mhz = 0;  // 0 = same as clock_mhz
};

// Apply one `<field> = <value>` to a RouterFields; false if unknown field.
bool apply_router_field(RouterFields& rf, const std::string& field, long value) {
    if (field == "c_ports") rf.cfg.c_ports = static_cast<int>(value);
    else if (field == "local_ips") rf.cfg.local_ips = static_cast<int>(value);
    else if (field == "channel_width_p") rf.cfg.channel_width_p = static_cast<int>(value);
    else if (field == "channel_width_c") rf.cfg.channel_width_c = static_cast<int>(value);
    else if (field == "vcs_per_port") rf.cfg.vcs_per_port = static_cast<int>(value);
    else if (field == "buffer_depth") rf.cfg.buffer_depth = static_cast<int>(value);
    else if (field == "c_port_cap") rf.cfg.c_port_cap = static_cast<int>(value);
    else if (field == "clock_mhz") rf.clock_mhz = static_cast<int>(value);
    else if (field == "c_clock_mhz") rf.c_clock_mhz = static_cast<int>(value);
    else return false;
    return true;
}

}  // namespace

Parsed<MeshTopology> parse_topology_text(const std::string& text) {
    Parsed<MeshTopology> result;
    auto kv = KvFile::parse_text(text);
    if (!kv.ok()) {
        result.issues = std::move(kv.issues);
        return result;
    }
    KvReader r(*kv);

    long width = r.get_int("mesh.width", 0);
    long height = r.get_int("mesh.height", 0);
    if (width < 1 || height < 1) {
        r.add_issue("InvalidMesh", "mesh.width and mesh.height must be given and >= 1");
    }

    RouterFields defaults;
    defaults.cfg.local_ips = 4;

    // router.default.<field>
    for (const KvEntry* e : r.take_prefix("router.default.")) {
        std::string field = e->key.substr(std::string("router.default.").size());
        long v;
        if (e->values.size() != 1 || !parse_long(e->values[0], v)) {
            r.add_issue("ParseError", "router.default." + field + " expects one integer", e->line);
            continue;
        }
        if (!apply_router_field(defaults, field, v)) {
            r.add_issue("UnknownKey", "unrecognized router field `" + field + "`", e->line);
        }
    }

    // router.<x>.<y>.<field>
    std::map<std::pair<int, int>, RouterFields> overrides;
    for (const KvEntry* e : r.take_prefix("router.")) {
        std::string rest = e->key.substr(std::string("router.").size());
        auto d1 = rest.find('.');
        auto d2 = rest.find('.', d1 == std::string::npos ? d1 : d1 + 1);
        long x, y;
        if (d1 == std::string::npos || d2 == std::string::npos ||
            !parse_long(rest.substr(0, d1), x) || !parse_long(rest.substr(d1 + 1, d2 - d1 - 1), y)) {
            r.add_issue("ParseError", "expected router.<x>.<y>.<field>", e->line);
            continue;
        }
        std::string field = rest.substr(d2 + 1);
        long v;
        if (e->values.size() != 1 || !parse_long(e->values[0], v)) {
            r.add_issue("ParseError", e->key + " expects one integer", e->line);
            continue;
        }
        auto key = std::make_pair(static_cast<int>(x), static_cast<int>(y));
        if (!overrides.count(key)) overrides[key] = defaults;
        if (!apply_router_field(overrides[key], field, v)) {
            r.add_issue("UnknownKey", "unrecognized router field `" + field + "`", e->line);
        }
    }

    // ip.<id>.<field>
    struct IpFields {
        std::optional<Coord> router;
        int local_port = -1;
        std::optional<bool> c_member;
        int clock_mhz = 0;  // 0 = inherit router clock
        int line = -1;
    };
    std::map<int, IpFields> ip_fields;
    for (const KvEntry* e : r.take_prefix("ip.")) {
        std::string rest = e->key.substr(3);
        auto dot = rest.find('.');
        long id;
        if (dot == std::string::npos || !parse_long(rest.substr(0, dot), id)) {
            r.add_issue("ParseError", "expected ip.<id>.<field>", e->line);
            continue;
        }
        std::string field = rest.substr(dot + 1);
        IpFields& f = ip_fields[static_cast<int>(id)];
        f.line = e->line;
        if (field == "router") {
            long x, y;
            if (e->values.size() != 2 || !parse_long(e->values[0], x) ||
                !parse_long(e->values[1], y)) {
                r.add_issue("ParseError", "ip.<id>.router expects `<x> <y>`", e->line);
                continue;
            }
            f.router = Coord{static_cast<int>(x), static_cast<int>(y)};
        } else if (field == "port") {
            long v;
            if (e->values.size() != 1 || !parse_long(e->values[0], v)) {
                r.add_issue("ParseError", "ip.<id>.port expects one integer", e->line);
                continue;
            }
            f.local_port = static_cast<int>(v);
        } else if (field == "layer") {
            if (e->values.size() != 1 || (e->values[0] != "C" && e->values[0] != "P")) {
                r.add_issue("ParseError", "ip.<id>.layer expects C or P", e->line);
                continue;
            }
            f.c_member = (e->values[0] == "C");
        } else if (field == "clock_mhz") {
            long v;
            if (e->values.size() != 1 || !parse_long(e->values[0], v)) {
                r.add_issue("ParseError", "ip.<id>.clock_mhz expects one integer", e->line);
                continue;
            }
            f.clock_mhz = static_cast<int>(v);
        } else {
            r.add_issue("UnknownKey", "unrecognized ip field `" + field + "`", e->line);
        }
    }

    r.flag_unknown_keys();
    if (!r.issues().empty()) {
        result.issues = std::move(r.issues());
        return result;
    }

    // Assemble per-router configs (mesh-derived port counts) and clocks.
    MeshTopology probe;  // only for coord helpers
    probe.width = static_cast<int>(width);
    probe.height = static_cast<int>(height);
    std::vector<RouterConfig> cfgs;
    std::vector<int> clocks, c_clocks;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            RouterFields rf = defaults;
            auto it = overrides.find({x, y});
            if (it != overrides.end()) rf = it->second;
            int dirs = probe.dirs_present(Coord{x, y});
            cfgs.push_back(derive_mesh_router(rf.cfg, dirs));
            clocks.push_back(rf.clock_mhz);
            c_clocks.push_back(rf.c_clock_mhz > 0 ? rf.c_clock_mhz : rf.clock_mhz);
        }
    }
    for (auto& [key, rf] : overrides) {
        if (key.first < 0 || key.first >= width || key.second < 0 || key.second >= height) {
            result.issues.push_back(
                {"InvalidMesh",
                 "router." + std::to_string(key.first) + "." + std::to_string(key.second) +
                     ".* refers to a router outside the mesh",
                 -1});
        }
    }

    std::vector<IpAssignment> ips;
    int next_id = 0;
    for (const auto& [id, f] : ip_fields) {  // std::map: ids in ascending order
        if (id != next_id++) {
            result.issues.push_back({"DanglingIp", "IP ids must be dense starting at 0", f.line});
        }
        IpAssignment a;
        a.ip = id;
        if (!f.router) {
            result.issues.push_back(
                {"ParseError", "ip." + std::to_string(id) + ".router is required", f.line});
            continue;
        }
        a.router = *f.router;
        a.local_port = f.local_port < 0 ? 0 : f.local_port;
        a.c_member = f.c_member.value_or(false);
        int router_clock = 100;
        if (probe.in_bounds(a.router)) {
            router_clock = clocks[static_cast<size_t>(a.router.y) * width + a.router.x];
        }
        a.clock_mhz = f.clock_mhz > 0 ? f.clock_mhz : router_clock;
        ips.push_back(a);
    }

    if (!result.issues.empty()) return result;

    auto built = build_mesh(static_cast<int>(width), static_cast<int>(height), cfgs, ips, clocks,
                            c_clocks);
    if (!built.ok()) {
        result.issues = std::move(built.issues);
        return result;
    }
    result.value = std::move(*built.value);
    return result;
}

Parsed<MeshTopology> parse_topology_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        Parsed<MeshTopology> result;
        result.issues.push_back({"MissingFile", "cannot open " + path, -1});
        return result;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_topology_text(ss.str());
}

}  // namespace mocsim
