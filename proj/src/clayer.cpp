// SPDX-License-Identifier: Apache-2.0
#include "mocsim/clayer.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "mocsim/kvfile.hpp"

namespace mocsim {

Parsed<ScheduleMemory> validate_schedule(const ScheduleMemory& schedule, int c_ports) {
    Parsed<ScheduleMemory> result;
    if (schedule.slots.empty()) {
        result.issues.push_back({"EmptySchedule", "schedule has no slots", -1});
        return result;
    }
    for (size_t s = 0; s < schedule.slots.size(); ++s) {
        const SlotConfig& slot = schedule.slots[s];
        if (static_cast<int>(slot.out_source.size()) != c_ports) {
            result.issues.push_back({"MissingOutput",
                                     "slot " + std::to_string(s) + " configures " +
                                         std::to_string(slot.out_source.size()) + " outputs, router has " +
                                         std::to_string(c_ports),
                                     -1});
            continue;
        }
        for (size_t o = 0; o < slot.out_source.size(); ++o) {
            const SourceSelect& sel = slot.out_source[o];
            if (!sel.is_idle() && (sel.input < 0 || sel.input >= c_ports)) {
                result.issues.push_back({"UnknownPort",
                                         "slot " + std::to_string(s) + " out" + std::to_string(o) +
                                             " selects in" + std::to_string(sel.input) +
                                             " on a router with " + std::to_string(c_ports) +
                                             " C ports",
                                         -1});
            }
        }
    }
    if (result.issues.empty()) {
        ScheduleMemory m = schedule;
        m.c_ports = c_ports;
        result.value = std::move(m);
    }
    return result;
}

int advance_slot(CLayerState& state, const ScheduleMemory& schedule) {
    if (schedule.slots.empty()) throw SimError("EmptySchedule", "cannot advance an empty schedule");
    state.current_slot = (state.current_slot + 1) % schedule.slot_count();
    return state.current_slot;
}

unsigned select_bits(int c_ports) {
    if (c_ports < 2) throw SimError("DegenerateCLayer", "C-layer needs at least 2 ports");
    return ceil_log2(static_cast<std::uint64_t>(c_ports));
}

unsigned select_bits_with_idle(int c_ports) {
    unsigned bits = select_bits(c_ports);
    // Spare code available iff 2^bits > C; otherwise idle costs one more bit.
    if ((1ULL << bits) > static_cast<std::uint64_t>(c_ports)) return bits;
    return bits + 1;
}

std::uint64_t schedule_bits(int c_ports, int slot_count) {
    if (slot_count < 1) throw SimError("EmptySchedule", "slot_count must be >= 1");
    return static_cast<std::uint64_t>(slot_count) * c_ports * select_bits(c_ports);
}

std::uint64_t schedule_bits_with_idle(int c_ports, int slot_count) {
    if (slot_count < 1) throw SimError("EmptySchedule", "slot_count must be >= 1");
    return static_cast<std::uint64_t>(slot_count) * c_ports * select_bits_with_idle(c_ports);
}

// ---------------------------------------------------------------------------
// Schedule file parsing
// ---------------------------------------------------------------------------

namespace {

std::string strip(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// "out<j> <- in<k>" or "out<j> <- idle"
bool parse_assignment(const std::string& text, int& out_idx, SourceSelect& sel) {
    auto arrow = text.find("<-");
    if (arrow == std::string::npos) return false;
    std::string lhs = strip(text.substr(0, arrow));
    std::string rhs = strip(text.substr(arrow + 2));
    if (lhs.rfind("out", 0) != 0) return false;
    long o;
    if (!parse_long(lhs.substr(3), o)) return false;
    out_idx = static_cast<int>(o);
    if (rhs == "idle") {
        sel = SourceSelect::idle();
        return true;
    }
    if (rhs.rfind("in", 0) != 0) return false;
    long i;
    if (!parse_long(rhs.substr(2), i)) return false;
    sel = SourceSelect::from(static_cast<int>(i));
    return true;
}

}  // namespace

Parsed<ScheduleFile> parse_schedule_text(const std::string& text) {
    Parsed<ScheduleFile> result;
    ScheduleFile file;

    std::istringstream is(text);
    std::string raw;
    int line = 0;
    std::optional<std::pair<int, int>> current;
    std::map<int, SlotConfig> slots;  // slot index -> config, for the current block
    int current_line = -1;

    auto flush_block = [&]() {
        if (!current) return;
        ScheduleMemory mem;
        int expect = 0;
        for (const auto& [idx, cfg] : slots) {
            if (idx != expect) {
                result.issues.push_back({"ParseError",
                                         "router block starting at line " +
                                             std::to_string(current_line) +
                                             " is missing slot " + std::to_string(expect),
                                         current_line});
                break;
            }
            mem.slots.push_back(cfg);
            ++expect;
        }
        if (mem.slots.empty()) {
            result.issues.push_back(
                {"EmptySchedule", "router block has no slot lines", current_line});
        }
        auto key = *current;
        if (file.per_router.count(key)) {
            result.issues.push_back({"ParseError",
                                     "router (" + std::to_string(key.first) + "," +
                                         std::to_string(key.second) + ") appears twice",
                                     current_line});
        } else {
            file.per_router[key] = std::move(mem);
        }
        slots.clear();
        current.reset();
    };

    while (std::getline(is, raw)) {
        ++line;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::string s = strip(raw);
        if (s.empty()) continue;

        if (s.rfind("router", 0) == 0) {
            flush_block();
            std::istringstream ls(s.substr(6));
            int x, y;
            if (!(ls >> x >> y)) {
                result.issues.push_back({"ParseError", "expected `router <x> <y>`", line});
                continue;
            }
            current = std::make_pair(x, y);
            current_line = line;
            continue;
        }
        if (s.rfind("slot", 0) == 0) {
            if (!current) {
                result.issues.push_back({"ParseError", "slot line outside a router block", line});
                continue;
            }
            auto colon = s.find(':');
            if (colon == std::string::npos) {
                result.issues.push_back({"ParseError", "expected `slot <i>: ...`", line});
                continue;
            }
            long idx;
            if (!parse_long(strip(s.substr(4, colon - 4)), idx) || idx < 0) {
                result.issues.push_back({"ParseError", "bad slot index", line});
                continue;
            }
            if (slots.count(static_cast<int>(idx))) {
                result.issues.push_back(
                    {"ParseError", "slot " + std::to_string(idx) + " repeated", line});
                continue;
            }

            // Comma-separated out<j> <- in<k>|idle assignments.
            std::map<int, SourceSelect> assigns;
            std::string rest = s.substr(colon + 1);
            size_t pos = 0;
            bool bad = false;
            while (pos <= rest.size()) {
                auto comma = rest.find(',', pos);
                std::string piece = strip(comma == std::string::npos ? rest.substr(pos)
                                                                     : rest.substr(pos, comma - pos));
                if (!piece.empty()) {
                    int out_idx;
                    SourceSelect sel;
                    if (!parse_assignment(piece, out_idx, sel)) {
                        result.issues.push_back(
                            {"ParseError", "bad assignment `" + piece + "`", line});
                        bad = true;
                    } else if (assigns.count(out_idx)) {
                        result.issues.push_back({"ParseError",
                                                 "out" + std::to_string(out_idx) +
                                                     " assigned twice in one slot",
                                                 line});
                        bad = true;
                    } else {
                        assigns[out_idx] = sel;
                    }
                }
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            if (bad) continue;
            if (assigns.empty()) {
                result.issues.push_back({"ParseError", "slot line assigns nothing", line});
                continue;
            }
            // Outputs must be dense 0..n-1: every output configured.
            SlotConfig cfg;
            int expect = 0;
            for (const auto& [o, sel] : assigns) {
                if (o != expect) {
                    result.issues.push_back({"MissingOutput",
                                             "slot must configure every output; out" +
                                                 std::to_string(expect) + " missing",
                                             line});
                    bad = true;
                    break;
                }
                cfg.out_source.push_back(sel);
                ++expect;
            }
            if (!bad) slots[static_cast<int>(idx)] = std::move(cfg);
            continue;
        }
        result.issues.push_back({"ParseError", "unrecognized line `" + s + "`", line});
    }
    flush_block();

    if (result.issues.empty()) result.value = std::move(file);
    return result;
}

Parsed<ScheduleFile> parse_schedule_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        Parsed<ScheduleFile> result;
        result.issues.push_back({"MissingFile", "cannot open " + path, -1});
        return result;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_schedule_text(ss.str());
}

Parsed<std::vector<ScheduleMemory>> bind_schedules(const ScheduleFile& file,
                                                   const MeshTopology& topo) {
    Parsed<std::vector<ScheduleMemory>> result;
    std::vector<ScheduleMemory> bound(topo.routers.size());

    for (const auto& [key, mem] : file.per_router) {
        Coord c{key.first, key.second};
        if (!topo.in_bounds(c)) {
            result.issues.push_back(
                {"UnknownPort", "schedule names router " + c.to_string() + " outside the mesh", -1});
            continue;
        }
        int idx = topo.router_index(c);
        auto v = validate_schedule(mem, topo.routers[idx].c_ports);
        if (!v.ok()) {
            for (auto& issue : v.issues) {
                issue.message = "router " + c.to_string() + ": " + issue.message;
                result.issues.push_back(issue);
            }
            continue;
        }
        bound[idx] = std::move(*v.value);
    }

    for (size_t r = 0; r < topo.routers.size(); ++r) {
        if (!topo.c_members_at(static_cast<int>(r)).empty() && bound[r].slots.empty()) {
            result.issues.push_back({"MissingSchedule",
                                     "router " + topo.coord_of(static_cast<int>(r)).to_string() +
                                         " has C-layer members but no schedule block",
                                     -1});
        }
    }

    if (result.issues.empty()) result.value = std::move(bound);
    return result;
}

}  // namespace mocsim
