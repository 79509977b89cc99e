// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "mocsim/clayer.hpp"
#include "test_util.hpp"

using namespace mocsim;

namespace {

ScheduleMemory swap_schedule() {
    ScheduleMemory m;
    m.c_ports = 2;
    m.slots.push_back({{SourceSelect::from(1), SourceSelect::from(0)}});
    return m;
}

bool has_code(const std::vector<Issue>& issues, const std::string& code) {
    return std::any_of(issues.begin(), issues.end(),
                       [&](const Issue& i) { return i.code == code; });
}

}  // namespace

TEST_CASE("validate_schedule") {
    CHECK(validate_schedule(swap_schedule(), 2).ok());

    ScheduleMemory bad = swap_schedule();
    bad.slots[0].out_source[0] = SourceSelect::from(5);
    auto v = validate_schedule(bad, 2);
    CHECK_FALSE(v.ok());
    CHECK(has_code(v.issues, "UnknownPort"));

    ScheduleMemory empty;
    CHECK(has_code(validate_schedule(empty, 2).issues, "EmptySchedule"));

    // Multicast slot on a 4-port C-layer: three outputs fed by in2, one idle.
    ScheduleMemory multicast;
    multicast.c_ports = 4;
    multicast.slots.push_back({{SourceSelect::from(2), SourceSelect::from(2),
                                SourceSelect::from(2), SourceSelect::idle()}});
    CHECK(validate_schedule(multicast, 4).ok());

    // Every slot must configure every output.
    ScheduleMemory short_slot;
    short_slot.c_ports = 2;
    short_slot.slots.push_back({{SourceSelect::from(0)}});
    CHECK(has_code(validate_schedule(short_slot, 2).issues, "MissingOutput"));
}

TEST_CASE("advance_slot wraps and distributes evenly") {
    ScheduleMemory m;
    m.c_ports = 2;
    for (int i = 0; i < 4; ++i) m.slots.push_back(swap_schedule().slots[0]);

    CLayerState st;
    st.current_slot = 3;
    CHECK(advance_slot(st, m) == 0);  // wraparound

    ScheduleMemory single = swap_schedule();
    CLayerState st1;
    CHECK(advance_slot(st1, single) == 0);
    CHECK(advance_slot(st1, single) == 0);  // S=1 stays at slot 0

    // Over 1000 cycles with S=4, each slot is active exactly 250 times.
    CLayerState wheel;
    std::vector<int> active(4, 0);
    for (int cycle = 0; cycle < 1000; ++cycle) {
        ++active[wheel.current_slot];
        advance_slot(wheel, m);
    }
    for (int s = 0; s < 4; ++s) CHECK(active[s] == 250);
}

TEST_CASE("transfer_slot moves words through the cross-point in one cycle") {
    using Word = std::uint32_t;
    std::vector<std::optional<Word>> inputs = {0xAAAA0001u, 0xBBBB0002u};

    auto swapped = transfer_slot(swap_schedule().slots[0], inputs);
    REQUIRE(swapped.size() == 2);
    CHECK(*swapped[0] == 0xBBBB0002u);
    CHECK(*swapped[1] == 0xAAAA0001u);

    // Multicast: one source word appears bit-identical on all listeners.
    SlotConfig mc{{SourceSelect::from(2), SourceSelect::from(2), SourceSelect::from(2),
                   SourceSelect::idle()}};
    std::vector<std::optional<Word>> four = {1u, 2u, 0xDEADBEEFu, 4u};
    auto out = transfer_slot(mc, four);
    CHECK(*out[0] == 0xDEADBEEFu);
    CHECK(*out[1] == 0xDEADBEEFu);
    CHECK(*out[2] == 0xDEADBEEFu);
    CHECK_FALSE(out[3].has_value());

    // All idle: nothing emitted.
    SlotConfig idle{{SourceSelect::idle(), SourceSelect::idle()}};
    auto none = transfer_slot(idle, inputs);
    CHECK_FALSE(none[0].has_value());
    CHECK_FALSE(none[1].has_value());
}

TEST_CASE("schedule_bits sizing rule") {
    CHECK(schedule_bits(2, 1) == 2);   // log2(2) = 1 bit per select x 2 outputs
    CHECK(schedule_bits(4, 8) == 64);  // 8 slots x 4 outputs x 2 bits

    // Cross-check C=4 by enumeration: 2 select bits encode exactly the 4
    // possible sources for one output, so a slot costs 4 x 2 bits.
    unsigned bits = select_bits(4);
    CHECK((1u << bits) == 4u);
    CHECK(schedule_bits(4, 8) == 8ULL * 4ULL * bits);

    CHECK_THROWS_AS(schedule_bits(1, 4), SimError);  // no pair to connect

    // Linear growth in S.
    for (int c : {2, 3, 4, 8}) {
        for (int s = 1; s <= 64; s *= 4) {
            CHECK(schedule_bits(c, s) == static_cast<std::uint64_t>(s) * schedule_bits(c, 1));
        }
    }
}

TEST_CASE("idle encoding costs one spare code or one extra bit") {
    CHECK(select_bits(2) == 1);
    CHECK(select_bits_with_idle(2) == 2);  // 2^1 == 2 leaves no spare code
    CHECK(select_bits(3) == 2);
    CHECK(select_bits_with_idle(3) == 2);  // spare code available
    CHECK(select_bits(4) == 2);
    CHECK(select_bits_with_idle(4) == 3);
}

TEST_CASE("schedule file parser") {
    const char* good =
        "# two C ports, swap then idle\n"
        "router 0 0\n"
        "slot 0: out0 <- in1, out1 <- in0\n"
        "slot 1: out0 <- idle, out1 <- idle\n";
    auto parsed = parse_schedule_text(good);
    REQUIRE_MESSAGE(parsed.ok(), parsed.issues_text());
    const ScheduleMemory& m = parsed->per_router.at({0, 0});
    REQUIRE(m.slot_count() == 2);
    CHECK(m.slots[0].out_source[0] == SourceSelect::from(1));
    CHECK(m.slots[1].out_source[1] == SourceSelect::idle());

    auto junk = parse_schedule_text("router 0 0\nslot 0: out0 <- in1, out1 <- banana\n");
    REQUIRE_FALSE(junk.ok());
    CHECK(junk.issues[0].line == 2);  // line numbers point at the bad slot

    auto missing = parse_schedule_text("router 0 0\nslot 0: out1 <- in0\n");
    CHECK(has_code(missing.issues, "MissingOutput"));

    auto no_block = parse_schedule_text("slot 0: out0 <- in1\n");
    CHECK_FALSE(no_block.ok());

    auto dup = parse_schedule_text(
        "router 0 0\nslot 0: out0 <- in1, out1 <- in0\nslot 0: out0 <- idle, out1 <- idle\n");
    CHECK_FALSE(dup.ok());
}

TEST_CASE("bind_schedules checks ports against the topology") {
    auto topo = test::parse_or_die(
        test::topo_text(1, 1, {{0, 0, 0, true}, {0, 0, 1, true}}, 2, 4));

    ScheduleFile file;
    file.per_router[{0, 0}] = swap_schedule();
    auto bound = bind_schedules(file, topo);
    REQUIRE_MESSAGE(bound.ok(), bound.issues_text());
    CHECK((*bound.value)[0].slot_count() == 1);

    // Reference to a C port the router does not have.
    ScheduleFile wide;
    wide.per_router[{0, 0}] = ScheduleMemory{
        2, {SlotConfig{{SourceSelect::from(5), SourceSelect::from(0)}}}};
    CHECK(has_code(bind_schedules(wide, topo).issues, "UnknownPort"));

    // A router with C members but no block.
    ScheduleFile empty;
    CHECK(has_code(bind_schedules(empty, topo).issues, "MissingSchedule"));

    // A block for a router outside the mesh.
    ScheduleFile stray;
    stray.per_router[{3, 3}] = swap_schedule();
    CHECK(has_code(bind_schedules(stray, topo).issues, "UnknownPort"));
}
