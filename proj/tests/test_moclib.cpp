// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "mocsim/moclib.hpp"

using namespace mocsim;

namespace {

// Independent 1-D least-squares oracle (direct covariance formula; the
// implementation solves normal equations by elimination).
std::pair<double, double> ols_1d(const std::vector<double>& xs, const std::vector<double>& ys) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    double slope = num / den;
    return {my - slope * mx, slope};
}

MoclibLibrary baseline_only() {
    std::vector<MoclibEntry> rows;
    for (const auto& r : MoclibLibrary::builtin().rows()) {
        if (r.c_ports == 0) rows.push_back(r);
    }
    return MoclibLibrary(rows);
}

}  // namespace

TEST_CASE("lookup reproduces all twelve published rows exactly") {
    struct Row {
        int x, y, z;
        double area, freq;
    };
    // Golden copies, kept separate from the library source.
    const Row golden[12] = {
        {4, 2, 2, 314, 336}, {5, 3, 2, 326, 318}, {5, 2, 3, 341, 303},
        {6, 3, 3, 394, 240}, {6, 2, 4, 382, 258}, {7, 3, 4, 440, 221},
        {3, 0, 3, 296, 378}, {4, 0, 4, 318, 362}, {5, 0, 5, 349, 324},
        {6, 0, 6, 390, 296}, {7, 0, 7, 435, 267}, {8, 0, 8, 493, 229},
    };
    const auto& lib = MoclibLibrary::builtin();
    REQUIRE(lib.rows().size() == 12);
    for (const auto& g : golden) {
        auto e = lib.lookup(g.x, g.y, g.z);
        CHECK(e.area_slices == g.area);
        CHECK(e.frequency_mhz == g.freq);
        CHECK(e.source != CalSource::Interpolated);
        CHECK_FALSE(e.extrapolated);
    }
}

TEST_CASE("calibration file parser round-trips the builtin table") {
    std::string text;
    for (const auto& r : MoclibLibrary::builtin().rows()) {
        text += "MC " + std::to_string(r.total_ports) + " " + std::to_string(r.c_ports) + " " +
                std::to_string(r.p_ports) + " " + format_fixed(r.area_slices, 0) + " " +
                format_fixed(r.frequency_mhz, 0) + " " + to_string(r.source) + "\n";
    }
    auto parsed = MoclibLibrary::parse_text(text);
    REQUIRE_MESSAGE(parsed.ok(), parsed.issues_text());
    REQUIRE(parsed->rows().size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(parsed->rows()[i].area_slices == MoclibLibrary::builtin().rows()[i].area_slices);
        CHECK(parsed->rows()[i].frequency_mhz == MoclibLibrary::builtin().rows()[i].frequency_mhz);
    }

    auto bad = MoclibLibrary::parse_text("MC 5 2 2 341 303 table-1\n");
    CHECK_FALSE(bad.ok());  // 2 + 2 != 5
}

TEST_CASE("scale_model marginal area per P-layer port") {
    // Baseline family only: area against z. Oracle slope from the direct
    // covariance formula; 39.342857 slices/port (the 296->493 rise over
    // five port steps is ~39 as well).
    auto fit = scale_model(baseline_only());
    auto [b0, slope] = ols_1d({3, 4, 5, 6, 7, 8}, {296, 318, 349, 390, 435, 493});
    REQUIRE(fit.area.per_p_port.has_value());
    CHECK_FALSE(fit.area.per_c_port.has_value());  // no variation on that axis
    CHECK(*fit.area.per_p_port == doctest::Approx(slope).epsilon(1e-9));
    CHECK(*fit.area.per_p_port == doctest::Approx(39.342857).epsilon(1e-6));
    CHECK(fit.area.intercept == doctest::Approx(b0).epsilon(1e-9));

    auto [f0, fslope] = ols_1d({3, 4, 5, 6, 7, 8}, {378, 362, 324, 296, 267, 229});
    (void)f0;
    REQUIRE(fit.frequency.per_p_port.has_value());
    CHECK(*fit.frequency.per_p_port == doctest::Approx(fslope).epsilon(1e-9));
    CHECK(*fit.frequency.per_p_port == doctest::Approx(-30.228571).epsilon(1e-6));
}

TEST_CASE("scale_model over the full library") {
    // Frozen 2-D fit over all 12 rows (computed independently):
    //   area = 154.909385 + 35.684466*y + 40.859223*z
    //   freq = 487.149946 - 44.039374*y - 32.415858*z
    auto fit = scale_model(MoclibLibrary::builtin());
    CHECK(fit.area.intercept == doctest::Approx(154.909385).epsilon(1e-5));
    CHECK(*fit.area.per_c_port == doctest::Approx(35.684466).epsilon(1e-5));
    CHECK(*fit.area.per_p_port == doctest::Approx(40.859223).epsilon(1e-5));
    CHECK(fit.frequency.intercept == doctest::Approx(487.149946).epsilon(1e-5));
    CHECK(*fit.frequency.per_c_port == doctest::Approx(-44.039374).epsilon(1e-5));
    CHECK(*fit.frequency.per_p_port == doctest::Approx(-32.415858).epsilon(1e-5));

    // One +1 P-port step inside the hybrid family: 394 - 326 = 68 slices.
    const auto& lib = MoclibLibrary::builtin();
    CHECK(lib.lookup(6, 3, 3).area_slices - lib.lookup(5, 3, 2).area_slices == 68);

    // Frequency never increases with port count within the calibrated range.
    CHECK(*fit.frequency.per_c_port < 0.0);
    CHECK(*fit.frequency.per_p_port < 0.0);
    for (int y = 0; y <= 3; ++y) {
        double prev = fit.frequency.predict(y, 2);
        for (int z = 3; z <= 8; ++z) {
            double f = fit.frequency.predict(y, z);
            CHECK(f < prev);
            prev = f;
        }
    }
}

TEST_CASE("interpolated lookups and extrapolation flag") {
    const auto& lib = MoclibLibrary::builtin();
    auto e = lib.lookup(5, 1, 4);  // not a characterized instance
    CHECK(e.source == CalSource::Interpolated);
    CHECK_FALSE(e.extrapolated);
    CHECK(e.area_slices == doctest::Approx(354.0307).epsilon(1e-4));
    CHECK(e.frequency_mhz == doctest::Approx(313.4471).epsilon(1e-4));

    auto beyond = lib.lookup(9, 0, 9);
    CHECK(beyond.source == CalSource::Interpolated);
    CHECK(beyond.extrapolated);
}

TEST_CASE("scale_model requires data") {
    CHECK_THROWS_AS(scale_model(MoclibLibrary{{}}), SimError);
}

TEST_CASE("switch_bandwidth follows the ports x frequency x width product") {
    const auto& lib = MoclibLibrary::builtin();
    // 5 P-ports x 8 bits x 324 MHz / 8 = 1620 MB/s, 324 MB/s per port.
    auto bw = switch_bandwidth(lib.lookup(5, 0, 5), BandwidthAccounting::aggregate());
    CHECK(bw.aggregate_mbps == doctest::Approx(1620.0));
    CHECK(bw.per_port_mbps == doctest::Approx(324.0));

    // (2x32 + 2x8) bits x 336 MHz / 8 = 3360 MB/s.
    auto hybrid = switch_bandwidth(lib.lookup(4, 2, 2), BandwidthAccounting::aggregate());
    CHECK(hybrid.aggregate_mbps == doctest::Approx(3360.0));

    // Zero frequency: zero bandwidth.
    MoclibEntry dead{4, 2, 2, 314, 0.0, CalSource::Table1, false};
    CHECK(switch_bandwidth(dead, BandwidthAccounting::aggregate()).aggregate_mbps == 0.0);

    // Linear in frequency and in channel width.
    MoclibEntry doubled{5, 0, 5, 349, 648, CalSource::Table2, false};
    CHECK(switch_bandwidth(doubled, BandwidthAccounting::aggregate()).aggregate_mbps ==
          doctest::Approx(2 * 1620.0));
    RouterConfig wide;
    wide.total_ports = 5;
    wide.c_ports = 0;
    wide.p_ports = 5;
    wide.channel_width_p = 16;
    CHECK(switch_bandwidth(lib.lookup(5, 0, 5), wide, BandwidthAccounting::aggregate())
              .aggregate_mbps == doctest::Approx(2 * 1620.0));
}

TEST_CASE("area_matched_comparison pairs and gains") {
    auto report = area_matched_comparison(
        MoclibLibrary::builtin(), 5.0,
        {BandwidthAccounting::aggregate(), BandwidthAccounting::tdm_shared()});

    // All six hybrids match; pairings frozen from the published areas
    // (nearest baseline area, e.g. 314 <-> 318 at 1.3%).
    CHECK(report.unmatched.empty());
    REQUIRE(report.pairs.size() == 12);  // 6 pairs x 2 accountings
    std::map<std::string, std::string> expected = {
        {"MC(4,2,2)", "MC(4,0,4)"}, {"MC(5,3,2)", "MC(4,0,4)"}, {"MC(5,2,3)", "MC(5,0,5)"},
        {"MC(6,3,3)", "MC(6,0,6)"}, {"MC(6,2,4)", "MC(6,0,6)"}, {"MC(7,3,4)", "MC(7,0,7)"},
    };
    for (const auto& p : report.pairs) {
        CHECK(expected.at(p.hybrid.label()) == p.baseline.label());
        CHECK(p.gain_pct > 0.0);  // strictly positive under both accountings
    }

    // Mean/max frozen from an independent pass over the tables.
    CHECK(report.mean_gain(BandwidthAccounting::Mode::Aggregate) ==
          doctest::Approx(108.3285).epsilon(1e-3));
    CHECK(report.max_gain(BandwidthAccounting::Mode::Aggregate) ==
          doctest::Approx(145.9669).epsilon(1e-3));
    CHECK(report.mean_gain(BandwidthAccounting::Mode::TdmShared) ==
          doctest::Approx(27.7980).epsilon(1e-3));
    CHECK(report.max_gain(BandwidthAccounting::Mode::TdmShared) ==
          doctest::Approx(40.5525).epsilon(1e-3));

    // CSV contract.
    auto csv = report.to_csv();
    CHECK(csv.rfind("hybrid,baseline,area_h,area_b,bw_h,bw_b,gain_pct,accounting\n", 0) == 0);
}

TEST_CASE("area_matched_comparison is independent of row order") {
    auto rows = MoclibLibrary::builtin().rows();
    auto base = area_matched_comparison(MoclibLibrary{rows}, 5.0,
                                        {BandwidthAccounting::aggregate()});
    std::mt19937 shuffler(7);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(rows.begin(), rows.end(), shuffler);
        auto shuffled = area_matched_comparison(MoclibLibrary{rows}, 5.0,
                                                {BandwidthAccounting::aggregate()});
        CHECK(shuffled.to_csv() == base.to_csv());
    }
}

TEST_CASE("tight tolerance leaves hybrids unmatched") {
    // At 0.1% even the closest pair (394 vs 390, ~1%) fails; nothing
    // matches and the comparison refuses to produce an empty report.
    CHECK_THROWS_AS(area_matched_comparison(MoclibLibrary::builtin(), 0.1,
                                            {BandwidthAccounting::aggregate()}),
                    SimError);
}

TEST_CASE("schedule memory area scales linearly in slot count") {
    // 64 schedule bits per slice-equivalent by default.
    CHECK(schedule_memory_slices(4, 8) == doctest::Approx(1.0));
    for (int s = 1; s <= 64; s *= 2) {
        CHECK(schedule_memory_slices(4, s) == doctest::Approx(s * schedule_memory_slices(4, 1)));
    }
}
