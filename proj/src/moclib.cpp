// SPDX-License-Identifier: Apache-2.0
#include "mocsim/moclib.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mocsim/clayer.hpp"

namespace mocsim {

const char* to_string(CalSource s) {
    switch (s) {
        case CalSource::Table1: return "table-1";
        case CalSource::Table2: return "table-2";
        case CalSource::Interpolated: return "interpolated";
    }
    return "?";
}

std::string MoclibEntry::label() const {
    return "MC(" + std::to_string(total_ports) + "," + std::to_string(c_ports) + "," +
           std::to_string(p_ports) + ")";
}

MoclibLibrary::MoclibLibrary(std::vector<MoclibEntry> rows) : rows_(std::move(rows)) {}

const MoclibLibrary& MoclibLibrary::builtin() {
    // Virtex-4 synthesis calibration. Hybrid instances scale with C-layer
    // ports; the y=0 family is the packet-switched baseline.
    static const MoclibLibrary lib{{
        {4, 2, 2, 314, 336, CalSource::Table1, false},
        {5, 3, 2, 326, 318, CalSource::Table1, false},
        {5, 2, 3, 341, 303, CalSource::Table1, false},
        {6, 3, 3, 394, 240, CalSource::Table1, false},
        {6, 2, 4, 382, 258, CalSource::Table1, false},
        {7, 3, 4, 440, 221, CalSource::Table1, false},
        {3, 0, 3, 296, 378, CalSource::Table2, false},
        {4, 0, 4, 318, 362, CalSource::Table2, false},
        {5, 0, 5, 349, 324, CalSource::Table2, false},
        {6, 0, 6, 390, 296, CalSource::Table2, false},
        {7, 0, 7, 435, 267, CalSource::Table2, false},
        {8, 0, 8, 493, 229, CalSource::Table2, false},
    }};
    return lib;
}

Parsed<MoclibLibrary> MoclibLibrary::parse_text(const std::string& text) {
    Parsed<MoclibLibrary> result;
    std::vector<MoclibEntry> rows;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag != "MC") {
            result.issues.push_back({"ParseError", "expected `MC x y z area freq table`", line});
            continue;
        }
        MoclibEntry e;
        std::string src;
        if (!(ls >> e.total_ports >> e.c_ports >> e.p_ports >> e.area_slices >>
              e.frequency_mhz >> src)) {
            result.issues.push_back({"ParseError", "malformed MC row", line});
            continue;
        }
        if (src == "table-1") e.source = CalSource::Table1;
        else if (src == "table-2") e.source = CalSource::Table2;
        else {
            result.issues.push_back({"ParseError", "source must be table-1 or table-2", line});
            continue;
        }
        if (e.total_ports != e.c_ports + e.p_ports) {
            result.issues.push_back({"InvalidPortArithmetic", "x != y + z in " + e.label(), line});
            continue;
        }
        if (e.area_slices <= 0 || e.frequency_mhz <= 0) {
            result.issues.push_back({"ParseError", "area and frequency must be > 0", line});
            continue;
        }
        rows.push_back(e);
    }
    if (rows.empty() && result.issues.empty()) {
        result.issues.push_back({"ParseError", "no MC rows found", -1});
    }
    if (result.issues.empty()) result.value = MoclibLibrary(std::move(rows));
    return result;
}

Parsed<MoclibLibrary> MoclibLibrary::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        Parsed<MoclibLibrary> result;
        result.issues.push_back({"MissingFile", "cannot open " + path, -1});
        return result;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

// ---------------------------------------------------------------------------
// Least-squares scaling model
// ---------------------------------------------------------------------------

namespace {

// Solve the k x k normal equations by Gaussian elimination, k <= 3.
bool solve_normal(std::array<std::array<double, 4>, 3>& m, int k, std::array<double, 3>& out) {
    for (int col = 0; col < k; ++col) {
        int pivot = col;
        for (int row = col + 1; row < k; ++row) {
            if (std::fabs(m[row][col]) > std::fabs(m[pivot][col])) pivot = row;
        }
        if (std::fabs(m[pivot][col]) < 1e-12) return false;
        std::swap(m[col], m[pivot]);
        for (int row = 0; row < k; ++row) {
            if (row == col) continue;
            double f = m[row][col] / m[col][col];
            for (int c = col; c <= k; ++c) m[row][c] -= f * m[col][c];
        }
    }
    for (int i = 0; i < k; ++i) out[i] = m[i][k] / m[i][i];
    return true;
}

AxisFit fit_axis(const std::vector<MoclibEntry>& rows, bool fit_area) {
    bool vary_y = false, vary_z = false;
    for (const auto& r : rows) {
        if (r.c_ports != rows.front().c_ports) vary_y = true;
        if (r.p_ports != rows.front().p_ports) vary_z = true;
    }
    // Columns: intercept, then whichever of y/z actually varies.
    std::vector<int> cols;  // 0 = const, 1 = y, 2 = z
    cols.push_back(0);
    if (vary_y) cols.push_back(1);
    if (vary_z) cols.push_back(2);
    const int k = static_cast<int>(cols.size());

    auto value = [&](const MoclibEntry& r, int col) -> double {
        if (col == 0) return 1.0;
        if (col == 1) return r.c_ports;
        return r.p_ports;
    };
    auto target = [&](const MoclibEntry& r) {
        return fit_area ? r.area_slices : r.frequency_mhz;
    };

    std::array<std::array<double, 4>, 3> normal{};
    for (const auto& r : rows) {
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) normal[i][j] += value(r, cols[i]) * value(r, cols[j]);
            normal[i][k] += value(r, cols[i]) * target(r);
        }
    }
    std::array<double, 3> coef{};
    if (!solve_normal(normal, k, coef)) {
        throw SimError("InsufficientData", "degenerate design matrix in scaling fit");
    }

    AxisFit fit;
    for (int i = 0; i < k; ++i) {
        if (cols[i] == 0) fit.intercept = coef[i];
        if (cols[i] == 1) fit.per_c_port = coef[i];
        if (cols[i] == 2) fit.per_p_port = coef[i];
    }
    for (const auto& r : rows) {
        double resid = target(r) - fit.predict(r.c_ports, r.p_ports);
        fit.residual_ss += resid * resid;
    }
    return fit;
}

}  // namespace

ScaleModel scale_model(const MoclibLibrary& lib) {
    const auto& rows = lib.rows();
    if (rows.size() < 2) {
        throw SimError("InsufficientData", "scaling fit needs at least 2 entries");
    }
    ScaleModel m;
    m.area = fit_axis(rows, true);
    m.frequency = fit_axis(rows, false);
    return m;
}

MoclibEntry MoclibLibrary::lookup(int x, int y, int z) const {
    for (const auto& r : rows_) {
        if (r.total_ports == x && r.c_ports == y && r.p_ports == z) return r;
    }
    if (!fit_) fit_ = scale_model(*this);
    int min_x = rows_.front().total_ports, max_x = rows_.front().total_ports;
    for (const auto& r : rows_) {
        min_x = std::min(min_x, r.total_ports);
        max_x = std::max(max_x, r.total_ports);
    }
    MoclibEntry e;
    e.total_ports = x;
    e.c_ports = y;
    e.p_ports = z;
    e.area_slices = fit_->area.predict(y, z);
    e.frequency_mhz = fit_->frequency.predict(y, z);
    e.source = CalSource::Interpolated;
    e.extrapolated = (x < min_x || x > max_x);
    return e;
}

std::string MoclibLibrary::to_table_text() const {
    std::string out;
    for (const auto& r : rows_) {
        out += r.label() + "\t" + format_fixed(r.area_slices, 0) + "\t" +
               format_fixed(r.frequency_mhz, 0) + "\t" + to_string(r.source) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bandwidth
// ---------------------------------------------------------------------------

SwitchBandwidth switch_bandwidth(const MoclibEntry& entry, const RouterConfig& cfg,
                                 const BandwidthAccounting& accounting) {
    if (entry.total_ports != cfg.total_ports || entry.c_ports != cfg.c_ports ||
        entry.p_ports != cfg.p_ports) {
        throw SimError("PortMismatch",
                       "entry " + entry.label() + " does not match the router config");
    }
    double c_share =
        accounting.mode == BandwidthAccounting::Mode::TdmShared ? accounting.tdm_slot_share : 1.0;
    double bits_per_cycle = entry.c_ports * cfg.channel_width_c * c_share +
                            entry.p_ports * cfg.channel_width_p;
    // MHz x bits / 8 = decimal MB/s.
    SwitchBandwidth bw;
    bw.aggregate_mbps = bits_per_cycle * entry.frequency_mhz / 8.0;
    bw.per_port_mbps = entry.total_ports > 0 ? bw.aggregate_mbps / entry.total_ports : 0.0;
    return bw;
}

SwitchBandwidth switch_bandwidth(const MoclibEntry& entry, const BandwidthAccounting& accounting) {
    RouterConfig cfg;
    cfg.total_ports = entry.total_ports;
    cfg.c_ports = entry.c_ports;
    cfg.p_ports = entry.p_ports;
    return switch_bandwidth(entry, cfg, accounting);
}

// ---------------------------------------------------------------------------
// Area-matched comparison
// ---------------------------------------------------------------------------

double GainReport::mean_gain(BandwidthAccounting::Mode mode) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& p : pairs) {
        if (p.mode == mode) {
            sum += p.gain_pct;
            ++n;
        }
    }
    return n > 0 ? sum / n : 0.0;
}

double GainReport::max_gain(BandwidthAccounting::Mode mode) const {
    double best = 0.0;
    bool any = false;
    for (const auto& p : pairs) {
        if (p.mode != mode) continue;
        if (!any || p.gain_pct > best) best = p.gain_pct;
        any = true;
    }
    return any ? best : 0.0;
}

std::string GainReport::to_csv() const {
    std::string out = "hybrid,baseline,area_h,area_b,bw_h,bw_b,gain_pct,accounting\n";
    for (const auto& p : pairs) {
        out += p.hybrid.label() + "," + p.baseline.label() + "," +
               format_fixed(p.hybrid.area_slices, 0) + "," + format_fixed(p.baseline.area_slices, 0) +
               "," + format_fixed(p.bw_hybrid_per_port_mbps, 3) + "," +
               format_fixed(p.bw_baseline_per_port_mbps, 3) + "," + format_fixed(p.gain_pct, 3) +
               "," + (p.mode == BandwidthAccounting::Mode::Aggregate ? "aggregate" : "tdm-shared") +
               "\n";
    }
    return out;
}

GainReport area_matched_comparison(const MoclibLibrary& lib, double tolerance_pct,
                                   const std::vector<BandwidthAccounting>& accountings) {
    std::vector<MoclibEntry> hybrids, baselines;
    for (const auto& r : lib.rows()) {
        (r.c_ports > 0 ? hybrids : baselines).push_back(r);
    }
    // Sort so the report is independent of library row order.
    auto by_instance = [](const MoclibEntry& a, const MoclibEntry& b) {
        return std::tuple(a.total_ports, a.c_ports, a.p_ports) <
               std::tuple(b.total_ports, b.c_ports, b.p_ports);
    };
    std::sort(hybrids.begin(), hybrids.end(), by_instance);
    std::sort(baselines.begin(), baselines.end(), by_instance);

    GainReport report;
    report.tolerance_pct = tolerance_pct;
    for (const auto& h : hybrids) {
        const MoclibEntry* best = nullptr;
        double best_delta = 0.0;
        for (const auto& b : baselines) {
            double delta = std::fabs(h.area_slices - b.area_slices);
            if (!best || delta < best_delta ||
                (delta == best_delta && b.area_slices < best->area_slices)) {
                best = &b;
                best_delta = delta;
            }
        }
        if (!best || best_delta > tolerance_pct / 100.0 * h.area_slices) {
            report.unmatched.push_back(h);
            continue;
        }
        for (const auto& acc : accountings) {
            GainPair p;
            p.hybrid = h;
            p.baseline = *best;
            p.mode = acc.mode;
            p.bw_hybrid_per_port_mbps = switch_bandwidth(h, acc).per_port_mbps;
            // The baseline has no C-layer, so the accounting mode does not
            // change its number; always credit it fully.
            p.bw_baseline_per_port_mbps =
                switch_bandwidth(*best, BandwidthAccounting::aggregate()).per_port_mbps;
            p.gain_pct = 100.0 * (p.bw_hybrid_per_port_mbps - p.bw_baseline_per_port_mbps) /
                         p.bw_baseline_per_port_mbps;
            report.pairs.push_back(p);
        }
    }
    if (report.pairs.empty()) {
        throw SimError("NoMatchWithinTolerance",
                       "no hybrid/baseline pair within " + format_fixed(tolerance_pct, 2) + "%");
    }
    return report;
}

double schedule_memory_slices(int c_ports, int slot_count, int bits_per_slice) {
    return static_cast<double>(schedule_bits(c_ports, slot_count)) / bits_per_slice;
}

}  // namespace mocsim
