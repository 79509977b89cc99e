// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mocsim/common.hpp"
#include "mocsim/noc_model.hpp"

namespace mocsim {

// ---------------------------------------------------------------------------
// MoClib: the characterized router component library. Each entry is a
// synthesized switch instance MC(x,y,z): x total ports, y C-layer ports,
// z P-layer ports, with post-synthesis area (slices) and clock (MHz).
// ---------------------------------------------------------------------------

enum class CalSource : std::uint8_t { Table1, Table2, Interpolated };

const char* to_string(CalSource s);

struct MoclibEntry {
    int total_ports = 0;  // x = y + z
    int c_ports = 0;      // y
    int p_ports = 0;      // z
    double area_slices = 0.0;
    double frequency_mhz = 0.0;
    CalSource source = CalSource::Interpolated;
    bool extrapolated = false;  // outside the calibrated x range

    std::string label() const;  // "MC(x,y,z)"
};

// Least-squares scaling model: marginal area / frequency per C-layer and
// per P-layer port. A slope is absent when the library has no variation
// on that axis (e.g. a baseline-only library has constant y).
struct AxisFit {
    double intercept = 0.0;
    std::optional<double> per_c_port;
    std::optional<double> per_p_port;
    double residual_ss = 0.0;  // sum of squared residuals

    double predict(int c_ports, int p_ports) const {
        return intercept + (per_c_port ? *per_c_port * c_ports : 0.0) +
               (per_p_port ? *per_p_port * p_ports : 0.0);
    }
};

struct ScaleModel {
    AxisFit area;
    AxisFit frequency;
};

class MoclibLibrary {
public:
    MoclibLibrary() = default;
    explicit MoclibLibrary(std::vector<MoclibEntry> rows);

    // The published Virtex-4 calibration: 6 hybrid rows + 6 baseline rows.
    static const MoclibLibrary& builtin();

    // Calibration data file: `MC <x> <y> <z> <area> <freq> <table-1|table-2>`.
    static Parsed<MoclibLibrary> parse_text(const std::string& text);
    static Parsed<MoclibLibrary> parse_file(const std::string& path);

    const std::vector<MoclibEntry>& rows() const { return rows_; }

    // Exact row if characterized, otherwise an interpolated entry from the
    // scaling fit. Predictions beyond the calibrated port range are marked
    // extrapolated.
    MoclibEntry lookup(int x, int y, int z) const;

    std::string to_table_text() const;

private:
    std::vector<MoclibEntry> rows_;
    mutable std::optional<ScaleModel> fit_;  // lazily built for lookups
};

// Ordinary least squares of area and frequency against (c_ports, p_ports).
// Axes without variation are dropped from the fit. Throws
// SimError("InsufficientData") with fewer than 2 distinct points.
ScaleModel scale_model(const MoclibLibrary& lib);

// ---------------------------------------------------------------------------
// Bandwidth model. Switch bandwidth is ports x clock x channel width; the
// two accountings differ in how much of a C-layer port's cross-point
// bandwidth is credited to it:
//   - Aggregate: every port at full channel width (32-bit C, 8-bit P).
//   - TdmShared: each C-port at 32 bits x its TDM slot share. The default
//     share of 1/2 models symmetric traffic where a port sources half the
//     wheel and sinks the other half.
// ---------------------------------------------------------------------------

struct BandwidthAccounting {
    enum class Mode : std::uint8_t { Aggregate, TdmShared };

    Mode mode = Mode::Aggregate;
    double tdm_slot_share = 0.5;

    static BandwidthAccounting aggregate() { return {Mode::Aggregate, 1.0}; }
    static BandwidthAccounting tdm_shared(double share = 0.5) {
        return {Mode::TdmShared, share};
    }
    const char* name() const {
        return mode == Mode::Aggregate ? "aggregate" : "tdm-shared";
    }
};

struct SwitchBandwidth {
    double aggregate_mbps = 0.0;  // MB/s, decimal megabytes
    double per_port_mbps = 0.0;   // aggregate / total ports
};

// Entry and cfg must agree on port counts; cfg supplies channel widths.
SwitchBandwidth switch_bandwidth(const MoclibEntry& entry, const RouterConfig& cfg,
                                 const BandwidthAccounting& accounting);

// Convenience: channel widths at their defaults (8-bit P, 32-bit C).
SwitchBandwidth switch_bandwidth(const MoclibEntry& entry, const BandwidthAccounting& accounting);

// ---------------------------------------------------------------------------
// Area-matched hybrid vs baseline comparison
// ---------------------------------------------------------------------------

struct GainPair {
    MoclibEntry hybrid;
    MoclibEntry baseline;
    double bw_hybrid_per_port_mbps = 0.0;
    double bw_baseline_per_port_mbps = 0.0;
    double gain_pct = 0.0;
    BandwidthAccounting::Mode mode = BandwidthAccounting::Mode::Aggregate;
};

struct GainReport {
    std::vector<GainPair> pairs;             // grouped by accounting mode
    std::vector<MoclibEntry> unmatched;      // hybrids with no baseline in tolerance
    double tolerance_pct = 0.0;

    double mean_gain(BandwidthAccounting::Mode mode) const;
    double max_gain(BandwidthAccounting::Mode mode) const;

    // CSV contract: hybrid,baseline,area_h,area_b,bw_h,bw_b,gain_pct,accounting
    std::string to_csv() const;
};

// Pairs every hybrid entry (y > 0) with the baseline entry (y = 0) of
// nearest area, if within tolerance_pct of the hybrid's area; ties prefer
// the smaller baseline. Hybrids with no match are reported, not dropped.
// Throws SimError("NoMatchWithinTolerance") only if nothing matches at all.
GainReport area_matched_comparison(const MoclibLibrary& lib, double tolerance_pct,
                                   const std::vector<BandwidthAccounting>& accountings);

// Schedule memory expressed as FPGA area, for scaling plots. bits_per_slice
// is the documented LUT-bits conversion ratio (default 64).
double schedule_memory_slices(int c_ports, int slot_count, int bits_per_slice = 64);

}  // namespace mocsim
