#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pasm/conv.hpp"
#include "pasm/cost_model.hpp"
#include "pasm/quantizer.hpp"

namespace pasm {

enum class SimMode { WsMac, Pasm };

std::string_view to_string(SimMode mode) noexcept;
SimMode parse_sim_mode(std::string_view text);

/// Per-lane (value, binIndex) streams; every lane has the same length N.
struct LaneStream {
    std::vector<std::vector<StreamPair>> lanes;

    std::size_t n_lanes() const noexcept { return lanes.size(); }
    std::size_t length() const noexcept { return lanes.empty() ? 0 : lanes.front().size(); }
    void validate(std::size_t b) const;
};

struct SimConfig {
    std::size_t n_lanes = 4;
    std::size_t n_shared_mac = 1;  // PASM mode only
    std::size_t b = 16;
    bool trace = false;

    void validate(SimMode mode) const;
    /// Lanes per shared MAC in PASM mode.
    std::size_t group_size() const noexcept { return n_lanes / n_shared_mac; }
};

struct TraceEvent {
    std::uint64_t cycle;
    std::string unit;
    std::string action;
    std::size_t lane;
    std::size_t bin;
    std::int64_t value;

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct UnitBusy {
    std::string unit;
    std::uint64_t busy_cycles;

    friend bool operator==(const UnitBusy&, const UnitBusy&) = default;
};

struct SimReport {
    SimMode mode = SimMode::WsMac;
    std::uint64_t total_cycles = 0;
    std::vector<std::int64_t> lane_results;
    std::vector<UnitBusy> busy;  // PAS units first, then MACs
    // Cycle at which each lane's post-pass began (PASM mode).
    std::vector<std::uint64_t> postpass_start;
    std::vector<TraceEvent> trace;
};

/// One weight-shared MAC per lane, each consuming one pair per cycle.
SimReport sim_ws_mac_array(const LaneStream& streams, const WeightDictionary& dict, const SimConfig& cfg);

/// PAS lanes accumulate for N cycles; then each shared MAC drains the bin
/// files of its contiguous lane group in ascending lane order, one bin per
/// cycle. No overlap between the two phases.
SimReport sim_pasm_array(const LaneStream& streams, const WeightDictionary& dict, const SimConfig& cfg);

/// `cycle,unit,action,lane,bin,value` lines, preceded by that header.
void write_trace(std::ostream& os, const SimReport& report);

struct SimVerdict {
    bool pass = true;
    std::uint64_t expected_cycles = 0;
    std::vector<std::string> mismatches;
};

/// Checks cycle count against latency_mac / latency_pasm, lane results
/// against pas_accumulate + postpass_multiply and busy-cycle accounting.
SimVerdict verify_sim_vs_analytic(const SimReport& report, const LaneStream& streams, const WeightDictionary& dict,
                                  const SimConfig& cfg, const LatencyModel& model = {});

}  // namespace pasm
