#include "pasm/datapath_sim.hpp"

#include <optional>
#include <ostream>

namespace pasm {

std::string_view to_string(SimMode mode) noexcept {
    return mode == SimMode::WsMac ? "ws-mac" : "pasm";
}

SimMode parse_sim_mode(std::string_view text) {
    if (text == "ws-mac") {
        return SimMode::WsMac;
    }
    if (text == "pasm") {
        return SimMode::Pasm;
    }
    throw ValidationError("mode: expected ws-mac or pasm, got '" + std::string(text) + "'");
}

void LaneStream::validate(std::size_t b) const {
    if (lanes.empty()) {
        throw ValidationError("lanes: at least one lane required");
    }
    const std::size_t n = length();
    if (n == 0) {
        throw ValidationError("n: streams must contain at least one pair");
    }
    for (std::size_t l = 0; l < lanes.size(); ++l) {
        if (lanes[l].size() != n) {
            throw ValidationError("lanes: lane " + std::to_string(l) + " has " + std::to_string(lanes[l].size()) +
                                  " pairs, expected " + std::to_string(n));
        }
        for (const StreamPair& p : lanes[l]) {
            if (p.bin >= b) {
                throw ValidationError("bin: index " + std::to_string(p.bin) + " on lane " + std::to_string(l) +
                                      " >= B = " + std::to_string(b));
            }
        }
    }
}

void SimConfig::validate(SimMode mode) const {
    if (n_lanes < 1) {
        throw ValidationError("lanes: must be >= 1");
    }
    if (b < 1) {
        throw ValidationError("b: must be >= 1");
    }
    if (mode == SimMode::Pasm) {
        if (n_shared_mac < 1) {
            throw ValidationError("macs: PASM mode needs at least one shared MAC");
        }
        if (n_lanes % n_shared_mac != 0) {
            throw ValidationError("macs: " + std::to_string(n_lanes) + " lanes cannot be split evenly across " +
                                  std::to_string(n_shared_mac) + " shared MACs");
        }
    }
}

namespace {

void check_inputs(const LaneStream& streams, const WeightDictionary& dict, const SimConfig& cfg, SimMode mode) {
    cfg.validate(mode);
    if (dict.bins() != cfg.b) {
        throw ValidationError("b: config has " + std::to_string(cfg.b) + " bins, dictionary has " +
                              std::to_string(dict.bins()));
    }
    if (streams.n_lanes() != cfg.n_lanes) {
        throw ValidationError("lanes: config has " + std::to_string(cfg.n_lanes) + " lanes, streams have " +
                              std::to_string(streams.n_lanes()));
    }
    streams.validate(cfg.b);
}

std::string unit_name(const char* prefix, std::size_t i) {
    return prefix + std::to_string(i);
}

struct PasUnit {
    enum class State { Accumulating, Ready, Draining, Done };
    State state = State::Accumulating;
    std::size_t next_pair = 0;
    BinAccumulators bins;
    std::uint64_t busy = 0;
};

struct SharedMac {
    std::size_t first_lane = 0;
    std::size_t group = 0;
    std::size_t served = 0;  // lanes completed, round-robin pointer
    std::optional<std::size_t> lane;
    std::size_t next_bin = 0;
    std::int64_t acc = 0;
    std::uint64_t busy = 0;
};

}  // namespace

SimReport sim_ws_mac_array(const LaneStream& streams, const WeightDictionary& dict, const SimConfig& cfg) {
    check_inputs(streams, dict, cfg, SimMode::WsMac);
    SimReport report;
    report.mode = SimMode::WsMac;
    report.lane_results.assign(cfg.n_lanes, 0);
    std::vector<std::uint64_t> busy(cfg.n_lanes, 0);
    const std::size_t n = streams.length();

    std::uint64_t cycle = 0;
    for (std::size_t t = 0; t < n; ++t, ++cycle) {
        for (std::size_t lane = 0; lane < cfg.n_lanes; ++lane) {
            const StreamPair& p = streams.lanes[lane][t];
            const std::int64_t product = wrapping_mul(p.value, dict[p.bin]);
            report.lane_results[lane] = wrapping_add(report.lane_results[lane], product);
            ++busy[lane];
            if (cfg.trace) {
                report.trace.push_back({cycle, unit_name("mac", lane), "mac", lane, p.bin, product});
            }
        }
    }
    report.total_cycles = cycle;
    for (std::size_t lane = 0; lane < cfg.n_lanes; ++lane) {
        report.busy.push_back({unit_name("mac", lane), busy[lane]});
    }
    return report;
}

SimReport sim_pasm_array(const LaneStream& streams, const WeightDictionary& dict, const SimConfig& cfg) {
    check_inputs(streams, dict, cfg, SimMode::Pasm);
    SimReport report;
    report.mode = SimMode::Pasm;
    report.lane_results.assign(cfg.n_lanes, 0);
    report.postpass_start.assign(cfg.n_lanes, 0);
    const std::size_t n = streams.length();

    std::vector<PasUnit> pas(cfg.n_lanes);
    for (auto& unit : pas) {
        unit.bins = BinAccumulators(cfg.b);
    }
    std::vector<SharedMac> macs(cfg.n_shared_mac);
    for (std::size_t j = 0; j < macs.size(); ++j) {
        macs[j].group = cfg.group_size();
        macs[j].first_lane = j * cfg.group_size();
    }

    std::size_t lanes_done = 0;
    std::uint64_t cycle = 0;
    while (lanes_done < cfg.n_lanes) {
        // The post-pass may only begin once every PAS unit has drained its stream.
        bool barrier_open = true;
        for (const auto& unit : pas) {
            barrier_open &= unit.state != PasUnit::State::Accumulating;
        }

        for (std::size_t lane = 0; lane < pas.size(); ++lane) {
            PasUnit& unit = pas[lane];
            if (unit.state != PasUnit::State::Accumulating) {
                continue;
            }
            const StreamPair& p = streams.lanes[lane][unit.next_pair++];
            unit.bins.bins[p.bin] = wrapping_add(unit.bins.bins[p.bin], p.value);
            ++unit.busy;
            if (cfg.trace) {
                report.trace.push_back({cycle, unit_name("pas", lane), "acc", lane, p.bin, p.value});
            }
            if (unit.next_pair == n) {
                unit.state = PasUnit::State::Ready;
            }
        }

        for (std::size_t j = 0; j < macs.size() && barrier_open; ++j) {
            SharedMac& mac = macs[j];
            if (!mac.lane) {
                if (mac.served == mac.group) {
                    continue;
                }
                const std::size_t lane = mac.first_lane + mac.served;
                if (pas[lane].state != PasUnit::State::Ready) {
                    continue;
                }
                pas[lane].state = PasUnit::State::Draining;
                mac.lane = lane;
                mac.next_bin = 0;
                mac.acc = 0;
                report.postpass_start[lane] = cycle;
            }
            const std::size_t lane = *mac.lane;
            const std::size_t bin = mac.next_bin++;
            const std::int64_t product = wrapping_mul(pas[lane].bins.bins[bin], dict[bin]);
            mac.acc = wrapping_add(mac.acc, product);
            ++mac.busy;
            if (cfg.trace) {
                report.trace.push_back({cycle, unit_name("mac", j), "mul", lane, bin, product});
            }
            if (mac.next_bin == cfg.b) {
                report.lane_results[lane] = mac.acc;
                pas[lane].state = PasUnit::State::Done;
                mac.lane.reset();
                ++mac.served;
                ++lanes_done;
            }
        }
        ++cycle;
    }

    report.total_cycles = cycle;
    for (std::size_t lane = 0; lane < pas.size(); ++lane) {
        report.busy.push_back({unit_name("pas", lane), pas[lane].busy});
    }
    for (std::size_t j = 0; j < macs.size(); ++j) {
        report.busy.push_back({unit_name("mac", j), macs[j].busy});
    }
    return report;
}

void write_trace(std::ostream& os, const SimReport& report) {
    os << "cycle,unit,action,lane,bin,value\n";
    for (const TraceEvent& e : report.trace) {
        os << e.cycle << ',' << e.unit << ',' << e.action << ',' << e.lane << ',' << e.bin << ',' << e.value << '\n';
    }
}

SimVerdict verify_sim_vs_analytic(const SimReport& report, const LaneStream& streams, const WeightDictionary& dict,
                                  const SimConfig& cfg, const LatencyModel& model) {
    SimVerdict v;
    const std::uint64_t n = streams.length();
    v.expected_cycles = report.mode == SimMode::WsMac ? latency_mac(n, model)
                                                      : latency_pasm(n, cfg.b, cfg.group_size(), model);
    auto fail = [&](std::string msg) {
        v.pass = false;
        v.mismatches.push_back(std::move(msg));
    };
    if (report.total_cycles != v.expected_cycles) {
        fail("cycles: simulated " + std::to_string(report.total_cycles) + ", analytic " +
             std::to_string(v.expected_cycles));
    }
    if (report.lane_results.size() != streams.n_lanes()) {
        fail("lanes: report has " + std::to_string(report.lane_results.size()) + " results, expected " +
             std::to_string(streams.n_lanes()));
        return v;
    }
    for (std::size_t lane = 0; lane < streams.n_lanes(); ++lane) {
        const std::int64_t expected = postpass_multiply(pas_accumulate(streams.lanes[lane], dict.bins()), dict);
        if (report.lane_results[lane] != expected) {
            fail("lane " + std::to_string(lane) + ": simulated " + std::to_string(report.lane_results[lane]) +
                 ", functional " + std::to_string(expected));
        }
    }
    for (const UnitBusy& u : report.busy) {
        std::uint64_t expected = n;
        if (report.mode == SimMode::Pasm && u.unit.starts_with("mac")) {
            expected = cfg.group_size() * cfg.b;
        }
        if (u.busy_cycles != expected) {
            fail(u.unit + ": busy " + std::to_string(u.busy_cycles) + " cycles, expected " + std::to_string(expected));
        }
    }
    return v;
}

}  // namespace pasm
