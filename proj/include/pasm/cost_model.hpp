#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pasm {

/// NAND2-equivalent cost per bit of each datapath component class.
struct GateConstants {
    std::int64_t k_add = 9;   // per adder bit (ripple carry)
    std::int64_t k_mul = 10;  // per multiplier bit^2 (array multiplier)
    std::int64_t k_reg = 6;   // per register bit (D flip-flop)
    std::int64_t k_port = 1;  // per register-file port bit

    void validate() const;
    friend bool operator==(const GateConstants&, const GateConstants&) = default;
};

/// Parses "k_add,k_mul,k_reg,k_port", e.g. "9,10,6,1".
GateConstants parse_gate_constants(std::string_view text);

struct UnitGates {
    std::int64_t adder = 0;
    std::int64_t multiplier = 0;
    std::int64_t registers = 0;
    std::int64_t ports = 0;

    std::int64_t total() const noexcept { return adder + multiplier + registers + ports; }

    UnitGates& operator+=(const UnitGates& o) noexcept;
    friend UnitGates operator+(UnitGates a, const UnitGates& b) noexcept { return a += b; }
    friend UnitGates operator*(std::int64_t n, const UnitGates& g) noexcept;
    friend bool operator==(const UnitGates&, const UnitGates&) = default;
};

/// Adder, W x W multiplier, accumulation register.
UnitGates gates_simple_mac(int w, const GateConstants& k = {});
/// Simple MAC plus a B-entry weight register file with one port.
UnitGates gates_ws_mac(int w, int b, const GateConstants& k = {});
/// Adder and B accumulation registers with read and write ports; no multiplier.
UnitGates gates_pas(int w, int b, const GateConstants& k = {});

enum class AcceleratorKind { MacArray, WsMacArray, PasArraySharedMac };

std::string_view to_string(AcceleratorKind kind) noexcept;
AcceleratorKind parse_accelerator_kind(std::string_view text);

struct AcceleratorSpec {
    AcceleratorKind kind = AcceleratorKind::PasArraySharedMac;
    int n_units = 16;
    int n_shared_mac = 4;  // PAS arrays only
    int w = 32;
    int b = 16;

    void validate() const;
    /// PAS units served by each post-pass MAC (1 for MAC arrays).
    int pas_per_mac() const noexcept;
};

UnitGates gates_accelerator(const AcceleratorSpec& spec, const GateConstants& k = {});

/// MAC operations contributing to one output element: C * KX * KY.
std::uint64_t macops_per_output(std::uint64_t c, std::uint64_t kx, std::uint64_t ky);

struct LatencyModel {
    std::uint64_t pipeline_fill = 0;
};

/// Fully pipelined MAC: one pair per cycle.
std::uint64_t latency_mac(std::uint64_t n, const LatencyModel& model = {});
/// PAS phase over N pairs, then P PAS units drain B bins each through one MAC.
std::uint64_t latency_pasm(std::uint64_t n, std::uint64_t b, std::uint64_t pas_per_mac,
                           const LatencyModel& model = {});

struct LatencyReport {
    std::uint64_t n = 0;
    std::uint64_t total_cycles = 0;
    double overhead_ratio = 0.0;  // (total - mac) / mac
};

LatencyReport latency_report(const AcceleratorSpec& spec, std::uint64_t n, const LatencyModel& model = {});

}  // namespace pasm
