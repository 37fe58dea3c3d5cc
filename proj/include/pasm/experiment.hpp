#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pasm/conv.hpp"
#include "pasm/cost_model.hpp"
#include "pasm/datapath_sim.hpp"
#include "pasm/quantizer.hpp"

namespace pasm {

enum class Backend { Reference, WeightShared, Pasm, All };

std::string_view to_string(Backend backend) noexcept;
Backend parse_backend(std::string_view text);

struct SweepRanges {
    std::vector<int> w{4, 8, 16, 32};
    std::vector<int> b{4, 8, 16, 64, 256};
    std::vector<AcceleratorKind> kinds{AcceleratorKind::MacArray, AcceleratorKind::WsMacArray,
                                       AcceleratorKind::PasArraySharedMac};
    void validate() const;
};

struct SimulateParams {
    SimMode mode = SimMode::Pasm;
    std::size_t lanes = 4;
    std::size_t macs = 1;
    std::size_t n = 1024;
};

/// Everything one CLI invocation needs. JSON field names follow the layer
/// symbols: ih, iw, c, m, ky, kx, s, b, w, bias, relu.
struct ExperimentConfig {
    ConvConfig conv;
    std::size_t b = 16;
    int w = 32;
    KMeansOptions kmeans;
    Backend backend = Backend::All;
    AcceleratorSpec accelerator;  // w and b mirror the top-level fields
    GateConstants gates;
    std::uint64_t seed = 1;
    SweepRanges sweep;
    SimulateParams simulate;

    /// Default layer: 5x5 image tile, 15 channels, two 3x3 kernels, B = 16.
    ExperimentConfig();

    /// Re-derives the mirrored fields (conv words, accelerator w/b) and checks
    /// every invariant. Throws ValidationError naming the field.
    void finalize();
};

/// Parses a JSON document; unknown keys and wrong types are rejected.
ExperimentConfig parse_experiment(std::string_view json_text);
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Applies PASM_GATE_CONSTANTS ("k_add,k_mul,k_reg,k_port") when set.
void apply_gate_env(ExperimentConfig& cfg);

struct ReportRow {
    int w;
    int b;
    AcceleratorKind kind;
    int n_units;
    int n_shared_mac;
    UnitGates gates;
    std::uint64_t cycles;
    double overhead_pct;
};

inline constexpr std::string_view kReportHeader =
    "W,B,kind,n_units,n_shared_mac,total_gates,mult_gates,reg_gates,cycles,overhead_pct";

ReportRow make_report_row(int w, int b, AcceleratorKind kind, const ExperimentConfig& cfg);

/// Rows ordered by W, then B, then kind (as listed in the ranges).
std::vector<ReportRow> sweep_rows(const ExperimentConfig& cfg, const SweepRanges& ranges);

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows);

}  // namespace pasm
