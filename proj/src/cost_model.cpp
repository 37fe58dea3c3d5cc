#include "pasm/cost_model.hpp"

#include <charconv>
#include <vector>

#include "pasm/error.hpp"

namespace pasm {

namespace {

void require_width(int w) {
    if (w < 2) {
        throw ValidationError("w: bit width must be >= 2, got " + std::to_string(w));
    }
}

void require_bins(int b) {
    if (b < 2) {
        throw ValidationError("b: bin count must be >= 2, got " + std::to_string(b));
    }
}

}  // namespace

void GateConstants::validate() const {
    if (k_add <= 0 || k_mul <= 0 || k_reg <= 0 || k_port <= 0) {
        throw ValidationError("gate_constants: every constant must be > 0");
    }
}

GateConstants parse_gate_constants(std::string_view text) {
    std::vector<std::int64_t> values;
    while (true) {
        const auto comma = text.find(',');
        const std::string_view field = text.substr(0, comma);
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
            throw ValidationError("gate_constants: '" + std::string(field) + "' is not an integer");
        }
        values.push_back(v);
        if (comma == std::string_view::npos) {
            break;
        }
        text.remove_prefix(comma + 1);
    }
    if (values.size() != 4) {
        throw ValidationError("gate_constants: expected 4 comma-separated values (k_add,k_mul,k_reg,k_port)");
    }
    GateConstants k{values[0], values[1], values[2], values[3]};
    k.validate();
    return k;
}

UnitGates& UnitGates::operator+=(const UnitGates& o) noexcept {
    adder += o.adder;
    multiplier += o.multiplier;
    registers += o.registers;
    ports += o.ports;
    return *this;
}

UnitGates operator*(std::int64_t n, const UnitGates& g) noexcept {
    return {n * g.adder, n * g.multiplier, n * g.registers, n * g.ports};
}

UnitGates gates_simple_mac(int w, const GateConstants& k) {
    require_width(w);
    k.validate();
    const std::int64_t W = w;
    return {k.k_add * W, k.k_mul * W * W, k.k_reg * W, 0};
}

UnitGates gates_ws_mac(int w, int b, const GateConstants& k) {
    require_bins(b);
    UnitGates g = gates_simple_mac(w, k);
    g.registers += b * k.k_reg * w;
    g.ports += k.k_port * w * b;
    return g;
}

UnitGates gates_pas(int w, int b, const GateConstants& k) {
    require_width(w);
    require_bins(b);
    k.validate();
    const std::int64_t W = w;
    const std::int64_t B = b;
    return {k.k_add * W, 0, B * k.k_reg * W, 2 * k.k_port * W * B};
}

std::string_view to_string(AcceleratorKind kind) noexcept {
    switch (kind) {
    case AcceleratorKind::MacArray:
        return "mac-array";
    case AcceleratorKind::WsMacArray:
        return "ws-mac-array";
    case AcceleratorKind::PasArraySharedMac:
        return "pas-array-shared-mac";
    }
    return "?";
}

AcceleratorKind parse_accelerator_kind(std::string_view text) {
    for (auto kind : {AcceleratorKind::MacArray, AcceleratorKind::WsMacArray, AcceleratorKind::PasArraySharedMac}) {
        if (text == to_string(kind)) {
            return kind;
        }
    }
    throw ValidationError("kind: unknown accelerator kind '" + std::string(text) +
                          "' (expected mac-array, ws-mac-array or pas-array-shared-mac)");
}

void AcceleratorSpec::validate() const {
    require_width(w);
    if (n_units < 1) {
        throw ValidationError("n_units: must be >= 1");
    }
    if (kind != AcceleratorKind::MacArray) {
        require_bins(b);
    }
    if (kind == AcceleratorKind::PasArraySharedMac) {
        if (n_shared_mac < 1) {
            throw ValidationError("n_shared_mac: PAS arrays need at least one shared MAC");
        }
        if (n_units < n_shared_mac) {
            throw ValidationError("n_shared_mac: " + std::to_string(n_shared_mac) + " exceeds n_units " +
                                  std::to_string(n_units));
        }
    }
}

int AcceleratorSpec::pas_per_mac() const noexcept {
    if (kind != AcceleratorKind::PasArraySharedMac) {
        return 1;
    }
    return (n_units + n_shared_mac - 1) / n_shared_mac;
}

UnitGates gates_accelerator(const AcceleratorSpec& spec, const GateConstants& k) {
    spec.validate();
    switch (spec.kind) {
    case AcceleratorKind::MacArray:
        return spec.n_units * gates_simple_mac(spec.w, k);
    case AcceleratorKind::WsMacArray:
        return spec.n_units * gates_ws_mac(spec.w, spec.b, k);
    case AcceleratorKind::PasArraySharedMac:
        return spec.n_units * gates_pas(spec.w, spec.b, k) + spec.n_shared_mac * gates_ws_mac(spec.w, spec.b, k);
    }
    return {};
}

std::uint64_t macops_per_output(std::uint64_t c, std::uint64_t kx, std::uint64_t ky) {
    if (c < 1 || kx < 1 || ky < 1) {
        throw ValidationError("macops: C, KX and KY must all be >= 1");
    }
    return c * kx * ky;
}

std::uint64_t latency_mac(std::uint64_t n, const LatencyModel& model) {
    if (n < 1) {
        throw ValidationError("n: pair count must be >= 1");
    }
    return n + model.pipeline_fill;
}

std::uint64_t latency_pasm(std::uint64_t n, std::uint64_t b, std::uint64_t pas_per_mac, const LatencyModel& model) {
    if (b < 1 || pas_per_mac < 1) {
        throw ValidationError("latency: B and PAS-per-MAC must be >= 1");
    }
    return latency_mac(n, model) + pas_per_mac * b;
}

LatencyReport latency_report(const AcceleratorSpec& spec, std::uint64_t n, const LatencyModel& model) {
    spec.validate();
    LatencyReport r;
    r.n = n;
    const std::uint64_t mac = latency_mac(n, model);
    r.total_cycles = spec.kind == AcceleratorKind::PasArraySharedMac
                         ? latency_pasm(n, static_cast<std::uint64_t>(spec.b),
                                        static_cast<std::uint64_t>(spec.pas_per_mac()), model)
                         : mac;
    r.overhead_ratio = static_cast<double>(r.total_cycles - mac) / static_cast<double>(mac);
    return r;
}

}  // namespace pasm
