#include "pasm/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pasm {

using nlohmann::json;

std::string_view to_string(Backend backend) noexcept {
    switch (backend) {
    case Backend::Reference:
        return "reference";
    case Backend::WeightShared:
        return "weightshared";
    case Backend::Pasm:
        return "pasm";
    case Backend::All:
        return "all";
    }
    return "?";
}

Backend parse_backend(std::string_view text) {
    for (auto b : {Backend::Reference, Backend::WeightShared, Backend::Pasm, Backend::All}) {
        if (text == to_string(b)) {
            return b;
        }
    }
    throw ValidationError("backend: expected reference, weightshared, pasm or all, got '" + std::string(text) + "'");
}

void SweepRanges::validate() const {
    if (w.empty() || b.empty() || kinds.empty()) {
        throw ValidationError("sweep: w, b and kinds must be non-empty");
    }
    for (int v : w) {
        if (v < 2 || v > 64) {
            throw ValidationError("sweep.w: bit width must be in [2, 64], got " + std::to_string(v));
        }
    }
    for (int v : b) {
        if (v < 2 || v > 256) {
            throw ValidationError("sweep.b: bin count must be in [2, 256], got " + std::to_string(v));
        }
    }
}

ExperimentConfig::ExperimentConfig() = default;

void ExperimentConfig::finalize() {
    if (w < 2 || w > 32) {
        throw ValidationError("w: bit width must be in [2, 32], got " + std::to_string(w));
    }
    if (b < 2 || b > WeightDictionary::kMaxBins) {
        throw ValidationError("b: bin count must be in [2, 256], got " + std::to_string(b));
    }
    conv.image_word = WordSpec(w);
    conv.weight_word = WordSpec(w);
    accelerator.w = w;
    accelerator.b = static_cast<int>(b);
    if (kmeans.max_iters < 1) {
        throw ValidationError("kmeans.max_iters: must be >= 1");
    }
    if (kmeans.restarts < 1) {
        throw ValidationError("kmeans.restarts: must be >= 1");
    }
    conv.validate();
    accelerator.validate();
    gates.validate();
    sweep.validate();
    if (simulate.lanes < 1) {
        throw ValidationError("simulate.lanes: must be >= 1");
    }
    if (simulate.n < 1) {
        throw ValidationError("simulate.n: must be >= 1");
    }
    if (simulate.mode == SimMode::Pasm && (simulate.macs < 1 || simulate.lanes % simulate.macs != 0)) {
        throw ValidationError("simulate.macs: lanes must divide evenly across shared MACs");
    }
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) {
        throw ValidationError((where.empty() ? std::string("config") : where) + ": expected a JSON object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ValidationError((where.empty() ? "" : where + ".") + key + ": unknown field");
        }
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T& dst, const std::string& where = "") {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        return;
    }
    const std::string name = where.empty() ? key : where + "." + key;
    try {
        if constexpr (std::is_unsigned_v<T>) {
            if (it->is_number_integer() && it->template get<std::int64_t>() < 0) {
                throw ValidationError(name + ": must be non-negative");
            }
        }
        if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!it->is_number_integer()) {
                throw ValidationError(name + ": expected an integer");
            }
        }
        dst = it->template get<T>();
    } catch (const json::exception&) {
        throw ValidationError(name + ": wrong type");
    }
}

}  // namespace

ExperimentConfig parse_experiment(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    reject_unknown(doc,
                   {"ih", "iw", "c", "m", "ky", "kx", "s", "b", "w", "bias", "relu", "backend", "kmeans",
                    "accelerator", "gate_constants", "seed", "sweep", "simulate"},
                   "");

    ExperimentConfig cfg;
    ConvConfig& conv = cfg.conv;
    read_field(doc, "ih", conv.ih);
    read_field(doc, "iw", conv.iw);
    read_field(doc, "c", conv.c);
    read_field(doc, "m", conv.m);
    read_field(doc, "ky", conv.ky);
    read_field(doc, "kx", conv.kx);
    read_field(doc, "s", conv.stride);
    read_field(doc, "b", cfg.b);
    read_field(doc, "w", cfg.w);
    read_field(doc, "relu", conv.relu);
    read_field(doc, "seed", cfg.seed);
    if (doc.contains("bias")) {
        read_field(doc, "bias", conv.bias);
    }
    if (doc.contains("backend")) {
        std::string name;
        read_field(doc, "backend", name);
        cfg.backend = parse_backend(name);
    }
    if (doc.contains("kmeans")) {
        const json& km = doc["kmeans"];
        reject_unknown(km, {"max_iters", "restarts"}, "kmeans");
        read_field(km, "max_iters", cfg.kmeans.max_iters, "kmeans");
        read_field(km, "restarts", cfg.kmeans.restarts, "kmeans");
    }
    if (doc.contains("accelerator")) {
        const json& acc = doc["accelerator"];
        reject_unknown(acc, {"kind", "n_units", "n_shared_mac"}, "accelerator");
        if (acc.contains("kind")) {
            std::string kind;
            read_field(acc, "kind", kind, "accelerator");
            cfg.accelerator.kind = parse_accelerator_kind(kind);
        }
        read_field(acc, "n_units", cfg.accelerator.n_units, "accelerator");
        read_field(acc, "n_shared_mac", cfg.accelerator.n_shared_mac, "accelerator");
    }
    if (doc.contains("gate_constants")) {
        const json& g = doc["gate_constants"];
        reject_unknown(g, {"k_add", "k_mul", "k_reg", "k_port"}, "gate_constants");
        read_field(g, "k_add", cfg.gates.k_add, "gate_constants");
        read_field(g, "k_mul", cfg.gates.k_mul, "gate_constants");
        read_field(g, "k_reg", cfg.gates.k_reg, "gate_constants");
        read_field(g, "k_port", cfg.gates.k_port, "gate_constants");
    }
    if (doc.contains("sweep")) {
        const json& s = doc["sweep"];
        reject_unknown(s, {"w", "b", "kinds"}, "sweep");
        read_field(s, "w", cfg.sweep.w, "sweep");
        read_field(s, "b", cfg.sweep.b, "sweep");
        if (s.contains("kinds")) {
            std::vector<std::string> kinds;
            read_field(s, "kinds", kinds, "sweep");
            cfg.sweep.kinds.clear();
            for (const auto& k : kinds) {
                cfg.sweep.kinds.push_back(parse_accelerator_kind(k));
            }
        }
    }
    if (doc.contains("simulate")) {
        const json& sim = doc["simulate"];
        reject_unknown(sim, {"mode", "lanes", "macs", "n"}, "simulate");
        if (sim.contains("mode")) {
            std::string mode;
            read_field(sim, "mode", mode, "simulate");
            cfg.simulate.mode = parse_sim_mode(mode);
        }
        read_field(sim, "lanes", cfg.simulate.lanes, "simulate");
        read_field(sim, "macs", cfg.simulate.macs, "simulate");
        read_field(sim, "n", cfg.simulate.n, "simulate");
    }
    cfg.finalize();
    return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("config: cannot open '" + path.string() + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_experiment(text.str());
}

void apply_gate_env(ExperimentConfig& cfg) {
    if (const char* env = std::getenv("PASM_GATE_CONSTANTS"); env != nullptr && *env != '\0') {
        cfg.gates = parse_gate_constants(env);
    }
}

ReportRow make_report_row(int w, int b, AcceleratorKind kind, const ExperimentConfig& cfg) {
    AcceleratorSpec spec = cfg.accelerator;
    spec.kind = kind;
    spec.w = w;
    spec.b = b;
    const std::uint64_t n = macops_per_output(cfg.conv.c, cfg.conv.kx, cfg.conv.ky);
    const LatencyReport lat = latency_report(spec, n);
    return {w,
            b,
            kind,
            spec.n_units,
            kind == AcceleratorKind::PasArraySharedMac ? spec.n_shared_mac : 0,
            gates_accelerator(spec, cfg.gates),
            lat.total_cycles,
            100.0 * lat.overhead_ratio};
}

std::vector<ReportRow> sweep_rows(const ExperimentConfig& cfg, const SweepRanges& ranges) {
    ranges.validate();
    // Configurations are independent; evaluate them concurrently and collect
    // in submission order.
    std::vector<std::future<ReportRow>> pending;
    for (int w : ranges.w) {
        for (int b : ranges.b) {
            for (AcceleratorKind kind : ranges.kinds) {
                pending.push_back(std::async(std::launch::async, [w, b, kind, &cfg] {
                    return make_report_row(w, b, kind, cfg);
                }));
            }
        }
    }
    std::vector<ReportRow> rows;
    rows.reserve(pending.size());
    for (auto& f : pending) {
        rows.push_back(f.get());
    }
    return rows;
}

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
    os << kReportHeader << '\n';
    for (const ReportRow& r : rows) {
        std::ostringstream pct;
        pct << std::fixed << std::setprecision(4) << r.overhead_pct;
        os << r.w << ',' << r.b << ',' << to_string(r.kind) << ',' << r.n_units << ',' << r.n_shared_mac << ','
           << r.gates.total() << ',' << r.gates.multiplier << ',' << r.gates.registers << ',' << r.cycles << ','
           << pct.str() << '\n';
    }
}

}  // namespace pasm
