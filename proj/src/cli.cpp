#include "pasm/cli.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pasm/cost_model.hpp"
#include "pasm/datapath_sim.hpp"
#include "pasm/experiment.hpp"
#include "pasm/fixtures.hpp"
#include "pasm/tensor_io.hpp"

#ifndef PASM_FIXTURE_DIR
#define PASM_FIXTURE_DIR "fixtures"
#endif

namespace pasm {

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_path;
    std::string format = "text-v1";
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "JSON experiment config");
    cmd->add_option("--seed", opts.seed, "RNG seed (overrides config)");
    cmd->add_option("--out", opts.out_path, "Output path");
    cmd->add_option("--format", opts.format, "Tensor format")->check(CLI::IsMember({"text-v1", "bin-v1"}));
}

ExperimentConfig load_config(const CommonOptions& opts) {
    ExperimentConfig cfg = opts.config_path.empty() ? ExperimentConfig{} : load_experiment(opts.config_path);
    if (opts.seed) {
        cfg.seed = *opts.seed;
    }
    apply_gate_env(cfg);
    cfg.finalize();
    return cfg;
}

void print_tensor_inline(std::ostream& out, const char* label, const QTensor& t) {
    out << label << ' ' << shape_to_string(t.shape()) << ':';
    for (std::int64_t v : t.data()) {
        out << ' ' << v;
    }
    out << '\n';
}

QTensor dictionary_tensor(const WeightDictionary& dict, WordSpec word) {
    return QTensor({dict.bins()}, word, {dict.centroids().begin(), dict.centroids().end()});
}

// Layer dimensions come from the tensors; stride, bias and relu from the config.
ConvConfig layer_from_tensors(ConvConfig cfg, const QTensor& image, const QTensor& kernel) {
    if (image.rank() != 3) {
        throw ValidationError("image: expected rank 3 [C][IH][IW], got " + shape_to_string(image.shape()));
    }
    if (kernel.rank() != 4) {
        throw ValidationError("kernel: expected rank 4 [M][C][KY][KX], got " + shape_to_string(kernel.shape()));
    }
    cfg.c = image.dim(0);
    cfg.ih = image.dim(1);
    cfg.iw = image.dim(2);
    cfg.m = kernel.dim(0);
    cfg.ky = kernel.dim(2);
    cfg.kx = kernel.dim(3);
    cfg.image_word = image.word();
    cfg.weight_word = kernel.word();
    cfg.validate();
    return cfg;
}

WeightDictionary dictionary_from_tensor(const QTensor& t) {
    if (t.rank() != 1) {
        throw ValidationError("dict: dictionary tensor must be one-dimensional");
    }
    std::vector<std::int64_t> values(t.data().begin(), t.data().end());
    if (!std::is_sorted(values.begin(), values.end()) ||
        std::adjacent_find(values.begin(), values.end()) != values.end()) {
        throw ValidationError("dict: centroids must be strictly ascending");
    }
    return WeightDictionary::from_values(std::move(values));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("path: cannot open '" + path.string() + "'");
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// ---------------------------------------------------------------- quantize

struct QuantizeOptions {
    CommonOptions common;
    std::string weights_path;
    std::string dict_out;
    std::optional<std::size_t> bins;
};

int cmd_quantize(const QuantizeOptions& o, std::ostream& out) {
    ExperimentConfig cfg = load_config(o.common);
    if (o.bins) {
        cfg.b = *o.bins;
        cfg.finalize();
    }
    const TensorFormat format = parse_tensor_format(o.common.format);
    QTensor weights = o.weights_path.empty() ? random_fixture(cfg, cfg.seed).kernel
                                             : load_tensor(o.weights_path, format);
    KMeansOptions opts = cfg.kmeans;
    opts.seed = cfg.seed;
    const QuantizeResult q = kmeans_quantize(weights.data(), cfg.b, opts);
    const EncodedKernel ek = encode_kernel(weights, q.dictionary);

    out << "B=" << q.dictionary.bins() << " SSE=" << q.sse << " iterations=" << q.iterations << '\n';
    out << "centroids:";
    for (std::int64_t c : q.dictionary.centroids()) {
        out << ' ' << c;
    }
    out << '\n';
    if (!o.dict_out.empty()) {
        store_tensor(o.dict_out, dictionary_tensor(q.dictionary, weights.word()), format);
    }
    if (!o.common.out_path.empty()) {
        store_tensor(o.common.out_path, ek.indices(), format);
    }
    return kExitOk;
}

// --------------------------------------------------------------------- run

struct RunOptions {
    CommonOptions common;
    std::string image_path;
    std::string kernel_path;
    std::string dict_path;
    std::string indices_path;
    std::string fixture;
    std::string backend;
};

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
    ExperimentConfig exp = load_config(o.common);
    if (!o.backend.empty()) {
        exp.backend = parse_backend(o.backend);
    }
    const TensorFormat format = parse_tensor_format(o.common.format);

    std::optional<Fixture> fx;
    if (o.fixture == "worked-example") {
        fx = worked_example_fixture();
    } else if (o.fixture == "zero") {
        fx = zero_image_fixture(exp);
    } else if (o.fixture == "random") {
        fx = random_fixture(exp, exp.seed);
    } else if (!o.fixture.empty()) {
        throw ValidationError("fixture: expected worked-example, zero or random, got '" + o.fixture + "'");
    } else {
        if (o.image_path.empty()) {
            throw ValidationError("image: --image or --fixture is required");
        }
        QTensor image = load_tensor(o.image_path, format);
        if (!o.kernel_path.empty()) {
            QTensor kernel = load_tensor(o.kernel_path, format);
            KMeansOptions opts = exp.kmeans;
            opts.seed = exp.seed;
            const QuantizeResult q = kmeans_quantize(kernel.data(), exp.b, opts);
            out << "quantized kernel: B=" << q.dictionary.bins() << " SSE=" << q.sse << '\n';
            EncodedKernel ek = encode_kernel(kernel, q.dictionary);
            ConvConfig layer = layer_from_tensors(exp.conv, image, kernel);
            fx = Fixture{std::move(layer), std::move(image), std::move(kernel), std::move(ek)};
        } else if (!o.dict_path.empty() && !o.indices_path.empty()) {
            const QTensor dict_t = load_tensor(o.dict_path, format);
            EncodedKernel ek(load_tensor(o.indices_path, format), dictionary_from_tensor(dict_t), dict_t.word());
            QTensor kernel = decode_kernel(ek);
            ConvConfig layer = layer_from_tensors(exp.conv, image, kernel);
            fx = Fixture{std::move(layer), std::move(image), std::move(kernel), std::move(ek)};
        } else {
            throw ValidationError("kernel: --kernel or both --dict and --indices are required");
        }
    }

    const ConvConfig& cfg = fx->cfg;
    const BackendRun run = run_backends(fx->image, fx->encoded, cfg, exp.backend);
    const ConvResult& result = run.any();
    out << "N=" << macops_per_output(cfg.c, cfg.kx, cfg.ky) << " B=" << fx->encoded.dictionary().bins()
        << " outFeat=" << shape_to_string(result.out_feat.shape()) << " acc_width=" << result.out_feat.word().width()
        << '\n';
    out << "backend=" << to_string(exp.backend) << '\n';
    if (result.out_feat.size() <= 64) {
        print_tensor_inline(out, "outFeat", result.out_feat);
    }
    if (!o.common.out_path.empty()) {
        store_tensor(o.common.out_path, result.out_feat, format);
    }
    if (run.mismatch) {
        const Mismatch& mm = *run.mismatch;
        err << "mismatch at m=" << mm.m << " oh=" << mm.oh << " ow=" << mm.ow << ": reference=" << mm.reference
            << " weightshared=" << mm.weight_shared << " pasm=" << mm.pasm << '\n';
        out << "verdict: FAIL\n";
        return kExitVerification;
    }
    if (exp.backend == Backend::All) {
        out << "verdict: pass (reference == weightshared == pasm)\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    CommonOptions common;
    std::string trace_path;
    std::string mode;
    std::optional<std::size_t> lanes;
    std::optional<std::size_t> macs;
    std::optional<std::size_t> n;
    std::optional<std::size_t> bins;
};

LaneStream random_streams(std::mt19937_64& rng, std::size_t lanes, std::size_t n, std::size_t b, WordSpec word) {
    LaneStream s;
    s.lanes.resize(lanes);
    for (auto& lane : s.lanes) {
        lane.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::int64_t v = draw_int(rng, word.min_value(), word.max_value());
            lane.push_back({v, static_cast<std::size_t>(draw_int(rng, 0, static_cast<std::int64_t>(b) - 1))});
        }
    }
    return s;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
    ExperimentConfig exp = load_config(o.common);
    SimulateParams p = exp.simulate;
    if (!o.mode.empty()) {
        p.mode = parse_sim_mode(o.mode);
    }
    p.lanes = o.lanes.value_or(p.lanes);
    p.macs = o.macs.value_or(p.macs);
    p.n = o.n.value_or(p.n);
    const std::size_t b = o.bins.value_or(exp.b);
    if (b < 2 || b > WeightDictionary::kMaxBins) {
        throw ValidationError("b: bin count must be in [2, 256], got " + std::to_string(b));
    }
    if (p.n < 1) {
        throw ValidationError("n: must be >= 1");
    }

    SimConfig sim{p.lanes, p.macs, b, !o.trace_path.empty()};
    sim.validate(p.mode);
    const WordSpec word(exp.w);
    std::mt19937_64 rng(exp.seed);
    const WeightDictionary dict = random_dictionary(rng, b, word);
    const LaneStream streams = random_streams(rng, p.lanes, p.n, b, word);

    const SimReport report =
        p.mode == SimMode::WsMac ? sim_ws_mac_array(streams, dict, sim) : sim_pasm_array(streams, dict, sim);
    const SimVerdict verdict = verify_sim_vs_analytic(report, streams, dict, sim);

    out << "mode=" << to_string(p.mode) << " lanes=" << p.lanes;
    if (p.mode == SimMode::Pasm) {
        out << " macs=" << p.macs;
    }
    out << " N=" << p.n << " B=" << b << '\n';
    out << "total_cycles=" << report.total_cycles << '\n';
    out << "analytic_cycles=" << verdict.expected_cycles << '\n';
    for (const UnitBusy& u : report.busy) {
        out << u.unit << " busy=" << u.busy_cycles << '\n';
    }
    if (!o.trace_path.empty()) {
        std::ofstream trace(o.trace_path);
        if (!trace) {
            throw ValidationError("trace: cannot write '" + o.trace_path + "'");
        }
        write_trace(trace, report);
    }
    if (!verdict.pass) {
        for (const auto& m : verdict.mismatches) {
            err << "verification: " << m << '\n';
        }
        out << "verdict: FAIL\n";
        return kExitVerification;
    }
    out << "verdict: pass\n";
    return kExitOk;
}

// ------------------------------------------------------------ cost / sweep

struct CostOptions {
    CommonOptions common;
    std::vector<int> w;
    std::vector<int> b;
    std::vector<std::string> kinds;
};

int emit_rows(const CostOptions& o, bool single_point, std::ostream& out) {
    const ExperimentConfig cfg = load_config(o.common);
    SweepRanges ranges = cfg.sweep;
    if (single_point) {
        ranges.w = {cfg.w};
        ranges.b = {static_cast<int>(cfg.b)};
    }
    if (!o.w.empty()) {
        ranges.w = o.w;
    }
    if (!o.b.empty()) {
        ranges.b = o.b;
    }
    if (!o.kinds.empty()) {
        ranges.kinds.clear();
        for (const auto& k : o.kinds) {
            ranges.kinds.push_back(parse_accelerator_kind(k));
        }
    }
    const std::vector<ReportRow> rows = sweep_rows(cfg, ranges);
    if (o.common.out_path.empty()) {
        write_report_csv(out, rows);
    } else {
        std::ofstream csv(o.common.out_path, std::ios::binary | std::ios::trunc);
        if (!csv) {
            throw ValidationError("out: cannot write '" + o.common.out_path + "'");
        }
        write_report_csv(csv, rows);
        out << "wrote " << rows.size() << " rows to " << o.common.out_path << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------- selftest

struct SelftestOptions {
    std::string fixture_dir = PASM_FIXTURE_DIR;
};

std::vector<std::vector<std::int64_t>> read_csv_ints(const std::filesystem::path& path, std::size_t columns) {
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<std::int64_t>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::int64_t> row;
        std::istringstream fields(line);
        for (std::string f; std::getline(fields, f, ',');) {
            std::size_t used = 0;
            std::int64_t v = 0;
            try {
                v = std::stoll(f, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != f.size() || f.empty()) {
                throw FormatError(path.filename().string() + ": '" + f + "' is not an integer");
            }
            row.push_back(v);
        }
        if (row.size() != columns) {
            throw FormatError(path.filename().string() + ": expected " + std::to_string(columns) + " columns");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

int cmd_selftest(const SelftestOptions& o, std::ostream& out) {
    const std::filesystem::path dir = o.fixture_dir;
    int failures = 0;
    int checks = 0;
    auto report = [&](bool ok, const std::string& name, const std::string& detail) {
        ++checks;
        failures += ok ? 0 : 1;
        out << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << '\n';
    };

    {
        const auto fmt = TensorFormat::TextV1;
        const QTensor image = load_tensor(dir / "worked_example" / "image.txt", fmt);
        const QTensor kernel = load_tensor(dir / "worked_example" / "kernel.txt", fmt);
        const QTensor dict_t = load_tensor(dir / "worked_example" / "dict.txt", fmt);
        const QTensor indices = load_tensor(dir / "worked_example" / "indices.txt", fmt);
        const QTensor expected = load_tensor(dir / "worked_example" / "expected_out.txt", fmt);
        const EncodedKernel ek(indices, dictionary_from_tensor(dict_t), dict_t.word());
        const Fixture fx = worked_example_fixture();
        if (image.shape() != fx.image.shape() || kernel.shape() != fx.kernel.shape()) {
            throw FormatError("worked_example: fixture shapes do not match the 5-pair layout");
        }
        const bool lossless = decode_kernel(ek) == kernel && encode_kernel(kernel, ek.dictionary()).indices() == indices;
        const BackendRun run = run_backends(image, ek, fx.cfg, Backend::All);
        const bool ok = lossless && !run.mismatch && run.reference->out_feat.data()[0] == expected.data()[0] &&
                        run.pasm->out_feat.data()[0] == expected.data()[0];
        report(ok, "worked-example",
               "reference=" + std::to_string(run.reference->out_feat.data()[0]) +
                   " weightshared=" + std::to_string(run.weight_shared->out_feat.data()[0]) +
                   " pasm=" + std::to_string(run.pasm->out_feat.data()[0]) +
                   " expected=" + std::to_string(expected.data()[0]));
    }

    {
        const auto rows = read_csv_ints(dir / "macops.csv", 4);
        int bad = 0;
        for (const auto& r : rows) {
            const auto got = macops_per_output(static_cast<std::uint64_t>(r[0]), static_cast<std::uint64_t>(r[1]),
                                               static_cast<std::uint64_t>(r[2]));
            bad += got == static_cast<std::uint64_t>(r[3]) ? 0 : 1;
        }
        report(bad == 0 && rows.size() == 12, "macops-table",
               std::to_string(rows.size() - bad) + "/" + std::to_string(rows.size()) + " cells match");
    }

    {
        // mode (0 = ws-mac, 1 = pasm), lanes, macs, n, b, expected cycles
        const auto rows = read_csv_ints(dir / "cycles.csv", 6);
        int bad = 0;
        std::mt19937_64 rng(7);
        for (const auto& r : rows) {
            if (r[0] != 0 && r[0] != 1) {
                throw FormatError("cycles.csv: mode must be 0 or 1");
            }
            const SimMode mode = r[0] == 0 ? SimMode::WsMac : SimMode::Pasm;
            const SimConfig sim{static_cast<std::size_t>(r[1]), static_cast<std::size_t>(r[2]),
                                static_cast<std::size_t>(r[4]), false};
            const WeightDictionary dict = random_dictionary(rng, sim.b, WordSpec(16));
            const LaneStream streams = random_streams(rng, sim.n_lanes, static_cast<std::size_t>(r[3]), sim.b,
                                                      WordSpec(16));
            const SimReport rep =
                mode == SimMode::WsMac ? sim_ws_mac_array(streams, dict, sim) : sim_pasm_array(streams, dict, sim);
            const bool ok = verify_sim_vs_analytic(rep, streams, dict, sim).pass &&
                            rep.total_cycles == static_cast<std::uint64_t>(r[5]);
            bad += ok ? 0 : 1;
        }
        report(bad == 0 && !rows.empty(), "cycle-counts",
               std::to_string(rows.size() - bad) + "/" + std::to_string(rows.size()) + " cases match");
    }

    out << "selftest: " << (checks - failures) << "/" << checks << " passed\n";
    return failures == 0 ? kExitOk : kExitVerification;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Weight-shared convolution engines, cost model and accelerator simulator", "pasm"};
    app.require_subcommand(1);

    QuantizeOptions q;
    auto* quantize = app.add_subcommand("quantize", "Cluster kernel weights into B shared values");
    add_common(quantize, q.common);
    quantize->add_option("--weights", q.weights_path, "Weight tensor (random kernel if omitted)");
    quantize->add_option("--dict-out", q.dict_out, "Dictionary output path");
    quantize->add_option("--bins", q.bins, "Bin count B (overrides config)");

    RunOptions r;
    auto* run = app.add_subcommand("run", "Run the convolution backends");
    add_common(run, r.common);
    run->add_option("--image", r.image_path, "Image tensor [C][IH][IW]");
    run->add_option("--kernel", r.kernel_path, "Raw kernel tensor [M][C][KY][KX] (quantized on load)");
    run->add_option("--dict", r.dict_path, "Dictionary tensor [B]");
    run->add_option("--indices", r.indices_path, "Bin-index tensor [M][C][KY][KX]");
    run->add_option("--fixture", r.fixture, "Bundled input: worked-example, zero or random");
    run->add_option("--backend", r.backend, "reference, weightshared, pasm or all");

    SimulateOptions s;
    auto* simulate = app.add_subcommand("simulate", "Cycle-level accelerator array simulation");
    add_common(simulate, s.common);
    simulate->add_option("--trace", s.trace_path, "Write a cycle,unit,action,lane,bin,value trace");
    simulate->add_option("--mode", s.mode, "ws-mac or pasm");
    simulate->add_option("--lanes", s.lanes, "Number of lanes");
    simulate->add_option("--macs", s.macs, "Shared post-pass MACs (pasm)");
    simulate->add_option("--n", s.n, "Pairs per lane");
    simulate->add_option("--bins", s.bins, "Bin count B");

    CostOptions c;
    auto* cost = app.add_subcommand("cost", "Gate and cycle report for the configured W and B");
    add_common(cost, c.common);
    cost->add_option("--kinds", c.kinds, "Accelerator kinds")->delimiter(',');

    CostOptions sw;
    auto* sweep = app.add_subcommand("sweep", "Gate and cycle report over W x B ranges");
    add_common(sweep, sw.common);
    sweep->add_option("--w", sw.w, "Bit widths")->delimiter(',');
    sweep->add_option("--b", sw.b, "Bin counts")->delimiter(',');
    sweep->add_option("--kinds", sw.kinds, "Accelerator kinds")->delimiter(',');

    SelftestOptions st;
    auto* selftest = app.add_subcommand("selftest", "Check bundled fixtures");
    selftest->add_option("--fixtures", st.fixture_dir, "Fixture directory");

    std::vector<const char*> argv{"pasm"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*quantize) {
            return cmd_quantize(q, out);
        }
        if (*run) {
            return cmd_run(r, out, err);
        }
        if (*simulate) {
            return cmd_simulate(s, out, err);
        }
        if (*cost) {
            return emit_rows(c, true, out);
        }
        if (*sweep) {
            return emit_rows(sw, false, out);
        }
        if (*selftest) {
            return cmd_selftest(st, out);
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const VerificationError& e) {
        err << "verification failed: " << e.what() << '\n';
        return kExitVerification;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitValidation;
}

}  // namespace pasm
