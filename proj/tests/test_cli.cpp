#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pasm/cli.hpp"
#include "pasm/tensor_io.hpp"

using namespace pasm;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "pasm_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const fs::path kFixtures = PASM_FIXTURE_DIR;

}  // namespace

TEST_CASE("quantize with as many bins as distinct weights is lossless") {
    const auto w = scratch("w4.txt");
    store_tensor(w, QTensor({4}, WordSpec(8), {17, 4, 13, 20}), TensorFormat::TextV1);
    const auto r = cli({"quantize", "--weights", w.string(), "--bins", "4"});
    CHECK(r.code == 0);
    CHECK(r.out.find("B=4 SSE=0") != std::string::npos);
    CHECK(r.out.find("centroids: 4 13 17 20") != std::string::npos);
}

TEST_CASE("quantize two clusters") {
    const auto w = scratch("w2.txt");
    const auto dict = scratch("d2.txt");
    const auto idx = scratch("i2.txt");
    store_tensor(w, QTensor({4}, WordSpec(8), {0, 1, 9, 10}), TensorFormat::TextV1);
    const auto r = cli({"quantize", "--weights", w.string(), "--bins", "2", "--dict-out", dict.string(), "--out",
                        idx.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("SSE=2") != std::string::npos);
    CHECK(r.out.find("centroids: 1 10") != std::string::npos);
    CHECK(load_tensor(dict, TensorFormat::TextV1) == QTensor({2}, WordSpec(8), {1, 10}));
    CHECK(load_tensor(idx, TensorFormat::TextV1).data()[3] == 1);
}

TEST_CASE("quantize rejects B outside [2, 256]") {
    CHECK(cli({"quantize", "--bins", "300"}).code == kExitValidation);
    CHECK(cli({"quantize", "--bins", "1"}).code == kExitValidation);
    const auto r = cli({"quantize", "--bins", "300"});
    CHECK(r.err.find("b:") != std::string::npos);
}

TEST_CASE("run on the worked example") {
    const auto r = cli({"run", "--fixture", "worked-example"});
    CHECK(r.code == 0);
    CHECK(r.out.find("N=5 B=4") != std::string::npos);
    CHECK(r.out.find("9876") != std::string::npos);
    CHECK(r.out.find("verdict: pass") != std::string::npos);
}

TEST_CASE("run each backend alone") {
    for (const char* b : {"reference", "weightshared", "pasm"}) {
        const auto r = cli({"run", "--fixture", "worked-example", "--backend", b});
        CHECK(r.code == 0);
        CHECK(r.out.find("9876") != std::string::npos);
    }
    CHECK(cli({"run", "--fixture", "worked-example", "--backend", "gpu"}).code == kExitValidation);
}

TEST_CASE("run on a zero image returns the bias") {
    const auto cfg = scratch("bias.json");
    std::ofstream(cfg) << R"({"m": 2, "bias": [7, -3], "relu": true})";
    const auto out = scratch("zero_out.txt");
    const auto r = cli({"run", "--fixture", "zero", "--config", cfg.string(), "--out", out.string()});
    CHECK(r.code == 0);
    const QTensor t = load_tensor(out, TensorFormat::TextV1);
    REQUIRE(t.rank() == 3);
    for (std::size_t oh = 0; oh < t.dim(1); ++oh) {
        for (std::size_t ow = 0; ow < t.dim(2); ++ow) {
            CHECK(t.get({0, oh, ow}) == 7);
            CHECK(t.get({1, oh, ow}) == 0);
        }
    }
}

TEST_CASE("run on random fixtures") {
    for (const char* seed : {"1", "2", "3"}) {
        const auto r = cli({"run", "--fixture", "random", "--seed", seed});
        CHECK(r.code == 0);
        CHECK(r.out.find("outFeat=[2x3x3]") != std::string::npos);
    }
    const auto cfg = scratch("wide.json");
    std::ofstream(cfg) << R"({"c": 32, "ky": 7, "kx": 7, "ih": 9, "iw": 9, "m": 1, "w": 32, "b": 16})";
    const auto r = cli({"run", "--fixture", "random", "--config", cfg.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("acc_width=64") != std::string::npos);
}

TEST_CASE("run from tensor files in both formats") {
    const auto wx = kFixtures / "worked_example";
    const auto r = cli({"run", "--image", (wx / "image.txt").string(), "--dict", (wx / "dict.txt").string(),
                        "--indices", (wx / "indices.txt").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("9876") != std::string::npos);

    const auto img = scratch("img.bin");
    const auto ker = scratch("ker.bin");
    const auto out = scratch("out.bin");
    store_tensor(img, load_tensor(wx / "image.txt", TensorFormat::TextV1), TensorFormat::BinV1);
    store_tensor(ker, load_tensor(wx / "kernel.txt", TensorFormat::TextV1), TensorFormat::BinV1);
    const auto r2 = cli({"run", "--format", "bin-v1", "--image", img.string(), "--kernel", ker.string(), "--out",
                         out.string()});
    CHECK(r2.code == 0);
    CHECK(load_tensor(out, TensorFormat::BinV1) == load_tensor(wx / "expected_out.txt", TensorFormat::TextV1));

    CHECK(cli({"run", "--image", (wx / "image.txt").string()}).code == kExitValidation);
    CHECK(cli({"run", "--image", "/nonexistent", "--kernel", "/nonexistent"}).code == kExitValidation);
}

TEST_CASE("simulate reports cycles and busy counts") {
    auto r = cli({"simulate", "--mode", "pasm", "--lanes", "16", "--macs", "4", "--n", "1024", "--bins", "16"});
    CHECK(r.code == 0);
    CHECK(r.out.find("total_cycles=1088\n") != std::string::npos);
    CHECK(r.out.find("mac3 busy=64\n") != std::string::npos);
    CHECK(r.out.find("verdict: pass") != std::string::npos);
    r = cli({"simulate", "--mode", "pasm", "--lanes", "1", "--macs", "1", "--n", "1024", "--bins", "16"});
    CHECK(r.out.find("total_cycles=1040\n") != std::string::npos);
    r = cli({"simulate", "--mode", "ws-mac", "--lanes", "1", "--n", "5", "--bins", "4"});
    CHECK(r.out.find("total_cycles=5\n") != std::string::npos);
    CHECK(cli({"simulate", "--lanes", "3", "--macs", "2"}).code == kExitValidation);
    CHECK(cli({"simulate", "--mode", "systolic"}).code == kExitValidation);
}

TEST_CASE("simulate traces are deterministic") {
    const auto a = scratch("trace_a.csv");
    const auto b = scratch("trace_b.csv");
    const std::vector<std::string> base{"simulate", "--lanes", "4", "--macs", "2", "--n", "16", "--bins", "4",
                                        "--seed", "9"};
    auto args = base;
    args.insert(args.end(), {"--trace", a.string()});
    CHECK(cli(args).code == 0);
    args = base;
    args.insert(args.end(), {"--trace", b.string()});
    CHECK(cli(args).code == 0);
    const std::string ta = slurp(a);
    CHECK(ta == slurp(b));
    CHECK(ta.rfind("cycle,unit,action,lane,bin,value\n", 0) == 0);
    CHECK(std::count(ta.begin(), ta.end(), '\n') == 1 + 4 * 16 + 4 * 4);
}

TEST_CASE("cost and sweep emit CSV") {
    auto r = cli({"cost"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("W,B,kind,", 0) == 0);
    CHECK(r.out.find("32,16,pas-array-shared-mac,16,4,127360,") != std::string::npos);
    CHECK(r.out.find("32,16,ws-mac-array,16,0,228864,") != std::string::npos);

    r = cli({"sweep", "--w", "8,32", "--b", "4,256", "--kinds", "ws-mac-array,pas-array-shared-mac"});
    CHECK(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1 + 2 * 2 * 2);
    CHECK(r.out == cli({"sweep", "--w", "8,32", "--b", "4,256", "--kinds", "ws-mac-array,pas-array-shared-mac"}).out);
    CHECK(cli({"sweep", "--kinds", "tpu"}).code == kExitValidation);
    CHECK(cli({"sweep", "--b", "512"}).code == kExitValidation);

    const auto out = scratch("sweep.csv");
    r = cli({"sweep", "--out", out.string()});
    CHECK(r.out.find("wrote 60 rows") != std::string::npos);
    CHECK(slurp(out) == cli({"sweep"}).out);
}

TEST_CASE("selftest on bundled and corrupted fixtures") {
    auto r = cli({"selftest"});
    CHECK(r.code == 0);
    CHECK(r.out.find("[FAIL]") == std::string::npos);

    const auto dir = scratch("bad_fixtures");
    fs::remove_all(dir);
    fs::copy(kFixtures, dir, fs::copy_options::recursive);
    std::ofstream(dir / "worked_example" / "expected_out.txt") << "dims 1 1 1\nwidth 35\n9877\n";
    r = cli({"selftest", "--fixtures", dir.string()});
    CHECK(r.code == kExitVerification);
    CHECK(r.out.find("[FAIL]") != std::string::npos);
}

TEST_CASE("usage errors") {
    CHECK(cli({}).code != 0);
    CHECK(cli({"frobnicate"}).code == kExitValidation);
    CHECK(cli({"run", "--fixture", "nope"}).code == kExitValidation);
    CHECK(cli({"run", "--fixture", "zero", "--format", "xml"}).code == kExitValidation);
    CHECK(cli({"--help"}).code == 0);
}
