#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "pasm/conv.hpp"
#include "pasm/fixtures.hpp"

using namespace pasm;

namespace {

std::vector<std::int64_t> vals(std::span<const std::int64_t> s) {
    return {s.begin(), s.end()};
}

struct Instance {
    ConvConfig cfg;
    QTensor image;
    EncodedKernel ek;
};

Instance random_instance(std::mt19937_64& rng, std::size_t max_c = 8) {
    ConvConfig cfg;
    const std::size_t ks[] = {1, 3, 5};
    cfg.ky = ks[rng() % 3];
    cfg.kx = ks[rng() % 3];
    cfg.ih = cfg.ky + rng() % 5;
    cfg.iw = cfg.kx + rng() % 5;
    cfg.c = 1 + rng() % max_c;
    cfg.m = 1 + rng() % 3;
    cfg.stride = 1 + rng() % 3;
    cfg.relu = rng() % 2 == 0;
    const int widths[] = {4, 8, 16, 32};
    const int w = widths[rng() % 4];
    cfg.image_word = WordSpec(w);
    cfg.weight_word = WordSpec(w);
    cfg.bias.resize(cfg.m);
    for (auto& b : cfg.bias) {
        b = draw_int(rng, -1000, 1000);
    }
    QTensor image({cfg.c, cfg.ih, cfg.iw}, cfg.image_word);
    for (std::size_t i = 0; i < image.size(); ++i) {
        image.set_flat(i, draw_int(rng, cfg.image_word.min_value(), cfg.image_word.max_value()));
    }
    const std::size_t b = std::min<std::size_t>(std::size_t{2} << (rng() % 4), std::size_t{1} << (w - 1));
    const auto dict = random_dictionary(rng, b, cfg.weight_word);
    QTensor idx({cfg.m, cfg.c, cfg.ky, cfg.kx}, EncodedKernel::index_word(dict));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx.set_flat(i, draw_int(rng, 0, static_cast<std::int64_t>(dict.bins()) - 1));
    }
    return {cfg, std::move(image), EncodedKernel(std::move(idx), dict, cfg.weight_word)};
}

}  // namespace

TEST_CASE("output_dims") {
    ConvConfig cfg;
    cfg.ih = cfg.iw = 5;
    cfg.ky = cfg.kx = 3;
    cfg.stride = 1;
    CHECK(output_dims(cfg) == OutputDims{3, 3});
    cfg.stride = 2;
    CHECK(output_dims(cfg) == OutputDims{2, 2});
    cfg.ih = cfg.iw = 7;
    cfg.ky = cfg.kx = 7;
    cfg.stride = 1;
    CHECK(output_dims(cfg) == OutputDims{1, 1});
}

TEST_CASE("config validation names the field") {
    ConvConfig cfg;
    cfg.ky = 2;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("ky"), ValidationError);
    cfg.ky = 7;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("ky"), ValidationError);
    cfg = ConvConfig{};
    cfg.stride = 0;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("s:"), ValidationError);
    cfg = ConvConfig{};
    cfg.bias = {1, 2, 3};
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("bias"), ValidationError);
    cfg = ConvConfig{};
    cfg.image_word = WordSpec(40);
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("apply_bias_relu") {
    CHECK(apply_bias_relu(-5, 0, true) == 0);
    CHECK(apply_bias_relu(10, 3, false) == 13);
    CHECK(apply_bias_relu(0, 0, true) == 0);
    CHECK(apply_bias_relu(0, 0, false) == 0);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
        const auto v = static_cast<std::int64_t>(rng());
        CHECK(apply_bias_relu(v, 0, false) == v);
    }
}

TEST_CASE("worked example through all three schedules") {
    const Fixture fx = worked_example_fixture();
    const auto ref = conv_reference(fx.image, fx.kernel, fx.cfg);
    const auto ws = conv_weight_shared(fx.image, fx.encoded, fx.cfg);
    const auto pa = conv_pasm(fx.image, fx.encoded, fx.cfg);
    CHECK(ref.out_feat.data()[0] == 9876);
    CHECK(ws.out_feat.data()[0] == 9876);
    CHECK(pa.out_feat.data()[0] == 9876);
}

TEST_CASE("pas_accumulate and postpass_multiply on the worked stream") {
    // Dictionary order as listed: bin 0 = 1.7, 1 = 0.4, 2 = 1.3, 3 = 2.0.
    const std::vector<StreamPair> pairs{{267, 0}, {34, 1}, {48, 2}, {177, 3}, {61, 0}};
    const auto bins = pas_accumulate(pairs, 4);
    CHECK(bins.bins == std::vector<std::int64_t>{328, 34, 48, 177});
    const std::vector<std::int64_t> weights{17, 4, 13, 20};
    CHECK(postpass_multiply(bins, weights) == 9876);
    CHECK(328 * 17 == 5576);

    CHECK(pas_accumulate({}, 4).bins == std::vector<std::int64_t>(4, 0));
    const std::vector<StreamPair> one{{-9, 2}};
    CHECK(pas_accumulate(one, 3).bins == std::vector<std::int64_t>{0, 0, -9});
    const std::vector<StreamPair> bad{{1, 4}};
    CHECK_THROWS_AS(pas_accumulate(bad, 4), ValidationError);

    BinAccumulators zero(4);
    CHECK(postpass_multiply(zero, weights) == 0);
    BinAccumulators single(4);
    single.bins[3] = 7;
    CHECK(postpass_multiply(single, weights) == 140);
    CHECK_THROWS_AS(postpass_multiply(BinAccumulators(3), weights), ValidationError);
}

TEST_CASE("PAS is order independent and conserves the streamed sum") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t b = 1 + rng() % 16;
        std::vector<StreamPair> pairs(rng() % 300);
        std::int64_t total = 0;
        for (auto& p : pairs) {
            p.value = draw_int(rng, -100000, 100000);
            p.bin = rng() % b;
            total += p.value;
        }
        const auto base = pas_accumulate(pairs, b);
        CHECK(std::accumulate(base.bins.begin(), base.bins.end(), std::int64_t{0}) == total);
        std::shuffle(pairs.begin(), pairs.end(), rng);
        CHECK(pas_accumulate(pairs, b).bins == base.bins);
    }
}

TEST_CASE("identity and zero cases") {
    ConvConfig cfg;
    cfg.c = cfg.m = 1;
    cfg.ky = cfg.kx = 1;
    cfg.ih = 3;
    cfg.iw = 4;
    cfg.bias = {0};
    cfg.image_word = cfg.weight_word = WordSpec(8);
    QTensor image({1, 3, 4}, WordSpec(8), {1, -2, 3, 4, 5, 6, -7, 8, 9, 10, 11, 127});
    QTensor one({1, 1, 1, 1}, WordSpec(8), {1});
    CHECK(vals(conv_reference(image, one, cfg).out_feat.data()) == vals(image.data()));

    ConvConfig c3;
    c3.image_word = c3.weight_word = WordSpec(8);
    c3.bias = {5, -4};
    c3.relu = true;
    QTensor zero_img({c3.c, c3.ih, c3.iw}, WordSpec(8));
    std::mt19937_64 rng(2);
    const auto dict = random_dictionary(rng, 4, WordSpec(8));
    QTensor idx({c3.m, c3.c, c3.ky, c3.kx}, EncodedKernel::index_word(dict));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx.set_flat(i, static_cast<std::int64_t>(rng() % 4));
    }
    const EncodedKernel ek(idx, dict, WordSpec(8));
    for (const auto& r : {conv_pasm(zero_img, ek, c3), conv_weight_shared(zero_img, ek, c3)}) {
        for (std::size_t i = 0; i < 9; ++i) {
            CHECK(r.out_feat[i] == 5);
            CHECK(r.out_feat[9 + i] == 0);  // -4 clamped
        }
    }

    // All indices pointing at a zero centroid leave only the bias.
    const auto zdict = WeightDictionary::from_values({0, 3});
    QTensor zidx({c3.m, c3.c, c3.ky, c3.kx}, EncodedKernel::index_word(zdict));
    QTensor img({c3.c, c3.ih, c3.iw}, WordSpec(8));
    for (std::size_t i = 0; i < img.size(); ++i) {
        img.set_flat(i, static_cast<std::int64_t>(rng() % 200) - 100);
    }
    c3.relu = false;
    const auto ws = conv_weight_shared(img, EncodedKernel(zidx, zdict, WordSpec(8)), c3);
    CHECK(ws.out_feat[0] == 5);
    CHECK(ws.out_feat[17] == -4);
}

TEST_CASE("shape and width mismatches are rejected") {
    const Fixture fx = worked_example_fixture();
    ConvConfig cfg = fx.cfg;
    cfg.c = 4;
    CHECK_THROWS_AS(conv_reference(fx.image, fx.kernel, cfg), ValidationError);
    CHECK_THROWS_AS(conv_pasm(fx.image, fx.encoded, cfg), ValidationError);
    cfg = fx.cfg;
    cfg.image_word = WordSpec(8);
    CHECK_THROWS_AS(conv_weight_shared(fx.image, fx.encoded, cfg), ValidationError);
}

TEST_CASE("reference matches the literal loop nest") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 150; ++trial) {
        const Instance in = random_instance(rng);
        const QTensor kernel = decode_kernel(in.ek);
        const auto ref = conv_reference(in.image, kernel, in.cfg);
        std::size_t oh = 0;
        std::size_t ow = 0;
        const auto expect = oracle::loop_nest_conv(
            vals(in.image.data()), vals(kernel.data()), in.cfg.c, in.cfg.ih, in.cfg.iw, in.cfg.m, in.cfg.ky, in.cfg.kx,
            in.cfg.stride, in.cfg.bias, in.cfg.relu, in.cfg.acc_word().width(), oh, ow);
        CHECK(ref.dims == OutputDims{oh, ow});
        CHECK(vals(ref.out_feat.data()) == expect);
    }
}

TEST_CASE("three-way equivalence on random layers") {
    std::mt19937_64 rng(100);
    for (int trial = 0; trial < 100; ++trial) {
        const Instance in = random_instance(rng, 16);
        const auto ref = conv_reference(in.image, decode_kernel(in.ek), in.cfg);
        const auto ws = conv_weight_shared(in.image, in.ek, in.cfg);
        const auto pa = conv_pasm(in.image, in.ek, in.cfg);
        CHECK(ws.out_feat == ref.out_feat);
        CHECK(pa.out_feat == ws.out_feat);
    }
}

TEST_CASE("random 3-channel 5x5 layer equals reference on the decoded kernel") {
    ExperimentConfig exp;
    exp.conv.c = 3;
    exp.w = 16;
    exp.b = 8;
    exp.finalize();
    const Fixture fx = random_fixture(exp, 5);
    const auto run = run_backends(fx.image, fx.encoded, fx.cfg, Backend::All);
    CHECK_FALSE(run.mismatch.has_value());
    CHECK(run.reference->dims == OutputDims{3, 3});
}

TEST_CASE("strided output is the subsampled stride-1 output") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 60; ++trial) {
        Instance in = random_instance(rng);
        in.cfg.stride = 1;
        const auto full = conv_pasm(in.image, in.ek, in.cfg);
        for (std::size_t s = 2; s <= 3; ++s) {
            ConvConfig strided = in.cfg;
            strided.stride = s;
            const auto sub = conv_pasm(in.image, in.ek, strided);
            for (std::size_t m = 0; m < in.cfg.m; ++m) {
                for (std::size_t oh = 0; oh < sub.dims.oh; ++oh) {
                    for (std::size_t ow = 0; ow < sub.dims.ow; ++ow) {
                        CHECK(sub.out_feat.get({m, oh, ow}) == full.out_feat.get({m, oh * s, ow * s}));
                    }
                }
            }
        }
    }
}
