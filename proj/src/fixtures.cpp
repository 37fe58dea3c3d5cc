#include "pasm/fixtures.hpp"

#include <set>

namespace pasm {

std::int64_t draw_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    if (lo > hi) {
        throw ValidationError("range: lo > hi");
    }
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    const std::uint64_t r = span == 0 ? rng() : rng() % span;
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + r);
}

WeightDictionary random_dictionary(std::mt19937_64& rng, std::size_t count, WordSpec word) {
    std::set<std::int64_t> values;
    while (values.size() < count) {
        values.insert(draw_int(rng, word.min_value(), word.max_value()));
    }
    return WeightDictionary::from_values({values.begin(), values.end()});
}

Fixture worked_example_fixture() {
    ConvConfig cfg;
    cfg.ih = cfg.iw = 1;
    cfg.c = 5;
    cfg.m = 1;
    cfg.ky = cfg.kx = 1;
    cfg.stride = 1;
    cfg.bias = {0};
    cfg.relu = false;
    cfg.image_word = WordSpec(16);
    cfg.weight_word = WordSpec(16);

    QTensor image({5, 1, 1}, cfg.image_word, {267, 34, 48, 177, 61});
    QTensor kernel({1, 5, 1, 1}, cfg.weight_word, {17, 4, 13, 20, 17});
    const auto dict = WeightDictionary::from_values({17, 4, 13, 20});
    EncodedKernel encoded = encode_kernel(kernel, dict);
    return {cfg, std::move(image), std::move(kernel), std::move(encoded)};
}

namespace {

QTensor random_kernel(const ConvConfig& cfg, std::mt19937_64& rng) {
    QTensor kernel({cfg.m, cfg.c, cfg.ky, cfg.kx}, cfg.weight_word);
    // Half range keeps rounded centroids inside the weight word.
    const std::int64_t lim = cfg.weight_word.max_value() / 2;
    for (std::size_t i = 0; i < kernel.size(); ++i) {
        kernel.set_flat(i, draw_int(rng, -lim, lim));
    }
    return kernel;
}

Fixture quantized(const ExperimentConfig& exp, QTensor image, QTensor kernel, std::uint64_t seed) {
    KMeansOptions opts = exp.kmeans;
    opts.seed = seed;
    const QuantizeResult q = kmeans_quantize(kernel.data(), exp.b, opts);
    EncodedKernel encoded = encode_kernel(kernel, q.dictionary);
    return {exp.conv, std::move(image), std::move(kernel), std::move(encoded)};
}

}  // namespace

Fixture zero_image_fixture(const ExperimentConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    QTensor image({cfg.conv.c, cfg.conv.ih, cfg.conv.iw}, cfg.conv.image_word);
    return quantized(cfg, std::move(image), random_kernel(cfg.conv, rng), cfg.seed);
}

Fixture random_fixture(const ExperimentConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const ConvConfig& conv = cfg.conv;
    QTensor image({conv.c, conv.ih, conv.iw}, conv.image_word);
    for (std::size_t i = 0; i < image.size(); ++i) {
        image.set_flat(i, draw_int(rng, conv.image_word.min_value(), conv.image_word.max_value()));
    }
    QTensor kernel = random_kernel(conv, rng);
    return quantized(cfg, std::move(image), std::move(kernel), seed);
}

const ConvResult& BackendRun::any() const {
    if (pasm) {
        return *pasm;
    }
    if (weight_shared) {
        return *weight_shared;
    }
    return reference.value();
}

BackendRun run_backends(const QTensor& image, const EncodedKernel& ek, const ConvConfig& cfg, Backend backend) {
    BackendRun run;
    if (backend == Backend::Reference || backend == Backend::All) {
        run.reference = conv_reference(image, decode_kernel(ek), cfg);
    }
    if (backend == Backend::WeightShared || backend == Backend::All) {
        run.weight_shared = conv_weight_shared(image, ek, cfg);
    }
    if (backend == Backend::Pasm || backend == Backend::All) {
        run.pasm = conv_pasm(image, ek, cfg);
    }
    if (backend != Backend::All) {
        return run;
    }
    const QTensor& ref = run.reference->out_feat;
    const QTensor& ws = run.weight_shared->out_feat;
    const QTensor& pa = run.pasm->out_feat;
    const OutputDims dims = run.reference->dims;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (ref[i] != ws[i] || ref[i] != pa[i]) {
            const std::size_t plane = dims.oh * dims.ow;
            run.mismatch = Mismatch{i / plane, (i % plane) / dims.ow, i % dims.ow, ref[i], ws[i], pa[i]};
            break;
        }
    }
    return run;
}

}  // namespace pasm
