#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "pasm/conv.hpp"
#include "pasm/experiment.hpp"
#include "pasm/quantizer.hpp"

namespace pasm {

/// Uniform integer in [lo, hi] from a 64-bit Mersenne twister. Modulo
/// reduction keeps the sequence identical across standard libraries.
std::int64_t draw_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi);

/// `count` distinct sorted values drawn from `word`'s range.
WeightDictionary random_dictionary(std::mt19937_64& rng, std::size_t count, WordSpec word);

struct Fixture {
    ConvConfig cfg;
    QTensor image;
    QTensor kernel;  // pre-quantization weights
    EncodedKernel encoded;
};

/// Five (image, weight) pairs at scale 10 laid out as C = 5 with a 1x1
/// kernel and a single output: 26.7*1.7 + 3.4*0.4 + 4.8*1.3 + 17.7*2.0 + 6.1*1.7.
Fixture worked_example_fixture();

/// Zero image with a random quantized kernel; outputs equal bias (then ReLU).
Fixture zero_image_fixture(const ExperimentConfig& cfg);

/// Random image and kernel, kernel quantized to cfg.b bins with k-means.
Fixture random_fixture(const ExperimentConfig& cfg, std::uint64_t seed);

struct Mismatch {
    std::size_t m;
    std::size_t oh;
    std::size_t ow;
    std::int64_t reference;
    std::int64_t weight_shared;
    std::int64_t pasm;
};

struct BackendRun {
    std::optional<ConvResult> reference;  // on the decoded kernel
    std::optional<ConvResult> weight_shared;
    std::optional<ConvResult> pasm;
    std::optional<Mismatch> mismatch;  // first disagreement, row-major

    const ConvResult& any() const;
};

BackendRun run_backends(const QTensor& image, const EncodedKernel& ek, const ConvConfig& cfg, Backend backend);

}  // namespace pasm
