#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pasm/quantizer.hpp"
#include "pasm/tensor.hpp"

namespace pasm {

/// Shape and arithmetic parameters of one convolution layer.
///
/// Field names follow the usual layer symbols: image [C][IH][IW], kernel
/// [M][C][KY][KX], stride S, one bias per output kernel.
struct ConvConfig {
    std::size_t ih = 5;
    std::size_t iw = 5;
    std::size_t c = 15;
    std::size_t m = 2;
    std::size_t ky = 3;
    std::size_t kx = 3;
    std::size_t stride = 1;
    std::vector<std::int64_t> bias;  // empty means all-zero
    bool relu = false;
    WordSpec image_word{32};
    WordSpec weight_word{32};

    /// Throws ValidationError naming the offending field.
    void validate() const;

    /// Pairs summed per output element, C*KY*KX.
    std::size_t products_per_output() const noexcept { return c * ky * kx; }
    std::int64_t bias_for(std::size_t m_idx) const noexcept { return bias.empty() ? 0 : bias[m_idx]; }

    /// Accumulator word for this layer (see acc_width).
    WordSpec acc_word() const;
};

struct OutputDims {
    std::size_t oh;
    std::size_t ow;
    friend bool operator==(const OutputDims&, const OutputDims&) = default;
};

/// Valid-padding output size: floor((I - K) / S) + 1 per axis.
OutputDims output_dims(const ConvConfig& cfg);

struct ConvResult {
    QTensor out_feat;  // [M][OH][OW], accumulator word
    OutputDims dims{};
};

/// One streamed (image value, bin index) pair.
struct StreamPair {
    std::int64_t value;
    std::size_t bin;
};

/// The B-entry imageBin register file of a PAS unit.
struct BinAccumulators {
    std::vector<std::int64_t> bins;

    explicit BinAccumulators(std::size_t b = 0) : bins(b, 0) {}
    std::size_t size() const noexcept { return bins.size(); }
    void reset() noexcept { std::fill(bins.begin(), bins.end(), 0); }
};

/// out = raw + bias, then max(out, 0) if relu. Modulo-2^64 add.
std::int64_t apply_bias_relu(std::int64_t raw, std::int64_t bias, bool relu) noexcept;

/// Direct MAC schedule on an explicit kernel.
ConvResult conv_reference(const QTensor& image, const QTensor& kernel, const ConvConfig& cfg);

/// MAC schedule with one dictionary lookup per product.
ConvResult conv_weight_shared(const QTensor& image, const EncodedKernel& ek, const ConvConfig& cfg);

/// Two-phase schedule: per output element, accumulate image values into B
/// bins by bin index, then multiply each bin by its centroid once.
ConvResult conv_pasm(const QTensor& image, const EncodedKernel& ek, const ConvConfig& cfg);

/// Weighted histogram of a pair stream. Each bin is wrapped to `acc`.
/// Throws ValidationError for a bin index >= b.
BinAccumulators pas_accumulate(std::span<const StreamPair> pairs, std::size_t b, WordSpec acc = WordSpec{64});

/// Accumulates into an existing register file without resetting it.
void pas_accumulate_into(BinAccumulators& acc_file, std::span<const StreamPair> pairs, WordSpec acc = WordSpec{64});

/// Sum over bins of bins[b] * centroids[b], wrapped to `acc`.
std::int64_t postpass_multiply(const BinAccumulators& bins, const WeightDictionary& dict,
                               WordSpec acc = WordSpec{64});
/// Same, with per-bin weights in arbitrary (non-canonical) order.
std::int64_t postpass_multiply(const BinAccumulators& bins, std::span<const std::int64_t> weights,
                               WordSpec acc = WordSpec{64});

}  // namespace pasm
