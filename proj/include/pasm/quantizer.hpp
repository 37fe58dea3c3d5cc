#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pasm/tensor.hpp"

namespace pasm {

/// Shared-weight dictionary: sorted, duplicate-free centroids.
///
/// Requested bin counts are validated to [2, 256] by the quantizer; a
/// dictionary built from degenerate data may collapse to fewer entries
/// (down to one) once duplicates are merged.
class WeightDictionary {
public:
    static constexpr std::size_t kMaxBins = 256;

    WeightDictionary() = default;

    /// Sorts and merges duplicates. Throws on empty input or more than 256
    /// distinct values.
    static WeightDictionary from_values(std::vector<std::int64_t> values);

    std::span<const std::int64_t> centroids() const noexcept { return centroids_; }
    std::int64_t operator[](std::size_t bin) const { return centroids_.at(bin); }
    std::size_t bins() const noexcept { return centroids_.size(); }

    /// ceil(log2(B)) bits per bin index.
    int index_width() const noexcept;

    /// Nearest centroid; ties go to the lower index.
    std::size_t nearest(std::int64_t value) const noexcept;

    friend bool operator==(const WeightDictionary&, const WeightDictionary&) = default;

private:
    std::vector<std::int64_t> centroids_;
};

enum class KMeansInit {
    EvenlySpaced,  // B points evenly spaced between min and max weight
    PlusPlus,      // k-means++ seeding from the options' seed
};

struct KMeansOptions {
    int max_iters = 100;
    std::uint64_t seed = 0;
    KMeansInit init = KMeansInit::EvenlySpaced;
    // Restart 0 uses `init`; restarts 1.. use k-means++ seeded from
    // (seed, restart). The lowest-SSE run wins.
    int restarts = 1;
};

struct QuantizeResult {
    WeightDictionary dictionary;
    std::vector<std::size_t> assignments;  // index into dictionary per weight
    std::int64_t sse = 0;
    int iterations = 0;
    // SSE after each assignment step of the winning run.
    std::vector<std::int64_t> sse_history;
};

/// Lloyd's k-means on scalar integer weights. Centroids are arithmetic means
/// rounded half away from zero; an empty cluster is reseeded at the weight
/// farthest from its current centroid. Stops when no assignment changes.
QuantizeResult kmeans_quantize(std::span<const std::int64_t> weights, std::size_t bins,
                               const KMeansOptions& opts = {});

std::int64_t quantization_sse(std::span<const std::int64_t> weights, const WeightDictionary& dict,
                              std::span<const std::size_t> assignments);

/// Bin-index tensor with the kernel's shape plus the dictionary it indexes.
class EncodedKernel {
public:
    /// Throws if an index is >= B or a centroid does not fit `weight_word`.
    EncodedKernel(QTensor indices, WeightDictionary dictionary, WordSpec weight_word);

    const QTensor& indices() const noexcept { return indices_; }
    const WeightDictionary& dictionary() const noexcept { return dictionary_; }
    WordSpec weight_word() const noexcept { return weight_word_; }
    const std::vector<std::size_t>& shape() const noexcept { return indices_.shape(); }

    /// Word wide enough to hold any bin index as a signed value.
    static WordSpec index_word(const WeightDictionary& dict);

private:
    QTensor indices_;
    WeightDictionary dictionary_;
    WordSpec weight_word_;
};

EncodedKernel encode_kernel(const QTensor& kernel, const WeightDictionary& dict);

QTensor decode_kernel(const EncodedKernel& ek);

}  // namespace pasm
