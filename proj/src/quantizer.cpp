#include "pasm/quantizer.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <random>

namespace pasm {

namespace {

__extension__ using Wide = __int128;

Wide abs_diff(std::int64_t a, std::int64_t b) {
    const Wide d = static_cast<Wide>(a) - static_cast<Wide>(b);
    return d < 0 ? -d : d;
}

// Mean rounded half away from zero.
std::int64_t rounded_mean(Wide sum, std::size_t count) {
    const Wide n = static_cast<Wide>(count);
    const Wide mag = sum < 0 ? -sum : sum;
    const Wide q = (2 * mag + n) / (2 * n);
    return static_cast<std::int64_t>(sum < 0 ? -q : q);
}

std::size_t nearest_unsorted(std::span<const std::int64_t> centroids, std::int64_t w) {
    std::size_t best = 0;
    Wide best_d = abs_diff(w, centroids[0]);
    for (std::size_t j = 1; j < centroids.size(); ++j) {
        const Wide d = abs_diff(w, centroids[j]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

Wide sse_of(std::span<const std::int64_t> weights, std::span<const std::int64_t> centroids,
            std::span<const std::size_t> assignments) {
    Wide total = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const Wide d = abs_diff(weights[i], centroids[assignments[i]]);
        total += d * d;
    }
    return total;
}

std::int64_t clamp_sse(Wide sse) {
    constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
    return sse > kMax ? kMax : static_cast<std::int64_t>(sse);
}

std::vector<std::int64_t> init_evenly_spaced(std::span<const std::int64_t> weights, std::size_t bins) {
    const auto [lo_it, hi_it] = std::minmax_element(weights.begin(), weights.end());
    const Wide lo = *lo_it;
    const Wide span = static_cast<Wide>(*hi_it) - lo;
    std::vector<std::int64_t> centroids(bins);
    for (std::size_t j = 0; j < bins; ++j) {
        // lo + round(span * j / (B - 1)), all terms non-negative
        const Wide num = span * static_cast<Wide>(j);
        const Wide den = static_cast<Wide>(bins - 1);
        centroids[j] = static_cast<std::int64_t>(lo + (2 * num + den) / (2 * den));
    }
    return centroids;
}

double unit_interval(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<std::int64_t> init_plus_plus(std::span<const std::int64_t> weights, std::size_t bins,
                                         std::mt19937_64& rng) {
    std::vector<std::int64_t> centroids;
    centroids.reserve(bins);
    centroids.push_back(weights[rng() % weights.size()]);
    std::vector<double> dist2(weights.size());
    while (centroids.size() < bins) {
        double total = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const auto d = static_cast<double>(abs_diff(weights[i], centroids[nearest_unsorted(centroids, weights[i])]));
            dist2[i] = d * d;
            total += dist2[i];
        }
        std::size_t pick = weights.size() - 1;
        if (total == 0.0) {
            pick = rng() % weights.size();
        } else {
            double target = unit_interval(rng) * total;
            for (std::size_t i = 0; i < weights.size(); ++i) {
                target -= dist2[i];
                if (target < 0.0 && dist2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.push_back(weights[pick]);
    }
    return centroids;
}

struct LloydRun {
    std::vector<std::int64_t> centroids;
    std::vector<std::size_t> assignments;
    std::vector<std::int64_t> sse_history;
    int iterations = 0;
};

LloydRun lloyd(std::span<const std::int64_t> weights, std::vector<std::int64_t> centroids, int max_iters) {
    LloydRun run;
    run.assignments.assign(weights.size(), 0);

    auto assign = [&]() {
        bool changed = false;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const std::size_t j = nearest_unsorted(centroids, weights[i]);
            changed |= j != run.assignments[i];
            run.assignments[i] = j;
        }
        run.sse_history.push_back(clamp_sse(sse_of(weights, centroids, run.assignments)));
        return changed;
    };

    assign();
    const std::size_t bins = centroids.size();
    std::vector<Wide> sums(bins);
    std::vector<std::size_t> counts(bins);
    for (int iter = 1; iter <= max_iters; ++iter) {
        run.iterations = iter;
        std::fill(sums.begin(), sums.end(), 0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            sums[run.assignments[i]] += weights[i];
            ++counts[run.assignments[i]];
        }
        for (std::size_t j = 0; j < bins; ++j) {
            if (counts[j] > 0) {
                centroids[j] = rounded_mean(sums[j], counts[j]);
            }
        }
        bool reseeded = false;
        for (std::size_t j = 0; j < bins; ++j) {
            if (counts[j] > 0) {
                continue;
            }
            // Reseed at the weight farthest from its centroid; first wins ties.
            Wide far = 0;
            std::size_t far_i = weights.size();
            for (std::size_t i = 0; i < weights.size(); ++i) {
                const Wide d = abs_diff(weights[i], centroids[run.assignments[i]]);
                if (d > far) {
                    far = d;
                    far_i = i;
                }
            }
            if (far_i == weights.size()) {
                break;  // every weight already sits on a centroid
            }
            centroids[j] = weights[far_i];
            // Claim the point so a second empty cluster picks a different one.
            --counts[run.assignments[far_i]];
            run.assignments[far_i] = j;
            counts[j] = 1;
            reseeded = true;
        }
        if (!assign() && !reseeded) {
            break;
        }
    }
    run.centroids = std::move(centroids);
    return run;
}

// Single-point transfers between clusters, accepted whenever they lower the
// exact-mean SSE. Escapes Lloyd fixed points where a boundary weight is closer
// to its own centroid but still costs more there. Returns rounded means.
std::vector<std::int64_t> transfer_refine(std::span<const std::int64_t> weights, const LloydRun& run) {
    const std::size_t bins = run.centroids.size();
    std::vector<std::size_t> assign = run.assignments;
    std::vector<long double> sums(bins, 0.0L);
    std::vector<std::size_t> counts(bins, 0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        sums[assign[i]] += static_cast<long double>(weights[i]);
        ++counts[assign[i]];
    }
    bool moved = true;
    for (int pass = 0; moved && pass < 1000; ++pass) {
        moved = false;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const std::size_t a = assign[i];
            if (counts[a] < 2) {
                continue;
            }
            const long double x = static_cast<long double>(weights[i]);
            const long double na = static_cast<long double>(counts[a]);
            const long double da = x - sums[a] / na;
            const long double removal = na / (na - 1.0L) * da * da;
            std::size_t best = a;
            long double best_gain = 0.0L;
            for (std::size_t b = 0; b < bins; ++b) {
                if (b == a || counts[b] == 0) {
                    continue;
                }
                const long double nb = static_cast<long double>(counts[b]);
                const long double db = x - sums[b] / nb;
                const long double gain = removal - nb / (nb + 1.0L) * db * db;
                if (gain > best_gain * (1.0L + 1e-12L) + 1e-9L) {
                    best_gain = gain;
                    best = b;
                }
            }
            if (best != a) {
                sums[a] -= x;
                --counts[a];
                sums[best] += x;
                ++counts[best];
                assign[i] = best;
                moved = true;
            }
        }
    }
    std::vector<Wide> exact(bins, 0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        exact[assign[i]] += weights[i];
    }
    std::vector<std::int64_t> centroids = run.centroids;
    for (std::size_t j = 0; j < bins; ++j) {
        if (counts[j] > 0) {
            centroids[j] = rounded_mean(exact[j], counts[j]);
        }
    }
    return centroids;
}

}  // namespace

WeightDictionary WeightDictionary::from_values(std::vector<std::int64_t> values) {
    if (values.empty()) {
        throw ValidationError("b: dictionary must have at least one centroid");
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.size() > kMaxBins) {
        throw ValidationError("b: dictionary has " + std::to_string(values.size()) + " distinct centroids, max 256");
    }
    WeightDictionary dict;
    dict.centroids_ = std::move(values);
    return dict;
}

int WeightDictionary::index_width() const noexcept {
    const std::size_t b = centroids_.size();
    return b <= 1 ? 0 : std::bit_width(b - 1);
}

std::size_t WeightDictionary::nearest(std::int64_t value) const noexcept {
    const auto it = std::lower_bound(centroids_.begin(), centroids_.end(), value);
    if (it == centroids_.begin()) {
        return 0;
    }
    if (it == centroids_.end()) {
        return centroids_.size() - 1;
    }
    const auto hi = static_cast<std::size_t>(it - centroids_.begin());
    return abs_diff(value, centroids_[hi - 1]) <= abs_diff(value, centroids_[hi]) ? hi - 1 : hi;
}

QuantizeResult kmeans_quantize(std::span<const std::int64_t> weights, std::size_t bins, const KMeansOptions& opts) {
    if (weights.empty()) {
        throw ValidationError("weights: input must be non-empty");
    }
    if (bins < 2 || bins > WeightDictionary::kMaxBins) {
        throw ValidationError("b: bin count must be in [2, 256], got " + std::to_string(bins));
    }
    if (opts.max_iters < 1) {
        throw ValidationError("max_iters: must be >= 1");
    }
    if (opts.restarts < 1) {
        throw ValidationError("restarts: must be >= 1");
    }

    LloydRun best;
    Wide best_sse = -1;
    for (int r = 0; r < opts.restarts; ++r) {
        std::mt19937_64 rng(opts.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(r));
        std::vector<std::int64_t> init = (r == 0 && opts.init == KMeansInit::EvenlySpaced)
                                             ? init_evenly_spaced(weights, bins)
                                             : init_plus_plus(weights, bins, rng);
        LloydRun run = lloyd(weights, std::move(init), opts.max_iters);
        Wide sse = sse_of(weights, run.centroids, run.assignments);
        const int budget = opts.max_iters - run.iterations;
        LloydRun refined = budget > 0 ? lloyd(weights, transfer_refine(weights, run), budget) : LloydRun{};
        const Wide refined_sse =
            budget > 0 ? sse_of(weights, refined.centroids, refined.assignments) : sse;
        // Accept only a strict improvement that keeps the SSE history non-increasing.
        if (refined_sse < sse && refined.sse_history.front() <= run.sse_history.back()) {
            refined.iterations += run.iterations;
            run.sse_history.insert(run.sse_history.end(), refined.sse_history.begin(), refined.sse_history.end());
            refined.sse_history = std::move(run.sse_history);
            run = std::move(refined);
            sse = refined_sse;
        }
        if (best_sse < 0 || sse < best_sse) {
            best_sse = sse;
            best = std::move(run);
        }
    }

    // Canonicalize: keep occupied centroids, sort, merge, reassign.
    std::vector<bool> used(best.centroids.size(), false);
    for (std::size_t a : best.assignments) {
        used[a] = true;
    }
    std::vector<std::int64_t> occupied;
    for (std::size_t j = 0; j < best.centroids.size(); ++j) {
        if (used[j]) {
            occupied.push_back(best.centroids[j]);
        }
    }

    QuantizeResult result;
    result.dictionary = WeightDictionary::from_values(std::move(occupied));
    result.assignments.resize(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        result.assignments[i] = result.dictionary.nearest(weights[i]);
    }
    result.sse = quantization_sse(weights, result.dictionary, result.assignments);
    result.iterations = best.iterations;
    result.sse_history = std::move(best.sse_history);
    return result;
}

std::int64_t quantization_sse(std::span<const std::int64_t> weights, const WeightDictionary& dict,
                              std::span<const std::size_t> assignments) {
    if (assignments.size() != weights.size()) {
        throw ValidationError("assignments: length does not match weights");
    }
    for (std::size_t a : assignments) {
        if (a >= dict.bins()) {
            throw ValidationError("assignments: index " + std::to_string(a) + " >= B");
        }
    }
    return clamp_sse(sse_of(weights, dict.centroids(), assignments));
}

WordSpec EncodedKernel::index_word(const WeightDictionary& dict) {
    return WordSpec(std::max(WordSpec::kMinWidth, dict.index_width() + 1));
}

EncodedKernel::EncodedKernel(QTensor indices, WeightDictionary dictionary, WordSpec weight_word)
    : indices_(std::move(indices)), dictionary_(std::move(dictionary)), weight_word_(weight_word) {
    if (dictionary_.bins() == 0) {
        throw ValidationError("b: empty dictionary");
    }
    for (std::int64_t c : dictionary_.centroids()) {
        if (!weight_word_.contains(c)) {
            throw ValidationError("centroids: value " + std::to_string(c) + " does not fit the " +
                                  std::to_string(weight_word_.width()) + "-bit weight word");
        }
    }
    const auto b = static_cast<std::int64_t>(dictionary_.bins());
    for (std::int64_t idx : indices_.data()) {
        if (idx < 0 || idx >= b) {
            throw ValidationError("indices: bin index " + std::to_string(idx) + " outside [0, " + std::to_string(b) +
                                  ")");
        }
    }
}

EncodedKernel encode_kernel(const QTensor& kernel, const WeightDictionary& dict) {
    QTensor indices(kernel.shape(), EncodedKernel::index_word(dict));
    for (std::size_t i = 0; i < kernel.size(); ++i) {
        indices.set_flat(i, static_cast<std::int64_t>(dict.nearest(kernel[i])));
    }
    return EncodedKernel(std::move(indices), dict, kernel.word());
}

QTensor decode_kernel(const EncodedKernel& ek) {
    QTensor out(ek.shape(), ek.weight_word());
    const auto& idx = ek.indices();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.set_flat(i, ek.dictionary()[static_cast<std::size_t>(idx[i])]);
    }
    return out;
}

}  // namespace pasm
