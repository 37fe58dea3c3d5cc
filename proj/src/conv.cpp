#include "pasm/conv.hpp"

#include <string>

namespace pasm {

namespace {

void require_shape(const std::vector<std::size_t>& actual, const std::vector<std::size_t>& expected,
                   const char* what) {
    if (actual != expected) {
        throw ValidationError(std::string(what) + ": shape " + shape_to_string(actual) + " does not match expected " +
                              shape_to_string(expected));
    }
}

void check_image(const QTensor& image, const ConvConfig& cfg) {
    cfg.validate();
    require_shape(image.shape(), {cfg.c, cfg.ih, cfg.iw}, "image");
    if (image.word() != cfg.image_word) {
        throw ValidationError("image: word width " + std::to_string(image.word().width()) +
                              " does not match config width " + std::to_string(cfg.image_word.width()));
    }
}

void check_encoded(const EncodedKernel& ek, const ConvConfig& cfg) {
    require_shape(ek.shape(), {cfg.m, cfg.c, cfg.ky, cfg.kx}, "kernel");
    if (ek.weight_word() != cfg.weight_word) {
        throw ValidationError("kernel: word width " + std::to_string(ek.weight_word().width()) +
                              " does not match config width " + std::to_string(cfg.weight_word.width()));
    }
}

std::int64_t finalize(std::int64_t raw, std::int64_t bias, bool relu, WordSpec acc) {
    const std::int64_t v = wrap_to_word(apply_bias_relu(raw, bias, false), acc);
    return relu && v < 0 ? 0 : v;
}

// Walks the valid output positions in the order of the layer loop nest and
// hands each (m, oh, ow) plus the image window origin to `body`.
template <typename Body>
ConvResult for_each_output(const ConvConfig& cfg, Body&& body) {
    const OutputDims dims = output_dims(cfg);
    ConvResult result{QTensor({cfg.m, dims.oh, dims.ow}, cfg.acc_word()), dims};
    for (std::size_t oh = 0; oh < dims.oh; ++oh) {
        for (std::size_t ow = 0; ow < dims.ow; ++ow) {
            for (std::size_t m = 0; m < cfg.m; ++m) {
                const std::int64_t raw = body(m, oh * cfg.stride, ow * cfg.stride);
                result.out_feat.set_flat((m * dims.oh + oh) * dims.ow + ow,
                                         finalize(raw, cfg.bias_for(m), cfg.relu, result.out_feat.word()));
            }
        }
    }
    return result;
}

}  // namespace

void ConvConfig::validate() const {
    auto positive = [](std::size_t v, const char* field) {
        if (v < 1) {
            throw ValidationError(std::string(field) + ": must be >= 1");
        }
    };
    positive(ih, "ih");
    positive(iw, "iw");
    positive(c, "c");
    positive(m, "m");
    positive(ky, "ky");
    positive(kx, "kx");
    positive(stride, "s");
    if (ky % 2 == 0) {
        throw ValidationError("ky: kernel height must be odd, got " + std::to_string(ky));
    }
    if (kx % 2 == 0) {
        throw ValidationError("kx: kernel width must be odd, got " + std::to_string(kx));
    }
    if (ky > ih) {
        throw ValidationError("ky: kernel height " + std::to_string(ky) + " exceeds image height " + std::to_string(ih));
    }
    if (kx > iw) {
        throw ValidationError("kx: kernel width " + std::to_string(kx) + " exceeds image width " + std::to_string(iw));
    }
    if (!bias.empty() && bias.size() != m) {
        throw ValidationError("bias: expected " + std::to_string(m) + " values, got " + std::to_string(bias.size()));
    }
    (void)acc_word();
}

WordSpec ConvConfig::acc_word() const {
    return WordSpec(acc_width(std::max(image_word.width(), weight_word.width()), products_per_output()));
}

OutputDims output_dims(const ConvConfig& cfg) {
    cfg.validate();
    return {(cfg.ih - cfg.ky) / cfg.stride + 1, (cfg.iw - cfg.kx) / cfg.stride + 1};
}

std::int64_t apply_bias_relu(std::int64_t raw, std::int64_t bias, bool relu) noexcept {
    const std::int64_t out = wrapping_add(raw, bias);
    return relu && out < 0 ? 0 : out;
}

ConvResult conv_reference(const QTensor& image, const QTensor& kernel, const ConvConfig& cfg) {
    check_image(image, cfg);
    require_shape(kernel.shape(), {cfg.m, cfg.c, cfg.ky, cfg.kx}, "kernel");
    if (kernel.word() != cfg.weight_word) {
        throw ValidationError("kernel: word width " + std::to_string(kernel.word().width()) +
                              " does not match config width " + std::to_string(cfg.weight_word.width()));
    }
    return for_each_output(cfg, [&](std::size_t m, std::size_t row0, std::size_t col0) {
        std::int64_t summands = 0;
        for (std::size_t c = 0; c < cfg.c; ++c) {
            for (std::size_t ky = 0; ky < cfg.ky; ++ky) {
                for (std::size_t kx = 0; kx < cfg.kx; ++kx) {
                    const std::int64_t im_val = image[(c * cfg.ih + row0 + ky) * cfg.iw + col0 + kx];
                    const std::int64_t kern_val = kernel[((m * cfg.c + c) * cfg.ky + ky) * cfg.kx + kx];
                    summands = wrapping_add(summands, wrapping_mul(im_val, kern_val));
                }
            }
        }
        return summands;
    });
}

ConvResult conv_weight_shared(const QTensor& image, const EncodedKernel& ek, const ConvConfig& cfg) {
    check_image(image, cfg);
    check_encoded(ek, cfg);
    const auto centroids = ek.dictionary().centroids();
    const QTensor& bin_index = ek.indices();
    return for_each_output(cfg, [&](std::size_t m, std::size_t row0, std::size_t col0) {
        std::int64_t summands = 0;
        for (std::size_t c = 0; c < cfg.c; ++c) {
            for (std::size_t ky = 0; ky < cfg.ky; ++ky) {
                for (std::size_t kx = 0; kx < cfg.kx; ++kx) {
                    const std::int64_t im_val = image[(c * cfg.ih + row0 + ky) * cfg.iw + col0 + kx];
                    const auto bin = static_cast<std::size_t>(bin_index[((m * cfg.c + c) * cfg.ky + ky) * cfg.kx + kx]);
                    summands = wrapping_add(summands, wrapping_mul(im_val, centroids[bin]));
                }
            }
        }
        return summands;
    });
}

ConvResult conv_pasm(const QTensor& image, const EncodedKernel& ek, const ConvConfig& cfg) {
    check_image(image, cfg);
    check_encoded(ek, cfg);
    const WeightDictionary& dict = ek.dictionary();
    const QTensor& bin_index = ek.indices();
    const WordSpec acc = cfg.acc_word();
    BinAccumulators image_bin(dict.bins());
    std::vector<StreamPair> stream;
    stream.reserve(cfg.products_per_output());
    return for_each_output(cfg, [&](std::size_t m, std::size_t row0, std::size_t col0) {
        stream.clear();
        for (std::size_t c = 0; c < cfg.c; ++c) {
            for (std::size_t ky = 0; ky < cfg.ky; ++ky) {
                for (std::size_t kx = 0; kx < cfg.kx; ++kx) {
                    stream.push_back({image[(c * cfg.ih + row0 + ky) * cfg.iw + col0 + kx],
                                      static_cast<std::size_t>(bin_index[((m * cfg.c + c) * cfg.ky + ky) * cfg.kx + kx])});
                }
            }
        }
        image_bin.reset();
        pas_accumulate_into(image_bin, stream, acc);
        return postpass_multiply(image_bin, dict, acc);
    });
}

BinAccumulators pas_accumulate(std::span<const StreamPair> pairs, std::size_t b, WordSpec acc) {
    BinAccumulators out(b);
    pas_accumulate_into(out, pairs, acc);
    return out;
}

void pas_accumulate_into(BinAccumulators& acc_file, std::span<const StreamPair> pairs, WordSpec acc) {
    for (const StreamPair& p : pairs) {
        if (p.bin >= acc_file.size()) {
            throw ValidationError("bin: index " + std::to_string(p.bin) + " >= B = " + std::to_string(acc_file.size()));
        }
    }
    for (const StreamPair& p : pairs) {
        acc_file.bins[p.bin] = wrap_to_word(wrapping_add(acc_file.bins[p.bin], p.value), acc);
    }
}

std::int64_t postpass_multiply(const BinAccumulators& bins, const WeightDictionary& dict, WordSpec acc) {
    return postpass_multiply(bins, dict.centroids(), acc);
}

std::int64_t postpass_multiply(const BinAccumulators& bins, std::span<const std::int64_t> weights, WordSpec acc) {
    if (bins.size() != weights.size()) {
        throw ValidationError("bins: register file has " + std::to_string(bins.size()) + " entries, dictionary has " +
                              std::to_string(weights.size()));
    }
    std::int64_t result = 0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
        result = wrapping_add(result, wrapping_mul(bins.bins[b], weights[b]));
    }
    return wrap_to_word(result, acc);
}

}  // namespace pasm
