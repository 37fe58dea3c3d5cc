#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "pasm/error.hpp"

namespace pasm {

/// Two's-complement word of 2..64 bits.
class WordSpec {
public:
    static constexpr int kMinWidth = 2;
    static constexpr int kMaxWidth = 64;

    explicit WordSpec(int width = 32);

    int width() const noexcept { return width_; }
    std::int64_t min_value() const noexcept;
    std::int64_t max_value() const noexcept;
    bool contains(std::int64_t v) const noexcept { return v >= min_value() && v <= max_value(); }

    friend bool operator==(const WordSpec&, const WordSpec&) = default;

private:
    int width_;
};

/// Reduce v modulo 2^width into the signed range of `word`.
std::int64_t wrap_to_word(std::int64_t v, WordSpec word) noexcept;

// Modulo-2^64 arithmetic. Every schedule accumulates through these so that
// results agree bit-for-bit even when a capped accumulator wraps.
constexpr std::int64_t wrapping_add(std::int64_t a, std::int64_t b) noexcept {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}

constexpr std::int64_t wrapping_mul(std::int64_t a, std::int64_t b) noexcept {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

/// Accumulator width for summing `n_products` products of two `data_width`-bit
/// words: 2W + ceil(log2(max(N, 2))), capped at 64. Beyond the cap, sums are
/// exact modulo 2^64. Throws ValidationError when a single product cannot be
/// represented (W > 32) or arguments are out of domain.
int acc_width(int data_width, std::uint64_t n_products);

/// True when acc_width(W, N) did not have to be capped, i.e. no overflow is
/// possible.
bool acc_width_exact(int data_width, std::uint64_t n_products);

/// Row-major fixed-point integer tensor.
class QTensor {
public:
    QTensor() = default;
    QTensor(std::vector<std::size_t> shape, WordSpec word);
    /// Throws ValidationError if any element is outside the word range.
    QTensor(std::vector<std::size_t> shape, WordSpec word, std::vector<std::int64_t> data);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    WordSpec word() const noexcept { return word_; }

    std::span<const std::int64_t> data() const noexcept { return data_; }

    std::size_t offset(std::span<const std::size_t> index) const;
    std::size_t offset(std::initializer_list<std::size_t> index) const {
        return offset(std::span<const std::size_t>(index.begin(), index.size()));
    }

    std::int64_t get(std::span<const std::size_t> index) const { return data_[offset(index)]; }
    std::int64_t get(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

    /// Stores wrap_to_word(value).
    void set(std::span<const std::size_t> index, std::int64_t value);
    void set(std::initializer_list<std::size_t> index, std::int64_t value) {
        set(std::span<const std::size_t>(index.begin(), index.size()), value);
    }

    // Unchecked flat access, used by the inner loops.
    std::int64_t operator[](std::size_t flat) const noexcept { return data_[flat]; }
    void set_flat(std::size_t flat, std::int64_t value);

    friend bool operator==(const QTensor&, const QTensor&) = default;

private:
    std::vector<std::size_t> shape_;
    WordSpec word_{};
    std::vector<std::int64_t> data_;
};

std::string shape_to_string(std::span<const std::size_t> shape);

}  // namespace pasm
