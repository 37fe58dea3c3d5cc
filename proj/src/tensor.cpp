#include "pasm/tensor.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace pasm {

WordSpec::WordSpec(int width) : width_(width) {
    if (width < kMinWidth || width > kMaxWidth) {
        throw ValidationError("width: must be in [2, 64], got " + std::to_string(width));
    }
}

std::int64_t WordSpec::min_value() const noexcept {
    return width_ == 64 ? INT64_MIN : -(std::int64_t{1} << (width_ - 1));
}

std::int64_t WordSpec::max_value() const noexcept {
    return width_ == 64 ? INT64_MAX : (std::int64_t{1} << (width_ - 1)) - 1;
}

std::int64_t wrap_to_word(std::int64_t v, WordSpec word) noexcept {
    const int shift = 64 - word.width();
    if (shift == 0) {
        return v;
    }
    // Arithmetic right shift sign-extends the low `width` bits.
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(v) << shift) >> shift;
}

namespace {

int ceil_log2(std::uint64_t n) {
    return n <= 1 ? 0 : std::bit_width(n - 1);
}

int uncapped_acc_width(int data_width, std::uint64_t n_products) {
    if (data_width < WordSpec::kMinWidth) {
        throw ValidationError("w: data width must be >= 2, got " + std::to_string(data_width));
    }
    if (n_products < 1) {
        throw ValidationError("n: product count must be >= 1");
    }
    if (2 * data_width > WordSpec::kMaxWidth) {
        throw ValidationError("w: products of " + std::to_string(data_width) +
                              "-bit words do not fit a 64-bit accumulator");
    }
    return 2 * data_width + ceil_log2(std::max<std::uint64_t>(n_products, 2));
}

}  // namespace

int acc_width(int data_width, std::uint64_t n_products) {
    return std::min(WordSpec::kMaxWidth, uncapped_acc_width(data_width, n_products));
}

bool acc_width_exact(int data_width, std::uint64_t n_products) {
    return uncapped_acc_width(data_width, n_products) <= WordSpec::kMaxWidth;
}

QTensor::QTensor(std::vector<std::size_t> shape, WordSpec word)
    : shape_(std::move(shape)), word_(word) {
    if (shape_.empty()) {
        throw ValidationError("dims: tensor must have at least one dimension");
    }
    std::size_t n = 1;
    for (std::size_t d : shape_) {
        if (d == 0) {
            throw ValidationError("dims: every dimension must be >= 1, got " + shape_to_string(shape_));
        }
        n *= d;
    }
    data_.assign(n, 0);
}

QTensor::QTensor(std::vector<std::size_t> shape, WordSpec word, std::vector<std::int64_t> data)
    : QTensor(std::move(shape), word) {
    if (data.size() != data_.size()) {
        throw ValidationError("data: expected " + std::to_string(data_.size()) + " elements, got " +
                              std::to_string(data.size()));
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!word_.contains(data[i])) {
            throw ValidationError("data: element " + std::to_string(i) + " = " + std::to_string(data[i]) +
                                  " outside " + std::to_string(word_.width()) + "-bit range");
        }
    }
    data_ = std::move(data);
}

std::size_t QTensor::offset(std::span<const std::size_t> index) const {
    if (index.size() != shape_.size()) {
        throw ValidationError("index: rank " + std::to_string(index.size()) + " does not match tensor rank " +
                              std::to_string(shape_.size()));
    }
    std::size_t flat = 0;
    for (std::size_t axis = 0; axis < shape_.size(); ++axis) {
        if (index[axis] >= shape_[axis]) {
            throw ValidationError("index: " + std::to_string(index[axis]) + " out of bounds for axis " +
                                  std::to_string(axis) + " of " + shape_to_string(shape_));
        }
        flat = flat * shape_[axis] + index[axis];
    }
    return flat;
}

void QTensor::set(std::span<const std::size_t> index, std::int64_t value) {
    data_[offset(index)] = wrap_to_word(value, word_);
}

void QTensor::set_flat(std::size_t flat, std::int64_t value) {
    data_[flat] = wrap_to_word(value, word_);
}

std::string shape_to_string(std::span<const std::size_t> shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "x" : "") << shape[i];
    }
    os << ']';
    return os.str();
}

}  // namespace pasm
