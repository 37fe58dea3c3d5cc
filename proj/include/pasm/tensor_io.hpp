#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "pasm/tensor.hpp"

namespace pasm {

// text-v1:
//   dims d0 d1 ...
//   width W
//   <row-major decimal integers, whitespace separated>
//
// bin-v1:
//   "QT01", u32 rank, u32 dims[rank], u32 width, i64 data[...]
//   all little-endian.
enum class TensorFormat { TextV1, BinV1 };

std::string_view to_string(TensorFormat format) noexcept;
TensorFormat parse_tensor_format(std::string_view text);

QTensor read_tensor(std::istream& in, TensorFormat format);
void write_tensor(std::ostream& out, const QTensor& t, TensorFormat format);

/// Throws FormatError for malformed, truncated or out-of-range content.
QTensor load_tensor(const std::filesystem::path& path, TensorFormat format);
void store_tensor(const std::filesystem::path& path, const QTensor& t, TensorFormat format);

}  // namespace pasm
