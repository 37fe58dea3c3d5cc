#include "pasm/tensor_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>

namespace pasm {

namespace {

constexpr std::array<char, 4> kMagic{'Q', 'T', '0', '1'};
constexpr std::uint32_t kMaxRank = 16;

std::int64_t parse_int(const std::string& token, const char* what) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw FormatError(std::string(what) + ": '" + token + "' is not a decimal integer");
    }
    return v;
}

QTensor build(std::vector<std::size_t> dims, std::int64_t width, std::vector<std::int64_t> data) {
    if (dims.empty()) {
        throw FormatError("dims: tensor must have at least one dimension");
    }
    if (width < WordSpec::kMinWidth || width > WordSpec::kMaxWidth) {
        throw FormatError("width: must be in [2, 64], got " + std::to_string(width));
    }
    try {
        return QTensor(std::move(dims), WordSpec(static_cast<int>(width)), std::move(data));
    } catch (const FormatError&) {
        throw;
    } catch (const ValidationError& e) {
        throw FormatError(e.what());
    }
}

std::size_t element_count(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) {
        if (d == 0) {
            throw FormatError("dims: every dimension must be >= 1");
        }
        n *= d;
    }
    return n;
}

QTensor read_text(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("header: missing 'dims' line");
    }
    std::istringstream dims_line(line);
    std::string keyword;
    dims_line >> keyword;
    if (keyword != "dims") {
        throw FormatError("header: first line must start with 'dims'");
    }
    std::vector<std::size_t> dims;
    for (std::string tok; dims_line >> tok;) {
        const std::int64_t d = parse_int(tok, "dims");
        if (d < 1) {
            throw FormatError("dims: every dimension must be >= 1, got " + tok);
        }
        dims.push_back(static_cast<std::size_t>(d));
    }
    if (dims.empty()) {
        throw FormatError("dims: tensor must have at least one dimension");
    }

    if (!std::getline(in, line)) {
        throw FormatError("header: missing 'width' line");
    }
    std::istringstream width_line(line);
    std::string width_tok;
    std::string extra;
    width_line >> keyword >> width_tok;
    if (keyword != "width" || width_tok.empty() || (width_line >> extra)) {
        throw FormatError("header: second line must be 'width <bits>'");
    }
    const std::int64_t width = parse_int(width_tok, "width");

    const std::size_t n = element_count(dims);
    std::vector<std::int64_t> data;
    data.reserve(n);
    for (std::string tok; in >> tok;) {
        if (data.size() == n) {
            throw FormatError("data: more than " + std::to_string(n) + " elements");
        }
        data.push_back(parse_int(tok, "data"));
    }
    if (data.size() != n) {
        throw FormatError("data: truncated, expected " + std::to_string(n) + " elements, got " +
                          std::to_string(data.size()));
    }
    return build(std::move(dims), width, std::move(data));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    std::array<unsigned char, sizeof(T)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw FormatError(std::string(what) + ": truncated file");
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    }
    return static_cast<T>(v);
}

template <typename T>
void write_le(std::ostream& out, T value) {
    auto v = static_cast<std::uint64_t>(value);
    std::array<char, sizeof(T)> bytes{};
    for (auto& b : bytes) {
        b = static_cast<char>(v & 0xFF);
        v >>= 8;
    }
    out.write(bytes.data(), bytes.size());
}

QTensor read_bin(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != 4 || magic != kMagic) {
        throw FormatError("magic: expected 'QT01'");
    }
    const auto rank = read_le<std::uint32_t>(in, "rank");
    if (rank == 0 || rank > kMaxRank) {
        throw FormatError("rank: must be in [1, 16], got " + std::to_string(rank));
    }
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) {
        d = read_le<std::uint32_t>(in, "dims");
    }
    const auto width = read_le<std::uint32_t>(in, "width");
    const std::size_t n = element_count(dims);
    std::vector<std::int64_t> data(n);
    for (auto& v : data) {
        v = read_le<std::int64_t>(in, "data");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError("data: trailing bytes after " + std::to_string(n) + " elements");
    }
    return build(std::move(dims), width, std::move(data));
}

}  // namespace

std::string_view to_string(TensorFormat format) noexcept {
    return format == TensorFormat::TextV1 ? "text-v1" : "bin-v1";
}

TensorFormat parse_tensor_format(std::string_view text) {
    if (text == "text-v1") {
        return TensorFormat::TextV1;
    }
    if (text == "bin-v1") {
        return TensorFormat::BinV1;
    }
    throw ValidationError("format: expected text-v1 or bin-v1, got '" + std::string(text) + "'");
}

QTensor read_tensor(std::istream& in, TensorFormat format) {
    return format == TensorFormat::TextV1 ? read_text(in) : read_bin(in);
}

void write_tensor(std::ostream& out, const QTensor& t, TensorFormat format) {
    if (format == TensorFormat::TextV1) {
        out << "dims";
        for (std::size_t d : t.shape()) {
            out << ' ' << d;
        }
        out << "\nwidth " << t.word().width() << '\n';
        // One line per innermost row.
        const std::size_t row = t.shape().back();
        for (std::size_t i = 0; i < t.size(); ++i) {
            out << t[i] << ((i + 1) % row == 0 ? '\n' : ' ');
        }
        return;
    }
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.word().width()));
    for (std::int64_t v : t.data()) {
        write_le<std::int64_t>(out, v);
    }
}

QTensor load_tensor(const std::filesystem::path& path, TensorFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("path: cannot open '" + path.string() + "'");
    }
    return read_tensor(in, format);
}

void store_tensor(const std::filesystem::path& path, const QTensor& t, TensorFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ValidationError("path: cannot write '" + path.string() + "'");
    }
    write_tensor(out, t, format);
    if (!out) {
        throw ValidationError("path: write failed for '" + path.string() + "'");
    }
}

}  // namespace pasm
