#include "convgp/gram_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

namespace convgp {

namespace {

constexpr char kMagic[4] = {'C', 'G', 'P', 'K'};

void put_u32_le(std::string& out, uint32_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char((v >> 8) & 0xff));
    out.push_back(char((v >> 16) & 0xff));
    out.push_back(char((v >> 24) & 0xff));
}

uint32_t get_u32_le(const unsigned char* p) {
    return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
           (uint32_t(p[3]) << 24);
}

void put_f64_le(std::string& out, double v) {
    const uint64_t bits = std::bit_cast<uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(char((bits >> (8 * i)) & 0xff));
}

double get_f64_le(const unsigned char* p) {
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= uint64_t(p[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

void write_gram(const std::string& path, const GramMatrix& gram) {
    if (gram.rows > std::numeric_limits<uint32_t>::max() ||
        gram.cols > std::numeric_limits<uint32_t>::max()) {
        throw DataError("gram file: dimensions exceed format limits");
    }
    std::string bytes;
    bytes.reserve(16 + gram.values.size() * 8);
    bytes.append(kMagic, 4);
    put_u32_le(bytes, kGramFormatVersion);
    put_u32_le(bytes, uint32_t(gram.rows));
    put_u32_le(bytes, uint32_t(gram.cols));
    for (double v : gram.values) put_f64_le(bytes, v);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("gram file: cannot open for writing: " + path);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw DataError("gram file: write failed: " + path);
}

GramMatrix read_gram(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("gram file: cannot open: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 16) throw DataError("gram file: truncated header: " + path);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (std::memcmp(p, kMagic, 4) != 0) throw DataError("gram file: bad magic: " + path);
    const uint32_t version = get_u32_le(p + 4);
    if (version != kGramFormatVersion) {
        throw DataError("gram file: unsupported version " + std::to_string(version));
    }
    const uint32_t rows = get_u32_le(p + 8);
    const uint32_t cols = get_u32_le(p + 12);
    const size_t expected = 16 + size_t(rows) * cols * 8;
    if (bytes.size() != expected) throw DataError("gram file: size mismatch: " + path);

    GramMatrix gram(rows, cols);
    for (size_t i = 0; i < gram.values.size(); ++i) {
        gram.values[i] = get_f64_le(p + 16 + i * 8);
    }
    return gram;
}

}  // namespace convgp
