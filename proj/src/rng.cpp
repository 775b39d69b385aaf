#include "convgp/rng.hpp"

#include <cmath>
#include <mutex>

namespace convgp::rng {

namespace {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(Philox4x32::Block& ctr, const Philox4x32::Key& key) {
    const uint64_t p0 = uint64_t(kMul0) * ctr[0];
    const uint64_t p1 = uint64_t(kMul1) * ctr[2];
    const uint32_t hi0 = uint32_t(p0 >> 32), lo0 = uint32_t(p0);
    const uint32_t hi1 = uint32_t(p1 >> 32), lo1 = uint32_t(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

// Marsaglia & Tsang 128-strip ziggurat tables for the standard normal.
struct ZigguratTables {
    uint32_t kn[128];
    double wn[128];
    double fn[128];

    ZigguratTables() {
        const double m1 = 2147483648.0;  // 2^31
        double dn = 3.442619855899;
        const double vn = 9.91256303526217e-3;
        double tn = dn;
        double q = vn / std::exp(-0.5 * dn * dn);
        kn[0] = uint32_t((dn / q) * m1);
        kn[1] = 0;
        wn[0] = q / m1;
        wn[127] = dn / m1;
        fn[0] = 1.0;
        fn[127] = std::exp(-0.5 * dn * dn);
        for (int i = 126; i >= 1; --i) {
            dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
            kn[i + 1] = uint32_t((dn / tn) * m1);
            tn = dn;
            fn[i] = std::exp(-0.5 * dn * dn);
            wn[i] = dn / m1;
        }
    }
};

const ZigguratTables& ziggurat() {
    static const ZigguratTables tables;
    return tables;
}

}  // namespace

Philox4x32::Block Philox4x32::round_block(Key key, Block counter) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        philox_round(counter, key);
    }
    return counter;
}

Stream::Stream(uint64_t seed, uint64_t stream_id)
    : key_{uint32_t(seed), uint32_t(seed >> 32)}, stream_id_(stream_id) {}

void Stream::refill() {
    Philox4x32::Block counter = {uint32_t(block_index_), uint32_t(block_index_ >> 32),
                                 uint32_t(stream_id_), uint32_t(stream_id_ >> 32)};
    buffer_ = Philox4x32::round_block(key_, counter);
    ++block_index_;
    buffer_pos_ = 0;
}

uint32_t Stream::next_u32() {
    if (buffer_pos_ >= 4) refill();
    return buffer_[buffer_pos_++];
}

uint64_t Stream::next_u64() {
    const uint64_t lo = next_u32();
    const uint64_t hi = next_u32();
    return (hi << 32) | lo;
}

double Stream::next_uniform() {
    return (double(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);  // 2^-53
}

double Stream::next_normal() {
    const ZigguratTables& t = ziggurat();
    for (;;) {
        const int32_t hz = int32_t(next_u32());
        const uint32_t iz = uint32_t(hz) & 127u;
        if (uint32_t(hz < 0 ? -int64_t(hz) : int64_t(hz)) < t.kn[iz]) {
            return hz * t.wn[iz];
        }
        // Rare path: base strip tail or wedge rejection.
        const double r = 3.442619855899;
        double x = hz * t.wn[iz];
        if (iz == 0) {
            double y;
            do {
                x = -std::log(next_uniform()) / r;
                y = -std::log(next_uniform());
            } while (y + y < x * x);
            return hz > 0 ? r + x : -(r + x);
        }
        if (t.fn[iz] + next_uniform() * (t.fn[iz - 1] - t.fn[iz]) < std::exp(-0.5 * x * x)) {
            return x;
        }
    }
}

void Stream::fill_normals(std::span<float> out, double scale) {
    for (float& v : out) v = float(scale * next_normal());
}

void Stream::fill_normals(std::span<double> out, double scale) {
    for (double& v : out) v = scale * next_normal();
}

uint64_t substream(uint64_t major, uint32_t minor) {
    return major * 0x10000u + minor;
}

}  // namespace convgp::rng
