#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace convgp::rng {

/// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3"). A block is a pure function of
/// (key, counter), so independent streams are just disjoint counter ranges;
/// no state is shared between workers and replay is exact on any platform.
struct Philox4x32 {
    using Block = std::array<uint32_t, 4>;
    using Key = std::array<uint32_t, 2>;

    static Block round_block(Key key, Block counter);
};

/// A buffered stream of randomness over one (seed, stream_id) pair.
/// Streams with distinct ids never overlap.
class Stream {
public:
    Stream(uint64_t seed, uint64_t stream_id);

    uint32_t next_u32();
    uint64_t next_u64();

    /// Uniform in the open interval (0, 1) with 53-bit resolution.
    double next_uniform();

    /// Standard normal via a 128-strip ziggurat.
    double next_normal();

    void fill_normals(std::span<float> out, double scale);
    void fill_normals(std::span<double> out, double scale);

private:
    Philox4x32::Key key_;
    uint64_t stream_id_;
    uint64_t block_index_ = 0;
    Philox4x32::Block buffer_{};
    int buffer_pos_ = 4;

    void refill();
};

/// Splits a 64-bit user seed and context tags into a derived stream id.
/// Used to give every (draw, layer) pair of the Monte-Carlo sampler its own
/// stream without bookkeeping.
uint64_t substream(uint64_t major, uint32_t minor);

}  // namespace convgp::rng
