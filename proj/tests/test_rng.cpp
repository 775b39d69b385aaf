#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "convgp/rng.hpp"

using convgp::rng::Philox4x32;
using convgp::rng::Stream;

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Reference vectors from the Random123 distribution (kat_vectors).
    {
        const auto out = Philox4x32::round_block({0u, 0u}, {0u, 0u, 0u, 0u});
        CHECK(out[0] == 0x6627e8d5u);
        CHECK(out[1] == 0xe169c58du);
        CHECK(out[2] == 0xbc57ac4cu);
        CHECK(out[3] == 0x9b00dbd8u);
    }
    {
        const auto out = Philox4x32::round_block({0xffffffffu, 0xffffffffu},
                                                 {0xffffffffu, 0xffffffffu, 0xffffffffu,
                                                  0xffffffffu});
        CHECK(out[0] == 0x408f276du);
        CHECK(out[1] == 0x41c83b0eu);
        CHECK(out[2] == 0xa20bc7c6u);
        CHECK(out[3] == 0x6d5451fdu);
    }
    {
        const auto out = Philox4x32::round_block({0xa4093822u, 0x299f31d0u},
                                                 {0x243f6a88u, 0x85a308d3u, 0x13198a2eu,
                                                  0x03707344u});
        CHECK(out[0] == 0xd16cfe09u);
        CHECK(out[1] == 0x94fdccebu);
        CHECK(out[2] == 0x5001e420u);
        CHECK(out[3] == 0x24126ea1u);
    }
}

TEST_CASE("streams are deterministic and disjoint") {
    Stream a1(42, 7), a2(42, 7), b(42, 8), c(43, 7);
    bool stream_differs = false, seed_differs = false;
    for (int i = 0; i < 64; ++i) {
        const uint32_t v = a1.next_u32();
        CHECK(v == a2.next_u32());
        stream_differs |= v != b.next_u32();
        seed_differs |= v != c.next_u32();
    }
    CHECK(stream_differs);
    CHECK(seed_differs);
}

TEST_CASE("uniforms live in the open unit interval") {
    Stream s(1, 0);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = s.next_uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("ziggurat normals match the standard moments") {
    Stream s(2024, 0);
    const size_t n = 20000000;
    double sum = 0.0, sum2 = 0.0, sum3 = 0.0, sum4 = 0.0;
    size_t tail = 0;
    for (size_t i = 0; i < n; ++i) {
        const double x = s.next_normal();
        sum += x;
        sum2 += x * x;
        sum3 += x * x * x;
        sum4 += x * x * x * x;
        tail += std::abs(x) > 3.442619855899;
    }
    const double mean = sum / double(n);
    const double var = sum2 / double(n) - mean * mean;
    const double skew = sum3 / double(n);
    const double kurt = sum4 / double(n);

    // 5-sigma acceptance bands around the exact moments.
    CHECK(std::abs(mean) < 5.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / double(n)));
    CHECK(std::abs(skew) < 5.0 * std::sqrt(15.0 / double(n)));
    CHECK(std::abs(kurt - 3.0) < 5.0 * std::sqrt(96.0 / double(n)));

    // Tail mass beyond the base strip: 2 * (1 - Phi(3.4426...)) = 5.75e-4.
    const double p = 5.7517e-4;
    const double tail_se = std::sqrt(p * (1 - p) / double(n));
    CHECK(std::abs(double(tail) / double(n) - p) < 5.0 * tail_se);
}

TEST_CASE("fill_normals applies the scale") {
    Stream s(5, 1);
    std::vector<double> buf(200000);
    s.fill_normals(std::span<double>(buf), 3.0);
    double sum2 = 0.0;
    for (double v : buf) sum2 += v * v;
    const double var = sum2 / double(buf.size());
    CHECK(var == doctest::Approx(9.0).epsilon(0.05));
}
