#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "convgp/data.hpp"
#include "convgp/gram_io.hpp"

using namespace convgp;

#ifndef CONVGP_FIXTURE_DIR
#error "CONVGP_FIXTURE_DIR must be defined by the build"
#endif

namespace {
const std::string kFixtures = CONVGP_FIXTURE_DIR;
}

TEST_CASE("idx round-trip of the golden fixture") {
    const LabelledDataset raw = load_idx(kFixtures + "/golden-images-idx3-ubyte",
                                         kFixtures + "/golden-labels-idx1-ubyte",
                                         /*normalize=*/false);
    REQUIRE(raw.size() == 3);
    CHECK(raw.images[0].channels == 1);
    CHECK(raw.images[0].height == 4);
    CHECK(raw.images[0].width == 5);
    CHECK(raw.labels == std::vector<int>{3, 0, 9});

    // Byte-exact values before normalization: pattern (i*31 + p*7) % 256
    // with image 0 pixels 0 and 1 overridden to 0 and 255.
    CHECK(raw.images[0].pixels[0] == 0.0);
    CHECK(raw.images[0].pixels[1] == 255.0);
    for (size_t p = 2; p < 20; ++p) {
        CHECK(raw.images[0].pixels[p] == double((p * 7) % 256));
    }
    for (size_t p = 0; p < 20; ++p) {
        CHECK(raw.images[1].pixels[p] == double((31 + p * 7) % 256));
        CHECK(raw.images[2].pixels[p] == double((62 + p * 7) % 256));
    }
}

TEST_CASE("idx normalization maps 255 to 1 and 0 to 0") {
    const LabelledDataset data = load_idx(kFixtures + "/golden-images-idx3-ubyte",
                                          kFixtures + "/golden-labels-idx1-ubyte");
    CHECK(data.images[0].pixels[0] == 0.0);
    CHECK(data.images[0].pixels[1] == 1.0);
    CHECK(data.images[0].pixels[2] == doctest::Approx(14.0 / 255.0).epsilon(1e-15));
    for (const Image& img : data.images) {
        for (double p : img.pixels) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("idx rejects corrupted and truncated files") {
    CHECK_THROWS_AS(load_idx(kFixtures + "/bad-magic-images-idx3-ubyte",
                             kFixtures + "/golden-labels-idx1-ubyte"),
                    DataError);
    CHECK_THROWS_AS(load_idx(kFixtures + "/golden-images-idx3-ubyte",
                             kFixtures + "/bad-magic-labels-idx1-ubyte"),
                    DataError);
    CHECK_THROWS_AS(load_idx(kFixtures + "/truncated-images-idx3-ubyte",
                             kFixtures + "/golden-labels-idx1-ubyte"),
                    DataError);
    CHECK_THROWS_AS(load_idx(kFixtures + "/missing-file",
                             kFixtures + "/golden-labels-idx1-ubyte"),
                    DataError);
    // Image/label count mismatch: cli fixture has 12, golden labels 3.
    CHECK_THROWS_AS(load_idx(kFixtures + "/cli-images-idx3-ubyte",
                             kFixtures + "/golden-labels-idx1-ubyte"),
                    DataError);
}

TEST_CASE("split: sequential default, disjoint and exhaustive") {
    const LabelledDataset data = load_idx(kFixtures + "/cli-images-idx3-ubyte",
                                          kFixtures + "/cli-labels-idx1-ubyte");
    REQUIRE(data.size() == 12);
    const auto [train, val] = split(data, 8, 4);
    REQUIRE(train.size() == 8);
    REQUIRE(val.size() == 4);
    for (size_t i = 0; i < 8; ++i) CHECK(train.images[i].pixels == data.images[i].pixels);
    for (size_t i = 0; i < 4; ++i) CHECK(val.images[i].pixels == data.images[8 + i].pixels);

    const auto [all, none] = split(data, 5, 0);
    CHECK(all.size() == 5);
    CHECK(none.size() == 0);

    CHECK_THROWS_AS(split(data, 9, 4), DataError);
}

TEST_CASE("split: seeded shuffle is deterministic and disjoint") {
    const LabelledDataset data = load_idx(kFixtures + "/cli-images-idx3-ubyte",
                                          kFixtures + "/cli-labels-idx1-ubyte");
    const auto [t1, v1] = split(data, 7, 5, 99);
    const auto [t2, v2] = split(data, 7, 5, 99);
    CHECK(t1.labels == t2.labels);
    CHECK(v1.labels == v2.labels);

    std::set<std::vector<double>> seen;
    for (const Image& img : t1.images) seen.insert(img.pixels);
    for (const Image& img : v1.images) {
        CHECK(seen.find(img.pixels) == seen.end());
        seen.insert(img.pixels);
    }
    CHECK(seen.size() == 12);

    const auto [t3, v3] = split(data, 7, 5, 100);
    bool differs = false;
    for (size_t i = 0; i < t1.size(); ++i) differs |= t1.images[i].pixels != t3.images[i].pixels;
    CHECK(differs);
}

TEST_CASE("gram file round-trip and exact header bytes") {
    GramMatrix g(2, 3);
    for (size_t i = 0; i < g.values.size(); ++i) g.values[i] = double(i) * 1.25 - 2.0;
    const std::string path = "test_gram_roundtrip.cgpk";
    write_gram(path, g);

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() == 16 + 6 * 8);
    CHECK(bytes.substr(0, 4) == "CGPK");
    const auto u32 = [&](size_t off) {
        return uint32_t(uint8_t(bytes[off])) | (uint32_t(uint8_t(bytes[off + 1])) << 8) |
               (uint32_t(uint8_t(bytes[off + 2])) << 16) |
               (uint32_t(uint8_t(bytes[off + 3])) << 24);
    };
    CHECK(u32(4) == kGramFormatVersion);
    CHECK(u32(8) == 2);
    CHECK(u32(12) == 3);

    const GramMatrix back = read_gram(path);
    CHECK(back.rows == 2);
    CHECK(back.cols == 3);
    CHECK(back.values == g.values);
}

TEST_CASE("gram file rejects corruption") {
    const std::string path = "test_gram_bad.cgpk";
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE";
        std::string rest(12 + 8, '\0');
        out.write(rest.data(), std::streamsize(rest.size()));
    }
    CHECK_THROWS_AS(read_gram(path), DataError);

    GramMatrix g(1, 1);
    g.values[0] = 4.0;
    write_gram(path, g);
    {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out << "extra";
    }
    CHECK_THROWS_AS(read_gram(path), DataError);
    CHECK_THROWS_AS(read_gram("no_such_file.cgpk"), DataError);
}
