#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "convgp/gp.hpp"

using namespace convgp;

namespace {

GramMatrix identity(size_t n, double scale = 1.0) {
    GramMatrix g(n, n);
    for (size_t i = 0; i < n; ++i) g.at(i, i) = scale;
    return g;
}

GramMatrix random_spd(std::mt19937_64& gen, size_t n) {
    std::normal_distribution<double> normal;
    std::vector<double> a(n * n);
    for (double& v : a) v = normal(gen);
    GramMatrix g(n, n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            double sum = i == j ? 0.5 : 0.0;  // diagonal boost keeps it PD
            for (size_t k = 0; k < n; ++k) sum += a[i * n + k] * a[j * n + k];
            g.at(i, j) = sum;
        }
    }
    return g;
}

}  // namespace

TEST_CASE("encode targets: one-hot in plus-minus one") {
    const std::vector<int> labels = {3};
    const TargetMatrix y = encode_targets(labels, 10);
    REQUIRE(y.rows == 1);
    REQUIRE(y.classes == 10);
    for (size_t c = 0; c < 10; ++c) CHECK(y.at(0, c) == (c == 3 ? 1.0 : -1.0));

    const std::vector<int> two = {0, 1};
    const TargetMatrix y2 = encode_targets(two, 2);
    CHECK(y2.at(0, 0) == 1.0);
    CHECK(y2.at(0, 1) == -1.0);
    CHECK(y2.at(1, 0) == -1.0);
    CHECK(y2.at(1, 1) == 1.0);

    const std::vector<int> bad = {2};
    CHECK_THROWS_AS(encode_targets(bad, 2), DataError);
}

TEST_CASE("solve: identity gram returns the targets") {
    const std::vector<int> labels = {0, 1, 2, 3};
    const TargetMatrix y = encode_targets(labels, 4);
    const auto result = solve(identity(4), y, 0.0);
    REQUIRE(result.has_value());
    CHECK(result->jitter == 0.0);
    for (size_t i = 0; i < y.values.size(); ++i) {
        CHECK(result->coefficients[i] == doctest::Approx(y.values[i]).epsilon(1e-12));
    }
}

TEST_CASE("solve: scaled identity halves the coefficients") {
    TargetMatrix y;
    y.rows = 2;
    y.classes = 1;
    y.values = {1.0, -1.0};
    const auto result = solve(identity(2, 2.0), y, 0.0);
    REQUIRE(result.has_value());
    CHECK(result->coefficients[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(result->coefficients[1] == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("solve: rank-deficient gram fails at zero jitter, succeeds with jitter") {
    GramMatrix ones(3, 3);
    for (double& v : ones.values) v = 1.0;
    TargetMatrix y;
    y.rows = 3;
    y.classes = 1;
    y.values = {1.0, -1.0, 1.0};

    CHECK_FALSE(solve(ones, y, 0.0).has_value());

    const auto result = solve(ones, y, 1e-6);
    REQUIRE(result.has_value());
    CHECK(result->residual_inf <= 1e-6 * 1.0);

    const auto ladder = solve_with_jitter_ladder(ones, y);
    CHECK(ladder.jitter > 0.0);
    CHECK(ladder.jitter <= 1e-2 * 1.0 * (1.0 + 1e-9));
    CHECK(ladder.residual_inf <= 1e-6);
}

TEST_CASE("solve: residual contract on a generic SPD system") {
    std::mt19937_64 gen(5);
    const GramMatrix k = random_spd(gen, 24);
    std::vector<int> labels(24);
    for (size_t i = 0; i < labels.size(); ++i) labels[i] = int(i % 10);
    const TargetMatrix y = encode_targets(labels, 10);
    const SolveResult result = solve_with_jitter_ladder(k, y);
    CHECK(result.residual_inf <= 1e-6);
}

TEST_CASE("solve: shape errors") {
    TargetMatrix y;
    y.rows = 3;
    y.classes = 2;
    y.values.assign(6, -1.0);
    GramMatrix rect(3, 4);
    CHECK_THROWS_AS(solve(rect, y, 0.0), NumericError);

    GramMatrix asym = identity(3);
    asym.at(0, 1) = 1.0;
    CHECK_THROWS_AS(solve(asym, y, 0.0), NumericError);
}

TEST_CASE("predict: identity gram recovers the encoded label") {
    const std::vector<int> labels = {7};
    const TargetMatrix y = encode_targets(labels, 10);
    const auto alpha = solve(identity(1), y, 0.0);
    REQUIRE(alpha.has_value());
    const std::vector<int> out = predict(identity(1), *alpha);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == 7);
}

TEST_CASE("predict: ties break toward the smallest class") {
    SolveResult alpha;
    alpha.rows = 3;
    alpha.classes = 3;
    // Scores = K* alpha with K* = I: rows of alpha are the scores directly.
    alpha.coefficients = {0.2, 0.2, -1.0, -1.0, 0.4, 0.4, 0.5, 0.5, 0.5};
    const std::vector<int> out = predict(identity(3), alpha);
    CHECK(out[0] == 0);
    CHECK(out[1] == 1);
    CHECK(out[2] == 0);
}

TEST_CASE("predict: dimension mismatch") {
    SolveResult alpha;
    alpha.rows = 4;
    alpha.classes = 2;
    alpha.coefficients.assign(8, 0.0);
    GramMatrix k(2, 3);
    CHECK_THROWS_AS(predict(k, alpha), NumericError);
}

TEST_CASE("error rate") {
    const std::vector<int> a = {1, 2, 3, 4};
    CHECK(error_rate(a, a) == 0.0);
    const std::vector<int> b = {2, 3, 4, 5};
    CHECK(error_rate(a, b) == 1.0);
    const std::vector<int> c = {1, 2, 3, 5};
    CHECK(error_rate(a, c) == 0.25);
    const std::vector<int> shorter = {1, 2};
    CHECK_THROWS_AS(error_rate(a, shorter), DataError);
}

TEST_CASE("predictions are invariant under common positive scaling") {
    std::mt19937_64 gen(12);
    const GramMatrix k = random_spd(gen, 16);
    GramMatrix k_scaled = k;
    for (double& v : k_scaled.values) v *= 37.5;

    GramMatrix k_star(5, 16);
    std::normal_distribution<double> normal;
    for (double& v : k_star.values) v = normal(gen);
    GramMatrix k_star_scaled = k_star;
    for (double& v : k_star_scaled.values) v *= 37.5;

    std::vector<int> labels(16);
    for (size_t i = 0; i < labels.size(); ++i) labels[i] = int(i % 4);
    const TargetMatrix y = encode_targets(labels, 4);

    const double jitter = 1e-8;
    const auto a = solve(k, y, jitter);
    const auto b = solve(k_scaled, y, jitter * 37.5);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(predict(k_star, *a) == predict(k_star_scaled, *b));
}

TEST_CASE("predictions are equivariant under training permutations") {
    std::mt19937_64 gen(13);
    const size_t n = 12;
    const GramMatrix k = random_spd(gen, n);
    GramMatrix k_star(4, n);
    std::normal_distribution<double> normal;
    for (double& v : k_star.values) v = normal(gen);
    std::vector<int> labels(n);
    for (size_t i = 0; i < n; ++i) labels[i] = int((i * 7) % 10);

    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = (i * 5 + 3) % n;

    GramMatrix kp(n, n);
    GramMatrix k_star_p(4, n);
    std::vector<int> labels_p(n);
    for (size_t i = 0; i < n; ++i) {
        labels_p[i] = labels[perm[i]];
        for (size_t j = 0; j < n; ++j) kp.at(i, j) = k.at(perm[i], perm[j]);
        for (size_t r = 0; r < 4; ++r) k_star_p.at(r, i) = k_star.at(r, perm[i]);
    }

    const auto a = solve_with_jitter_ladder(k, encode_targets(labels, 10));
    const auto b = solve_with_jitter_ladder(kp, encode_targets(labels_p, 10));
    CHECK(predict(k_star, a) == predict(k_star_p, b));
}
