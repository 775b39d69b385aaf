#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "convgp/finite_width.hpp"
#include "convgp/kernel.hpp"

using namespace convgp;

namespace {

Image random_image(std::mt19937_64& gen, int c, int h, int w) {
    std::normal_distribution<double> normal;
    Image img(c, h, w);
    for (double& p : img.pixels) p = normal(gen);
    return img;
}

ArchitectureSpec conv_stack(int depth, Nonlinearity nonlin = Nonlinearity::kRelu) {
    ArchitectureSpec arch;
    arch.nonlinearity = nonlin;
    arch.conv_layers.assign(size_t(depth),
                            LayerSpec{LayerKind::kConv, 3, 3, 1, Padding::kSame, 0});
    return arch;
}

double combined_gap(const MomentEntry& a, const MomentEntry& b) {
    return std::abs(a.empirical - b.empirical) /
           std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
}

}  // namespace

TEST_CASE("sample_network: deterministic per seed") {
    const ArchitectureSpec arch = conv_stack(2);
    Hyperparameters hyper;
    const SampledNetwork a = sample_network(arch, hyper, 8, 1, 5, 5, 77);
    const SampledNetwork b = sample_network(arch, hyper, 8, 1, 5, 5, 77);
    const SampledNetwork c = sample_network(arch, hyper, 8, 1, 5, 5, 78);
    REQUIRE(a.layers.size() == 3);  // two convs + readout
    bool differs = false;
    for (size_t l = 0; l < a.layers.size(); ++l) {
        CHECK(a.layers[l].weights == b.layers[l].weights);
        CHECK(a.layers[l].biases == b.layers[l].biases);
        differs |= a.layers[l].weights != c.layers[l].weights;
    }
    CHECK(differs);
}

TEST_CASE("sample_network: zero bias variance gives exactly zero biases") {
    Hyperparameters hyper;
    hyper.sigma_b_sq = 0.0;
    const SampledNetwork net = sample_network(conv_stack(1), hyper, 4, 1, 3, 3, 5);
    for (const auto& layer : net.layers) {
        for (double b : layer.biases) CHECK(b == 0.0);
    }
}

TEST_CASE("sample_network: weight variance matches sigma_w^2 / fan_in") {
    // Readout over a 1x1 map with 10^4 input channels: 10^4 weights per
    // output channel, each N(0, 1e-4) under channels-only normalization.
    ArchitectureSpec arch;
    arch.conv_layers = {LayerSpec{LayerKind::kConv, 1, 1, 1, Padding::kValid, 0}};
    Hyperparameters hyper;
    hyper.sigma_w_sq = 1.0;
    const SampledNetwork net =
        sample_network(arch, hyper, 10000, 1, 1, 1, 31, 0, /*readout_channels=*/4);
    const auto& readout = net.layers.back();
    REQUIRE(readout.weights.size() == 40000);
    double sum = 0.0, sum2 = 0.0;
    for (double w : readout.weights) {
        sum += w;
        sum2 += w * w;
    }
    const double n = double(readout.weights.size());
    const double var = sum2 / n - (sum / n) * (sum / n);
    CHECK(var > 0.9e-4);
    CHECK(var < 1.1e-4);
}

TEST_CASE("forward: zero network maps everything to zero") {
    Hyperparameters hyper;
    SampledNetwork net = sample_network(conv_stack(2), hyper, 4, 1, 4, 4, 9);
    for (auto& layer : net.layers) {
        std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
        std::fill(layer.biases.begin(), layer.biases.end(), 0.0);
    }
    std::mt19937_64 gen(1);
    const std::vector<double> out = forward(net, random_image(gen, 1, 4, 4));
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("forward: single 1x1 layer is b + w*x") {
    ArchitectureSpec arch;  // readout only, acting on a 1x1 image
    Hyperparameters hyper;
    SampledNetwork net = sample_network(arch, hyper, 4, 1, 1, 1, 13);
    REQUIRE(net.layers.size() == 1);
    net.layers[0].weights = {1.75};
    net.layers[0].biases = {-0.5};
    Image x(1, 1, 1);
    x.pixels[0] = 3.0;
    const std::vector<double> out = forward(net, x);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == -0.5 + 1.75 * 3.0);
}

TEST_CASE("forward: same-padded conv keeps 28x28 feature maps") {
    Hyperparameters hyper;
    const SampledNetwork net = sample_network(conv_stack(1), hyper, 3, 1, 28, 28, 17);
    std::mt19937_64 gen(2);
    const auto acts = forward_activations(net, random_image(gen, 1, 28, 28));
    REQUIRE(acts.size() == 2);
    CHECK(acts[0].size() == size_t(3) * 28 * 28);
    CHECK(acts[1].size() == 1);  // dense readout collapses to a scalar
}

TEST_CASE("forward: skip connections add earlier activations") {
    // Zero out the branch of the skip layer; its output must equal the
    // retained activations of the target level exactly.
    ArchitectureSpec arch = conv_stack(3);
    arch.conv_layers[2] = {LayerKind::kConvWithSkip, 3, 3, 1, Padding::kSame, 1};
    Hyperparameters hyper;
    SampledNetwork net = sample_network(arch, hyper, 4, 1, 5, 5, 19);
    auto& skip_layer = net.layers[2];
    std::fill(skip_layer.weights.begin(), skip_layer.weights.end(), 0.0);
    std::fill(skip_layer.biases.begin(), skip_layer.biases.end(), 0.0);
    std::mt19937_64 gen(3);
    const auto acts = forward_activations(net, random_image(gen, 1, 5, 5));
    CHECK(acts[2] == acts[0]);
}

TEST_CASE("empirical_moments: input validation") {
    const ArchitectureSpec arch = conv_stack(1);
    Hyperparameters hyper;
    std::mt19937_64 gen(4);
    const std::vector<Image> inputs = {random_image(gen, 1, 4, 4)};
    MomentOptions opts;
    opts.num_samples = 1;
    CHECK_THROWS_AS(empirical_moments(arch, hyper, inputs, opts), ConfigError);
    opts.num_samples = 10;
    opts.channels = 0;
    CHECK_THROWS_AS(empirical_moments(arch, hyper, inputs, opts), ConfigError);
    CHECK_THROWS_AS(empirical_moments(arch, hyper, {}, MomentOptions{}), DataError);
}

TEST_CASE("empirical_moments: deterministic and parallelism-independent") {
    const ArchitectureSpec arch = conv_stack(2);
    Hyperparameters hyper;
    hyper.sigma_b_sq = 0.3;
    std::mt19937_64 gen(5);
    const std::vector<Image> inputs = {random_image(gen, 1, 4, 4), random_image(gen, 1, 4, 4)};
    MomentOptions opts;
    opts.channels = 16;
    opts.num_samples = 4000;
    opts.seed = 11;
    opts.parallelism = 1;
    const MomentReport r1 = empirical_moments(arch, hyper, inputs, opts);
    opts.parallelism = 4;
    const MomentReport r4 = empirical_moments(arch, hyper, inputs, opts);
    REQUIRE(r1.covariances.size() == r4.covariances.size());
    for (size_t i = 0; i < r1.covariances.size(); ++i) {
        CHECK(r1.covariances[i].empirical == r4.covariances[i].empirical);
        CHECK(r1.covariances[i].std_error == r4.covariances[i].std_error);
    }
    REQUIRE(r1.covariances.size() == 3);  // var(0), cov(0,1), var(1)
}

TEST_CASE("both samplers estimate the same distribution") {
    ArchitectureSpec arch = conv_stack(2);
    arch.conv_layers[1].stride = 2;  // exercise stride plumbing in both paths
    Hyperparameters hyper;
    hyper.sigma_b_sq = 0.4;
    hyper.sigma_w_sq = 1.3;
    std::mt19937_64 gen(6);
    const std::vector<Image> inputs = {random_image(gen, 1, 4, 4), random_image(gen, 1, 4, 4)};

    MomentOptions law;
    law.channels = 32;
    law.num_samples = 12000;
    law.seed = 100;
    law.readout_channels = 2;
    MomentOptions explicit_weights = law;
    explicit_weights.seed = 200;
    explicit_weights.sampler = McSampler::kExplicitWeights;

    const MomentReport a = empirical_moments(arch, hyper, inputs, law);
    const MomentReport b = empirical_moments(arch, hyper, inputs, explicit_weights);
    REQUIRE(a.covariances.size() == b.covariances.size());
    for (size_t i = 0; i < a.covariances.size(); ++i) {
        CHECK(combined_gap(a.covariances[i], b.covariances[i]) < 4.0);
    }
    for (size_t i = 0; i < a.means.size(); ++i) {
        CHECK(combined_gap(a.means[i], b.means[i]) < 4.0);
    }
}

TEST_CASE("empirical moments agree with the kernel at healthy width") {
    ArchitectureSpec arch = conv_stack(2);
    Hyperparameters hyper;
    hyper.sigma_b_sq = 0.2;
    hyper.sigma_w_sq = 1.1;
    std::mt19937_64 gen(7);
    const std::vector<Image> inputs = {random_image(gen, 1, 5, 5), random_image(gen, 1, 5, 5)};
    MomentOptions opts;
    opts.channels = 256;
    opts.num_samples = 30000;
    opts.seed = 12;
    opts.readout_channels = 4;
    const MomentReport report = empirical_moments(arch, hyper, inputs, opts);

    // Covariances sit on the kernel prediction, outputs have zero mean,
    // distinct readout channels are uncorrelated.
    for (const MomentEntry& e : report.covariances) CHECK(std::abs(e.z) < 3.0);
    for (const MomentEntry& e : report.means) CHECK(std::abs(e.z) < 3.0);
    REQUIRE(report.channel_correlations.size() == 6);
    for (const MomentEntry& e : report.channel_correlations) CHECK(std::abs(e.z) < 3.0);
}

TEST_CASE("residual architectures agree with the kernel too") {
    ArchitectureSpec arch = conv_stack(3);
    arch.conv_layers[2] = {LayerKind::kConvWithSkip, 3, 3, 1, Padding::kSame, 1};
    Hyperparameters hyper;
    hyper.sigma_b_sq = 0.1;
    hyper.sigma_w_sq = 1.0;
    std::mt19937_64 gen(8);
    const std::vector<Image> inputs = {random_image(gen, 1, 4, 4), random_image(gen, 1, 4, 4)};
    MomentOptions opts;
    opts.channels = 256;
    opts.num_samples = 30000;
    opts.seed = 13;
    const MomentReport report = empirical_moments(arch, hyper, inputs, opts);
    for (const MomentEntry& e : report.covariances) CHECK(std::abs(e.z) < 3.0);

    // The same draws scored against the wrong prefactor must blow up: this
    // is the experiment that separates the two modes.
    Hyperparameters literal = hyper;
    literal.relu_prefactor = ReluPrefactor::kPaperLiteral;
    const KernelEvaluator wrong(arch, literal, 1, 4, 4);
    const std::pair<int, int> entry_pairs[] = {{0, 0}, {0, 1}, {1, 1}};
    REQUIRE(report.covariances.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        const MomentEntry& e = report.covariances[i];
        const double k_literal =
            wrong.kernel(inputs[size_t(entry_pairs[i].first)],
                         inputs[size_t(entry_pairs[i].second)]);
        const double z_literal = (e.empirical - k_literal) / e.std_error;
        CHECK(std::abs(z_literal) > 10.0);
    }
}

TEST_CASE("finite-width bias shrinks as channels grow") {
    const ArchitectureSpec arch = conv_stack(2);
    Hyperparameters hyper;
    hyper.sigma_b_sq = 0.15;
    std::mt19937_64 gen(9);
    const std::vector<Image> inputs = {random_image(gen, 1, 4, 4), random_image(gen, 1, 4, 4)};

    const auto median_max_abs_z = [&](int channels) {
        std::vector<double> maxima;
        for (uint64_t rep = 0; rep < 9; ++rep) {
            MomentOptions opts;
            opts.channels = channels;
            opts.num_samples = 3000;
            opts.seed = 1000 + rep;
            const MomentReport report = empirical_moments(arch, hyper, inputs, opts);
            double m = 0.0;
            for (const MomentEntry& e : report.covariances) m = std::max(m, std::abs(e.z));
            maxima.push_back(m);
        }
        std::sort(maxima.begin(), maxima.end());
        return maxima[maxima.size() / 2];
    };
    CHECK(median_max_abs_z(3) >= median_max_abs_z(100));
}
