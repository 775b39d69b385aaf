#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "convgp/arch.hpp"
#include "convgp/types.hpp"

namespace convgp {

/// A finite-channel network drawn from the prior: per-layer filter tensors
/// with entries N(0, sigma_w^2 / fan_in) and biases N(0, sigma_b^2).
/// The last layer is the dense readout realized as a full-extent filter.
struct SampledNetwork {
    struct Layer {
        ConvGeometry geometry;
        int in_channels = 0;
        int out_channels = 0;
        std::vector<double> weights;  // [out][in][fy][fx]
        std::vector<double> biases;   // [out]
        int skip_target = -1;  // level index whose activations are added, -1 if none
    };

    ArchitectureSpec arch;
    int input_channels = 0;
    int in_h = 0, in_w = 0;
    std::vector<Layer> layers;  // conv layers, then the readout
};

/// Deterministic in (seed, stream_salt); hidden layers all have `channels`
/// feature maps and the readout has `readout_channels`.
SampledNetwork sample_network(const ArchitectureSpec& arch, const Hyperparameters& hyper,
                              int channels, int input_channels, int in_h, int in_w,
                              uint64_t seed, uint64_t stream_salt = 0,
                              int readout_channels = 1);

/// Direct forward pass (reference implementation): raw pixels into the first
/// layer, the nonlinearity before every later layer, skip activations added
/// elementwise. Returns the readout activations.
std::vector<double> forward(const SampledNetwork& net, const Image& x);

/// Activations after every layer, for tests: result[level][channel*positions + pos].
std::vector<std::vector<double>> forward_activations(const SampledNetwork& net, const Image& x);

struct MomentEntry {
    std::string label;
    double empirical = 0.0;
    double kernel = 0.0;  // limiting prediction
    double std_error = 0.0;
    double z = 0.0;
    size_t samples = 0;
};

struct MomentReport {
    std::vector<MomentEntry> covariances;  // var(i) and cov(i,j) for all i <= j
    std::vector<MomentEntry> means;        // one per input
    std::vector<MomentEntry> channel_correlations;  // readout channel pairs, image 0
    size_t samples = 0;
    int channels = 0;
};

enum class McSampler {
    /// Draws each network's activations layer by layer from their exact
    /// conditional Gaussian law (conv outputs given the previous layer are
    /// Gaussian with the patch-Gram covariance). Identical in distribution
    /// to materializing the filters, at a fraction of the flops; never
    /// touches the closed-form expectations it is used to check.
    kActivationLaw,
    /// Materializes every filter tensor and runs the direct forward pass.
    kExplicitWeights,
};

struct MomentOptions {
    int channels = 512;
    size_t num_samples = 100000;
    uint64_t seed = 0;
    int parallelism = 1;
    int readout_channels = 1;
    McSampler sampler = McSampler::kActivationLaw;
};

/// Draws num_samples networks, evaluates every input, and compares the
/// empirical readout moments (readout channel 0) against the kernel
/// prediction. Standard errors come from the sample variance of the
/// per-draw product statistic; accumulation is chunked so results are
/// bitwise independent of the parallelism level.
MomentReport empirical_moments(const ArchitectureSpec& arch, const Hyperparameters& hyper,
                               const std::vector<Image>& inputs, const MomentOptions& options);

/// Tab-separated table (entry, empirical, kernel, SE, z, samples).
void write_moment_report(std::ostream& out, const MomentReport& report);

}  // namespace convgp
