#pragma once

#include <string>
#include <vector>

#include "convgp/errors.hpp"

namespace convgp {

enum class Padding { kSame, kValid };
enum class LayerKind { kConv, kConvWithSkip };
enum class Nonlinearity { kRelu, kErf };
enum class FanInMode { kChannelsOnly, kChannelsAndFilter };
enum class ReluPrefactor { kStandard, kPaperLiteral };

std::string to_string(Padding p);
std::string to_string(Nonlinearity n);
std::string to_string(FanInMode m);
std::string to_string(ReluPrefactor f);

/// One convolutional layer. A layer at position i (0-based) with
/// kind == kConvWithSkip adds the activations from s+1 layers below:
/// output(i) = identity(i - 1 - skip_span) + bias + conv(phi(output(i - 1))).
struct LayerSpec {
    LayerKind kind = LayerKind::kConv;
    int filter_h = 3;
    int filter_w = 3;
    int stride = 1;
    Padding padding = Padding::kSame;
    int skip_span = 0;  // > 0 iff kind == kConvWithSkip

    int filter_area() const { return filter_h * filter_w; }
};

struct Hyperparameters {
    double sigma_b_sq = 1.0;  // bias variance, >= 0
    double sigma_w_sq = 1.0;  // weight variance, > 0
    FanInMode fan_in_mode = FanInMode::kChannelsOnly;
    ReluPrefactor relu_prefactor = ReluPrefactor::kStandard;
};

/// Network architecture: an ordered list of conv layers followed by an
/// implicit dense readout (a conv whose filter covers the whole final
/// feature map, collapsing it to 1x1). conv_layers may be empty, in which
/// case the readout acts directly on the input and the kernel is linear.
struct ArchitectureSpec {
    std::vector<LayerSpec> conv_layers;
    Nonlinearity nonlinearity = Nonlinearity::kRelu;

    size_t depth() const { return conv_layers.size(); }
};

/// Resolved geometry of one convolution: output size plus the top/left
/// zero-padding offsets. Shared by the kernel recursion and the
/// finite-width forward pass so the two always agree on edge behaviour.
struct ConvGeometry {
    int in_h = 0, in_w = 0;
    int filter_h = 0, filter_w = 0;
    int stride = 1;
    int out_h = 0, out_w = 0;
    int pad_top = 0, pad_left = 0;
};

/// Same padding: out = ceil(in / stride), zero padding split with the
/// extra element at the bottom/right. Valid: out = floor((in - f)/stride)+1.
/// Throws ConfigError when the output would be empty.
ConvGeometry make_conv_geometry(int in_h, int in_w, int filter_h, int filter_w, int stride,
                                Padding padding);

struct LayerShape {
    int h = 0, w = 0;
    bool operator==(const LayerShape&) const = default;
};

/// Spatial dims after each conv layer; shapes[i] is the output of layer i.
/// Validates stride/padding arithmetic but not skip targets.
std::vector<LayerShape> propagate_shapes(const ArchitectureSpec& arch, int in_h, int in_w);

/// Full validation of the architecture and hyperparameters against an
/// input shape: output dims >= 1 everywhere, Valid filters fit, every skip
/// target exists and matches the layer output dims. Throws ConfigError.
void validate(const ArchitectureSpec& arch, const Hyperparameters& hyper, int in_h, int in_w);

/// Homogeneous architecture used by the shipped configs and random search:
/// `depth` conv layers sharing one filter size / stride / padding.
/// skip_frequency > 0 attaches skips of span max(1, k-1) at every k-th
/// eligible layer; 0 means no skips. Skips are only attached where the
/// target layer has matching spatial dims.
ArchitectureSpec make_uniform_arch(int depth, int filter, int stride, Padding padding,
                                   Nonlinearity nonlinearity, int skip_frequency, int in_h,
                                   int in_w);

}  // namespace convgp
