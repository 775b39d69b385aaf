#include "convgp/arch.hpp"

#include <algorithm>

namespace convgp {

std::string to_string(Padding p) { return p == Padding::kSame ? "same" : "valid"; }
std::string to_string(Nonlinearity n) { return n == Nonlinearity::kRelu ? "relu" : "erf"; }
std::string to_string(FanInMode m) {
    return m == FanInMode::kChannelsOnly ? "channels_only" : "channels_and_filter";
}
std::string to_string(ReluPrefactor f) {
    return f == ReluPrefactor::kStandard ? "standard" : "paper-literal";
}

ConvGeometry make_conv_geometry(int in_h, int in_w, int filter_h, int filter_w, int stride,
                                Padding padding) {
    if (in_h < 1 || in_w < 1) throw ConfigError("conv input has empty spatial extent");
    if (filter_h < 1 || filter_w < 1) throw ConfigError("filter dims must be positive");
    if (stride < 1) throw ConfigError("stride must be positive");

    ConvGeometry g;
    g.in_h = in_h;
    g.in_w = in_w;
    g.filter_h = filter_h;
    g.filter_w = filter_w;
    g.stride = stride;

    if (padding == Padding::kValid) {
        if (filter_h > in_h || filter_w > in_w) {
            throw ConfigError("valid padding: filter exceeds input extent");
        }
        g.out_h = (in_h - filter_h) / stride + 1;
        g.out_w = (in_w - filter_w) / stride + 1;
        g.pad_top = 0;
        g.pad_left = 0;
    } else {
        g.out_h = (in_h + stride - 1) / stride;
        g.out_w = (in_w + stride - 1) / stride;
        const int pad_h = std::max((g.out_h - 1) * stride + filter_h - in_h, 0);
        const int pad_w = std::max((g.out_w - 1) * stride + filter_w - in_w, 0);
        g.pad_top = pad_h / 2;
        g.pad_left = pad_w / 2;
    }
    if (g.out_h < 1 || g.out_w < 1) throw ConfigError("conv output has empty spatial extent");
    return g;
}

std::vector<LayerShape> propagate_shapes(const ArchitectureSpec& arch, int in_h, int in_w) {
    std::vector<LayerShape> shapes;
    shapes.reserve(arch.conv_layers.size());
    int h = in_h, w = in_w;
    for (const LayerSpec& layer : arch.conv_layers) {
        const ConvGeometry g =
            make_conv_geometry(h, w, layer.filter_h, layer.filter_w, layer.stride, layer.padding);
        h = g.out_h;
        w = g.out_w;
        shapes.push_back({h, w});
    }
    return shapes;
}

void validate(const ArchitectureSpec& arch, const Hyperparameters& hyper, int in_h, int in_w) {
    if (hyper.sigma_b_sq < 0.0) throw ConfigError("sigma_b_sq must be >= 0");
    if (!(hyper.sigma_w_sq > 0.0)) throw ConfigError("sigma_w_sq must be > 0");

    const std::vector<LayerShape> shapes = propagate_shapes(arch, in_h, in_w);
    for (size_t i = 0; i < arch.conv_layers.size(); ++i) {
        const LayerSpec& layer = arch.conv_layers[i];
        if (layer.kind == LayerKind::kConvWithSkip) {
            if (layer.skip_span < 1) {
                throw ConfigError("skip_span must be a positive integer");
            }
            if (size_t(layer.skip_span) >= i) {
                throw ConfigError("skip_span must be smaller than the layer index");
            }
            const size_t target = i - 1 - size_t(layer.skip_span);
            if (!(shapes[target] == shapes[i])) {
                throw ConfigError("skip target spatial dims do not match layer output");
            }
        } else if (layer.skip_span != 0) {
            throw ConfigError("skip_span set on a plain conv layer");
        }
    }
}

ArchitectureSpec make_uniform_arch(int depth, int filter, int stride, Padding padding,
                                   Nonlinearity nonlinearity, int skip_frequency, int in_h,
                                   int in_w) {
    if (depth < 0) throw ConfigError("depth must be >= 0");
    ArchitectureSpec arch;
    arch.nonlinearity = nonlinearity;
    arch.conv_layers.assign(size_t(depth), LayerSpec{LayerKind::kConv, filter, filter, stride,
                                                     padding, 0});
    if (skip_frequency > 0) {
        const int span = std::max(1, skip_frequency - 1);
        const std::vector<LayerShape> shapes = propagate_shapes(arch, in_h, in_w);
        for (int i = span + 1; i < depth; i += skip_frequency) {
            const int target = i - 1 - span;
            if (shapes[size_t(target)] == shapes[size_t(i)]) {
                arch.conv_layers[size_t(i)].kind = LayerKind::kConvWithSkip;
                arch.conv_layers[size_t(i)].skip_span = span;
            }
        }
    }
    return arch;
}

}  // namespace convgp
