#pragma once

#include <cstddef>
#include <vector>

#include "convgp/errors.hpp"

namespace convgp {

/// Dense multi-channel image, channel-major: pixels[c*height*width + y*width + x].
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int c, int h, int w) : channels(c), height(h), width(w), pixels(size_t(c) * h * w, 0.0) {}

    double& at(int c, int y, int x) { return pixels[(size_t(c) * height + y) * width + x]; }
    double at(int c, int y, int x) const { return pixels[(size_t(c) * height + y) * width + x]; }

    bool same_shape(const Image& other) const {
        return channels == other.channels && height == other.height && width == other.width;
    }
};

/// Dense row-major matrix of kernel values between two datasets.
struct GramMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> values;

    GramMatrix() = default;
    GramMatrix(size_t r, size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double& at(size_t i, size_t j) { return values[i * cols + j]; }
    double at(size_t i, size_t j) const { return values[i * cols + j]; }
};

}  // namespace convgp
