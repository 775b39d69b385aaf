#include "convgp/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "convgp/rng.hpp"

namespace convgp {

namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("idx: cannot open file: " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

uint32_t get_u32_be(const unsigned char* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) |
           uint32_t(p[3]);
}

}  // namespace

LabelledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                         bool normalize) {
    const std::string image_bytes = read_file(images_path);
    const std::string label_bytes = read_file(labels_path);

    if (image_bytes.size() < 16) throw DataError("idx: truncated image header: " + images_path);
    const auto* ip = reinterpret_cast<const unsigned char*>(image_bytes.data());
    if (get_u32_be(ip) != kImageMagic) {
        throw DataError("idx: bad image magic in " + images_path);
    }
    const uint32_t n = get_u32_be(ip + 4);
    const uint32_t h = get_u32_be(ip + 8);
    const uint32_t w = get_u32_be(ip + 12);
    if (image_bytes.size() != 16 + size_t(n) * h * w) {
        throw DataError("idx: truncated image data: " + images_path);
    }

    if (label_bytes.size() < 8) throw DataError("idx: truncated label header: " + labels_path);
    const auto* lp = reinterpret_cast<const unsigned char*>(label_bytes.data());
    if (get_u32_be(lp) != kLabelMagic) {
        throw DataError("idx: bad label magic in " + labels_path);
    }
    const uint32_t ln = get_u32_be(lp + 4);
    if (label_bytes.size() != 8 + size_t(ln)) {
        throw DataError("idx: truncated label data: " + labels_path);
    }
    if (n != ln) throw DataError("idx: image/label counts differ");

    LabelledDataset data;
    data.images.reserve(n);
    data.labels.reserve(n);
    const double scale = normalize ? 1.0 / 255.0 : 1.0;
    for (uint32_t i = 0; i < n; ++i) {
        Image img(1, int(h), int(w));
        const unsigned char* src = ip + 16 + size_t(i) * h * w;
        for (size_t p = 0; p < size_t(h) * w; ++p) img.pixels[p] = double(src[p]) * scale;
        data.images.push_back(std::move(img));
        data.labels.push_back(int(lp[8 + i]));
    }
    return data;
}

std::pair<LabelledDataset, LabelledDataset> split(const LabelledDataset& dataset,
                                                  size_t train_count, size_t val_count,
                                                  std::optional<uint64_t> shuffle_seed) {
    if (train_count + val_count > dataset.size()) {
        throw DataError("split: requested counts exceed dataset size");
    }
    std::vector<size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), size_t(0));
    if (shuffle_seed) {
        // Fisher-Yates driven by the project RNG so splits replay across
        // platforms.
        rng::Stream stream(*shuffle_seed, 0);
        for (size_t i = order.size(); i > 1; --i) {
            const size_t j = size_t(stream.next_u64() % i);
            std::swap(order[i - 1], order[j]);
        }
    }

    const auto gather = [&](size_t begin, size_t count) {
        LabelledDataset out;
        out.images.reserve(count);
        out.labels.reserve(count);
        for (size_t i = begin; i < begin + count; ++i) {
            out.images.push_back(dataset.images[order[i]]);
            out.labels.push_back(dataset.labels[order[i]]);
        }
        return out;
    };
    return {gather(0, train_count), gather(train_count, val_count)};
}

std::vector<int> load_idx_labels(const std::string& labels_path) {
    const std::string bytes = read_file(labels_path);
    if (bytes.size() < 8) throw DataError("idx: truncated label header: " + labels_path);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (get_u32_be(p) != kLabelMagic) throw DataError("idx: bad label magic in " + labels_path);
    const uint32_t n = get_u32_be(p + 4);
    if (bytes.size() != 8 + size_t(n)) throw DataError("idx: truncated label data: " + labels_path);
    std::vector<int> labels(n);
    for (uint32_t i = 0; i < n; ++i) labels[i] = int(p[8 + i]);
    return labels;
}

LabelledDataset take(const LabelledDataset& dataset, size_t count) {
    if (count == 0 || count >= dataset.size()) return dataset;
    LabelledDataset out;
    out.images.assign(dataset.images.begin(), dataset.images.begin() + ptrdiff_t(count));
    out.labels.assign(dataset.labels.begin(), dataset.labels.begin() + ptrdiff_t(count));
    return out;
}

}  // namespace convgp
