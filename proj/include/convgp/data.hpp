#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "convgp/types.hpp"

namespace convgp {

struct LabelledDataset {
    std::vector<Image> images;
    std::vector<int> labels;

    size_t size() const { return images.size(); }
};

/// Parses a pair of IDX files (big-endian, magic 0x00000803 for images with
/// dims N x H x W of unsigned bytes, 0x00000801 for N label bytes).
/// Pixels are divided by 255 into [0, 1] unless normalize is false, and a
/// single channel dimension is added.
LabelledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                         bool normalize = true);

/// First train_count examples, then the next val_count. With shuffle_seed
/// set, indices are shuffled deterministically before the split. The two
/// parts are always disjoint.
std::pair<LabelledDataset, LabelledDataset> split(const LabelledDataset& dataset,
                                                  size_t train_count, size_t val_count,
                                                  std::optional<uint64_t> shuffle_seed = {});

/// First count examples (the whole set when count == 0).
LabelledDataset take(const LabelledDataset& dataset, size_t count);

/// Labels alone, for re-solving against persisted kernel matrices.
std::vector<int> load_idx_labels(const std::string& labels_path);

}  // namespace convgp
