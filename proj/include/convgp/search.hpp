#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "convgp/arch.hpp"
#include "convgp/data.hpp"

namespace convgp {

/// Random-search ranges over kernel configurations. Variance ranges bracket
/// the optima the shipped configs use; depth counts conv layers.
struct SearchSpace {
    double sigma_b_sq_min = 0.05, sigma_b_sq_max = 20.0;  // log-uniform
    double sigma_w_sq_min = 0.05, sigma_w_sq_max = 20.0;  // log-uniform
    int depth_min = 2, depth_max = 12;
    int filter_min = 2, filter_max = 8;
    std::vector<int> strides = {1, 2};
    std::vector<Padding> paddings = {Padding::kSame, Padding::kValid};
    std::vector<Nonlinearity> nonlinearities = {Nonlinearity::kRelu, Nonlinearity::kErf};
    std::vector<int> skip_frequencies = {0, 1, 2, 3};  // 0 = no skips
    int max_resample_attempts = 1000;
};

struct SampledConfig {
    ArchitectureSpec arch;
    Hyperparameters hyper;
    double sigma_b_sq = 0.0, sigma_w_sq = 0.0;
    int depth = 0, filter = 0, stride = 1;
    Padding padding = Padding::kSame;
    Nonlinearity nonlinearity = Nonlinearity::kRelu;
    int skip_frequency = 0;
};

/// Deterministic in seed. Draws until the architecture validates on the
/// given input shape (Valid padding can shrink maps away); throws
/// ConfigError after max_resample_attempts.
SampledConfig sample_config(const SearchSpace& space, uint64_t seed, int in_h, int in_w);

struct SearchRecord {
    size_t index = 0;
    uint64_t seed = 0;
    std::string digest;
    SampledConfig config;
    double val_error = 1.0;
    double seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct SearchResult {
    std::vector<SearchRecord> records;  // in sample order
    size_t best_index = 0;              // argmin val_error, ties to earliest
};

/// Scores one sampled configuration on held-out data; throws on failure.
using ConfigEvaluator = std::function<double(const SampledConfig&)>;

/// Draws M configurations, scores each, and returns the full log plus the
/// best record. The model is never refit on the validation data. Failing
/// configurations are logged and skipped, not fatal.
SearchResult random_search(size_t num_samples, const SearchSpace& space, uint64_t seed,
                           int in_h, int in_w, const ConfigEvaluator& evaluate);

/// End-to-end scorer: train gram -> solve -> predict on the validation set.
ConfigEvaluator make_gp_evaluator(const LabelledDataset& train, const LabelledDataset& val,
                                  int parallelism);

/// One tab-separated line per record: index, seed, digest, sigma_b_sq,
/// sigma_w_sq, depth, filter, stride, padding, nonlinearity, skip,
/// val_error, seconds.
void write_search_log(const std::string& path, const SearchResult& result);

}  // namespace convgp
