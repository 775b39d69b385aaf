#include "convgp/search.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "convgp/config.hpp"
#include "convgp/gp.hpp"
#include "convgp/kernel.hpp"
#include "convgp/rng.hpp"

namespace convgp {

namespace {

double log_uniform(rng::Stream& stream, double lo, double hi) {
    return std::exp(std::log(lo) + stream.next_uniform() * (std::log(hi) - std::log(lo)));
}

int uniform_int(rng::Stream& stream, int lo, int hi) {  // inclusive
    return lo + int(stream.next_u64() % uint64_t(hi - lo + 1));
}

template <typename T>
const T& pick(rng::Stream& stream, const std::vector<T>& options) {
    return options[size_t(stream.next_u64() % options.size())];
}

}  // namespace

SampledConfig sample_config(const SearchSpace& space, uint64_t seed, int in_h, int in_w) {
    rng::Stream stream(seed, 0);
    for (int attempt = 0; attempt < space.max_resample_attempts; ++attempt) {
        SampledConfig c;
        c.sigma_b_sq = log_uniform(stream, space.sigma_b_sq_min, space.sigma_b_sq_max);
        c.sigma_w_sq = log_uniform(stream, space.sigma_w_sq_min, space.sigma_w_sq_max);
        c.depth = uniform_int(stream, space.depth_min, space.depth_max);
        c.filter = uniform_int(stream, space.filter_min, space.filter_max);
        c.stride = pick(stream, space.strides);
        c.padding = pick(stream, space.paddings);
        c.nonlinearity = pick(stream, space.nonlinearities);
        c.skip_frequency = pick(stream, space.skip_frequencies);

        c.hyper.sigma_b_sq = c.sigma_b_sq;
        c.hyper.sigma_w_sq = c.sigma_w_sq;
        try {
            c.arch = make_uniform_arch(c.depth, c.filter, c.stride, c.padding, c.nonlinearity,
                                       c.skip_frequency, in_h, in_w);
            validate(c.arch, c.hyper, in_h, in_w);
        } catch (const ConfigError&) {
            continue;  // e.g. Valid padding shrank the map below 1x1
        }
        return c;
    }
    throw ConfigError("sample_config: no valid architecture after " +
                      std::to_string(space.max_resample_attempts) + " attempts");
}

SearchResult random_search(size_t num_samples, const SearchSpace& space, uint64_t seed,
                           int in_h, int in_w, const ConfigEvaluator& evaluate) {
    if (num_samples < 1) throw ConfigError("random search: need at least one sample");

    SearchResult result;
    result.records.reserve(num_samples);
    double best_error = std::numeric_limits<double>::infinity();
    for (size_t m = 0; m < num_samples; ++m) {
        SearchRecord record;
        record.index = m;
        record.seed = seed + m;
        record.config = sample_config(space, record.seed, in_h, in_w);
        record.digest =
            digest_bytes(serialize_config(record.config.arch, record.config.hyper));
        const auto start = std::chrono::steady_clock::now();
        try {
            record.val_error = evaluate(record.config);
        } catch (const std::exception& e) {
            record.failed = true;
            record.error = e.what();
            record.val_error = std::numeric_limits<double>::quiet_NaN();
        }
        record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                             .count();
        if (!record.failed && record.val_error < best_error) {
            best_error = record.val_error;
            result.best_index = m;
        }
        result.records.push_back(std::move(record));
    }
    if (!std::isfinite(best_error)) {
        throw NumericError("random search: every sampled configuration failed");
    }
    return result;
}

ConfigEvaluator make_gp_evaluator(const LabelledDataset& train, const LabelledDataset& val,
                                  int parallelism) {
    if (train.size() == 0 || val.size() == 0) {
        throw DataError("search evaluator: empty train or validation set");
    }
    return [&train, &val, parallelism](const SampledConfig& config) {
        const KernelEvaluator eval(config.arch, config.hyper, train.images[0].channels,
                                   train.images[0].height, train.images[0].width);
        const GramMatrix kxx = gram_symmetric(train.images, eval, parallelism);
        const TargetMatrix y = encode_targets(train.labels, 10);
        const SolveResult alpha = solve_with_jitter_ladder(kxx, y);
        const GramMatrix kvx = gram_cross(val.images, train.images, eval, parallelism);
        const std::vector<int> predicted = predict(kvx, alpha);
        return error_rate(predicted, val.labels);
    };
}

void write_search_log(const std::string& path, const SearchResult& result) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("search log: cannot open for writing: " + path);
    out << "index\tseed\tdigest\tsigma_b_sq\tsigma_w_sq\tdepth\tfilter\tstride\tpadding\t"
           "nonlinearity\tskip\tval_error\tseconds\n";
    for (const SearchRecord& r : result.records) {
        out << r.index << '\t' << r.seed << '\t' << r.digest << '\t' << r.config.sigma_b_sq
            << '\t' << r.config.sigma_w_sq << '\t' << r.config.depth << '\t' << r.config.filter
            << '\t' << r.config.stride << '\t' << to_string(r.config.padding) << '\t'
            << to_string(r.config.nonlinearity) << '\t' << r.config.skip_frequency << '\t';
        if (r.failed) {
            out << "failed";
        } else {
            out << r.val_error;
        }
        out << '\t' << r.seconds << '\n';
    }
}

}  // namespace convgp
