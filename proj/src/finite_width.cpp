#include "convgp/finite_width.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "convgp/kernel.hpp"
#include "convgp/rng.hpp"

namespace convgp {

namespace {

// Stream ids: one per (draw, layer) so workers never share generator state.
constexpr uint32_t kWeightStream = 0;
constexpr uint32_t kBiasStream = 1;

double fan_in(const Hyperparameters& hyper, int in_channels, int filter_area) {
    return hyper.fan_in_mode == FanInMode::kChannelsOnly
               ? double(in_channels)
               : double(in_channels) * filter_area;
}

double apply_phi(Nonlinearity nonlinearity, double x) {
    return nonlinearity == Nonlinearity::kRelu ? std::max(0.0, x) : std::erf(x);
}

/// Per-level conv plumbing shared by both samplers: resolved geometry plus,
/// for every output position, the input position hit by each filter tap
/// (-1 where the tap falls into zero padding).
struct LevelPlan {
    ConvGeometry geometry;
    int positions = 0;       // out_h * out_w
    int in_positions = 0;    // in_h * in_w
    std::vector<int> taps;   // [pos * filter_area + t] -> input position or -1
    int skip_target = -1;
};

std::vector<LevelPlan> build_plans(const ArchitectureSpec& arch, int in_h, int in_w) {
    std::vector<LevelPlan> plans;
    int h = in_h, w = in_w;
    const size_t levels = arch.conv_layers.size() + 1;
    for (size_t level = 0; level < levels; ++level) {
        const bool is_readout = level == arch.conv_layers.size();
        const LayerSpec layer = is_readout
                                    ? LayerSpec{LayerKind::kConv, h, w, 1, Padding::kValid, 0}
                                    : arch.conv_layers[level];
        LevelPlan plan;
        plan.geometry = make_conv_geometry(h, w, layer.filter_h, layer.filter_w, layer.stride,
                                           layer.padding);
        plan.positions = plan.geometry.out_h * plan.geometry.out_w;
        plan.in_positions = h * w;
        const int area = layer.filter_area();
        plan.taps.assign(size_t(plan.positions) * area, -1);
        for (int oy = 0; oy < plan.geometry.out_h; ++oy) {
            for (int ox = 0; ox < plan.geometry.out_w; ++ox) {
                const int pos = oy * plan.geometry.out_w + ox;
                for (int fy = 0; fy < layer.filter_h; ++fy) {
                    for (int fx = 0; fx < layer.filter_w; ++fx) {
                        const int iy = oy * plan.geometry.stride - plan.geometry.pad_top + fy;
                        const int ix = ox * plan.geometry.stride - plan.geometry.pad_left + fx;
                        if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
                            plan.taps[size_t(pos) * area + fy * layer.filter_w + fx] =
                                iy * w + ix;
                        }
                    }
                }
            }
        }
        if (!is_readout && layer.kind == LayerKind::kConvWithSkip) {
            plan.skip_target = int(level) - 1 - layer.skip_span;
        }
        h = plan.geometry.out_h;
        w = plan.geometry.out_w;
        plans.push_back(std::move(plan));
    }
    return plans;
}

}  // namespace

SampledNetwork sample_network(const ArchitectureSpec& arch, const Hyperparameters& hyper,
                              int channels, int input_channels, int in_h, int in_w,
                              uint64_t seed, uint64_t stream_salt, int readout_channels) {
    if (channels < 1) throw ConfigError("sample network: channels must be >= 1");
    if (readout_channels < 1) throw ConfigError("sample network: readout channels must be >= 1");
    validate(arch, hyper, in_h, in_w);

    SampledNetwork net;
    net.arch = arch;
    net.input_channels = input_channels;
    net.in_h = in_h;
    net.in_w = in_w;

    const std::vector<LevelPlan> plans = build_plans(arch, in_h, in_w);
    const double sigma_b = std::sqrt(hyper.sigma_b_sq);
    for (size_t level = 0; level < plans.size(); ++level) {
        const LevelPlan& plan = plans[level];
        const bool is_readout = level + 1 == plans.size();
        SampledNetwork::Layer layer;
        layer.geometry = plan.geometry;
        layer.in_channels = level == 0 ? input_channels : channels;
        layer.out_channels = is_readout ? readout_channels : channels;
        layer.skip_target = plan.skip_target;
        const int area = plan.geometry.filter_h * plan.geometry.filter_w;
        const double sigma_w =
            std::sqrt(hyper.sigma_w_sq / fan_in(hyper, layer.in_channels, area));

        layer.weights.resize(size_t(layer.out_channels) * layer.in_channels * area);
        layer.biases.resize(size_t(layer.out_channels));
        rng::Stream weights(seed, rng::substream(stream_salt * 4096 + level, kWeightStream));
        rng::Stream biases(seed, rng::substream(stream_salt * 4096 + level, kBiasStream));
        weights.fill_normals(std::span<double>(layer.weights), sigma_w);
        biases.fill_normals(std::span<double>(layer.biases), sigma_b);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::vector<std::vector<double>> forward_activations(const SampledNetwork& net, const Image& x) {
    if (x.channels != net.input_channels || x.height != net.in_h || x.width != net.in_w) {
        throw DataError("forward: image does not match network input shape");
    }
    const std::vector<LevelPlan> plans = build_plans(net.arch, net.in_h, net.in_w);

    std::vector<std::vector<double>> activations(net.layers.size());
    std::vector<double> phi_prev;
    for (size_t level = 0; level < net.layers.size(); ++level) {
        const SampledNetwork::Layer& layer = net.layers[level];
        const LevelPlan& plan = plans[level];
        const int area = plan.geometry.filter_h * plan.geometry.filter_w;

        // phi of the previous activations (raw pixels at the first layer).
        const size_t in_count = size_t(layer.in_channels) * plan.in_positions;
        phi_prev.resize(in_count);
        if (level == 0) {
            phi_prev.assign(x.pixels.begin(), x.pixels.end());
        } else {
            const std::vector<double>& prev = activations[level - 1];
            for (size_t i = 0; i < in_count; ++i) {
                phi_prev[i] = apply_phi(net.arch.nonlinearity, prev[i]);
            }
        }

        std::vector<double>& out = activations[level];
        out.assign(size_t(layer.out_channels) * plan.positions, 0.0);
        for (int o = 0; o < layer.out_channels; ++o) {
            for (int pos = 0; pos < plan.positions; ++pos) {
                double acc = layer.biases[size_t(o)];
                const int* taps = plan.taps.data() + size_t(pos) * area;
                for (int j = 0; j < layer.in_channels; ++j) {
                    const double* w =
                        layer.weights.data() + (size_t(o) * layer.in_channels + j) * area;
                    const double* in_plane = phi_prev.data() + size_t(j) * plan.in_positions;
                    for (int t = 0; t < area; ++t) {
                        if (taps[t] >= 0) acc += w[t] * in_plane[taps[t]];
                    }
                }
                out[size_t(o) * plan.positions + pos] = acc;
            }
        }
        if (layer.skip_target >= 0) {
            const std::vector<double>& skip = activations[size_t(layer.skip_target)];
            if (skip.size() != out.size()) {
                throw NumericError("forward: skip activations have mismatched size");
            }
            for (size_t i = 0; i < out.size(); ++i) out[i] += skip[i];
        }
    }
    return activations;
}

std::vector<double> forward(const SampledNetwork& net, const Image& x) {
    return forward_activations(net, x).back();
}

namespace {

using Eigen::MatrixXd;
using Eigen::MatrixXf;

/// Symmetric PSD square root factor via pivoted LDL^T: returns S with
/// S S^T = F (negative pivots from roundoff are clamped to zero).
MatrixXd psd_factor(const MatrixXd& f) {
    Eigen::LDLT<MatrixXd> ldlt(f);
    MatrixXd s = MatrixXd(ldlt.matrixL());
    const Eigen::VectorXd d = ldlt.vectorD();
    for (Eigen::Index j = 0; j < d.size(); ++j) {
        s.col(j) *= std::sqrt(std::max(d[j], 0.0));
    }
    return ldlt.transpositionsP().transpose() * s;
}

struct ChunkSums {
    std::vector<double> pair_sum, pair_sumsq;
    std::vector<double> mean_sum, mean_sumsq;
    std::vector<double> xcorr_sum, xcorr_sumsq;

    void init(size_t n_pairs, size_t n_inputs, size_t n_xcorr) {
        pair_sum.assign(n_pairs, 0.0);
        pair_sumsq.assign(n_pairs, 0.0);
        mean_sum.assign(n_inputs, 0.0);
        mean_sumsq.assign(n_inputs, 0.0);
        xcorr_sum.assign(n_xcorr, 0.0);
        xcorr_sumsq.assign(n_xcorr, 0.0);
    }
};

/// One worker's scratch for the activation-law sampler.
struct LawWorkspace {
    MatrixXf a, r, z, next, t_f;
    MatrixXd channel_gram, g, factor;
    std::vector<MatrixXf> retained;
};

class ActivationLawSampler {
public:
    ActivationLawSampler(const ArchitectureSpec& arch, const Hyperparameters& hyper,
                         const std::vector<Image>& inputs, int channels, int readout_channels)
        : arch_(arch), hyper_(hyper), channels_(channels), readout_channels_(readout_channels),
          n_inputs_(int(inputs.size())) {
        plans_ = build_plans(arch, inputs[0].height, inputs[0].width);

        // Retention slots for activation matrices pending a skip.
        retain_slot_.assign(plans_.size(), -1);
        int slots = 0;
        for (const LevelPlan& plan : plans_) {
            if (plan.skip_target >= 0 && retain_slot_[size_t(plan.skip_target)] < 0) {
                retain_slot_[size_t(plan.skip_target)] = slots++;
            }
        }
        retain_count_ = slots;

        // Fixed first-layer patches: rows = (image, position), cols = (channel, tap).
        const LevelPlan& first = plans_[0];
        const int c0 = inputs[0].channels;
        const int area = first.geometry.filter_h * first.geometry.filter_w;
        input_patches_.resize(n_inputs_ * first.positions, c0 * area);
        for (int img = 0; img < n_inputs_; ++img) {
            for (int pos = 0; pos < first.positions; ++pos) {
                for (int c = 0; c < c0; ++c) {
                    for (int t = 0; t < area; ++t) {
                        const int in_pos = first.taps[size_t(pos) * area + t];
                        input_patches_(img * first.positions + pos, c * area + t) =
                            in_pos >= 0 ? float(inputs[img].pixels[size_t(c) * first.in_positions +
                                                                   in_pos])
                                        : 0.0f;
                    }
                }
            }
        }
        first_sigma_w_ = std::sqrt(hyper.sigma_w_sq / fan_in(hyper, c0, area));
        sigma_b_ = std::sqrt(hyper.sigma_b_sq);
    }

    LawWorkspace make_workspace() const {
        LawWorkspace ws;
        int max_rows = 0;
        for (const LevelPlan& plan : plans_) {
            max_rows = std::max(max_rows, n_inputs_ * plan.positions);
        }
        ws.a.resize(max_rows, channels_);
        ws.r.resize(max_rows, channels_);
        ws.z.resize(max_rows, channels_);
        ws.next.resize(max_rows, channels_);
        ws.t_f.resize(max_rows, max_rows);
        ws.channel_gram.resize(max_rows, max_rows);
        ws.g.resize(max_rows, max_rows);
        ws.retained.assign(size_t(retain_count_), MatrixXf());
        return ws;
    }

    /// Readout activations for one draw: n_inputs x readout_channels.
    MatrixXf draw(uint64_t seed, uint64_t draw_index, LawWorkspace& ws) const {
        // First layer: filters are cheap to sample directly.
        const LevelPlan& first = plans_[0];
        int rows = n_inputs_ * first.positions;
        {
            const Eigen::Index k = input_patches_.cols();
            ws.z.resize(k, channels_);
            rng::Stream stream(seed, rng::substream(draw_index * 4096 + 0, kWeightStream));
            stream.fill_normals(std::span<float>(ws.z.data(), size_t(k) * channels_),
                                first_sigma_w_);
            ws.a.resize(rows, channels_);
            ws.a.noalias() = input_patches_ * ws.z;
            add_biases(seed, draw_index, 0, first.positions, ws.a);
        }
        retain(0, rows, ws);

        for (size_t level = 1; level < plans_.size(); ++level) {
            const LevelPlan& plan = plans_[level];
            const LevelPlan& prev = plans_[level - 1];
            const int prev_rows = rows;
            rows = n_inputs_ * plan.positions;
            const int out_channels =
                level + 1 == plans_.size() ? readout_channels_ : channels_;

            // phi of the current activations, then the exact conditional law:
            // conv outputs given phi are centered Gaussians, independent
            // across channels, with covariance scale*G + sigma_b^2.
            ws.r.resize(prev_rows, channels_);
            if (arch_.nonlinearity == Nonlinearity::kRelu) {
                ws.r.topRows(prev_rows) = ws.a.topRows(prev_rows).cwiseMax(0.0f);
            } else {
                ws.r.topRows(prev_rows) =
                    ws.a.topRows(prev_rows).unaryExpr([](float v) { return std::erf(v); });
            }

            ws.channel_gram.topLeftCorner(prev_rows, prev_rows).noalias() =
                (ws.r.topRows(prev_rows) * ws.r.topRows(prev_rows).transpose()).cast<double>();

            accumulate_patch_gram(plan, prev, rows, ws);

            const int area = plan.geometry.filter_h * plan.geometry.filter_w;
            const double scale =
                hyper_.sigma_w_sq / fan_in(hyper_, channels_, area);
            ws.g.topLeftCorner(rows, rows) =
                scale * ws.g.topLeftCorner(rows, rows).eval() +
                MatrixXd::Constant(rows, rows, hyper_.sigma_b_sq);

            const MatrixXd factor = psd_factor(ws.g.topLeftCorner(rows, rows));
            ws.t_f.topLeftCorner(rows, rows) = factor.cast<float>();

            ws.z.resize(rows, out_channels);
            rng::Stream stream(seed, rng::substream(draw_index * 4096 + level, kWeightStream));
            stream.fill_normals(std::span<float>(ws.z.data(), size_t(rows) * out_channels), 1.0);
            ws.next.resize(rows, out_channels);
            ws.next.noalias() = ws.t_f.topLeftCorner(rows, rows) * ws.z;

            if (plan.skip_target >= 0) {
                ws.next += ws.retained[size_t(retain_slot_[size_t(plan.skip_target)])];
            }
            ws.a.resize(rows, out_channels);
            ws.a = ws.next;
            retain(level, rows, ws);
        }
        return ws.a.topLeftCorner(n_inputs_, readout_channels_);
    }

    int positions(size_t level) const { return plans_[level].positions; }

private:
    void retain(size_t level, int rows, LawWorkspace& ws) const {
        if (retain_slot_[level] >= 0) {
            ws.retained[size_t(retain_slot_[level])] = ws.a.topRows(rows);
        }
    }

    void add_biases(uint64_t seed, uint64_t draw_index, size_t level, int positions,
                    MatrixXf& a) const {
        if (sigma_b_ == 0.0) return;
        rng::Stream stream(seed, rng::substream(draw_index * 4096 + level, kBiasStream));
        for (int c = 0; c < a.cols(); ++c) {
            const float b = float(sigma_b_ * stream.next_normal());
            for (int img = 0; img < n_inputs_; ++img) {
                a.col(c).segment(img * positions, positions).array() += b;
            }
        }
    }

    /// G[(ia,pa),(ib,pb)] = sum over taps of CG at the tap-shifted rows.
    void accumulate_patch_gram(const LevelPlan& plan, const LevelPlan& prev, int rows,
                               LawWorkspace& ws) const {
        ws.g.topLeftCorner(rows, rows).setZero();
        const int area = plan.geometry.filter_h * plan.geometry.filter_w;
        const int p_out = plan.positions;
        const int p_in = prev.positions;
        for (int t = 0; t < area; ++t) {
            for (int pa = 0; pa < p_out; ++pa) {
                const int ia = plan.taps[size_t(pa) * area + t];
                if (ia < 0) continue;
                for (int pb = 0; pb < p_out; ++pb) {
                    const int ib = plan.taps[size_t(pb) * area + t];
                    if (ib < 0) continue;
                    for (int img_a = 0; img_a < n_inputs_; ++img_a) {
                        for (int img_b = 0; img_b < n_inputs_; ++img_b) {
                            ws.g(img_a * p_out + pa, img_b * p_out + pb) +=
                                ws.channel_gram(img_a * p_in + ia, img_b * p_in + ib);
                        }
                    }
                }
            }
        }
    }

    const ArchitectureSpec& arch_;
    const Hyperparameters& hyper_;
    int channels_;
    int readout_channels_;
    int n_inputs_;
    std::vector<LevelPlan> plans_;
    std::vector<int> retain_slot_;
    int retain_count_ = 0;
    MatrixXf input_patches_;
    double first_sigma_w_ = 0.0;
    double sigma_b_ = 0.0;
};

MomentEntry make_entry(std::string label, double sum, double sumsq, size_t n, double kernel) {
    MomentEntry e;
    e.label = std::move(label);
    e.samples = n;
    e.kernel = kernel;
    e.empirical = sum / double(n);
    const double var = std::max((sumsq - sum * sum / double(n)) / double(n - 1), 0.0);
    e.std_error = std::sqrt(var / double(n));
    e.z = e.std_error > 0.0 ? (e.empirical - e.kernel) / e.std_error
                            : (e.empirical == e.kernel ? 0.0
                                                       : std::numeric_limits<double>::infinity());
    return e;
}

}  // namespace

MomentReport empirical_moments(const ArchitectureSpec& arch, const Hyperparameters& hyper,
                               const std::vector<Image>& inputs, const MomentOptions& options) {
    if (inputs.empty()) throw DataError("empirical moments: no inputs");
    if (options.num_samples < 2) throw ConfigError("empirical moments: need num_samples >= 2");
    if (options.channels < 1) throw ConfigError("empirical moments: channels must be >= 1");
    if (options.readout_channels < 1) {
        throw ConfigError("empirical moments: readout channels must be >= 1");
    }
    for (size_t i = 1; i < inputs.size(); ++i) {
        if (!inputs[i].same_shape(inputs[0])) {
            throw DataError("empirical moments: inputs have heterogeneous shapes");
        }
    }
    validate(arch, hyper, inputs[0].height, inputs[0].width);

    const int n_inputs = int(inputs.size());
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n_inputs; ++i) {
        for (int j = i; j < n_inputs; ++j) pairs.emplace_back(i, j);
    }
    std::vector<std::pair<int, int>> xcorr_pairs;
    for (int m = 0; m < options.readout_channels; ++m) {
        for (int mp = m + 1; mp < options.readout_channels; ++mp) xcorr_pairs.emplace_back(m, mp);
    }

    // Kernel predictions for every pair.
    const KernelEvaluator eval(arch, hyper, inputs[0].channels, inputs[0].height,
                               inputs[0].width);
    std::vector<double> kernel_values(pairs.size());
    {
        KernelEvaluator::Workspace ws(eval);
        for (size_t p = 0; p < pairs.size(); ++p) {
            kernel_values[p] = eval.evaluate(inputs[size_t(pairs[p].first)],
                                             inputs[size_t(pairs[p].second)], ws)
                                   .kxy;
        }
    }

    // Fixed-size chunks keep the merge order independent of scheduling.
    constexpr size_t kChunk = 512;
    const size_t n_chunks = (options.num_samples + kChunk - 1) / kChunk;
    std::vector<ChunkSums> chunks(n_chunks);

    const ActivationLawSampler sampler(arch, hyper, inputs, options.channels,
                                       options.readout_channels);

    const auto run_chunk = [&](size_t chunk, auto&& draw_fn) {
        ChunkSums& sums = chunks[chunk];
        sums.init(pairs.size(), size_t(n_inputs), xcorr_pairs.size());
        const size_t begin = chunk * kChunk;
        const size_t end = std::min(begin + kChunk, options.num_samples);
        for (size_t d = begin; d < end; ++d) {
            const MatrixXf outputs = draw_fn(d);  // n_inputs x readout_channels
            for (size_t p = 0; p < pairs.size(); ++p) {
                const double t = double(outputs(pairs[p].first, 0)) *
                                 double(outputs(pairs[p].second, 0));
                sums.pair_sum[p] += t;
                sums.pair_sumsq[p] += t * t;
            }
            for (int i = 0; i < n_inputs; ++i) {
                const double y = double(outputs(i, 0));
                sums.mean_sum[size_t(i)] += y;
                sums.mean_sumsq[size_t(i)] += y * y;
            }
            for (size_t q = 0; q < xcorr_pairs.size(); ++q) {
                const double t = double(outputs(0, xcorr_pairs[q].first)) *
                                 double(outputs(0, xcorr_pairs[q].second));
                sums.xcorr_sum[q] += t;
                sums.xcorr_sumsq[q] += t * t;
            }
        }
    };

    const int workers = std::max(1, std::min<int>(options.parallelism, int(n_chunks)));
    std::atomic<size_t> next_chunk{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto worker_loop = [&] {
        try {
            if (options.sampler == McSampler::kActivationLaw) {
                LawWorkspace ws = sampler.make_workspace();
                for (size_t c = next_chunk.fetch_add(1); c < n_chunks;
                     c = next_chunk.fetch_add(1)) {
                    run_chunk(c, [&](size_t d) { return sampler.draw(options.seed, d, ws); });
                }
            } else {
                for (size_t c = next_chunk.fetch_add(1); c < n_chunks;
                     c = next_chunk.fetch_add(1)) {
                    run_chunk(c, [&](size_t d) {
                        const SampledNetwork net = sample_network(
                            arch, hyper, options.channels, inputs[0].channels, inputs[0].height,
                            inputs[0].width, options.seed, d + 1, options.readout_channels);
                        MatrixXf outputs(n_inputs, options.readout_channels);
                        for (int i = 0; i < n_inputs; ++i) {
                            const std::vector<double> y = forward(net, inputs[size_t(i)]);
                            for (int m = 0; m < options.readout_channels; ++m) {
                                outputs(i, m) = float(y[size_t(m)]);
                            }
                        }
                        return outputs;
                    });
                }
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    if (workers == 1) {
        worker_loop();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < workers; ++t) threads.emplace_back(worker_loop);
        for (std::thread& t : threads) t.join();
    }
    if (error) std::rethrow_exception(error);

    // Merge in chunk order: bitwise identical for any worker count.
    ChunkSums total;
    total.init(pairs.size(), size_t(n_inputs), xcorr_pairs.size());
    for (const ChunkSums& c : chunks) {
        for (size_t i = 0; i < total.pair_sum.size(); ++i) {
            total.pair_sum[i] += c.pair_sum[i];
            total.pair_sumsq[i] += c.pair_sumsq[i];
        }
        for (size_t i = 0; i < total.mean_sum.size(); ++i) {
            total.mean_sum[i] += c.mean_sum[i];
            total.mean_sumsq[i] += c.mean_sumsq[i];
        }
        for (size_t i = 0; i < total.xcorr_sum.size(); ++i) {
            total.xcorr_sum[i] += c.xcorr_sum[i];
            total.xcorr_sumsq[i] += c.xcorr_sumsq[i];
        }
    }

    MomentReport report;
    report.samples = options.num_samples;
    report.channels = options.channels;
    const size_t n = options.num_samples;
    for (size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        const std::string label = i == j ? "var(" + std::to_string(i) + ")"
                                         : "cov(" + std::to_string(i) + "," +
                                               std::to_string(j) + ")";
        report.covariances.push_back(
            make_entry(label, total.pair_sum[p], total.pair_sumsq[p], n, kernel_values[p]));
    }
    for (int i = 0; i < n_inputs; ++i) {
        report.means.push_back(make_entry("mean(" + std::to_string(i) + ")",
                                          total.mean_sum[size_t(i)],
                                          total.mean_sumsq[size_t(i)], n, 0.0));
    }
    for (size_t q = 0; q < xcorr_pairs.size(); ++q) {
        report.channel_correlations.push_back(
            make_entry("xcorr(0;" + std::to_string(xcorr_pairs[q].first) + "," +
                           std::to_string(xcorr_pairs[q].second) + ")",
                       total.xcorr_sum[q], total.xcorr_sumsq[q], n, 0.0));
    }
    return report;
}

void write_moment_report(std::ostream& out, const MomentReport& report) {
    out << "entry\tempirical\tkernel\tse\tz\tsamples\n";
    const auto row = [&](const MomentEntry& e) {
        out << e.label << '\t' << e.empirical << '\t' << e.kernel << '\t' << e.std_error << '\t'
            << e.z << '\t' << e.samples << '\n';
    };
    for (const MomentEntry& e : report.covariances) row(e);
    for (const MomentEntry& e : report.means) row(e);
    for (const MomentEntry& e : report.channel_correlations) row(e);
}

}  // namespace convgp
