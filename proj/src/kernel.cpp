#include "convgp/kernel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <numbers>
#include <thread>

namespace convgp {

namespace {

constexpr double kPi = std::numbers::pi;

double relu_factor(ReluPrefactor prefactor) {
    return prefactor == ReluPrefactor::kStandard ? 1.0 / (2.0 * kPi) : 1.0 / kPi;
}

void require_nonnegative_diagonals(std::span<const double> xx, std::span<const double> yy) {
    for (size_t i = 0; i < xx.size(); ++i) {
        if (xx[i] < 0.0 || yy[i] < 0.0) {
            throw NumericError("nonlinearity expectation: negative diagonal covariance");
        }
    }
}

// Cross-covariance track of the arc-cosine expectation. sin(theta) is
// evaluated as sqrt(1 - rho^2), exact for theta in [0, pi].
void relu_cross(std::span<const double> xx, std::span<const double> xy,
                std::span<const double> yy, double factor, std::span<double> out) {
    for (size_t i = 0; i < out.size(); ++i) {
        const double prod = xx[i] * yy[i];
        if (!(prod > 0.0)) {
            out[i] = 0.0;
            continue;
        }
        const double s = std::sqrt(prod);
        const double rho = std::clamp(xy[i] / s, -1.0, 1.0);
        const double theta = std::acos(rho);
        out[i] = factor * s * (std::sqrt(1.0 - rho * rho) + (kPi - theta) * rho);
    }
}

// Equal-argument case: rho = 1, theta = 0, so the bracket is exactly pi.
// The multiplication order matches relu_cross so that identical inputs
// produce bitwise-identical tracks.
void relu_diag(std::span<const double> k, double factor, std::span<double> out) {
    for (size_t i = 0; i < out.size(); ++i) out[i] = factor * k[i] * kPi;
}

void erf_cross(std::span<const double> xx, std::span<const double> xy,
               std::span<const double> yy, std::span<double> out) {
    const double c = 2.0 / kPi;
    for (size_t i = 0; i < out.size(); ++i) {
        const double denom = std::sqrt((1.0 + 2.0 * xx[i]) * (1.0 + 2.0 * yy[i]));
        const double arg = std::clamp(2.0 * xy[i] / denom, -1.0, 1.0);
        out[i] = c * std::asin(arg);
    }
}

void erf_diag(std::span<const double> k, std::span<double> out) {
    const double c = 2.0 / kPi;
    for (size_t i = 0; i < out.size(); ++i) {
        const double d = std::sqrt((1.0 + 2.0 * k[i]) * (1.0 + 2.0 * k[i]));
        out[i] = c * std::asin(std::clamp(2.0 * k[i] / d, -1.0, 1.0));
    }
}

// prefix[(y+1)*(w+1) + (x+1)] = sum of v over rows [0,y], cols [0,x].
void build_prefix(std::span<const double> v, int h, int w, std::vector<double>& prefix) {
    const int pw = w + 1;
    std::fill(prefix.begin(), prefix.begin() + pw, 0.0);
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        const double* src = v.data() + size_t(y) * w;
        const double* above = prefix.data() + size_t(y) * pw;
        double* here = prefix.data() + size_t(y + 1) * pw;
        here[0] = 0.0;
        for (int x = 0; x < w; ++x) {
            row += src[x];
            here[x + 1] = above[x + 1] + row;
        }
    }
}

void patch_sum_into(std::span<const double> prefix, const ConvGeometry& g, double bias,
                    double scale, std::span<double> out) {
    const int pw = g.in_w + 1;
    for (int oy = 0; oy < g.out_h; ++oy) {
        const int y0 = std::max(oy * g.stride - g.pad_top, 0);
        const int y1 = std::min(oy * g.stride - g.pad_top + g.filter_h, g.in_h);
        double* dst = out.data() + size_t(oy) * g.out_w;
        for (int ox = 0; ox < g.out_w; ++ox) {
            const int x0 = std::max(ox * g.stride - g.pad_left, 0);
            const int x1 = std::min(ox * g.stride - g.pad_left + g.filter_w, g.in_w);
            double sum = 0.0;
            if (y0 < y1 && x0 < x1) {
                sum = prefix[size_t(y1) * pw + x1] - prefix[size_t(y0) * pw + x1] -
                      prefix[size_t(y1) * pw + x0] + prefix[size_t(y0) * pw + x0];
            }
            dst[ox] = bias + scale * sum;
        }
    }
}

// Shared machinery for the first-layer covariance: channel-summed pixel
// products followed by the sliding-window sum for each of the three tracks.
void input_tracks(const Image& x, const Image& xp, const Hyperparameters& hyper,
                  const ConvGeometry& g, int filter_area, std::vector<double>& prod,
                  std::vector<double>& prefix, std::span<double> xx, std::span<double> xy,
                  std::span<double> yy) {
    const double fan_in = hyper.fan_in_mode == FanInMode::kChannelsOnly
                              ? double(x.channels)
                              : double(x.channels) * filter_area;
    const double scale = hyper.sigma_w_sq / fan_in;
    const size_t plane = size_t(x.height) * x.width;

    const auto run_track = [&](const Image& a, const Image& b, std::span<double> out) {
        std::fill(prod.begin(), prod.begin() + plane, 0.0);
        for (int c = 0; c < x.channels; ++c) {
            const double* pa = a.pixels.data() + size_t(c) * plane;
            const double* pb = b.pixels.data() + size_t(c) * plane;
            for (size_t i = 0; i < plane; ++i) prod[i] += pa[i] * pb[i];
        }
        build_prefix(std::span(prod.data(), plane), x.height, x.width, prefix);
        patch_sum_into(prefix, g, hyper.sigma_b_sq, scale, out);
    };
    run_track(x, x, xx);
    run_track(x, xp, xy);
    run_track(xp, xp, yy);
}

void check_track(std::span<const double> xx, std::span<const double> xy,
                 std::span<const double> yy) {
    for (size_t i = 0; i < xx.size(); ++i) {
        if (xx[i] < 0.0 || yy[i] < 0.0) {
            throw NumericError("kernel triple: negative diagonal covariance");
        }
        const double bound = std::sqrt(xx[i] * yy[i]);
        if (std::abs(xy[i]) > bound * (1.0 + 1e-9) + 1e-9) {
            throw NumericError("kernel triple: Cauchy-Schwarz violation");
        }
        if (!std::isfinite(xx[i]) || !std::isfinite(xy[i]) || !std::isfinite(yy[i])) {
            throw NumericError("kernel triple: non-finite covariance");
        }
    }
}

}  // namespace

void check_triple(const KernelTriple& t) {
    if (t.xx.size() != t.size() || t.xy.size() != t.size() || t.yy.size() != t.size()) {
        throw NumericError("kernel triple: vector lengths do not match h*w");
    }
    check_track(t.xx, t.xy, t.yy);
}

std::vector<double> relu_expectation(const KernelTriple& t, ReluPrefactor prefactor) {
    require_nonnegative_diagonals(t.xx, t.yy);
    std::vector<double> out(t.size());
    relu_cross(t.xx, t.xy, t.yy, relu_factor(prefactor), out);
    return out;
}

std::vector<double> erf_expectation(const KernelTriple& t) {
    require_nonnegative_diagonals(t.xx, t.yy);
    std::vector<double> out(t.size());
    erf_cross(t.xx, t.xy, t.yy, out);
    return out;
}

std::vector<double> patch_sum_propagate(std::span<const double> v, const ConvGeometry& g,
                                        double bias, double scale) {
    if (v.size() != size_t(g.in_h) * g.in_w) {
        throw ConfigError("patch sum: value map does not match geometry");
    }
    std::vector<double> prefix(size_t(g.in_h + 1) * (g.in_w + 1));
    std::vector<double> out(size_t(g.out_h) * g.out_w);
    build_prefix(v, g.in_h, g.in_w, prefix);
    patch_sum_into(prefix, g, bias, scale, out);
    return out;
}

KernelTriple input_kernel(const Image& x, const Image& xp, const Hyperparameters& hyper,
                          const LayerSpec& first_layer) {
    if (!x.same_shape(xp)) throw DataError("input kernel: image shapes differ");
    if (x.channels < 1) throw DataError("input kernel: image has no channels");

    const ConvGeometry g = make_conv_geometry(x.height, x.width, first_layer.filter_h,
                                              first_layer.filter_w, first_layer.stride,
                                              first_layer.padding);
    KernelTriple t(g.out_h, g.out_w);
    std::vector<double> prod(size_t(x.height) * x.width);
    std::vector<double> prefix(size_t(x.height + 1) * (x.width + 1));
    input_tracks(x, xp, hyper, g, first_layer.filter_area(), prod, prefix, t.xx, t.xy, t.yy);
    return t;
}

KernelTriple residual_combine(const KernelTriple& current, const KernelTriple& skip) {
    if (current.h != skip.h || current.w != skip.w) {
        throw NumericError("residual combine: spatial dims differ");
    }
    KernelTriple out = current;
    for (size_t i = 0; i < out.size(); ++i) {
        out.xx[i] += skip.xx[i];
        out.xy[i] += skip.xy[i];
        out.yy[i] += skip.yy[i];
    }
    return out;
}

KernelEvaluator::KernelEvaluator(ArchitectureSpec arch, Hyperparameters hyper, int channels,
                                 int in_h, int in_w)
    : arch_(std::move(arch)), hyper_(hyper), channels_(channels), in_h_(in_h), in_w_(in_w) {
    if (channels_ < 1) throw ConfigError("input channel count must be >= 1");
    validate(arch_, hyper_, in_h_, in_w_);

    int h = in_h_, w = in_w_;
    for (const LayerSpec& layer : arch_.conv_layers) {
        geometries_.push_back(make_conv_geometry(h, w, layer.filter_h, layer.filter_w,
                                                 layer.stride, layer.padding));
        h = geometries_.back().out_h;
        w = geometries_.back().out_w;
    }
    // Dense readout: a stride-1 valid conv covering the whole final map.
    geometries_.push_back(make_conv_geometry(h, w, h, w, 1, Padding::kValid));

    // Only levels still needed by a pending skip are retained.
    const size_t levels = geometries_.size();
    retain_slot_.assign(levels, -1);
    retain_users_.assign(levels, 0);
    int slots = 0;
    for (size_t i = 0; i < arch_.conv_layers.size(); ++i) {
        const LayerSpec& layer = arch_.conv_layers[i];
        if (layer.kind == LayerKind::kConvWithSkip) {
            const size_t target = i - 1 - size_t(layer.skip_span);
            if (retain_slot_[target] < 0) retain_slot_[target] = slots++;
            ++retain_users_[target];
        }
    }
}

KernelEvaluator::Workspace::Workspace(const KernelEvaluator& eval) {
    size_t max_hd = size_t(eval.in_h_) * eval.in_w_;
    size_t max_prefix = size_t(eval.in_h_ + 1) * (eval.in_w_ + 1);
    for (const ConvGeometry& g : eval.geometries_) {
        max_hd = std::max(max_hd, size_t(g.out_h) * g.out_w);
        max_prefix = std::max(max_prefix, size_t(g.in_h + 1) * (g.in_w + 1));
    }
    for (int track = 0; track < 3; ++track) {
        cur_[track].resize(max_hd);
        v_[track].resize(max_hd);
        next_[track].resize(max_hd);
    }
    prefix_.resize(max_prefix);
    prod_.resize(size_t(eval.in_h_) * eval.in_w_);

    int slots = 0;
    for (int s : eval.retain_slot_) slots = std::max(slots, s + 1);
    retained_.clear();
    for (int s = 0; s < slots; ++s) {
        for (size_t level = 0; level < eval.retain_slot_.size(); ++level) {
            if (eval.retain_slot_[level] == s) {
                const ConvGeometry& g = eval.geometries_[level];
                retained_.emplace_back(g.out_h, g.out_w);
                break;
            }
        }
    }

    allocated_doubles_ = 9 * max_hd + max_prefix + prod_.size();
    for (const KernelTriple& t : retained_) allocated_doubles_ += 3 * t.size();
}

void KernelEvaluator::expectation_tracks(const std::vector<double>* cur, std::vector<double>* v,
                                         size_t n) const {
    require_nonnegative_diagonals(std::span(cur[0].data(), n), std::span(cur[2].data(), n));
    if (arch_.nonlinearity == Nonlinearity::kRelu) {
        const double factor = relu_factor(hyper_.relu_prefactor);
        relu_diag(std::span(cur[0].data(), n), factor, std::span(v[0].data(), n));
        relu_cross(std::span(cur[0].data(), n), std::span(cur[1].data(), n),
                   std::span(cur[2].data(), n), factor, std::span(v[1].data(), n));
        relu_diag(std::span(cur[2].data(), n), factor, std::span(v[2].data(), n));
    } else {
        erf_diag(std::span(cur[0].data(), n), std::span(v[0].data(), n));
        erf_cross(std::span(cur[0].data(), n), std::span(cur[1].data(), n),
                  std::span(cur[2].data(), n), std::span(v[1].data(), n));
        erf_diag(std::span(cur[2].data(), n), std::span(v[2].data(), n));
    }
}

EvalResult KernelEvaluator::evaluate(const Image& x, const Image& xp, Workspace& ws,
                                     const EvalOptions& options) const {
    if (x.channels != channels_ || x.height != in_h_ || x.width != in_w_) {
        throw DataError("kernel evaluation: image does not match evaluator shape");
    }
    if (!x.same_shape(xp)) throw DataError("kernel evaluation: image shapes differ");

    EvalResult result;
    const size_t levels = geometries_.size();

    // Level 0: covariance of the first linear layer from raw pixels.
    {
        const ConvGeometry& g = geometries_[0];
        const int filter_area = arch_.conv_layers.empty()
                                    ? in_h_ * in_w_
                                    : arch_.conv_layers[0].filter_area();
        const size_t n = size_t(g.out_h) * g.out_w;
        input_tracks(x, xp, hyper_, g, filter_area, ws.prod_, ws.prefix_,
                     std::span(ws.cur_[0].data(), n), std::span(ws.cur_[1].data(), n),
                     std::span(ws.cur_[2].data(), n));
        check_track(std::span(ws.cur_[0].data(), n), std::span(ws.cur_[1].data(), n),
                    std::span(ws.cur_[2].data(), n));
    }

    const auto snapshot = [&](size_t level) {
        const ConvGeometry& g = geometries_[level];
        const size_t n = size_t(g.out_h) * g.out_w;
        KernelTriple t(g.out_h, g.out_w);
        std::copy_n(ws.cur_[0].begin(), n, t.xx.begin());
        std::copy_n(ws.cur_[1].begin(), n, t.xy.begin());
        std::copy_n(ws.cur_[2].begin(), n, t.yy.begin());
        return t;
    };

    const auto retain_if_needed = [&](size_t level) {
        if (level < retain_slot_.size() && retain_slot_[level] >= 0) {
            ws.retained_[size_t(retain_slot_[level])] = snapshot(level);
        }
        if (options.record_history) result.history.push_back(snapshot(level));
    };
    retain_if_needed(0);

    for (size_t level = 1; level < levels; ++level) {
        const ConvGeometry& g = geometries_[level];
        const size_t n_in = size_t(g.in_h) * g.in_w;
        const size_t n_out = size_t(g.out_h) * g.out_w;

        expectation_tracks(ws.cur_, ws.v_, n_in);

        const bool is_conv_layer = level < arch_.conv_layers.size();
        const LayerSpec* layer = is_conv_layer ? &arch_.conv_layers[level] : nullptr;
        const bool has_skip = layer && layer->kind == LayerKind::kConvWithSkip;

        double filter_norm = 1.0;
        if (hyper_.fan_in_mode == FanInMode::kChannelsAndFilter) {
            filter_norm = double(g.filter_h) * g.filter_w;
        }
        const double scale = hyper_.sigma_w_sq / filter_norm;

        const bool zero_branch = has_skip && options.zero_branch_at_skip_layers;
        for (int track = 0; track < 3; ++track) {
            if (zero_branch) {
                std::fill_n(ws.next_[track].begin(), n_out, 0.0);
            } else {
                build_prefix(std::span(ws.v_[track].data(), n_in), g.in_h, g.in_w, ws.prefix_);
                patch_sum_into(ws.prefix_, g, hyper_.sigma_b_sq, scale,
                               std::span(ws.next_[track].data(), n_out));
            }
        }

        if (has_skip && !options.zero_skip_contributions) {
            const size_t target = level - 1 - size_t(layer->skip_span);
            const KernelTriple& skip = ws.retained_[size_t(retain_slot_[target])];
            for (size_t i = 0; i < n_out; ++i) {
                ws.next_[0][i] += skip.xx[i];
                ws.next_[1][i] += skip.xy[i];
                ws.next_[2][i] += skip.yy[i];
            }
        }

        for (int track = 0; track < 3; ++track) ws.cur_[track].swap(ws.next_[track]);
        check_track(std::span(ws.cur_[0].data(), n_out), std::span(ws.cur_[1].data(), n_out),
                    std::span(ws.cur_[2].data(), n_out));
        retain_if_needed(level);
    }

    result.kxx = ws.cur_[0][0];
    result.kxy = ws.cur_[1][0];
    result.kyy = ws.cur_[2][0];
    return result;
}

EvalResult KernelEvaluator::evaluate(const Image& x, const Image& xp,
                                     const EvalOptions& options) const {
    Workspace ws(*this);
    return evaluate(x, xp, ws, options);
}

double KernelEvaluator::kernel(const Image& x, const Image& xp) const {
    Workspace ws(*this);
    return evaluate(x, xp, ws).kxy;
}

namespace {

void require_same_shapes(std::span<const Image> images) {
    for (size_t i = 1; i < images.size(); ++i) {
        if (!images[i].same_shape(images[0])) {
            throw DataError("gram: images have heterogeneous shapes");
        }
    }
}

void run_rows(size_t n_rows, int parallelism, const KernelEvaluator& eval,
              const std::function<void(size_t, KernelEvaluator::Workspace&)>& row_fn) {
    const int workers = std::max(1, std::min<int>(parallelism, int(n_rows)));
    if (workers == 1) {
        KernelEvaluator::Workspace ws(eval);
        for (size_t i = 0; i < n_rows; ++i) row_fn(i, ws);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(size_t(workers));
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int t = 0; t < workers; ++t) {
        threads.emplace_back([&] {
            KernelEvaluator::Workspace ws(eval);
            try {
                for (size_t i = next.fetch_add(1); i < n_rows; i = next.fetch_add(1)) {
                    row_fn(i, ws);
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (std::thread& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

GramMatrix gram_symmetric(std::span<const Image> images, const KernelEvaluator& eval,
                          int parallelism) {
    require_same_shapes(images);
    const size_t n = images.size();
    GramMatrix gram(n, n);
    run_rows(n, parallelism, eval, [&](size_t i, KernelEvaluator::Workspace& ws) {
        for (size_t j = i; j < n; ++j) {
            const double k = eval.evaluate(images[i], images[j], ws).kxy;
            gram.at(i, j) = k;
            gram.at(j, i) = k;
        }
    });
    return gram;
}

GramMatrix gram_cross(std::span<const Image> rows, std::span<const Image> cols,
                      const KernelEvaluator& eval, int parallelism) {
    require_same_shapes(rows);
    require_same_shapes(cols);
    if (!rows.empty() && !cols.empty() && !rows[0].same_shape(cols[0])) {
        throw DataError("gram: row and column images have different shapes");
    }
    GramMatrix gram(rows.size(), cols.size());
    run_rows(rows.size(), parallelism, eval, [&](size_t i, KernelEvaluator::Workspace& ws) {
        for (size_t j = 0; j < cols.size(); ++j) {
            gram.at(i, j) = eval.evaluate(rows[i], cols[j], ws).kxy;
        }
    });
    return gram;
}

GramMatrix gram_matrix(std::span<const Image> a, std::span<const Image> b,
                       const ArchitectureSpec& arch, const Hyperparameters& hyper,
                       int parallelism) {
    if (a.empty() || b.empty()) throw DataError("gram: empty dataset");
    const KernelEvaluator eval(arch, hyper, a[0].channels, a[0].height, a[0].width);
    if (a.data() == b.data() && a.size() == b.size()) {
        return gram_symmetric(a, eval, parallelism);
    }
    return gram_cross(a, b, eval, parallelism);
}

}  // namespace convgp
