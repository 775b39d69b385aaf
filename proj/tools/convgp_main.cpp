// convgp: ConvNet/ResNet GP kernels, exact GP classification, and
// finite-width Monte-Carlo validation from the command line.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "convgp/config.hpp"
#include "convgp/data.hpp"
#include "convgp/finite_width.hpp"
#include "convgp/gp.hpp"
#include "convgp/gram_io.hpp"
#include "convgp/kernel.hpp"
#include "convgp/manifest.hpp"
#include "convgp/rng.hpp"
#include "convgp/search.hpp"

namespace {

using namespace convgp;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct DataFlags {
    std::string train_images, train_labels, test_images, test_labels;
    long long subset_train = 0, subset_val = 0, subset_test = 0;
    bool raw_pixels = false;

    void add_to(CLI::App* cmd, bool with_test = true) {
        cmd->add_option("--train-images", train_images, "IDX image file for training data");
        cmd->add_option("--train-labels", train_labels, "IDX label file for training data");
        if (with_test) {
            cmd->add_option("--test-images", test_images, "IDX image file for test data");
            cmd->add_option("--test-labels", test_labels, "IDX label file for test data");
            cmd->add_option("--subset-test", subset_test, "use only the first N test examples");
        }
        cmd->add_option("--subset-train", subset_train,
                        "use only the first N training examples");
        cmd->add_option("--subset-val", subset_val,
                        "hold out the next N training examples for validation");
        cmd->add_flag("--raw-pixels", raw_pixels, "keep pixel bytes (no [0,1] normalization)");
    }

    // Unset paths fall back to canonical names under $CONVGP_DATA_DIR.
    void apply_env_defaults() {
        const char* dir = std::getenv("CONVGP_DATA_DIR");
        if (!dir) return;
        const std::string base = std::string(dir) + "/";
        if (train_images.empty()) train_images = base + "train-images-idx3-ubyte";
        if (train_labels.empty()) train_labels = base + "train-labels-idx1-ubyte";
        if (test_images.empty()) test_images = base + "test-images-idx3-ubyte";
        if (test_labels.empty()) test_labels = base + "test-labels-idx1-ubyte";
    }

    LabelledDataset load_train() const {
        if (train_images.empty() || train_labels.empty()) {
            throw DataError("no training data: pass --train-images/--train-labels "
                            "or set CONVGP_DATA_DIR");
        }
        return load_idx(train_images, train_labels, !raw_pixels);
    }

    LabelledDataset load_test() const {
        if (test_images.empty() || test_labels.empty()) {
            throw DataError("no test data: pass --test-images/--test-labels "
                            "or set CONVGP_DATA_DIR");
        }
        LabelledDataset test = load_idx(test_images, test_labels, !raw_pixels);
        return take(test, size_t(subset_test));
    }
};

int run_kernel(const std::string& config_path, DataFlags& data, const std::string& out_path,
               const std::string& out_test_path, int parallelism, std::string manifest_path) {
    const auto start = Clock::now();
    const KernelConfig config = load_config(config_path);
    data.apply_env_defaults();

    RunManifest manifest;
    manifest.command = "kernel";
    manifest.config_path = config_path;
    manifest.config_digest = digest_file(config_path);
    manifest.parallelism = parallelism;
    manifest.data_paths = {{"train_images", data.train_images},
                           {"train_labels", data.train_labels}};
    manifest.subset_sizes = {{"train", data.subset_train}, {"test", data.subset_test}};

    const LabelledDataset train_full = data.load_train();
    const LabelledDataset train = take(train_full, size_t(data.subset_train));
    if (train.size() == 0) throw DataError("kernel: empty training subset");
    const KernelEvaluator eval(config.arch, config.hyper, train.images[0].channels,
                               train.images[0].height, train.images[0].width);

    auto t0 = Clock::now();
    const GramMatrix kxx = gram_symmetric(train.images, eval, parallelism);
    const double kxx_seconds = seconds_since(t0);
    write_gram(out_path, kxx);
    manifest.timings_seconds["kernel_train_seconds"] = kxx_seconds;
    std::cout << "kxx: " << kxx.rows << "x" << kxx.cols << " in " << kxx_seconds << " s -> "
              << out_path << "\n";

    if (!out_test_path.empty()) {
        const LabelledDataset test = data.load_test();
        if (test.size() == 0) throw DataError("kernel: empty test subset");
        t0 = Clock::now();
        const GramMatrix ktx = gram_cross(test.images, train.images, eval, parallelism);
        const double ktx_seconds = seconds_since(t0);
        write_gram(out_test_path, ktx);
        manifest.timings_seconds["kernel_test_seconds"] = ktx_seconds;
        manifest.data_paths["test_images"] = data.test_images;
        manifest.data_paths["test_labels"] = data.test_labels;
        std::cout << "ktest: " << ktx.rows << "x" << ktx.cols << " in " << ktx_seconds
                  << " s -> " << out_test_path << "\n";
    }

    manifest.timings_seconds["total_seconds"] = seconds_since(start);
    if (manifest_path.empty()) manifest_path = out_path + ".manifest.json";
    write_manifest(manifest_path, manifest);
    return 0;
}

int run_fit_eval(const std::string& config_path, DataFlags& data, const std::string& kxx_path,
                 const std::string& ktest_path, const std::string& jitter_policy,
                 int parallelism, std::string manifest_path) {
    const auto start = Clock::now();
    data.apply_env_defaults();

    RunManifest manifest;
    manifest.command = "fit-eval";
    manifest.parallelism = parallelism;
    manifest.subset_sizes = {{"train", data.subset_train},
                             {"val", data.subset_val},
                             {"test", data.subset_test}};

    GramMatrix kxx, kval, ktest;
    std::vector<int> train_labels, val_labels, test_labels;
    double kernel_seconds = 0.0;

    if (!kxx_path.empty()) {
        // Re-solve against persisted matrices.
        if (ktest_path.empty()) throw ConfigError("fit-eval: --kxx requires --ktest");
        kxx = read_gram(kxx_path);
        ktest = read_gram(ktest_path);
        manifest.data_paths = {{"kxx", kxx_path}, {"ktest", ktest_path}};
        if (data.train_labels.empty() || data.test_labels.empty()) {
            throw DataError("fit-eval: matrices need --train-labels and --test-labels");
        }
        train_labels = load_idx_labels(data.train_labels);
        if (train_labels.size() < kxx.rows) {
            throw DataError("fit-eval: fewer training labels than gram rows");
        }
        train_labels.resize(kxx.rows);
        test_labels = load_idx_labels(data.test_labels);
        if (test_labels.size() < ktest.rows) {
            throw DataError("fit-eval: fewer test labels than gram rows");
        }
        test_labels.resize(ktest.rows);
        if (ktest.cols != kxx.rows) {
            throw DataError("fit-eval: ktest columns do not match kxx size");
        }
    } else {
        if (config_path.empty()) throw ConfigError("fit-eval: need --config or --kxx/--ktest");
        const KernelConfig config = load_config(config_path);
        manifest.config_path = config_path;
        manifest.config_digest = digest_file(config_path);
        manifest.data_paths = {{"train_images", data.train_images},
                               {"train_labels", data.train_labels},
                               {"test_images", data.test_images},
                               {"test_labels", data.test_labels}};

        const LabelledDataset train_full = data.load_train();
        const auto [train, val] =
            split(train_full, size_t(data.subset_train), size_t(data.subset_val));
        if (train.size() == 0) throw DataError("fit-eval: empty training subset");
        const LabelledDataset test = data.load_test();
        train_labels = train.labels;
        val_labels = val.labels;
        test_labels = test.labels;

        const KernelEvaluator eval(config.arch, config.hyper, train.images[0].channels,
                                   train.images[0].height, train.images[0].width);
        auto t0 = Clock::now();
        kxx = gram_symmetric(train.images, eval, parallelism);
        if (val.size() > 0) kval = gram_cross(val.images, train.images, eval, parallelism);
        if (test.size() > 0) ktest = gram_cross(test.images, train.images, eval, parallelism);
        kernel_seconds = seconds_since(t0);
        manifest.timings_seconds["kernel_seconds"] = kernel_seconds;
    }

    const TargetMatrix targets = encode_targets(train_labels, 10);
    auto t0 = Clock::now();
    SolveResult alpha = [&] {
        if (jitter_policy == "auto") return solve_with_jitter_ladder(kxx, targets);
        const double jitter = std::stod(jitter_policy);
        auto result = solve(kxx, targets, jitter);
        if (!result) {
            throw NumericError("fit-eval: solve failed at fixed jitter " + jitter_policy);
        }
        return *result;
    }();
    const double solve_seconds = seconds_since(t0);
    manifest.timings_seconds["solve_seconds"] = solve_seconds;
    manifest.jitter = alpha.jitter;
    manifest.metrics["solve_residual_inf"] = alpha.residual_inf;
    std::cout << "solve: jitter " << alpha.jitter << ", residual " << alpha.residual_inf
              << ", " << solve_seconds << " s\n";
    if (kernel_seconds > 0.0) {
        std::cout << "kernel/solve seconds: " << kernel_seconds << " / " << solve_seconds
                  << "\n";
    }

    if (kval.rows > 0) {
        const double val_error = error_rate(predict(kval, alpha), val_labels);
        manifest.metrics["val_error"] = val_error;
        std::cout << "val error: " << val_error << "\n";
    }
    if (ktest.rows > 0) {
        const double test_error = error_rate(predict(ktest, alpha), test_labels);
        manifest.metrics["test_error"] = test_error;
        std::cout << "test error: " << test_error << "\n";
    }

    manifest.timings_seconds["total_seconds"] = seconds_since(start);
    if (manifest_path.empty()) manifest_path = "fit-eval.manifest.json";
    write_manifest(manifest_path, manifest);
    return 0;
}

int run_validate_mc(const std::string& config_path, int channels, long long samples,
                    unsigned long long seed, int num_images, int image_size,
                    const std::string& images_idx, const std::string& images_labels,
                    int readout_channels, int parallelism, const std::string& out_path,
                    std::string manifest_path) {
    const auto start = Clock::now();
    const KernelConfig config = load_config(config_path);
    if (samples < 2) throw ConfigError("validate-mc: --samples must be >= 2");

    std::vector<Image> inputs;
    if (!images_idx.empty()) {
        if (images_labels.empty()) {
            throw DataError("validate-mc: --images-idx needs --images-labels");
        }
        const LabelledDataset data = load_idx(images_idx, images_labels);
        if (data.size() < size_t(num_images)) {
            throw DataError("validate-mc: not enough images in the IDX file");
        }
        inputs.assign(data.images.begin(), data.images.begin() + num_images);
    } else {
        // Fixed random images with iid standard-normal pixels.
        rng::Stream stream(seed, rng::substream(0xfeed, 0));
        for (int i = 0; i < num_images; ++i) {
            Image img(1, image_size, image_size);
            stream.fill_normals(std::span<double>(img.pixels), 1.0);
            inputs.push_back(std::move(img));
        }
    }

    MomentOptions options;
    options.channels = channels;
    options.num_samples = size_t(samples);
    options.seed = seed;
    options.parallelism = parallelism;
    options.readout_channels = readout_channels;
    const MomentReport report =
        empirical_moments(config.arch, config.hyper, inputs, options);

    if (out_path.empty()) {
        write_moment_report(std::cout, report);
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw DataError("validate-mc: cannot open " + out_path);
        write_moment_report(out, report);
        std::cout << "report -> " << out_path << "\n";
    }

    RunManifest manifest;
    manifest.command = "validate-mc";
    manifest.config_path = config_path;
    manifest.config_digest = digest_file(config_path);
    manifest.seed = seed;
    manifest.parallelism = parallelism;
    manifest.subset_sizes = {{"channels", channels},
                             {"samples", samples},
                             {"images", num_images}};
    double max_abs_z = 0.0;
    for (const MomentEntry& e : report.covariances) {
        max_abs_z = std::max(max_abs_z, std::abs(e.z));
    }
    manifest.metrics["max_abs_z"] = max_abs_z;
    manifest.timings_seconds["total_seconds"] = seconds_since(start);
    if (manifest_path.empty()) {
        manifest_path = out_path.empty() ? "validate-mc.manifest.json"
                                         : out_path + ".manifest.json";
    }
    write_manifest(manifest_path, manifest);
    return 0;
}

int run_search(long long num_samples, DataFlags& data, unsigned long long seed,
               const std::string& space_path, int parallelism, const std::string& out_path,
               std::string manifest_path) {
    const auto start = Clock::now();
    data.apply_env_defaults();
    if (num_samples < 1) throw ConfigError("search: --samples must be >= 1");

    SearchSpace space;
    if (!space_path.empty()) {
        std::ifstream in(space_path);
        if (!in) throw ConfigError("search: cannot open space config " + space_path);
        // Flat JSON overrides for the default space.
        nlohmann::json root;
        try {
            in >> root;
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("search: space config parse error: ") + e.what());
        }
        space.sigma_b_sq_min = root.value("sigma_b_sq_min", space.sigma_b_sq_min);
        space.sigma_b_sq_max = root.value("sigma_b_sq_max", space.sigma_b_sq_max);
        space.sigma_w_sq_min = root.value("sigma_w_sq_min", space.sigma_w_sq_min);
        space.sigma_w_sq_max = root.value("sigma_w_sq_max", space.sigma_w_sq_max);
        space.depth_min = root.value("depth_min", space.depth_min);
        space.depth_max = root.value("depth_max", space.depth_max);
        space.filter_min = root.value("filter_min", space.filter_min);
        space.filter_max = root.value("filter_max", space.filter_max);
        if (root.contains("strides")) space.strides = root["strides"].get<std::vector<int>>();
        if (root.contains("skip_frequencies")) {
            space.skip_frequencies = root["skip_frequencies"].get<std::vector<int>>();
        }
    }

    const LabelledDataset train_full = data.load_train();
    const auto [train, val] =
        split(train_full, size_t(data.subset_train), size_t(data.subset_val));
    if (train.size() == 0 || val.size() == 0) {
        throw DataError("search: need non-empty train and validation subsets");
    }

    const ConfigEvaluator evaluate = make_gp_evaluator(train, val, parallelism);
    const SearchResult result =
        random_search(size_t(num_samples), space, seed, train.images[0].height,
                      train.images[0].width, evaluate);
    write_search_log(out_path, result);

    const SearchRecord& best = result.records[result.best_index];
    std::cout << "best sample " << best.index << ": val error " << best.val_error << " ("
              << serialize_config(best.config.arch, best.config.hyper) << ")\n";
    std::cout << "log -> " << out_path << "\n";

    RunManifest manifest;
    manifest.command = "search";
    manifest.seed = seed;
    manifest.parallelism = parallelism;
    manifest.config_digest = best.digest;
    manifest.data_paths = {{"train_images", data.train_images},
                           {"train_labels", data.train_labels},
                           {"log", out_path}};
    manifest.subset_sizes = {{"train", data.subset_train},
                             {"val", data.subset_val},
                             {"samples", num_samples}};
    manifest.metrics["best_val_error"] = best.val_error;
    manifest.metrics["best_index"] = double(best.index);
    manifest.timings_seconds["total_seconds"] = seconds_since(start);
    if (manifest_path.empty()) manifest_path = out_path + ".manifest.json";
    write_manifest(manifest_path, manifest);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ConvNet/ResNet Gaussian-process kernels: exact kernel computation, "
                 "GP classification, Monte-Carlo validation, and hyperparameter search"};
    app.require_subcommand(1);

    const int default_parallelism = int(std::max(1u, std::thread::hardware_concurrency()));

    // kernel
    auto* kernel_cmd = app.add_subcommand("kernel", "compute and persist kernel matrices");
    std::string config_path, out_path, out_test_path, manifest_path;
    int parallelism = default_parallelism;
    DataFlags kernel_data;
    kernel_cmd->add_option("--config", config_path, "kernel configuration JSON")->required();
    kernel_data.add_to(kernel_cmd);
    kernel_cmd->add_option("--out", out_path, "output file for K_xx")->required();
    kernel_cmd->add_option("--out-test", out_test_path, "output file for K_test,x");
    kernel_cmd->add_option("--parallelism", parallelism, "worker threads");
    kernel_cmd->add_option("--manifest", manifest_path, "manifest path");

    // fit-eval
    auto* fit_cmd = app.add_subcommand("fit-eval", "solve the GP and report error rates");
    std::string fit_config, fit_kxx, fit_ktest, jitter_policy = "auto", fit_manifest;
    int fit_parallelism = default_parallelism;
    DataFlags fit_data;
    fit_cmd->add_option("--config", fit_config, "kernel configuration JSON");
    fit_cmd->add_option("--kxx", fit_kxx, "persisted training gram");
    fit_cmd->add_option("--ktest", fit_ktest, "persisted test-by-train gram");
    fit_data.add_to(fit_cmd);
    fit_cmd->add_option("--jitter", jitter_policy, "'auto' (ladder) or a fixed value");
    fit_cmd->add_option("--parallelism", fit_parallelism, "worker threads");
    fit_cmd->add_option("--manifest", fit_manifest, "manifest path");

    // validate-mc
    auto* mc_cmd = app.add_subcommand("validate-mc",
                                      "compare finite-width moments against the kernel");
    std::string mc_config, mc_images, mc_images_labels, mc_out, mc_manifest;
    int channels = 512, num_images = 2, image_size = 5, readout_channels = 1;
    int mc_parallelism = default_parallelism;
    long long samples = 100000;
    unsigned long long mc_seed = 0;
    mc_cmd->add_option("--config", mc_config, "kernel configuration JSON")->required();
    mc_cmd->add_option("--channels", channels, "finite network width");
    mc_cmd->add_option("--samples", samples, "number of network draws");
    mc_cmd->add_option("--seed", mc_seed, "RNG seed");
    mc_cmd->add_option("--num-images", num_images, "number of input images");
    mc_cmd->add_option("--image-size", image_size, "side length of random inputs");
    mc_cmd->add_option("--images-idx", mc_images, "take inputs from an IDX image file");
    mc_cmd->add_option("--images-labels", mc_images_labels, "IDX labels for --images-idx");
    mc_cmd->add_option("--readout-channels", readout_channels, "readout units per draw");
    mc_cmd->add_option("--parallelism", mc_parallelism, "worker threads");
    mc_cmd->add_option("--out", mc_out, "write the report table here instead of stdout");
    mc_cmd->add_option("--manifest", mc_manifest, "manifest path");

    // search
    auto* search_cmd = app.add_subcommand("search", "random hyperparameter search");
    std::string search_space, search_out = "search-log.tsv", search_manifest;
    long long search_samples = 0;
    unsigned long long search_seed = 0;
    int search_parallelism = default_parallelism;
    DataFlags search_data;
    search_cmd->add_option("--samples", search_samples, "number of configurations to draw")
        ->required()
        ->check(CLI::PositiveNumber);
    search_data.add_to(search_cmd, /*with_test=*/false);
    search_cmd->add_option("--seed", search_seed, "RNG seed");
    search_cmd->add_option("--space", search_space, "JSON overrides for the search space");
    search_cmd->add_option("--parallelism", search_parallelism, "worker threads");
    search_cmd->add_option("--out", search_out, "search log path");
    search_cmd->add_option("--manifest", search_manifest, "manifest path");

    try {
        app.parse(argc, argv);
        if (*kernel_cmd) {
            return run_kernel(config_path, kernel_data, out_path, out_test_path, parallelism,
                              manifest_path);
        }
        if (*fit_cmd) {
            return run_fit_eval(fit_config, fit_data, fit_kxx, fit_ktest, jitter_policy,
                                fit_parallelism, fit_manifest);
        }
        if (*mc_cmd) {
            return run_validate_mc(mc_config, channels, samples, mc_seed, num_images,
                                   image_size, mc_images, mc_images_labels, readout_channels,
                                   mc_parallelism, mc_out, mc_manifest);
        }
        if (*search_cmd) {
            return run_search(search_samples, search_data, search_seed, search_space,
                              search_parallelism, search_out, search_manifest);
        }
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return int(ErrorCategory::kConfig);
    } catch (const convgp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return int(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
