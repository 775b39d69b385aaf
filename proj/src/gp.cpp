#include "convgp/gp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace convgp {

namespace {

using MatrixMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                  Eigen::RowMajor>>;

void require_square_symmetric(const GramMatrix& k) {
    if (k.rows != k.cols) throw NumericError("solve: gram matrix is not square");
    for (size_t i = 0; i < k.rows; ++i) {
        for (size_t j = i + 1; j < k.cols; ++j) {
            const double a = k.at(i, j), b = k.at(j, i);
            const double scale = std::max({std::abs(a), std::abs(b), 1.0});
            if (std::abs(a - b) > 1e-12 * scale) {
                throw NumericError("solve: gram matrix is not symmetric");
            }
        }
    }
}

double mean_diagonal(const GramMatrix& k) {
    double sum = 0.0;
    for (size_t i = 0; i < k.rows; ++i) sum += k.at(i, i);
    return k.rows > 0 ? sum / double(k.rows) : 0.0;
}

}  // namespace

TargetMatrix encode_targets(std::span<const int> labels, int num_classes) {
    if (num_classes < 1) throw ConfigError("encode targets: num_classes must be >= 1");
    TargetMatrix y;
    y.rows = labels.size();
    y.classes = size_t(num_classes);
    y.values.assign(y.rows * y.classes, -1.0);
    for (size_t n = 0; n < labels.size(); ++n) {
        if (labels[n] < 0 || labels[n] >= num_classes) {
            throw DataError("encode targets: label " + std::to_string(labels[n]) +
                            " outside [0, " + std::to_string(num_classes) + ")");
        }
        y.values[n * y.classes + size_t(labels[n])] = 1.0;
    }
    return y;
}

std::optional<SolveResult> solve(const GramMatrix& kxx, const TargetMatrix& y, double jitter) {
    require_square_symmetric(kxx);
    if (y.rows != kxx.rows) throw NumericError("solve: target rows do not match gram size");
    if (jitter < 0.0) throw NumericError("solve: jitter must be >= 0");

    const Eigen::Index n = Eigen::Index(kxx.rows);
    const Eigen::Index c = Eigen::Index(y.classes);
    MatrixMap k_map(kxx.values.data(), n, n);
    MatrixMap y_map(y.values.data(), n, c);

    Eigen::MatrixXd regularized = k_map;
    regularized.diagonal().array() += jitter;

    Eigen::LLT<Eigen::MatrixXd> llt(regularized);
    if (llt.info() != Eigen::Success) return std::nullopt;

    Eigen::MatrixXd alpha = llt.solve(y_map);
    const double residual = (regularized * alpha - y_map).cwiseAbs().maxCoeff();
    const double y_scale = y_map.cwiseAbs().maxCoeff();
    if (!(residual <= 1e-6 * y_scale)) return std::nullopt;

    SolveResult result;
    result.rows = kxx.rows;
    result.classes = y.classes;
    result.jitter = jitter;
    result.residual_inf = residual;
    result.coefficients.resize(result.rows * result.classes);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        result.coefficients.data(), n, c) = alpha;
    return result;
}

SolveResult solve_with_jitter_ladder(const GramMatrix& kxx, const TargetMatrix& y) {
    const double diag = mean_diagonal(kxx);
    if (!(diag > 0.0)) throw NumericError("solve: gram diagonal is not positive");
    const double ceiling = 1e-2 * diag;
    for (double jitter = 1e-10 * diag; jitter <= ceiling * (1.0 + 1e-12); jitter *= 10.0) {
        if (auto result = solve(kxx, y, jitter)) return *result;
    }
    throw NumericError("solve: jitter ladder exhausted at ceiling 1e-2 * mean(diag)");
}

std::vector<int> predict(const GramMatrix& k_star, const SolveResult& alpha) {
    if (k_star.cols != alpha.rows) {
        throw NumericError("predict: gram columns do not match coefficient rows");
    }
    const Eigen::Index t = Eigen::Index(k_star.rows);
    const Eigen::Index n = Eigen::Index(alpha.rows);
    const Eigen::Index c = Eigen::Index(alpha.classes);
    MatrixMap k_map(k_star.values.data(), t, n);
    MatrixMap a_map(alpha.coefficients.data(), n, c);
    const Eigen::MatrixXd scores = k_map * a_map;

    std::vector<int> labels(static_cast<size_t>(t));
    for (Eigen::Index i = 0; i < t; ++i) {
        int best = 0;
        double best_score = scores(i, 0);
        for (Eigen::Index j = 1; j < c; ++j) {
            if (scores(i, j) > best_score) {
                best_score = scores(i, j);
                best = int(j);
            }
        }
        labels[size_t(i)] = best;
    }
    return labels;
}

double error_rate(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) {
        throw DataError("error rate: prediction and truth lengths differ");
    }
    if (predicted.empty()) return 0.0;
    size_t wrong = 0;
    for (size_t i = 0; i < predicted.size(); ++i) wrong += predicted[i] != truth[i];
    return double(wrong) / double(predicted.size());
}

}  // namespace convgp
