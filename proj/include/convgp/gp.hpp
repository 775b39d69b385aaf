#pragma once

#include <optional>
#include <span>
#include <vector>

#include "convgp/types.hpp"

namespace convgp {

/// Regression targets in {-1, +1}: one +1 per row at the class index.
struct TargetMatrix {
    size_t rows = 0;
    size_t classes = 0;
    std::vector<double> values;  // row-major

    double at(size_t n, size_t c) const { return values[n * classes + c]; }
};

TargetMatrix encode_targets(std::span<const int> labels, int num_classes);

struct SolveResult {
    std::vector<double> coefficients;  // rows x classes, row-major
    size_t rows = 0;
    size_t classes = 0;
    double jitter = 0.0;
    double residual_inf = 0.0;  // ||(K + jI) alpha - Y||_inf
};

/// Solves (K + jitter*I) alpha = Y with a symmetric positive-definite
/// factorization. Returns nothing when the factorization fails or the
/// residual exceeds 1e-6 * ||Y||_inf.
std::optional<SolveResult> solve(const GramMatrix& kxx, const TargetMatrix& y, double jitter);

/// Retry ladder for the noiseless-target solve: jitter starts at
/// 1e-10 * mean(diag K) and escalates tenfold up to 1e-2 * mean(diag K).
/// Throws NumericError when the ceiling is exceeded.
SolveResult solve_with_jitter_ladder(const GramMatrix& kxx, const TargetMatrix& y);

/// Row-wise argmax of K_star * alpha; ties break toward the smallest class.
std::vector<int> predict(const GramMatrix& k_star, const SolveResult& alpha);

double error_rate(std::span<const int> predicted, std::span<const int> truth);

}  // namespace convgp
