#pragma once

#include <span>
#include <vector>

#include "convgp/arch.hpp"
#include "convgp/types.hpp"

namespace convgp {

/// The three diagonal covariance vectors of one layer's activations for an
/// input pair (X, X'): Cov at corresponding spatial positions for (X,X),
/// (X,X') and (X',X'). This is the only state the kernel recursion carries,
/// so the per-pair memory footprint stays linear in the feature-map size.
struct KernelTriple {
    int h = 0;
    int w = 0;
    std::vector<double> xx, xy, yy;

    KernelTriple() = default;
    KernelTriple(int h_, int w_)
        : h(h_), w(w_), xx(size_t(h_) * w_, 0.0), xy(size_t(h_) * w_, 0.0),
          yy(size_t(h_) * w_, 0.0) {}

    size_t size() const { return size_t(h) * w; }
};

/// Validates non-negative diagonals and the Cauchy-Schwarz bound
/// |kxy| <= sqrt(kxx*kyy) with absolute-plus-relative floating point slack.
/// Throws NumericError on violation.
void check_triple(const KernelTriple& t);

/// E[relu(a) relu(a')] for bivariate centered Gaussians described per
/// position by the triple. The prefactor is 1/(2pi) in standard mode; the
/// paper-literal mode keeps 1/pi for formula-level comparisons.
/// Positions with kxx*kyy == 0 yield 0.
std::vector<double> relu_expectation(const KernelTriple& t, ReluPrefactor prefactor);

/// E[erf(a) erf(a')] = (2/pi) asin(2 kxy / sqrt((1+2 kxx)(1+2 kyy))).
std::vector<double> erf_expectation(const KernelTriple& t);

/// One track of the covariance recursion: out[mu] = bias + scale * (sum of v
/// over the mu-th patch), with zero-padded positions contributing nothing.
/// Implemented as a sliding-window sum over a 2-D prefix table, O(h*w).
std::vector<double> patch_sum_propagate(std::span<const double> v, const ConvGeometry& geometry,
                                        double bias, double scale);

/// First-layer covariance from raw pixels.
KernelTriple input_kernel(const Image& x, const Image& xp, const Hyperparameters& hyper,
                          const LayerSpec& first_layer);

/// Elementwise sum of two triples (the additive identity path of a skip).
KernelTriple residual_combine(const KernelTriple& current, const KernelTriple& skip);

struct EvalOptions {
    bool record_history = false;             // keep every layer triple (tests)
    bool zero_skip_contributions = false;    // drop the identity path at skip layers
    bool zero_branch_at_skip_layers = false; // drop the conv branch at skip layers
};

struct EvalResult {
    double kxx = 0.0;
    double kxy = 0.0;
    double kyy = 0.0;
    std::vector<KernelTriple> history;  // one triple per level when recorded
};

/// Evaluates the ConvNet/ResNet GP kernel for image pairs. Bound to one
/// (architecture, hyperparameters, input shape); evaluation itself is pure
/// and thread-safe, with all mutable scratch in a per-worker Workspace.
class KernelEvaluator {
public:
    KernelEvaluator(ArchitectureSpec arch, Hyperparameters hyper, int channels, int in_h,
                    int in_w);

    /// Scratch buffers for one worker. Sized once for the architecture; the
    /// total allocation is the evaluation-time memory high-water mark.
    class Workspace {
    public:
        explicit Workspace(const KernelEvaluator& eval);
        size_t allocated_doubles() const { return allocated_doubles_; }

    private:
        friend class KernelEvaluator;
        std::vector<double> cur_[3], v_[3], next_[3];
        std::vector<double> prefix_;
        std::vector<double> prod_;
        std::vector<KernelTriple> retained_;  // slot per pending skip target
        size_t allocated_doubles_ = 0;
    };

    EvalResult evaluate(const Image& x, const Image& xp, Workspace& ws,
                        const EvalOptions& options = {}) const;
    EvalResult evaluate(const Image& x, const Image& xp, const EvalOptions& options = {}) const;

    /// k(X, X'): the scalar cross-covariance of the readout.
    double kernel(const Image& x, const Image& xp) const;

    /// Geometry per level; the last entry is the dense readout realized as a
    /// full-extent filter.
    const std::vector<ConvGeometry>& geometries() const { return geometries_; }
    const ArchitectureSpec& arch() const { return arch_; }
    const Hyperparameters& hyper() const { return hyper_; }
    int channels() const { return channels_; }

private:
    ArchitectureSpec arch_;
    Hyperparameters hyper_;
    int channels_;
    int in_h_, in_w_;
    std::vector<ConvGeometry> geometries_;
    // retain_slot_[level] >= 0 names the workspace slot holding that level's
    // triple while a later skip still needs it; -1 means not retained.
    std::vector<int> retain_slot_;
    std::vector<int> retain_users_;  // how many skips read each slot

    void expectation_tracks(const std::vector<double>* cur, std::vector<double>* v,
                            size_t n) const;
};

/// Gram of one dataset with itself: upper triangle computed, mirrored.
GramMatrix gram_symmetric(std::span<const Image> images, const KernelEvaluator& eval,
                          int parallelism);

/// Rectangular Gram between two datasets: entry (i, j) = k(rows[i], cols[j]).
GramMatrix gram_cross(std::span<const Image> rows, std::span<const Image> cols,
                      const KernelEvaluator& eval, int parallelism);

/// Dispatcher matching the module-level operation: uses the symmetric path
/// when both arguments are the same dataset. Results are bitwise independent
/// of the parallelism level.
GramMatrix gram_matrix(std::span<const Image> a, std::span<const Image> b,
                       const ArchitectureSpec& arch, const Hyperparameters& hyper,
                       int parallelism);

}  // namespace convgp
