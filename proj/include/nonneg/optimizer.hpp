#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nonneg/losses.hpp"

namespace nonneg {

// What gets optimized (and which ablation of the objective applies).
// no_norm / no_const / no_sim use the scalar affine parameterization.
enum class Variant {
    affine,
    per_channel_affine,
    per_pixel,
    heuristic,
    no_norm,
    no_const,
    no_sim,
};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);
LossVariant loss_variant_for(Variant v);

struct OptimConfig {
    double learning_rate = 0.05;
    int max_iters = 500;  // cap per Adam descent
    // A descent stops early when the total loss varies by less than
    // rel_tol (relative) across a trailing 10-iteration window.
    double rel_tol = 1e-6;
    double gamma = 1.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    Variant variant = Variant::affine;
    std::uint64_t seed = 0;
};

inline constexpr int kConvergenceWindow = 10;

struct RunMetrics {
    double n_psnr_db = 0.0;
    ViolationStats violations;
};

/// Outcome of one optimization (or heuristic) run. theta_final is the
/// best-loss iterate, not necessarily the last; for the per-pixel variant
/// the optimized target image itself is the parameter set.
struct RunResult {
    Theta theta_final;
    bool per_pixel = false;
    Image target;   // F at the returned iterate
    Image output;   // composed output at the returned iterate
    std::vector<LossBreakdown> loss_trace;
    int iterations_run = 0;
    bool converged = false;
    LossBreakdown final_loss;
    RunMetrics metrics;
    double runtime_ms = 0.0;
};

// Subgradient of the objective with respect to the affine parameters,
// laid out as [gains..., offsets...]. Conventions: the residual clamp
// passes gradient only strictly inside (0, beta); the normalization
// treats the per-channel argmin/argmax locations as fixed at the current
// iterate, ties going to the lowest flat index.
std::vector<double> loss_gradient(const Image& x, const Image& y,
                                  const Theta& theta,
                                  const DeviceParams& device,
                                  const OptimConfig& config);

// Same, with respect to every entry of a free target image.
std::vector<double> target_loss_gradient(const Image& x, const Image& y,
                                         const Image& target,
                                         const DeviceParams& device,
                                         const OptimConfig& config);

// Minimizes the objective and returns the lowest-loss iterate seen.
// Affine variants run Adam from the identity theta = (1, 0) plus a fixed
// set of extra starts (the loss is non-convex and a single descent can
// park in a side valley), then a shrinking-step pattern refinement from
// each descent's best point. The per-pixel variant is a single Adam
// descent from target = proposal. Fully deterministic. Throws
// std::invalid_argument on shape mismatch and std::runtime_error when the
// loss goes non-finite.
RunResult optimize(const Image& x, const Image& y, const DeviceParams& device,
                   const OptimConfig& config);

// Baseline wrapped in the same result type: theta = (1, 0), zero
// iterations, metrics computed on the clipped composition.
RunResult run_heuristic(const Image& x, const Image& y,
                        const DeviceParams& device, const OptimConfig& config);

struct GridSpec {
    double gain_min = 0.1;
    double gain_max = 2.0;
    double gain_step = 0.01;
    double offset_min = -1.0;
    double offset_max = 1.0;
    double offset_step = 0.01;
};

struct GridCell {
    double gain;
    double offset;
    LossBreakdown loss;
};

struct GridResult {
    Theta argmin;
    LossBreakdown min_loss;
    std::vector<GridCell> surface;  // row-major: gain outer, offset inner
};

// Exhaustive evaluation of the objective over a theta grid. Verification
// oracle for the gradient path, and the data behind loss-landscape plots.
GridResult grid_oracle(const Image& x, const Image& y,
                       const DeviceParams& device, double gamma,
                       const GridSpec& grid,
                       LossVariant variant = LossVariant::full);

struct SweepMethodResult {
    std::string method;  // "affine" or "heuristic"
    Theta theta;
    double n_psnr_db = 0.0;
    ViolationStats violations;
    LossBreakdown final_loss;
};

struct SweepPoint {
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<SweepMethodResult> methods;  // ordered by method name
};

// Runs optimize and the heuristic at each alpha with the see-through
// coupling beta = 1 - alpha.
std::vector<SweepPoint> alpha_sweep(const Image& x, const Image& y,
                                    const std::vector<double>& alphas,
                                    const OptimConfig& config);

}  // namespace nonneg
