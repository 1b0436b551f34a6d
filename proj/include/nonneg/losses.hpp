#pragma once

#include "nonneg/device.hpp"
#include "nonneg/image.hpp"

namespace nonneg {

// Ablation switches for the combined objective.
enum class LossVariant {
    full,      // normalized similarity + soft constraint
    no_norm,   // similarity on raw intensities
    no_const,  // constraint term dropped
    no_sim,    // similarity term dropped
};

struct LossBreakdown {
    double sim = 0.0;     // perceptual term
    double constr = 0.0;  // constraint term, gamma included
    double total = 0.0;   // sim + constr
};

/// How far a residual image sits outside the feasible band.
/// fraction counts entries strictly outside [lo, hi]; magnitudes are clamp
/// distances averaged/maxed over ALL entries.
struct ViolationStats {
    double fraction = 0.0;
    double mean_magnitude = 0.0;
    double max_magnitude = 0.0;
};

// Mean squared error between normalize(a) and normalize(b), or between the
// raw images when `normalized` is false. Mean over all entries, so the
// value is resolution-independent.
double perceptual_loss(const Image& a, const Image& b, bool normalized);

// gamma * mean(|clamp(r, lo, hi) - r|). Zero exactly when every entry of r
// is inside [lo, hi].
double soft_constraint_loss(const Image& r, double lo, double hi, double gamma);

// Combined objective at the given theta: the similarity term is evaluated
// on the composed (physically realizable) output against the proposal, the
// constraint term on the unclamped residual.
LossBreakdown objective(const Image& x, const Image& y, const Theta& theta,
                        const DeviceParams& device, double gamma,
                        LossVariant variant);

// Same objective for an arbitrary target image (per-pixel variant).
LossBreakdown objective_for_target(const Image& x, const Image& y,
                                   const Image& target,
                                   const DeviceParams& device, double gamma,
                                   LossVariant variant);

// PSNR between normalized images, in dB, capped at 99.
double n_psnr(const Image& a, const Image& b);

ViolationStats violation_stats(const Image& r, double lo, double hi);

}  // namespace nonneg
