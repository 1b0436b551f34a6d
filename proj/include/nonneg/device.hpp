#pragma once

#include <vector>

#include "nonneg/image.hpp"

namespace nonneg {

// Lower bound enforced on the contrast gain theta1 (projection after each
// optimizer step). Negative gain inverts the image, which the range
// normalization is not invariant to.
inline constexpr double kGainEpsilon = 1e-3;

/// Optical combiner: fraction `alpha` of scene light passes through, and
/// the display can add at most `beta` per pixel. In the see-through
/// configuration beta is tied to 1 - alpha.
struct DeviceParams {
    double alpha;
    double beta;

    DeviceParams(double alpha_, double beta_);

    // See-through coupling: beta = 1 - alpha.
    static DeviceParams ost(double alpha_);
};

/// Affine re-targeting parameters: target = gain * proposal + offset.
/// Scalar by default; per_channel switches to one (gain, offset) pair per
/// color channel.
struct Theta {
    std::vector<double> gain;     // theta1
    std::vector<double> offset;   // theta2
    bool per_channel = false;

    static Theta identity();
    static Theta identity_per_channel(int channels);

    double gain_at(int c) const { return gain[per_channel ? c : 0]; }
    double offset_at(int c) const { return offset[per_channel ? c : 0]; }
    int param_count() const { return static_cast<int>(gain.size() + offset.size()); }
};

// F: elementwise gain * y + offset, unclamped.
Image affine_target(const Image& y, const Theta& theta);

// target - alpha * x, unclamped. Entries outside [0, beta] are exactly
// what the soft constraint penalizes.
Image residual(const Image& x, const Image& target, const DeviceParams& device);

// clamp(target - alpha*x, 0, beta) + alpha*x. The result is nudged by at
// most one ulp so that recomputing output - alpha*x always lands inside
// [0, beta], clamp rounding included.
Image compose_output(const Image& x, const Image& target,
                     const DeviceParams& device);

// Clip-the-difference baseline: compose_output with the raw proposal as
// target, no optimization.
Image heuristic_baseline(const Image& x, const Image& y,
                         const DeviceParams& device);

}  // namespace nonneg
