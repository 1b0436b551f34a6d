#include "nonneg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nonneg {

double perceptual_loss(const Image& a, const Image& b, bool normalized) {
    require_same_shape(a, b, "perceptual_loss");
    double acc = 0.0;
    if (normalized) {
        const Image na = normalize(a);
        const Image nb = normalize(b);
        for (std::size_t p = 0; p < na.size(); ++p) {
            const double d = na.data[p] - nb.data[p];
            acc += d * d;
        }
    } else {
        for (std::size_t p = 0; p < a.size(); ++p) {
            const double d = a.data[p] - b.data[p];
            acc += d * d;
        }
    }
    return acc / static_cast<double>(a.size());
}

double soft_constraint_loss(const Image& r, double lo, double hi, double gamma) {
    if (lo > hi)
        throw std::invalid_argument("soft_constraint_loss: lo > hi");
    if (gamma < 0.0)
        throw std::invalid_argument("soft_constraint_loss: negative gamma");
    double acc = 0.0;
    for (const double v : r.data)
        acc += std::abs(std::clamp(v, lo, hi) - v);
    return gamma * acc / static_cast<double>(r.size());
}

LossBreakdown objective_for_target(const Image& x, const Image& y,
                                   const Image& target,
                                   const DeviceParams& device, double gamma,
                                   LossVariant variant) {
    require_same_shape(x, y, "objective");
    require_same_shape(x, target, "objective");
    LossBreakdown out;
    if (variant != LossVariant::no_sim) {
        const Image output = compose_output(x, target, device);
        out.sim = perceptual_loss(output, y, variant != LossVariant::no_norm);
    }
    if (variant != LossVariant::no_const) {
        const Image r = residual(x, target, device);
        out.constr = soft_constraint_loss(r, 0.0, device.beta, gamma);
    }
    out.total = out.sim + out.constr;
    return out;
}

LossBreakdown objective(const Image& x, const Image& y, const Theta& theta,
                        const DeviceParams& device, double gamma,
                        LossVariant variant) {
    return objective_for_target(x, y, affine_target(y, theta), device, gamma,
                                variant);
}

double n_psnr(const Image& a, const Image& b) {
    const double mse = perceptual_loss(a, b, /*normalized=*/true);
    if (mse < 1e-10) return 99.0;
    return std::min(10.0 * std::log10(1.0 / mse), 99.0);
}

ViolationStats violation_stats(const Image& r, double lo, double hi) {
    if (lo > hi)
        throw std::invalid_argument("violation_stats: lo > hi");
    ViolationStats s;
    std::size_t outside = 0;
    double acc = 0.0;
    for (const double v : r.data) {
        const double d = std::abs(std::clamp(v, lo, hi) - v);
        if (d > 0.0) ++outside;
        acc += d;
        s.max_magnitude = std::max(s.max_magnitude, d);
    }
    s.fraction = static_cast<double>(outside) / static_cast<double>(r.size());
    s.mean_magnitude = acc / static_cast<double>(r.size());
    return s;
}

}  // namespace nonneg
