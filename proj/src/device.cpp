#include "nonneg/device.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nonneg {

DeviceParams::DeviceParams(double alpha_, double beta_)
    : alpha(alpha_), beta(beta_) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha must be in [0, 1], got " +
                                    std::to_string(alpha_));
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::invalid_argument("beta must be in [0, 1], got " +
                                    std::to_string(beta_));
}

DeviceParams DeviceParams::ost(double alpha_) {
    return DeviceParams(alpha_, 1.0 - alpha_);
}

Theta Theta::identity() {
    Theta t;
    t.gain = {1.0};
    t.offset = {0.0};
    t.per_channel = false;
    return t;
}

Theta Theta::identity_per_channel(int channels) {
    Theta t;
    t.gain.assign(channels, 1.0);
    t.offset.assign(channels, 0.0);
    t.per_channel = true;
    return t;
}

Image affine_target(const Image& y, const Theta& theta) {
    if (y.empty()) throw std::invalid_argument("affine_target: empty image");
    if (theta.per_channel &&
        static_cast<int>(theta.gain.size()) != y.channels)
        throw std::invalid_argument(
            "affine_target: per-channel theta length does not match channels");
    Image out(y.height, y.width, y.channels);
    const int c = y.channels;
    for (std::size_t p = 0; p < y.size(); ++p) {
        const int ch = static_cast<int>(p % c);
        out.data[p] = theta.gain_at(ch) * y.data[p] + theta.offset_at(ch);
    }
    return out;
}

Image residual(const Image& x, const Image& target, const DeviceParams& device) {
    require_same_shape(x, target, "residual");
    Image out(x.height, x.width, x.channels);
    for (std::size_t p = 0; p < x.size(); ++p)
        out.data[p] = target.data[p] - device.alpha * x.data[p];
    return out;
}

Image compose_output(const Image& x, const Image& target,
                     const DeviceParams& device) {
    require_same_shape(x, target, "compose_output");
    Image out(x.height, x.width, x.channels);
    for (std::size_t p = 0; p < x.size(); ++p) {
        const double ax = device.alpha * x.data[p];
        const double applied = std::clamp(target.data[p] - ax, 0.0, device.beta);
        double o = ax + applied;
        // Rounding in ax + applied can push the recomputed o - ax a hair
        // past beta; step down until the applied band holds exactly.
        while (o - ax > device.beta)
            o = std::nextafter(o, -HUGE_VAL);
        out.data[p] = o;
    }
    return out;
}

Image heuristic_baseline(const Image& x, const Image& y,
                         const DeviceParams& device) {
    require_same_shape(x, y, "heuristic_baseline");
    return compose_output(x, y, device);
}

}  // namespace nonneg
