#include "nonneg/image.hpp"

#include <algorithm>

namespace nonneg {

ChannelStats channel_stats(const Image& img) {
    if (img.empty())
        throw std::invalid_argument("channel_stats: empty image");
    const int c = img.channels;
    ChannelStats stats;
    stats.min.assign(c, 0.0);
    stats.max.assign(c, 0.0);
    for (int ch = 0; ch < c; ++ch) {
        double lo = img.data[ch];
        double hi = img.data[ch];
        for (std::size_t p = ch; p < img.size(); p += c) {
            const double v = img.data[p];
            if (v < lo) lo = v;
            if (v > hi) hi = v;
        }
        stats.min[ch] = lo;
        stats.max[ch] = hi;
    }
    return stats;
}

Image normalize(const Image& img) {
    const ChannelStats stats = channel_stats(img);
    Image out(img.height, img.width, img.channels);
    const int c = img.channels;
    for (int ch = 0; ch < c; ++ch) {
        const double lo = stats.min[ch];
        const double range = stats.max[ch] - lo;
        if (range < kRangeEpsilon) {
            // Constant channel: no contrast to stretch, map to zeros.
            for (std::size_t p = ch; p < img.size(); p += c)
                out.data[p] = 0.0;
        } else {
            for (std::size_t p = ch; p < img.size(); p += c)
                out.data[p] = (img.data[p] - lo) / range;
        }
    }
    return out;
}

Image clamp_image(const Image& img, double lo, double hi) {
    Image out = img;
    for (double& v : out.data) v = std::clamp(v, lo, hi);
    return out;
}

}  // namespace nonneg
