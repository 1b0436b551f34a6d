#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nonneg {

// Channels with a dynamic range below this are treated as constant by
// normalize() and map to all-zeros instead of dividing by ~0.
inline constexpr double kRangeEpsilon = 1e-6;

/// Thrown for unreadable/unwritable files and malformed raster data.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Row-major interleaved pixel buffer of linear intensities.
///
/// Values loaded from files are in [0,1]; intermediate results may leave
/// that range (affine targets are deliberately unclamped).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;            // 1 (gray) or 3 (RGB)
    std::vector<double> data;    // size height*width*channels

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    double& at(int i, int j, int c) {
        return data[(static_cast<std::size_t>(i) * width + j) * channels + c];
    }
    double at(int i, int j, int c) const {
        return data[(static_cast<std::size_t>(i) * width + j) * channels + c];
    }

    bool same_shape(const Image& other) const {
        return height == other.height && width == other.width &&
               channels == other.channels;
    }
};

/// Per-channel extrema.
struct ChannelStats {
    std::vector<double> min;
    std::vector<double> max;
};

// File I/O. Formats: 8-bit PNG (gray/RGB, no alpha, no palette) and
// PGM/PPM (plain P2/P3 or binary P5/P6, maxval 255). Byte <-> intensity
// convention is exactly v/255 on load and round(clamp(v,0,1)*255) on save.
Image load_image(const std::string& path);
void save_image(const Image& img, const std::string& path);

ChannelStats channel_stats(const Image& img);

// Dynamic-range stretch, independently per channel:
//   (v - min) / (max - min),
// or identically zero for a channel whose range is below kRangeEpsilon.
// Invariant under per-channel positive affine maps of the input.
Image normalize(const Image& img);

// Elementwise helpers used across the pipeline. All require matching
// shapes and keep a fixed left-to-right evaluation order.
Image clamp_image(const Image& img, double lo, double hi);

inline void require_same_shape(const Image& a, const Image& b,
                               const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string("dimension mismatch in ") +
                                    what);
}

}  // namespace nonneg
