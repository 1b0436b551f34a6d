#pragma once

#include <unistd.h>
#include <zlib.h>

#include <atomic>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "nonneg/image.hpp"

namespace testsupport {

inline nonneg::Image make_image(int h, int w, int c,
                                std::initializer_list<double> values) {
    nonneg::Image img(h, w, c);
    std::size_t p = 0;
    for (const double v : values) img.data[p++] = v;
    return img;
}

inline nonneg::Image random_image(std::mt19937_64& rng, int h, int w, int c,
                                  double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    nonneg::Image img(h, w, c);
    for (double& v : img.data) v = dist(rng);
    return img;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("nonneg_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::filesystem::path path() const { return path_; }
    std::string file(const std::string& name) const {
        return (path_ / name).string();
    }

private:
    std::filesystem::path path_;
};

inline void write_bytes(const std::string& path,
                        const std::vector<unsigned char>& bytes) {
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<unsigned char> read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(f)),
                                      std::istreambuf_iterator<char>());
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

// ---- independent PNG construction (fixture oracle) ------------------------
// Assembles PNG bytes directly from chunk primitives so loader tests do not
// depend on the production encoder. `scanlines` must already carry one
// leading filter byte per row.

inline void png_u32be(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

inline void png_chunk(std::vector<unsigned char>& out, const char type[4],
                      const std::vector<unsigned char>& data) {
    png_u32be(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t at = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, &out[at], static_cast<uInt>(4 + data.size()));
    png_u32be(out, crc);
}

inline std::vector<unsigned char> craft_png(std::uint32_t width,
                                            std::uint32_t height,
                                            int bit_depth, int color_type,
                                            const std::vector<unsigned char>& scanlines) {
    std::vector<unsigned char> idat(compressBound(static_cast<uLong>(scanlines.size())));
    uLongf len = idat.size();
    compress2(idat.data(), &len, scanlines.data(),
              static_cast<uLong>(scanlines.size()), 6);
    idat.resize(len);

    std::vector<unsigned char> ihdr;
    png_u32be(ihdr, width);
    png_u32be(ihdr, height);
    ihdr.push_back(static_cast<unsigned char>(bit_depth));
    ihdr.push_back(static_cast<unsigned char>(color_type));
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);

    std::vector<unsigned char> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    png_chunk(out, "IHDR", ihdr);
    png_chunk(out, "IDAT", idat);
    png_chunk(out, "IEND", {});
    return out;
}

}  // namespace testsupport
