#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "nonneg/image.hpp"

namespace nonneg {
namespace {

const unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

std::uint32_t read_u32be(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void append_u32be(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>(v & 0xff));
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a);
    const int pb = std::abs(p - b);
    const int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

Image load_png(const std::vector<unsigned char>& bytes, const std::string& path) {
    if (bytes.size() < 8 + 25) throw IoError("truncated PNG: " + path);

    std::size_t pos = 8;
    bool have_header = false;
    std::uint32_t width = 0, height = 0;
    int channels = 0;
    std::vector<unsigned char> idat;

    while (pos + 12 <= bytes.size()) {
        const std::uint32_t len = read_u32be(&bytes[pos]);
        if (pos + 12 + len > bytes.size())
            throw IoError("truncated PNG chunk: " + path);
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const unsigned char* data = &bytes[pos + 8];

        const std::uint32_t stored_crc = read_u32be(&bytes[pos + 8 + len]);
        std::uint32_t crc = crc32(0L, Z_NULL, 0);
        crc = crc32(crc, &bytes[pos + 4], len + 4);
        if (crc != stored_crc) throw IoError("PNG CRC mismatch: " + path);

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw IoError("malformed IHDR: " + path);
            width = read_u32be(data);
            height = read_u32be(data + 4);
            const int bit_depth = data[8];
            const int color_type = data[9];
            if (data[10] != 0 || data[11] != 0)
                throw IoError("unsupported PNG compression/filter method: " + path);
            if (data[12] != 0)
                throw IoError("unsupported interlaced PNG: " + path);
            if (bit_depth != 8)
                throw IoError("unsupported bit depth " + std::to_string(bit_depth) +
                              " (only 8-bit supported): " + path);
            switch (color_type) {
                case 0: channels = 1; break;
                case 2: channels = 3; break;
                case 4:
                case 6: throw IoError("alpha channel unsupported: " + path);
                case 3: throw IoError("palette PNG unsupported: " + path);
                default:
                    throw IoError("unsupported PNG color type " +
                                  std::to_string(color_type) + ": " + path);
            }
            if (width == 0 || height == 0)
                throw IoError("empty PNG image: " + path);
            have_header = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (!have_header) throw IoError("missing IHDR: " + path);
    if (idat.empty()) throw IoError("missing IDAT: " + path);

    const std::size_t stride = std::size_t(width) * channels;
    const std::size_t raw_size = (stride + 1) * height;
    std::vector<unsigned char> raw(raw_size);
    uLongf dest_len = raw_size;
    const int rc = uncompress(raw.data(), &dest_len, idat.data(),
                              static_cast<uLong>(idat.size()));
    if (rc != Z_OK || dest_len != raw_size)
        throw IoError("corrupt PNG pixel data: " + path);

    // Undo the per-scanline filters; bytes-per-pixel equals channel count
    // at 8-bit depth.
    const int bpp = channels;
    std::vector<unsigned char> pixels(stride * height);
    for (std::uint32_t row = 0; row < height; ++row) {
        const unsigned char filter = raw[row * (stride + 1)];
        const unsigned char* src = &raw[row * (stride + 1) + 1];
        unsigned char* cur = &pixels[row * stride];
        const unsigned char* prev = row > 0 ? &pixels[(row - 1) * stride] : nullptr;
        for (std::size_t i = 0; i < stride; ++i) {
            const int left = i >= std::size_t(bpp) ? cur[i - bpp] : 0;
            const int up = prev ? prev[i] : 0;
            const int upleft = (prev && i >= std::size_t(bpp)) ? prev[i - bpp] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += left; break;
                case 2: v += up; break;
                case 3: v += (left + up) / 2; break;
                case 4: v += paeth(left, up, upleft); break;
                default: throw IoError("unsupported PNG filter type: " + path);
            }
            cur[i] = static_cast<unsigned char>(v & 0xff);
        }
    }

    Image img(static_cast<int>(height), static_cast<int>(width), channels);
    for (std::size_t p = 0; p < img.size(); ++p)
        img.data[p] = pixels[p] / 255.0;
    return img;
}

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& data) {
    append_u32be(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t type_pos = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, &out[type_pos], static_cast<uInt>(4 + data.size()));
    append_u32be(out, crc);
}

unsigned char quantize(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(c * 255.0));
}

void save_png(const Image& img, const std::string& path) {
    const std::size_t stride = std::size_t(img.width) * img.channels;
    std::vector<unsigned char> raw((stride + 1) * img.height);
    for (int row = 0; row < img.height; ++row) {
        unsigned char* dst = &raw[std::size_t(row) * (stride + 1)];
        *dst++ = 0;  // filter: none
        const std::size_t base = std::size_t(row) * stride;
        for (std::size_t i = 0; i < stride; ++i)
            dst[i] = quantize(img.data[base + i]);
    }

    uLongf comp_cap = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> comp(comp_cap);
    if (compress2(comp.data(), &comp_cap, raw.data(),
                  static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw IoError("PNG compression failed: " + path);
    comp.resize(comp_cap);

    std::vector<unsigned char> ihdr;
    append_u32be(ihdr, static_cast<std::uint32_t>(img.width));
    append_u32be(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);                                  // bit depth
    ihdr.push_back(img.channels == 1 ? 0 : 2);          // gray / RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);

    std::vector<unsigned char> out(kPngSignature, kPngSignature + 8);
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", comp);
    append_chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write file: " + path);
    f.write(reinterpret_cast<const char*>(out.data()),
            static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("cannot write file: " + path);
}

// --- PNM (PGM/PPM) -------------------------------------------------------

struct PnmReader {
    const std::vector<unsigned char>& bytes;
    std::size_t pos = 0;
    const std::string& path;

    void skip_space_and_comments() {
        while (pos < bytes.size()) {
            if (std::isspace(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    }

    long next_int() {
        skip_space_and_comments();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            throw IoError("malformed PNM header: " + path);
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 30) throw IoError("malformed PNM header: " + path);
            ++pos;
        }
        return v;
    }
};

Image load_pnm(const std::vector<unsigned char>& bytes, const std::string& path) {
    const char magic = static_cast<char>(bytes[1]);
    const bool plain = magic == '2' || magic == '3';
    const int channels = (magic == '2' || magic == '5') ? 1 : 3;

    PnmReader r{bytes, 2, path};
    const long width = r.next_int();
    const long height = r.next_int();
    const long maxval = r.next_int();
    if (width <= 0 || height <= 0)
        throw IoError("empty PNM image: " + path);
    if (maxval != 255)
        throw IoError("unsupported maxval " + std::to_string(maxval) +
                      " (only 8-bit, maxval 255, supported): " + path);

    Image img(static_cast<int>(height), static_cast<int>(width), channels);
    const std::size_t n = img.size();
    if (plain) {
        for (std::size_t p = 0; p < n; ++p) {
            const long v = r.next_int();
            if (v > 255) throw IoError("sample out of range in " + path);
            img.data[p] = v / 255.0;
        }
    } else {
        // Binary payload starts after exactly one whitespace byte.
        if (r.pos >= bytes.size() || !std::isspace(bytes[r.pos]))
            throw IoError("malformed PNM header: " + path);
        ++r.pos;
        if (bytes.size() - r.pos < n)
            throw IoError("truncated PNM pixel data: " + path);
        for (std::size_t p = 0; p < n; ++p)
            img.data[p] = bytes[r.pos + p] / 255.0;
    }
    return img;
}

void save_pnm(const Image& img, const std::string& path) {
    std::ostringstream header;
    header << (img.channels == 1 ? "P5" : "P6") << "\n"
           << img.width << " " << img.height << "\n255\n";
    const std::string h = header.str();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write file: " + path);
    f.write(h.data(), static_cast<std::streamsize>(h.size()));
    std::vector<unsigned char> pixels(img.size());
    for (std::size_t p = 0; p < img.size(); ++p)
        pixels[p] = quantize(img.data[p]);
    f.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
    if (!f) throw IoError("cannot write file: " + path);
}

std::string lower_ext(const std::string& path) {
    const std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

}  // namespace

Image load_image(const std::string& path) {
    const std::vector<unsigned char> bytes = read_file(path);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0)
        return load_png(bytes, path);
    if (bytes.size() >= 2 && bytes[0] == 'P' &&
        (bytes[1] == '2' || bytes[1] == '3' || bytes[1] == '5' || bytes[1] == '6'))
        return load_pnm(bytes, path);
    throw IoError("unsupported raster format: " + path);
}

void save_image(const Image& img, const std::string& path) {
    if (img.empty()) throw std::invalid_argument("save_image: empty image");
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("save_image: unsupported channel count " +
                                    std::to_string(img.channels));
    const std::string ext = lower_ext(path);
    if (ext == ".png") {
        save_png(img, path);
    } else if (ext == ".pgm") {
        if (img.channels != 1)
            throw IoError("PGM requires a single channel: " + path);
        save_pnm(img, path);
    } else if (ext == ".ppm") {
        if (img.channels != 3)
            throw IoError("PPM requires three channels: " + path);
        save_pnm(img, path);
    } else if (ext == ".pnm") {
        save_pnm(img, path);
    } else {
        throw IoError("unsupported file extension for " + path);
    }
}

}  // namespace nonneg
