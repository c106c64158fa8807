#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "xpf/errors.hpp"
#include "xpf/image.hpp"

namespace xpf {

namespace {

template <typename T>
void write_bytes(const std::filesystem::path& path, const std::vector<T>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(T)));
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

template <typename T>
std::vector<T> read_bytes(const std::filesystem::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != count * sizeof(T)) {
        throw IoError(path.string() + ": expected " + std::to_string(count * sizeof(T)) + " bytes, found " +
                      std::to_string(bytes));
    }
    in.seekg(0);
    std::vector<T> data(count);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    return data;
}

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

void write_png(const std::filesystem::path& path, int rows, int cols, int color_type, int bit_depth,
               const std::vector<std::uint8_t>& row_bytes, std::size_t stride) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) {
        throw IoError("cannot write " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < rows; ++r) {
        png_write_row(png, const_cast<png_bytep>(row_bytes.data() + std::size_t(r) * stride));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::uint8_t to_byte(float v, float lo, float hi) {
    const float span = hi > lo ? hi - lo : 1.0f;
    const float t = std::clamp((v - lo) / span, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::lround(t * 255.0f));
}

} // namespace

void write_raw(const std::filesystem::path& path, const Image& img) { write_bytes(path, img.pixels); }
void write_raw(const std::filesystem::path& path, const Mask& mask) { write_bytes(path, mask.pixels); }

Image read_raw_image(const std::filesystem::path& path, int rows, int cols) {
    Image img;
    img.rows = rows;
    img.cols = cols;
    img.pixels = read_bytes<float>(path, std::size_t(rows) * cols);
    return img;
}

Mask read_raw_mask(const std::filesystem::path& path, int rows, int cols) {
    Mask m;
    m.rows = rows;
    m.cols = cols;
    m.pixels = read_bytes<std::uint8_t>(path, std::size_t(rows) * cols);
    return m;
}

void write_png_gray8(const std::filesystem::path& path, const Image& img, float lo, float hi) {
    std::vector<std::uint8_t> bytes(img.size());
    std::transform(img.pixels.begin(), img.pixels.end(), bytes.begin(), [&](float v) { return to_byte(v, lo, hi); });
    write_png(path, img.rows, img.cols, PNG_COLOR_TYPE_GRAY, 8, bytes, std::size_t(img.cols));
}

void write_png_gray16(const std::filesystem::path& path, const Image& img) {
    std::vector<std::uint8_t> bytes(img.size() * 2);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const auto v = static_cast<std::uint16_t>(std::lround(std::clamp(img.pixels[i], 0.0f, 1.0f) * 65535.0f));
        bytes[2 * i] = static_cast<std::uint8_t>(v >> 8);  // PNG is big-endian
        bytes[2 * i + 1] = static_cast<std::uint8_t>(v & 0xFF);
    }
    write_png(path, img.rows, img.cols, PNG_COLOR_TYPE_GRAY, 16, bytes, std::size_t(img.cols) * 2);
}

void write_png_mask(const std::filesystem::path& path, const Mask& mask) {
    std::vector<std::uint8_t> bytes(mask.size());
    std::transform(mask.pixels.begin(), mask.pixels.end(), bytes.begin(),
                   [](std::uint8_t b) { return static_cast<std::uint8_t>(b ? 255 : 0); });
    write_png(path, mask.rows, mask.cols, PNG_COLOR_TYPE_GRAY, 8, bytes, std::size_t(mask.cols));
}

void write_png_overlay(const std::filesystem::path& path, const Image& img, float lo, float hi, const Mask& mask) {
    if (!img.same_shape(mask)) {
        throw InvalidArgument("overlay: image and mask shapes differ");
    }
    std::vector<std::uint8_t> bytes(img.size() * 3);
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (mask.pixels[i]) {
            bytes[3 * i] = 0;
            bytes[3 * i + 1] = 255;
            bytes[3 * i + 2] = 0;
        } else {
            const std::uint8_t g = to_byte(img.pixels[i], lo, hi);
            bytes[3 * i] = bytes[3 * i + 1] = bytes[3 * i + 2] = g;
        }
    }
    write_png(path, img.rows, img.cols, PNG_COLOR_TYPE_RGB, 8, bytes, std::size_t(img.cols) * 3);
}

RgbImage read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw IoError("cannot read PNG " + path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    RgbImage out;
    out.rows = static_cast<int>(image.height);
    out.cols = static_cast<int>(image.width);
    out.channels = 3;
    out.bytes.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.bytes.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("cannot decode PNG " + path.string());
    }
    return out;
}

} // namespace xpf
