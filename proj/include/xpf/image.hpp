#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace xpf {

/// Row-major detector image, rows = detector v, columns = detector u.
template <typename T>
struct Grid2D {
    int rows = 0;
    int cols = 0;
    std::vector<T> pixels;

    Grid2D() = default;
    Grid2D(int r, int c, T fill = T{}) : rows(r), cols(c), pixels(std::size_t(r) * std::size_t(c), fill) {}

    std::size_t size() const { return pixels.size(); }
    T& at(int r, int c) { return pixels[std::size_t(r) * cols + c]; }
    const T& at(int r, int c) const { return pixels[std::size_t(r) * cols + c]; }
    bool same_shape(const auto& other) const { return rows == other.rows && cols == other.cols; }

    friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

using Image = Grid2D<float>;
using Mask = Grid2D<std::uint8_t>;

void write_raw(const std::filesystem::path& path, const Image& img);
void write_raw(const std::filesystem::path& path, const Mask& mask);
Image read_raw_image(const std::filesystem::path& path, int rows, int cols);
Mask read_raw_mask(const std::filesystem::path& path, int rows, int cols);

/// 8-bit grayscale PNG of an image scaled from [lo, hi] to [0, 255].
void write_png_gray8(const std::filesystem::path& path, const Image& img, float lo, float hi);
/// 16-bit grayscale PNG of a [0, 1] image.
void write_png_gray16(const std::filesystem::path& path, const Image& img);
/// 8-bit PNG of a 0/1 mask (0 / 255).
void write_png_mask(const std::filesystem::path& path, const Mask& mask);
/// RGB PNG: grayscale image with mask pixels painted pure green (0, 255, 0).
void write_png_overlay(const std::filesystem::path& path, const Image& img, float lo, float hi, const Mask& mask);

/// 8-bit RGB pixels of a PNG file (row-major, 3 bytes per pixel).
struct RgbImage {
    int rows = 0;
    int cols = 0;
    int channels = 0;
    std::vector<std::uint8_t> bytes;
};
RgbImage read_png(const std::filesystem::path& path);

} // namespace xpf
