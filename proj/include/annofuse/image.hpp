#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace annofuse {

/// 8-bit raster, row-major, interleaved channels (1 = gray, 3 = RGB).
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    static ImageBuffer make(int w, int h, int c, std::uint8_t fill = 0);

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

// PPM (P6, RGB) and PGM (P5, gray) are read and written bit-exactly.
// PNG is 8-bit gray or RGB, via libpng.

ImageBuffer read_ppm(const std::filesystem::path& path);
void write_ppm(const ImageBuffer& img, const std::filesystem::path& path);

ImageBuffer read_pgm(const std::filesystem::path& path);
void write_pgm(const ImageBuffer& img, const std::filesystem::path& path);

ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const ImageBuffer& img, const std::filesystem::path& path);

/// Dispatches on the file's magic bytes (P5 / P6 / PNG signature).
ImageBuffer read_image(const std::filesystem::path& path);

/// Dispatches on the extension (.ppm / .pgm / .png).
void write_image(const ImageBuffer& img, const std::filesystem::path& path);

}  // namespace annofuse
