#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace foldgen {

// Row-major, tightly packed 8-bit image. channels: 1 gray, 3 RGB, 4 RGBA.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// Non-interlaced 8-bit PNG, scanlines filter-0, zlib-compressed.
std::vector<std::uint8_t> encode_png(const Image& img);

// Accepts 8-bit gray / RGB / RGBA, all five scanline filters, non-interlaced.
Image decode_png(const std::uint8_t* data, std::size_t size);
Image decode_png(const std::vector<std::uint8_t>& bytes);

void save_png(const std::filesystem::path& path, const Image& img);
Image load_png(const std::filesystem::path& path);

}  // namespace foldgen
