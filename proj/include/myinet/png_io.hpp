#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "myinet/labelmap.hpp"

namespace myinet {

struct GrayImage {
    int h = 0, w = 0;
    std::vector<uint8_t> v;

    GrayImage() = default;
    GrayImage(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0) {}
    uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

struct Rgb {
    uint8_t r, g, b;
};

/// 8-bit grayscale PNG (16-bit inputs are narrowed). Throws DataError with
/// the path on anything unreadable or non-grayscale.
GrayImage read_gray_png(const std::string& path);
void write_gray_png(const std::string& path, const GrayImage& img);

/// Label maps as 8-bit PNGs: palette images keep their raw indices, grayscale
/// images use the pixel value. Values are validated by the caller.
GrayImage read_index_png(const std::string& path);
void write_indexed_png(const std::string& path, const LabelMap& labels,
                       const std::vector<Rgb>& palette);

void write_rgb_png(const std::string& path, int h, int w, const std::vector<uint8_t>& rgb);

/// Display palette shared by label and overlay outputs:
/// background red, blood blue, muscle green, scar yellow.
const std::vector<Rgb>& class_palette();

}  // namespace myinet
