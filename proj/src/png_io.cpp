#include "myinet/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "myinet/errors.hpp"

namespace myinet {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, &info);
    }
};

GrayImage read_single_channel(const std::string& path, bool allow_palette) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw DataError("cannot open PNG: " + path);
    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw DataError("libpng init failed: " + path);
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw DataError("libpng init failed: " + path);
    if (setjmp(png_jmpbuf(r.png))) throw DataError("corrupt PNG: " + path);

    png_init_io(r.png, f.get());
    png_read_info(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);
    const int depth = png_get_bit_depth(r.png, r.info);
    if (color == PNG_COLOR_TYPE_PALETTE) {
        if (!allow_palette) throw DataError("expected grayscale PNG, found palette: " + path);
        if (depth < 8) png_set_packing(r.png);
    } else if (color == PNG_COLOR_TYPE_GRAY) {
        if (depth == 16) png_set_strip_16(r.png);
        if (depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
    } else {
        throw DataError("expected 8-bit gray or palette PNG: " + path);
    }
    png_read_update_info(r.png, r.info);

    GrayImage img(static_cast<int>(png_get_image_height(r.png, r.info)),
                  static_cast<int>(png_get_image_width(r.png, r.info)));
    if (png_get_rowbytes(r.png, r.info) != static_cast<size_t>(img.w))
        throw DataError("unexpected PNG row layout: " + path);
    std::vector<png_bytep> rows(static_cast<size_t>(img.h));
    for (int y = 0; y < img.h; ++y) rows[static_cast<size_t>(y)] = img.v.data() + static_cast<size_t>(y) * img.w;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return img;
}

void write_8bit(const std::string& path, int h, int w, int color_type, int channels,
                const uint8_t* data, const std::vector<Rgb>* palette) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw DataError("cannot write PNG: " + path);
    PngWriter wr;
    wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!wr.png) throw DataError("libpng init failed: " + path);
    wr.info = png_create_info_struct(wr.png);
    if (!wr.info) throw DataError("libpng init failed: " + path);
    if (setjmp(png_jmpbuf(wr.png))) throw DataError("PNG write failed: " + path);

    png_init_io(wr.png, f.get());
    png_set_IHDR(wr.png, wr.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    std::vector<png_color> pal;
    if (palette) {
        for (const Rgb& c : *palette) pal.push_back({c.r, c.g, c.b});
        png_set_PLTE(wr.png, wr.info, pal.data(), static_cast<int>(pal.size()));
    }
    png_write_info(wr.png, wr.info);
    std::vector<png_bytep> rows(static_cast<size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[static_cast<size_t>(y)] =
            const_cast<png_bytep>(data + static_cast<size_t>(y) * w * channels);
    png_write_image(wr.png, rows.data());
    png_write_end(wr.png, nullptr);
}

}  // namespace

GrayImage read_gray_png(const std::string& path) { return read_single_channel(path, false); }

GrayImage read_index_png(const std::string& path) { return read_single_channel(path, true); }

void write_gray_png(const std::string& path, const GrayImage& img) {
    write_8bit(path, img.h, img.w, PNG_COLOR_TYPE_GRAY, 1, img.v.data(), nullptr);
}

void write_indexed_png(const std::string& path, const LabelMap& labels,
                       const std::vector<Rgb>& palette) {
    write_8bit(path, labels.h, labels.w, PNG_COLOR_TYPE_PALETTE, 1, labels.v.data(), &palette);
}

void write_rgb_png(const std::string& path, int h, int w, const std::vector<uint8_t>& rgb) {
    if (rgb.size() != static_cast<size_t>(h) * w * 3)
        throw ConfigError("write_rgb_png: buffer size mismatch");
    write_8bit(path, h, w, PNG_COLOR_TYPE_RGB, 3, rgb.data(), nullptr);
}

const std::vector<Rgb>& class_palette() {
    static const std::vector<Rgb> palette = {
        {220, 40, 40},   // background: red
        {50, 80, 230},   // blood: blue
        {60, 180, 75},   // muscle: green
        {240, 220, 40},  // scar: yellow
        {240, 220, 40},  // raw MVO shares the scar color
    };
    return palette;
}

}  // namespace myinet
