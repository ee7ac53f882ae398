#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "multifix/common.hpp"

namespace multifix::synth {

// H x W x 3 interleaved float pixels in [0,1].
struct Image {
    int h = 0, w = 0;
    std::vector<float> pix;

    Image() = default;
    Image(int h_, int w_) : h(h_), w(w_), pix(static_cast<size_t>(h_) * w_ * 3, 0.0f) {}

    float& at(int y, int x, int c) { return pix[(static_cast<size_t>(y) * w + x) * 3 + c]; }
    float at(int y, int x, int c) const { return pix[(static_cast<size_t>(y) * w + x) * 3 + c]; }

    void clamp01() {
        for (auto& v : pix) v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    }

    // snap to the 8-bit grid so PNG round-trips are exact
    void quantize8() {
        for (auto& v : pix) {
            float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
            v = std::round(c * 255.0f) / 255.0f;
        }
    }
};

// Bilinear resampling (half-pixel centers). Heavy downsampling keeps whatever
// the sparse sample grid hits, which is exactly the degradation the
// resolution sweep needs.
inline Image resize_bilinear(const Image& src, int th, int tw) {
    if (th < 1 || tw < 1) throw ConfigError("resize: target must be at least 1x1");
    if (th == src.h && tw == src.w) return src;
    Image out(th, tw);
    float sy = static_cast<float>(src.h) / th;
    float sx = static_cast<float>(src.w) / tw;
    for (int y = 0; y < th; ++y) {
        float fy = (y + 0.5f) * sy - 0.5f;
        int y0 = static_cast<int>(std::floor(fy));
        float wy = fy - y0;
        int y0c = std::clamp(y0, 0, src.h - 1), y1c = std::clamp(y0 + 1, 0, src.h - 1);
        for (int x = 0; x < tw; ++x) {
            float fx = (x + 0.5f) * sx - 0.5f;
            int x0 = static_cast<int>(std::floor(fx));
            float wx = fx - x0;
            int x0c = std::clamp(x0, 0, src.w - 1), x1c = std::clamp(x0 + 1, 0, src.w - 1);
            for (int c = 0; c < 3; ++c) {
                float v00 = src.at(y0c, x0c, c), v01 = src.at(y0c, x1c, c);
                float v10 = src.at(y1c, x0c, c), v11 = src.at(y1c, x1c, c);
                out.at(y, x, c) = (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
            }
        }
    }
    return out;
}

inline Image center_crop_square(const Image& src) {
    int side = std::min(src.h, src.w);
    int oy = (src.h - side) / 2, ox = (src.w - side) / 2;
    Image out(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = src.at(y + oy, x + ox, c);
    return out;
}

// ---------------------------------------------------------------------------
// PNG / PPM io
// ---------------------------------------------------------------------------

inline void write_png(const Image& img, const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw DataError("png: cannot open '" + path + "' for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw DataError("png: write failed for '" + path + "'");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.w), static_cast<png_uint_32>(img.h), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(static_cast<size_t>(img.w) * 3);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) {
                float v = img.at(y, x, c);
                v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
                row[static_cast<size_t>(x) * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0f));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

inline Image read_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw DataError("png: cannot open '" + path + "'");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError("png: read failed for '" + path + "'");
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    int w = static_cast<int>(png_get_image_width(png, info));
    int h = static_cast<int>(png_get_image_height(png, info));
    Image img(h, w);
    std::vector<unsigned char> row(png_get_rowbytes(png, info));
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = row[static_cast<size_t>(x) * 3 + c] / 255.0f;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

inline void write_ppm(const Image& img, const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw DataError("ppm: cannot open '" + path + "' for writing");
    std::fprintf(fp, "P6\n%d %d\n255\n", img.w, img.h);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) {
                float v = std::clamp(img.at(y, x, c), 0.0f, 1.0f);
                unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0f));
                std::fputc(b, fp);
            }
    std::fclose(fp);
}

inline Image read_ppm(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw DataError("ppm: cannot open '" + path + "'");
    char magic[3] = {0};
    int w = 0, h = 0, maxv = 0;
    if (std::fscanf(fp, "%2s %d %d %d", magic, &w, &h, &maxv) != 4 || std::string(magic) != "P6" || maxv != 255) {
        std::fclose(fp);
        throw DataError("ppm: '" + path + "' is not a P6/255 file");
    }
    std::fgetc(fp);  // single whitespace after header
    Image img(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                int b = std::fgetc(fp);
                if (b == EOF) {
                    std::fclose(fp);
                    throw DataError("ppm: truncated pixel data in '" + path + "'");
                }
                img.at(y, x, c) = static_cast<float>(b) / 255.0f;
            }
    std::fclose(fp);
    return img;
}

inline Image read_image(const std::string& path) {
    auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".png" || ext == ".PNG") return read_png(path);
    if (ext == ".ppm" || ext == ".PPM") return read_ppm(path);
    throw DataError("image: unsupported format '" + ext + "' (PNG and PPM are supported)");
}

}  // namespace multifix::synth
