#pragma once

#include <map>
#include <set>
#include <string>

#include "multifix/synth/image.hpp"

namespace multifix::synth {

enum class Shape { star, square, rectangle, circle, triangle };

inline const char* shape_name(Shape s) {
    switch (s) {
        case Shape::star: return "star";
        case Shape::square: return "square";
        case Shape::rectangle: return "rectangle";
        case Shape::circle: return "circle";
        case Shape::triangle: return "triangle";
    }
    return "?";
}

inline Shape shape_from_name(const std::string& n) {
    for (Shape s : {Shape::star, Shape::square, Shape::rectangle, Shape::circle, Shape::triangle})
        if (n == shape_name(s)) return s;
    throw ConfigError("unknown shape '" + n + "'");
}

struct BBox {
    float x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // pixel coordinates, inclusive of the shape extent
    float area() const { return (x1 - x0) * (y1 - y0); }
    bool contains(float x, float y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

// One sample of the image modality. truth_features and boxes are
// generator-side ground truth; models never see them during training.
struct ImageSample {
    Image img;
    std::map<std::string, int> truth;
    std::map<std::string, BBox> boxes;
};

namespace detail {

struct Poly {
    std::vector<float> xs, ys;

    // even-odd rule
    bool contains(float px, float py) const {
        bool in = false;
        size_t n = xs.size();
        for (size_t i = 0, j = n - 1; i < n; j = i++) {
            bool crosses = (ys[i] > py) != (ys[j] > py);
            if (crosses && px < (xs[j] - xs[i]) * (py - ys[i]) / (ys[j] - ys[i]) + xs[i]) in = !in;
        }
        return in;
    }
};

template <typename Inside>
void fill_shape(Image& img, const BBox& bb, const float color[3], Inside&& inside) {
    int ylo = std::max(0, static_cast<int>(std::floor(bb.y0)));
    int yhi = std::min(img.h - 1, static_cast<int>(std::ceil(bb.y1)));
    int xlo = std::max(0, static_cast<int>(std::floor(bb.x0)));
    int xhi = std::min(img.w - 1, static_cast<int>(std::ceil(bb.x1)));
    for (int y = ylo; y <= yhi; ++y)
        for (int x = xlo; x <= xhi; ++x)
            if (inside(x + 0.5f, y + 0.5f))
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = color[c];
}

}  // namespace detail

// Draws one filled shape with a placement sampled from rng: extent uniform in
// [30%, 70%] of the canvas, position uniform such that the bounding box fits,
// colour uniform in RGB over a black background.
inline BBox draw_shape(Image& img, Shape shape, Rng& rng) {
    float minside = static_cast<float>(std::min(img.h, img.w));
    float extent = static_cast<float>(rng.uniform(0.30, 0.70)) * minside;
    float half = extent / 2.0f;
    float cx = static_cast<float>(rng.uniform(half, img.w - half));
    float cy = static_cast<float>(rng.uniform(half, img.h - half));
    float color[3] = {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
                      static_cast<float>(rng.uniform())};
    BBox bb{cx - half, cy - half, cx + half, cy + half};

    switch (shape) {
        case Shape::square:
            detail::fill_shape(img, bb, color, [&](float x, float y) {
                return std::abs(x - cx) <= half && std::abs(y - cy) <= half;
            });
            break;
        case Shape::rectangle: {
            // distinctly non-square aspect, long side = extent
            float aspect = static_cast<float>(rng.uniform(1.8, 3.0));
            float hx = half, hy = half / aspect;
            if (rng.uniform() < 0.5) std::swap(hx, hy);
            bb = BBox{cx - hx, cy - hy, cx + hx, cy + hy};
            detail::fill_shape(img, bb, color, [&](float x, float y) {
                return std::abs(x - cx) <= hx && std::abs(y - cy) <= hy;
            });
            break;
        }
        case Shape::circle:
            detail::fill_shape(img, bb, color, [&](float x, float y) {
                float dx = x - cx, dy = y - cy;
                return dx * dx + dy * dy <= half * half;
            });
            break;
        case Shape::triangle: {
            // upright isoceles
            float x0 = cx, y0 = cy - half;
            float x1 = cx - half, y1 = cy + half;
            float x2 = cx + half, y2 = cy + half;
            detail::Poly p{{x0, x1, x2}, {y0, y1, y2}};
            detail::fill_shape(img, bb, color, [&](float x, float y) { return p.contains(x, y); });
            break;
        }
        case Shape::star: {
            // upright five-pointed star, classic inner/outer radius ratio
            detail::Poly p;
            float router = half;
            float rinner = half * 0.382f;
            for (int k = 0; k < 10; ++k) {
                float ang = static_cast<float>(-M_PI / 2.0 + k * M_PI / 5.0);
                float r = (k % 2 == 0) ? router : rinner;
                p.xs.push_back(cx + r * std::cos(ang));
                p.ys.push_back(cy + r * std::sin(ang));
            }
            detail::fill_shape(img, bb, color, [&](float x, float y) { return p.contains(x, y); });
            break;
        }
    }
    return bb;
}

// Rasterizes the requested shapes in a fixed draw order onto a black canvas
// and records per-shape presence bits and bounding boxes.
inline ImageSample render_shape_image(const std::set<Shape>& shapes, int h, int w,
                                      const std::vector<Shape>& tracked, Rng& rng) {
    if (h < 5 || w < 5)
        throw ConfigError("render_shape_image: canvas " + std::to_string(h) + "x" + std::to_string(w) +
                          " too small for the minimum shape size (needs at least 5x5)");
    ImageSample s;
    s.img = Image(h, w);
    for (Shape sh : tracked) s.truth[shape_name(sh)] = 0;
    for (Shape sh : {Shape::rectangle, Shape::circle, Shape::triangle, Shape::square, Shape::star}) {
        if (!shapes.count(sh)) continue;
        BBox bb = draw_shape(s.img, sh, rng);
        s.truth[shape_name(sh)] = 1;
        s.boxes[shape_name(sh)] = bb;
    }
    return s;
}

// Re-colours exactly n_pixels distinct positions uniformly at random.
inline ImageSample add_pixel_noise(ImageSample s, int n_pixels, Rng& rng) {
    int total = s.img.h * s.img.w;
    if (n_pixels < 0 || n_pixels > total)
        throw ConfigError("add_pixel_noise: pixel count " + std::to_string(n_pixels) + " out of range [0," +
                          std::to_string(total) + "]");
    // partial Fisher-Yates for a uniform sample without replacement
    std::vector<int> idx = iota_indices(total);
    for (int i = 0; i < n_pixels; ++i) {
        int j = i + rng.uniform_int(total - i);
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
        int p = idx[static_cast<size_t>(i)];
        for (int c = 0; c < 3; ++c) s.img.pix[static_cast<size_t>(p) * 3 + c] = static_cast<float>(rng.uniform());
    }
    return s;
}

inline ImageSample add_gaussian_noise(ImageSample s, double sigma, Rng& rng) {
    if (sigma < 0) throw ConfigError("add_gaussian_noise: sigma must be non-negative");
    if (sigma == 0) return s;
    for (auto& v : s.img.pix) v = static_cast<float>(v + rng.normal(0.0, sigma));
    s.img.clamp01();
    return s;
}

// truth features and boxes survive resampling (boxes rescaled)
inline ImageSample resample_image(const ImageSample& s, int th, int tw) {
    ImageSample out = s;
    float fy = static_cast<float>(th) / s.img.h, fx = static_cast<float>(tw) / s.img.w;
    out.img = resize_bilinear(s.img, th, tw);
    for (auto& [name, bb] : out.boxes) bb = BBox{bb.x0 * fx, bb.y0 * fy, bb.x1 * fx, bb.y1 * fy};
    return out;
}

}  // namespace multifix::synth
