#pragma once

#include "multifix/pipeline/model.hpp"
#include "multifix/synth/image.hpp"

namespace multifix::explain {

using nn::Mode;
using nn::Tensor;

struct Heatmap {
    int h = 0, w = 0;
    std::vector<float> values;  // [0,1], max 1 unless the map is all zero
    int feature = 0;
    std::string sample_id;

    float at(int y, int x) const { return values[static_cast<size_t>(y) * w + x]; }
};

// Gradient-weighted class activation map for bottleneck feature j of the
// image block. The target is the pre-sigmoid logit of I_j; channel weights
// are spatial means of its gradient at the chosen conv activation, the map is
// relu(sum_c w_c A_c) upsampled bilinearly and normalized by its max.
inline Heatmap grad_cam(pipeline::PipelineModel& model, const Tensor& image, int feature, int layer = -1) {
    if (feature < 0 || feature >= model.nI)
        throw ConfigError("grad_cam: feature " + std::to_string(feature) + " out of range [0," +
                          std::to_string(model.nI) + ")");
    if (image.ndim() != 4 || image.shape[0] != 1) throw ShapeError("grad_cam: expected one image [1,3,H,W]");
    nn::Sequence& blk = model.image_block;
    if (layer < 0) layer = model.gradcam_layer;
    if (layer < 0 || layer >= blk.size() - 2)
        throw ConfigError("grad_cam: invalid explanation layer id " + std::to_string(layer));

    blk.forward(image, Mode::train);
    // activations of the chosen layer and gradient of the pre-sigmoid logit:
    // seed a one-hot gradient at the dense output (layer size-2) and walk it
    // down to the explanation layer
    const Tensor& acts = blk.activation(layer + 1);
    if (acts.ndim() != 4) throw ConfigError("grad_cam: explanation layer must produce a conv activation map");
    Tensor seed({1, model.nI});
    seed.data[static_cast<size_t>(feature)] = 1.0f;
    Tensor grads = seed;
    for (int i = blk.size() - 2; i > layer; --i) grads = blk.layer(i).backward(grads);
    blk.drop_tape();

    int c = acts.shape[1], ah = acts.shape[2], aw = acts.shape[3];
    std::vector<float> weights(static_cast<size_t>(c), 0.0f);
    for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        const float* g = grads.data.data() + static_cast<size_t>(ch) * ah * aw;
        for (int k = 0; k < ah * aw; ++k) acc += g[k];
        weights[static_cast<size_t>(ch)] = static_cast<float>(acc / (ah * aw));
    }
    synth::Image cam(ah, aw);
    for (int y = 0; y < ah; ++y)
        for (int x = 0; x < aw; ++x) {
            double v = 0.0;
            for (int ch = 0; ch < c; ++ch)
                v += weights[static_cast<size_t>(ch)] * acts.data[(static_cast<size_t>(ch) * ah + y) * aw + x];
            float r = v > 0.0 ? static_cast<float>(v) : 0.0f;
            cam.at(y, x, 0) = cam.at(y, x, 1) = cam.at(y, x, 2) = r;
        }
    synth::Image up = synth::resize_bilinear(cam, image.shape[2], image.shape[3]);

    Heatmap hm;
    hm.h = up.h;
    hm.w = up.w;
    hm.feature = feature;
    hm.values.resize(static_cast<size_t>(up.h) * up.w);
    float mx = 0.0f;
    for (int y = 0; y < up.h; ++y)
        for (int x = 0; x < up.w; ++x) {
            float v = std::max(0.0f, up.at(y, x, 0));
            hm.values[static_cast<size_t>(y) * up.w + x] = v;
            mx = std::max(mx, v);
        }
    if (mx > 0.0f)
        for (auto& v : hm.values) v /= mx;  // all-zero maps stay all-zero
    return hm;
}

// fraction of total heat mass inside a bounding box (localization oracle)
inline double heat_mass_fraction(const Heatmap& hm, const synth::BBox& bb) {
    double inside = 0.0, total = 0.0;
    for (int y = 0; y < hm.h; ++y)
        for (int x = 0; x < hm.w; ++x) {
            double v = hm.at(y, x);
            total += v;
            if (bb.contains(x + 0.5f, y + 0.5f)) inside += v;
        }
    return total > 0.0 ? inside / total : 0.0;
}

inline synth::Image heatmap_to_gray(const Heatmap& hm) {
    synth::Image img(hm.h, hm.w);
    for (int y = 0; y < hm.h; ++y)
        for (int x = 0; x < hm.w; ++x)
            img.at(y, x, 0) = img.at(y, x, 1) = img.at(y, x, 2) = hm.at(y, x);
    return img;
}

// heat in the red channel over a dimmed copy of the input
inline synth::Image heatmap_overlay(const Heatmap& hm, const synth::Image& base) {
    synth::Image img = base;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            float h = hm.at(y, x);
            img.at(y, x, 0) = std::min(1.0f, 0.4f * img.at(y, x, 0) + 0.6f * h);
            img.at(y, x, 1) *= 0.4f;
            img.at(y, x, 2) *= 0.4f;
        }
    return img;
}

}  // namespace multifix::explain
