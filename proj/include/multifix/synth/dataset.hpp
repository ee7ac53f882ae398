#pragma once

#include <json.hpp>

#include "multifix/synth/shapes.hpp"
#include "multifix/synth/tabular.hpp"

namespace multifix::synth {

// Paired image/tabular samples with a final label. provenance records the
// exact generator configuration and seed.
struct MultimodalDataset {
    std::string problem;
    int n_classes = 2;
    std::vector<ImageSample> images;
    std::vector<TabularSample> tabs;
    std::vector<int> labels;
    nlohmann::json provenance;

    int size() const { return static_cast<int>(labels.size()); }
    int image_h() const { return images.empty() ? 0 : images[0].img.h; }
    int image_w() const { return images.empty() ? 0 : images[0].img.w; }
    int tab_features() const { return tabs.empty() ? 0 : static_cast<int>(tabs[0].features.size()); }
};

// ---------------------------------------------------------------------------
// stratified k-fold
// ---------------------------------------------------------------------------

struct FoldPlan {
    int k = 5;
    std::vector<std::vector<int>> test;  // disjoint index lists, one per fold

    std::vector<int> train(int fold) const {
        std::vector<int> out;
        for (int f = 0; f < k; ++f)
            if (f != fold) out.insert(out.end(), test[static_cast<size_t>(f)].begin(), test[static_cast<size_t>(f)].end());
        std::sort(out.begin(), out.end());
        return out;
    }
};

inline FoldPlan kfold_split(const std::vector<int>& labels, int n_classes, int k, uint64_t seed) {
    int n = static_cast<int>(labels.size());
    if (n < k) throw DataError("kfold: " + std::to_string(n) + " samples cannot fill " + std::to_string(k) + " folds");
    std::vector<std::vector<int>> per_class(static_cast<size_t>(n_classes));
    for (int i = 0; i < n; ++i) per_class[static_cast<size_t>(labels[static_cast<size_t>(i)])].push_back(i);
    for (int c = 0; c < n_classes; ++c) {
        if (!per_class[static_cast<size_t>(c)].empty() && static_cast<int>(per_class[static_cast<size_t>(c)].size()) < k)
            throw DataError("kfold: class " + std::to_string(c) + " has fewer than " + std::to_string(k) + " members");
    }
    Rng rng(rng_stream(seed, {0xf01d}));
    FoldPlan plan;
    plan.k = k;
    plan.test.assign(static_cast<size_t>(k), {});
    // shuffle within class, then deal round-robin so fold proportions track
    // the global class balance
    for (auto& idx : per_class) {
        rng.shuffle(idx);
        for (size_t i = 0; i < idx.size(); ++i) plan.test[i % static_cast<size_t>(k)].push_back(idx[i]);
    }
    for (auto& f : plan.test) std::sort(f.begin(), f.end());
    return plan;
}

inline FoldPlan kfold_split(const MultimodalDataset& ds, int k, uint64_t seed) {
    return kfold_split(ds.labels, ds.n_classes, k, seed);
}

// ---------------------------------------------------------------------------
// problem generators
// ---------------------------------------------------------------------------

// Multiclass: star-vs-square images paired with two-cluster tabular data;
// label = 2*ft_square + ft_A.
//   img_size    target resolution (base render is 100x100, downsampled after noise)
//   tab_sigma   stddev of Gaussian noise added to the tabular features
inline MultimodalDataset make_multiclass_dataset(int n, int img_size, double tab_sigma, uint64_t seed) {
    constexpr int kBase = 100;
    MultimodalDataset ds;
    ds.problem = "multiclass";
    ds.n_classes = 4;

    // exactly balanced square bit
    std::vector<int> square(static_cast<size_t>(n), 0);
    for (int i = 0; i < n / 2; ++i) square[static_cast<size_t>(i)] = 1;
    Rng pair_rng(rng_stream(seed, {0x3a1e}));
    pair_rng.shuffle(square);

    auto tab = make_tabular_classification(n, 20, 10, 5, 5, rng_stream(seed, {0x7ab1}));
    Rng noise_rng(rng_stream(seed, {0x901e}));

    for (int i = 0; i < n; ++i) {
        Rng img_rng(rng_stream(seed, {0x13a9, static_cast<uint64_t>(i)}));
        std::set<Shape> shapes{square[static_cast<size_t>(i)] ? Shape::square : Shape::star};
        ImageSample im = render_shape_image(shapes, kBase, kBase, {Shape::square, Shape::star}, img_rng);
        // unquantified "different magnitudes" in the source problem; recorded in provenance
        double img_sigma = img_rng.uniform(0.02, 0.10);
        im = add_gaussian_noise(std::move(im), img_sigma, img_rng);
        if (img_size != kBase) im = resample_image(im, img_size, img_size);
        im.img.quantize8();
        ds.images.push_back(std::move(im));

        TabularSample t = tab.samples[static_cast<size_t>(i)];
        if (tab_sigma > 0) t = add_gaussian_noise(std::move(t), tab_sigma, noise_rng);
        ds.tabs.push_back(std::move(t));
        ds.labels.push_back(2 * square[static_cast<size_t>(i)] + tab.labels[static_cast<size_t>(i)]);
    }
    ds.provenance = {{"problem", "multiclass"},   {"n", n},
                     {"img_size", img_size},      {"base_size", kBase},
                     {"tab_sigma", tab_sigma},    {"img_sigma_range", {0.02, 0.10}},
                     {"seed", seed},              {"n_classes", 4}};
    return ds;
}

// Multifeature: rectangles/circles/triangles each present with probability
// 0.5, uniform tabular features, Y = AND(AND(circle, A), OR(rectangle, B)).
inline MultimodalDataset make_multifeature_dataset(int n, int img_size, double noise_fraction, uint64_t seed) {
    MultimodalDataset ds;
    ds.problem = "multifeature";
    ds.n_classes = 2;
    int n_noise = static_cast<int>(std::lround(noise_fraction * img_size * img_size));
    for (int i = 0; i < n; ++i) {
        Rng rng(rng_stream(seed, {0x3a2e, static_cast<uint64_t>(i)}));
        std::set<Shape> shapes;
        for (Shape s : {Shape::rectangle, Shape::circle, Shape::triangle})
            if (rng.uniform() < 0.5) shapes.insert(s);
        ImageSample im =
            render_shape_image(shapes, img_size, img_size, {Shape::rectangle, Shape::circle, Shape::triangle}, rng);
        im = add_pixel_noise(std::move(im), n_noise, rng);
        im.img.quantize8();

        TabularSample t;
        t.features.resize(10);
        for (auto& v : t.features) v = static_cast<float>(rng.uniform());
        auto abc = eq2_features(t.features);
        t.truth = {{"A", abc[0]}, {"B", abc[1]}, {"C", abc[2]}};

        int circle = im.truth["circle"], rect = im.truth["rectangle"];
        int y = (circle && abc[0]) && (rect || abc[1]) ? 1 : 0;
        ds.images.push_back(std::move(im));
        ds.tabs.push_back(std::move(t));
        ds.labels.push_back(y);
    }
    ds.provenance = {{"problem", "multifeature"}, {"n", n},      {"img_size", img_size},
                     {"noise_fraction", noise_fraction}, {"seed", seed}, {"n_classes", 2}};
    return ds;
}

// XOR family. gates=2: exactly one of rectangle/circle per image, label =
// XOR(ft_circle, ft_A). gates=3: multifeature-style images, label =
// XOR(ft_circle, ft_triangle, ft_A).
inline MultimodalDataset make_xor_dataset(int n, int gates, int img_size, double noise_fraction, uint64_t seed) {
    if (gates != 2 && gates != 3) throw ConfigError("make_xor_dataset: gates must be 2 or 3");
    MultimodalDataset ds;
    ds.problem = gates == 2 ? "xor" : "xor3";
    ds.n_classes = 2;
    int n_noise = static_cast<int>(std::lround(noise_fraction * img_size * img_size));

    std::vector<int> circle(static_cast<size_t>(n), 0);
    for (int i = 0; i < n / 2; ++i) circle[static_cast<size_t>(i)] = 1;
    Rng pair_rng(rng_stream(seed, {0x3a3e}));
    pair_rng.shuffle(circle);

    for (int i = 0; i < n; ++i) {
        Rng rng(rng_stream(seed, {0x3a4e, static_cast<uint64_t>(i)}));
        std::set<Shape> shapes;
        std::vector<Shape> tracked;
        if (gates == 2) {
            shapes.insert(circle[static_cast<size_t>(i)] ? Shape::circle : Shape::rectangle);
            tracked = {Shape::rectangle, Shape::circle};
        } else {
            if (circle[static_cast<size_t>(i)]) shapes.insert(Shape::circle);
            if (rng.uniform() < 0.5) shapes.insert(Shape::rectangle);
            if (rng.uniform() < 0.5) shapes.insert(Shape::triangle);
            tracked = {Shape::rectangle, Shape::circle, Shape::triangle};
        }
        ImageSample im = render_shape_image(shapes, img_size, img_size, tracked, rng);
        im = add_pixel_noise(std::move(im), n_noise, rng);
        im.img.quantize8();

        TabularSample t;
        t.features.resize(15);
        for (auto& v : t.features) v = static_cast<float>(rng.uniform());
        int a = eq2_features(t.features)[0];
        t.truth = {{"A", a}};

        int y = gates == 2 ? (circle[static_cast<size_t>(i)] ^ a)
                           : (im.truth["circle"] ^ im.truth["triangle"] ^ a);
        ds.images.push_back(std::move(im));
        ds.tabs.push_back(std::move(t));
        ds.labels.push_back(y);
    }
    ds.provenance = {{"problem", ds.problem}, {"n", n},      {"img_size", img_size},
                     {"noise_fraction", noise_fraction}, {"gates", gates}, {"seed", seed}, {"n_classes", 2}};
    return ds;
}

// image truth feature names a pipeline cares about, in bottleneck order
inline std::vector<std::string> image_feature_names(const std::string& problem) {
    if (problem == "multiclass") return {"square"};
    if (problem == "multifeature") return {"circle", "rectangle", "triangle"};
    if (problem == "xor") return {"circle"};
    if (problem == "xor3") return {"circle", "triangle"};
    throw ConfigError("unknown problem '" + problem + "'");
}

inline std::vector<std::string> tabular_feature_names(const std::string& problem) {
    if (problem == "multiclass" || problem == "xor" || problem == "xor3") return {"A"};
    if (problem == "multifeature") return {"A", "B", "C"};
    throw ConfigError("unknown problem '" + problem + "'");
}

}  // namespace multifix::synth
