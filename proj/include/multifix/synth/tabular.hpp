#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "multifix/common.hpp"

namespace multifix::synth {

struct TabularSample {
    std::vector<float> features;
    std::map<std::string, int> truth;
};

// Boolean features of the uniform tabular modality:
//   A = [x0 + x1 + x2 > 1.5]
//   B = [x3 + 2 x4 + x5 > 2]
//   C = [x6 + 3 x7 + x8 > 2.5]
inline std::array<int, 3> eq2_features(const std::vector<float>& x) {
    if (x.size() < 9) throw ConfigError("eq2_features: needs at least 9 components");
    int a = (x[0] + x[1] + x[2]) > 1.5f ? 1 : 0;
    int b = (x[3] + 2.0f * x[4] + x[5]) > 2.0f ? 1 : 0;
    int c = (x[6] + 3.0f * x[7] + x[8]) > 2.5f ? 1 : 0;
    return {a, b, c};
}

struct TabularClassification {
    std::vector<TabularSample> samples;
    std::vector<int> labels;           // binary feature A
    std::vector<int> informative_idx;  // column positions after shuffling
    std::vector<int> redundant_idx;
};

// Two-cluster binary classification data: informative columns are unit
// Gaussians around antipodal hypercube vertices (class separation 1.0),
// redundant columns are random unit-norm linear combinations of the
// informative block, the rest is standard normal. Columns are shuffled.
inline TabularClassification make_tabular_classification(int n_samples, int n_features, int n_informative,
                                                         int n_redundant, int n_random, uint64_t seed) {
    if (n_informative + n_redundant + n_random != n_features)
        throw ConfigError("make_tabular_classification: column counts must add up to n_features");
    Rng rng(rng_stream(seed, {0x7ab0}));

    std::vector<float> vertex(static_cast<size_t>(n_informative));
    for (auto& v : vertex) v = rng.uniform() < 0.5 ? -1.0f : 1.0f;

    // balanced labels (within one sample of an exact half split)
    std::vector<int> labels(static_cast<size_t>(n_samples), 0);
    for (int i = 0; i < n_samples / 2; ++i) labels[static_cast<size_t>(i)] = 1;
    rng.shuffle(labels);

    // redundant mixing weights, unit norm
    std::vector<std::vector<float>> mix(static_cast<size_t>(n_redundant));
    for (auto& row : mix) {
        row.resize(static_cast<size_t>(n_informative));
        double norm = 0.0;
        for (auto& v : row) {
            v = static_cast<float>(rng.normal());
            norm += static_cast<double>(v) * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : row) v = static_cast<float>(v / norm);
    }

    std::vector<int> order = iota_indices(n_features);
    rng.shuffle(order);

    TabularClassification out;
    out.labels = labels;
    out.samples.resize(static_cast<size_t>(n_samples));
    std::vector<int> inv(static_cast<size_t>(n_features));
    for (int i = 0; i < n_features; ++i) inv[static_cast<size_t>(order[static_cast<size_t>(i)])] = i;
    for (int j = 0; j < n_informative; ++j) out.informative_idx.push_back(inv[static_cast<size_t>(j)]);
    for (int j = 0; j < n_redundant; ++j) out.redundant_idx.push_back(inv[static_cast<size_t>(n_informative + j)]);

    std::vector<float> raw(static_cast<size_t>(n_features));
    for (int i = 0; i < n_samples; ++i) {
        float sign = labels[static_cast<size_t>(i)] == 1 ? 1.0f : -1.0f;
        for (int j = 0; j < n_informative; ++j)
            raw[static_cast<size_t>(j)] = static_cast<float>(rng.normal()) + sign * vertex[static_cast<size_t>(j)];
        for (int j = 0; j < n_redundant; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n_informative; ++k)
                acc += static_cast<double>(mix[static_cast<size_t>(j)][static_cast<size_t>(k)]) *
                       raw[static_cast<size_t>(k)];
            raw[static_cast<size_t>(n_informative + j)] = static_cast<float>(acc);
        }
        for (int j = 0; j < n_random; ++j)
            raw[static_cast<size_t>(n_informative + n_redundant + j)] = static_cast<float>(rng.normal());

        auto& s = out.samples[static_cast<size_t>(i)];
        s.features.resize(static_cast<size_t>(n_features));
        for (int j = 0; j < n_features; ++j)
            s.features[static_cast<size_t>(inv[static_cast<size_t>(j)])] = raw[static_cast<size_t>(j)];
        s.truth["A"] = labels[static_cast<size_t>(i)];
    }
    return out;
}

inline TabularSample add_gaussian_noise(TabularSample s, double sigma, Rng& rng) {
    if (sigma < 0) throw ConfigError("add_gaussian_noise: sigma must be non-negative");
    for (auto& v : s.features) v = static_cast<float>(v + rng.normal(0.0, sigma));
    return s;
}

}  // namespace multifix::synth
