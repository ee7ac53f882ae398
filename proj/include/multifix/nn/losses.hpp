#pragma once

#include <cmath>
#include <vector>

#include "multifix/nn/tensor.hpp"

namespace multifix::nn {

struct LossResult {
    float value = 0.0f;
    Tensor grad;  // d(loss)/d(prediction)
};

// Mean negative log softmax probability of the true class.
inline LossResult cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.ndim() != 2) throw ShapeError("cross_entropy: expected logits [N,C]");
    int n = logits.shape[0], c = logits.shape[1];
    if (c < 2) throw ConfigError("cross_entropy: needs at least 2 classes");
    if (static_cast<int>(labels.size()) != n) throw ShapeError("cross_entropy: batch/label size mismatch");
    LossResult res;
    res.grad = Tensor(logits.shape);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        int y = labels[static_cast<size_t>(i)];
        if (y < 0 || y >= c)
            throw DataError("cross_entropy: label " + std::to_string(y) + " out of range [0," + std::to_string(c) + ")");
        const float* x = logits.data.data() + static_cast<size_t>(i) * c;
        float* g = res.grad.data.data() + static_cast<size_t>(i) * c;
        float mx = x[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, x[j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) sum += std::exp(static_cast<double>(x[j] - mx));
        double lse = std::log(sum) + mx;
        total += lse - x[y];
        for (int j = 0; j < c; ++j)
            g[j] = static_cast<float>((std::exp(x[j] - lse) - (j == y ? 1.0 : 0.0)) / n);
    }
    res.value = static_cast<float>(total / n);
    return res;
}

// Mean squared difference.
inline LossResult mse_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target))
        throw ShapeError("mse_loss: shape mismatch (" + pred.shape_str() + ") vs (" + target.shape_str() + ")");
    LossResult res;
    res.grad = Tensor(pred.shape);
    double total = 0.0;
    double inv = 2.0 / static_cast<double>(pred.numel());
    for (size_t i = 0; i < pred.data.size(); ++i) {
        float d = pred.data[i] - target.data[i];
        total += static_cast<double>(d) * d;
        res.grad.data[i] = static_cast<float>(d * inv);
    }
    res.value = static_cast<float>(total / static_cast<double>(pred.numel()));
    return res;
}

// Binary cross entropy on probabilities (multilabel feature targets).
inline LossResult bce_loss(const Tensor& probs, const Tensor& targets) {
    if (!probs.same_shape(targets))
        throw ShapeError("bce_loss: shape mismatch (" + probs.shape_str() + ") vs (" + targets.shape_str() + ")");
    constexpr float kEps = 1e-7f;
    LossResult res;
    res.grad = Tensor(probs.shape);
    double total = 0.0;
    double inv = 1.0 / static_cast<double>(probs.numel());
    for (size_t i = 0; i < probs.data.size(); ++i) {
        float p = std::min(std::max(probs.data[i], kEps), 1.0f - kEps);
        float t = targets.data[i];
        total += -(t * std::log(static_cast<double>(p)) + (1.0 - t) * std::log(1.0 - static_cast<double>(p)));
        res.grad.data[i] = static_cast<float>((static_cast<double>(p) - t) / (static_cast<double>(p) * (1.0 - p)) * inv);
    }
    res.value = static_cast<float>(total * inv);
    return res;
}

}  // namespace multifix::nn
