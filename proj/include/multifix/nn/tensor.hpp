#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "multifix/common.hpp"

namespace multifix::nn {

// Dense n-d array of float32 in row-major order. Gradients live in a
// same-shape buffer when requires_grad is set.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;
    bool requires_grad = false;
    std::vector<float> grad;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(static_cast<size_t>(count(shape)), 0.0f) {}
    Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<size_t>(count(shape)) != data.size())
            throw ShapeError("tensor: data size " + std::to_string(data.size()) + " does not match shape (" +
                             shape_str() + ")");
    }

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

    static Tensor full(std::vector<int> s, float v) {
        Tensor t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int dim(size_t i) const { return shape[i]; }
    int ndim() const { return static_cast<int>(shape.size()); }

    void enable_grad() {
        requires_grad = true;
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
    }

    void zero_grad() {
        if (requires_grad) std::fill(grad.begin(), grad.end(), 0.0f);
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    std::string shape_str() const {
        std::string s;
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s;
    }
};

inline void require_shape(const Tensor& t, const std::vector<int>& expect, const std::string& where) {
    if (t.shape != expect) {
        Tensor e(expect);
        throw ShapeError(where + ": expected shape (" + e.shape_str() + "), got (" + t.shape_str() + ")");
    }
}

inline bool all_finite(const std::vector<float>& v) {
    for (float x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace multifix::nn
