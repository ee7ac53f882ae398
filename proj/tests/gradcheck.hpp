#pragma once

// Finite-difference gradient oracle. The numeric side runs a naive
// double-precision reference forward (independent of the Eigen/float32
// implementation under test); central differences use h = 1e-3. Analytic
// float32 gradients from backward() must agree within 1e-3 relative error.

#include <cmath>
#include <string>
#include <vector>

#include "multifix/nn/sequence.hpp"

namespace gradcheck {

using multifix::Rng;
using multifix::nn::Mode;
using multifix::nn::Sequence;
using multifix::nn::Tensor;

struct Result {
    double max_rel_err = 0.0;
    int checked = 0;
    std::string worst;
};

namespace ref {

using Vec = std::vector<double>;

struct LayerState {
    // double mirrors of the layer's trainable parameters, in parameters() order
    std::vector<Vec> params;
};

inline int prod_tail(const std::vector<int>& s) {
    int p = 1;
    for (size_t i = 1; i < s.size(); ++i) p *= s[i];
    return p;
}

// Reference forward of one layer in double precision, plain loops.
inline Vec forward_layer(const multifix::nn::Layer& layer, const Vec& in, std::vector<int>& shape,
                         const LayerState& state, uint64_t dropout_seed) {
    using namespace multifix::nn;
    if (auto* d = dynamic_cast<const Dense*>(&layer)) {
        int n = shape[0], fi = d->in_features, fo = d->out_features;
        const Vec& w = state.params[0];
        const Vec& b = state.params[1];
        Vec out(static_cast<size_t>(n) * fo);
        for (int i = 0; i < n; ++i)
            for (int o = 0; o < fo; ++o) {
                double acc = b[static_cast<size_t>(o)];
                for (int k = 0; k < fi; ++k)
                    acc += w[static_cast<size_t>(o) * fi + k] * in[static_cast<size_t>(i) * fi + k];
                out[static_cast<size_t>(i) * fo + o] = acc;
            }
        shape = {n, fo};
        return out;
    }
    if (auto* c = dynamic_cast<const Conv2d*>(&layer)) {
        int n = shape[0], ci = c->in_channels, h = shape[2], w = shape[3];
        int k = c->ksize, st = c->stride, p = c->pad, co = c->out_channels;
        int oh = (h + 2 * p - k) / st + 1, ow = (w + 2 * p - k) / st + 1;
        const Vec& wt = state.params[0];
        const Vec& b = state.params[1];
        Vec out(static_cast<size_t>(n) * co * oh * ow);
        for (int i = 0; i < n; ++i)
            for (int oc = 0; oc < co; ++oc)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        double acc = b[static_cast<size_t>(oc)];
                        for (int ic = 0; ic < ci; ++ic)
                            for (int ky = 0; ky < k; ++ky)
                                for (int kx = 0; kx < k; ++kx) {
                                    int iy = oy * st + ky - p, ix = ox * st + kx - p;
                                    if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                    acc += wt[((static_cast<size_t>(oc) * ci + ic) * k + ky) * k + kx] *
                                           in[((static_cast<size_t>(i) * ci + ic) * h + iy) * w + ix];
                                }
                        out[((static_cast<size_t>(i) * co + oc) * oh + oy) * ow + ox] = acc;
                    }
        shape = {n, co, oh, ow};
        return out;
    }
    if (auto* mp = dynamic_cast<const MaxPool2d*>(&layer)) {
        int n = shape[0], ci = shape[1], h = shape[2], w = shape[3];
        int k = mp->ksize, st = mp->stride;
        int oh = (h - k) / st + 1, ow = (w - k) / st + 1;
        Vec out(static_cast<size_t>(n) * ci * oh * ow);
        size_t o = 0;
        for (int i = 0; i < n * ci; ++i)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox, ++o) {
                    double best = -1e300;
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx)
                            best = std::max(best, in[static_cast<size_t>(i) * h * w +
                                                     static_cast<size_t>(oy * st + ky) * w + ox * st + kx]);
                    out[o] = best;
                }
        shape = {n, ci, oh, ow};
        return out;
    }
    if (auto* bn = dynamic_cast<const multifix::nn::BatchNorm*>(&layer)) {
        int f = bn->features;
        bool conv = shape.size() == 4;
        int n = shape[0], hw = conv ? shape[2] * shape[3] : 1;
        int m = n * hw;
        const Vec& gamma = state.params[0];
        const Vec& beta = state.params[1];
        Vec mean(static_cast<size_t>(f), 0.0), var(static_cast<size_t>(f), 0.0);
        auto at = [&](int i, int c, int k) -> size_t { return (static_cast<size_t>(i) * f + c) * hw + k; };
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < f; ++c)
                for (int k = 0; k < hw; ++k) mean[static_cast<size_t>(c)] += in[at(i, c, k)];
        for (auto& v : mean) v /= m;
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < f; ++c)
                for (int k = 0; k < hw; ++k) {
                    double d = in[at(i, c, k)] - mean[static_cast<size_t>(c)];
                    var[static_cast<size_t>(c)] += d * d;
                }
        for (auto& v : var) v /= m;
        Vec out(in.size());
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < f; ++c)
                for (int k = 0; k < hw; ++k)
                    out[at(i, c, k)] = gamma[static_cast<size_t>(c)] * (in[at(i, c, k)] - mean[static_cast<size_t>(c)]) /
                                           std::sqrt(var[static_cast<size_t>(c)] + bn->eps) +
                                       beta[static_cast<size_t>(c)];
        return out;
    }
    if (auto* dr = dynamic_cast<const multifix::nn::Dropout*>(&layer)) {
        Rng rng(dropout_seed);
        double scale = 1.0 / (1.0 - dr->rate);
        Vec out(in.size());
        for (size_t i = 0; i < in.size(); ++i) out[i] = rng.uniform() >= dr->rate ? in[i] * scale : 0.0;
        return out;
    }
    if (dynamic_cast<const multifix::nn::Relu*>(&layer)) {
        Vec out(in.size());
        for (size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
        return out;
    }
    if (dynamic_cast<const multifix::nn::Sigmoid*>(&layer)) {
        Vec out(in.size());
        for (size_t i = 0; i < in.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-in[i]));
        return out;
    }
    if (dynamic_cast<const multifix::nn::Softmax*>(&layer)) {
        int c = shape.back();
        int rows = static_cast<int>(in.size()) / c;
        Vec out(in.size());
        for (int r = 0; r < rows; ++r) {
            double mx = -1e300, sum = 0.0;
            for (int j = 0; j < c; ++j) mx = std::max(mx, in[static_cast<size_t>(r) * c + j]);
            for (int j = 0; j < c; ++j) {
                out[static_cast<size_t>(r) * c + j] = std::exp(in[static_cast<size_t>(r) * c + j] - mx);
                sum += out[static_cast<size_t>(r) * c + j];
            }
            for (int j = 0; j < c; ++j) out[static_cast<size_t>(r) * c + j] /= sum;
        }
        return out;
    }
    if (dynamic_cast<const multifix::nn::Flatten*>(&layer)) {
        shape = {shape[0], prod_tail(shape)};
        return in;
    }
    if (auto* rs = dynamic_cast<const multifix::nn::Reshape*>(&layer)) {
        std::vector<int> ns{shape[0]};
        ns.insert(ns.end(), rs->dims.begin(), rs->dims.end());
        shape = ns;
        return in;
    }
    if (auto* up = dynamic_cast<const multifix::nn::Upsample2d*>(&layer)) {
        int n = shape[0], ci = shape[1], h = shape[2], w = shape[3], f = up->factor;
        Vec out(static_cast<size_t>(n) * ci * h * f * w * f);
        size_t o = 0;
        for (int i = 0; i < n * ci; ++i)
            for (int y = 0; y < h * f; ++y)
                for (int x = 0; x < w * f; ++x, ++o)
                    out[o] = in[static_cast<size_t>(i) * h * w + static_cast<size_t>(y / f) * w + x / f];
        shape = {n, ci, h * f, w * f};
        return out;
    }
    throw std::logic_error(std::string("gradcheck reference: unhandled layer kind ") + layer.kind());
}

}  // namespace ref

// Double-precision reference loss sum(forward(x) * r), parameters taken from
// the mirror copies so individual elements can be perturbed.
inline double ref_loss(const Sequence& seq, const std::vector<ref::Vec>& param_mirror, const ref::Vec& input,
                       std::vector<int> shape, const std::vector<float>& r, uint64_t dropout_seed) {
    ref::Vec cur = input;
    size_t pidx = 0;
    for (int i = 0; i < seq.size(); ++i) {
        auto& layer = const_cast<multifix::nn::Layer&>(seq.layer(i));
        ref::LayerState st;
        for (size_t k = 0; k < layer.parameters().size(); ++k) st.params.push_back(param_mirror[pidx++]);
        cur = ref::forward_layer(layer, cur, shape, st, dropout_seed + static_cast<uint64_t>(i) * 1315423911ULL);
    }
    double loss = 0.0;
    for (size_t i = 0; i < cur.size(); ++i) loss += cur[i] * static_cast<double>(r[i]);
    return loss;
}

inline double rel_err(double a, double n) {
    double denom = std::max(std::abs(a), std::abs(n));
    return std::abs(a - n) / std::max(denom, 1e-2);
}

// Compares analytic float32 gradients (implementation under test) against
// central finite differences of the double reference, for a random sample of
// parameter and input elements.
inline Result check(Sequence& seq, Tensor in, Rng& rng, int samples_per_tensor = 12, uint64_t dropout_seed = 1) {
    const double h = 1e-3;
    auto out_shape = seq.output_shape(in.shape);
    std::vector<float> r(static_cast<size_t>(Tensor::count(out_shape)));
    for (auto& v : r) v = static_cast<float>(rng.uniform(-1.0, 1.0));

    // seed dropout layers the same way the reference will derive them
    for (int i = 0; i < seq.size(); ++i)
        if (auto* d = dynamic_cast<multifix::nn::Dropout*>(&seq.layer(i)))
            d->seed(dropout_seed + static_cast<uint64_t>(i) * 1315423911ULL);

    seq.zero_grad();
    seq.forward(in, Mode::train);
    Tensor dout(out_shape, r);
    Tensor din = seq.backward(dout);

    // double mirrors
    auto params = seq.parameters();
    std::vector<ref::Vec> mirror;
    for (auto& p : params) mirror.emplace_back(p.value->data.begin(), p.value->data.end());
    ref::Vec input_mirror(in.data.begin(), in.data.end());

    Result res;
    auto check_element = [&](double* slot, double analytic, const std::string& name) {
        double orig = *slot;
        *slot = orig + h;
        double lp = ref_loss(seq, mirror, input_mirror, in.shape, r, dropout_seed);
        *slot = orig - h;
        double lm = ref_loss(seq, mirror, input_mirror, in.shape, r, dropout_seed);
        *slot = orig;
        double numeric = (lp - lm) / (2.0 * h);
        double e = rel_err(analytic, numeric);
        ++res.checked;
        if (e > res.max_rel_err) {
            res.max_rel_err = e;
            res.worst = name;
        }
    };

    for (size_t pi = 0; pi < params.size(); ++pi) {
        int n = static_cast<int>(params[pi].value->data.size());
        for (int s = 0; s < std::min(samples_per_tensor, n); ++s) {
            int k = n <= samples_per_tensor ? s : rng.uniform_int(n);
            check_element(&mirror[pi][static_cast<size_t>(k)],
                          static_cast<double>(params[pi].value->grad[static_cast<size_t>(k)]), params[pi].name);
        }
    }
    int n = static_cast<int>(in.data.size());
    for (int s = 0; s < std::min(samples_per_tensor, n); ++s) {
        int k = n <= samples_per_tensor ? s : rng.uniform_int(n);
        check_element(&input_mirror[static_cast<size_t>(k)], static_cast<double>(din.data[static_cast<size_t>(k)]),
                      "input");
    }
    return res;
}

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

}  // namespace gradcheck
