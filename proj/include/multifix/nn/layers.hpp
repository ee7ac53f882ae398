#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "multifix/nn/tensor.hpp"

namespace multifix::nn {

enum class Mode { train, eval };

enum class Init { kaiming_uniform, xavier_uniform };

struct Param {
    std::string name;  // suffix, e.g. "weight"; Sequence prepends the layer id
    Tensor* value;
};

using EMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

// One step of a feed-forward stack. forward() in train mode caches whatever
// backward() needs; backward() consumes the cache, accumulates parameter
// gradients and returns the gradient w.r.t. its input.
class Layer {
  public:
    virtual ~Layer() = default;
    virtual const char* kind() const = 0;
    virtual std::vector<int> output_shape(const std::vector<int>& in) const = 0;
    virtual Tensor forward(const Tensor& in, Mode mode) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<Param> parameters() { return {}; }
    // non-trainable state that still belongs in checkpoints (e.g. batchnorm stats)
    virtual std::vector<Param> buffers() { return {}; }
    virtual void init_params(Rng&) {}
    virtual std::unique_ptr<Layer> clone() const = 0;

  protected:
    [[noreturn]] void shape_error(const std::string& msg) const {
        throw ShapeError(std::string(kind()) + ": " + msg);
    }
};

inline void init_uniform(Tensor& t, Rng& rng, float limit) {
    for (float& v : t.data) v = static_cast<float>(rng.uniform(-limit, limit));
}

// ---------------------------------------------------------------------------
// dense
// ---------------------------------------------------------------------------

class Dense : public Layer {
  public:
    int in_features, out_features;
    Init init_style;
    Tensor weight;  // [out, in]
    Tensor bias;    // [out]

    Dense(int in, int out, Init style = Init::kaiming_uniform)
        : in_features(in), out_features(out), init_style(style), weight({out, in}), bias({out}) {
        if (in <= 0 || out <= 0) throw ConfigError("dense: features must be positive");
        weight.enable_grad();
        bias.enable_grad();
    }

    const char* kind() const override { return "dense"; }

    std::vector<int> output_shape(const std::vector<int>& in) const override {
        if (in.size() != 2 || in[1] != in_features)
            shape_error("expected input [N," + std::to_string(in_features) + "]");
        return {in[0], out_features};
    }

    void init_params(Rng& rng) override {
        float limit = init_style == Init::kaiming_uniform
                          ? std::sqrt(6.0f / static_cast<float>(in_features))
                          : std::sqrt(6.0f / static_cast<float>(in_features + out_features));
        init_uniform(weight, rng, limit);
        std::fill(bias.data.begin(), bias.data.end(), 0.0f);
    }

    Tensor forward(const Tensor& in, Mode mode) override {
        auto out_shape = output_shape(in.shape);
        int n = in.shape[0];
        Tensor out(out_shape);
        ECMap x(in.data.data(), n, in_features);
        ECMap w(weight.data.data(), out_features, in_features);
        EMap y(out.data.data(), n, out_features);
        y.noalias() = x * w.transpose();
        y.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias.data.data(), out_features);
        if (mode == Mode::train) input_ = in;
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        int n = input_.shape[0];
        Tensor grad_in(input_.shape);
        ECMap x(input_.data.data(), n, in_features);
        ECMap dy(grad_out.data.data(), n, out_features);
        ECMap w(weight.data.data(), out_features, in_features);
        EMap dw(weight.grad.data(), out_features, in_features);
        EMap dx(grad_in.data.data(), n, in_features);
        dw.noalias() += dy.transpose() * x;
        Eigen::Map<Eigen::VectorXf>(bias.grad.data(), out_features) += dy.colwise().sum();
        dx.noalias() = dy * w;
        return grad_in;
    }

    std::vector<Param> parameters() override { return {{"weight", &weight}, {"bias", &bias}}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

  private:
    Tensor input_;
};

// ---------------------------------------------------------------------------
// conv2d (stride/padding, im2col + GEMM)
// ---------------------------------------------------------------------------

class Conv2d : public Layer {
  public:
    int in_channels, out_channels, ksize, stride, pad;
    Init init_style;
    Tensor weight;  // [out_channels, in_channels*k*k]
    Tensor bias;    // [out_channels]

    Conv2d(int in_ch, int out_ch, int k, int stride_ = 1, int pad_ = -1, Init style = Init::kaiming_uniform)
        : in_channels(in_ch),
          out_channels(out_ch),
          ksize(k),
          stride(stride_),
          pad(pad_ < 0 ? k / 2 : pad_),
          init_style(style),
          weight({out_ch, in_ch * k * k}),
          bias({out_ch}) {
        if (k <= 0 || stride_ <= 0) throw ConfigError("conv2d: kernel and stride must be positive");
        weight.enable_grad();
        bias.enable_grad();
    }

    const char* kind() const override { return "conv2d"; }

    std::vector<int> output_shape(const std::vector<int>& in) const override {
        if (in.size() != 4 || in[1] != in_channels)
            shape_error("expected input [N," + std::to_string(in_channels) + ",H,W]");
        int oh = (in[2] + 2 * pad - ksize) / stride + 1;
        int ow = (in[3] + 2 * pad - ksize) / stride + 1;
        if (oh <= 0 || ow <= 0) shape_error("input " + std::to_string(in[2]) + "x" + std::to_string(in[3]) + " too small for kernel");
        return {in[0], out_channels, oh, ow};
    }

    void init_params(Rng& rng) override {
        int fan_in = in_channels * ksize * ksize;
        int fan_out = out_channels * ksize * ksize;
        float limit = init_style == Init::kaiming_uniform ? std::sqrt(6.0f / static_cast<float>(fan_in))
                                                          : std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
        init_uniform(weight, rng, limit);
        std::fill(bias.data.begin(), bias.data.end(), 0.0f);
    }

    Tensor forward(const Tensor& in, Mode mode) override {
        auto os = output_shape(in.shape);
        int n = in.shape[0], h = in.shape[2], w = in.shape[3], oh = os[2], ow = os[3];
        int ckk = in_channels * ksize * ksize, ohw = oh * ow;
        Tensor out(os);
        std::vector<float> cols(static_cast<size_t>(ckk) * ohw);
        ECMap wm(weight.data.data(), out_channels, ckk);
        for (int i = 0; i < n; ++i) {
            im2col(in.data.data() + static_cast<size_t>(i) * in_channels * h * w, h, w, cols.data(), oh, ow);
            EMap y(out.data.data() + static_cast<size_t>(i) * out_channels * ohw, out_channels, ohw);
            ECMap c(cols.data(), ckk, ohw);
            y.noalias() = wm * c;
            y.colwise() += Eigen::Map<const Eigen::VectorXf>(bias.data.data(), out_channels);
        }
        if (mode == Mode::train) input_ = in;
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        int n = input_.shape[0], h = input_.shape[2], w = input_.shape[3];
        int oh = grad_out.shape[2], ow = grad_out.shape[3];
        int ckk = in_channels * ksize * ksize, ohw = oh * ow;
        Tensor grad_in(input_.shape);
        std::vector<float> cols(static_cast<size_t>(ckk) * ohw);
        std::vector<float> dcols(static_cast<size_t>(ckk) * ohw);
        ECMap wm(weight.data.data(), out_channels, ckk);
        EMap dwm(weight.grad.data(), out_channels, ckk);
        Eigen::Map<Eigen::VectorXf> db(bias.grad.data(), out_channels);
        for (int i = 0; i < n; ++i) {
            im2col(input_.data.data() + static_cast<size_t>(i) * in_channels * h * w, h, w, cols.data(), oh, ow);
            ECMap dy(grad_out.data.data() + static_cast<size_t>(i) * out_channels * ohw, out_channels, ohw);
            ECMap c(cols.data(), ckk, ohw);
            dwm.noalias() += dy * c.transpose();
            db += dy.rowwise().sum();
            EMap dc(dcols.data(), ckk, ohw);
            dc.noalias() = wm.transpose() * dy;
            col2im(dcols.data(), h, w, grad_in.data.data() + static_cast<size_t>(i) * in_channels * h * w, oh, ow);
        }
        return grad_in;
    }

    std::vector<Param> parameters() override { return {{"weight", &weight}, {"bias", &bias}}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }

  private:
    Tensor input_;

    void im2col(const float* src, int h, int w, float* cols, int oh, int ow) const {
        int ohw = oh * ow;
        for (int c = 0; c < in_channels; ++c) {
            for (int ky = 0; ky < ksize; ++ky) {
                for (int kx = 0; kx < ksize; ++kx) {
                    float* dst = cols + (static_cast<size_t>(c) * ksize * ksize + ky * ksize + kx) * ohw;
                    const float* plane = src + static_cast<size_t>(c) * h * w;
                    for (int oy = 0; oy < oh; ++oy) {
                        int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= h) {
                            std::fill(dst, dst + ow, 0.0f);
                            dst += ow;
                            continue;
                        }
                        const float* row = plane + static_cast<size_t>(iy) * w;
                        for (int ox = 0; ox < ow; ++ox) {
                            int ix = ox * stride + kx - pad;
                            *dst++ = (ix >= 0 && ix < w) ? row[ix] : 0.0f;
                        }
                    }
                }
            }
        }
    }

    void col2im(const float* cols, int h, int w, float* dst, int oh, int ow) const {
        int ohw = oh * ow;
        for (int c = 0; c < in_channels; ++c) {
            for (int ky = 0; ky < ksize; ++ky) {
                for (int kx = 0; kx < ksize; ++kx) {
                    const float* src = cols + (static_cast<size_t>(c) * ksize * ksize + ky * ksize + kx) * ohw;
                    float* plane = dst + static_cast<size_t>(c) * h * w;
                    for (int oy = 0; oy < oh; ++oy) {
                        int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= h) {
                            src += ow;
                            continue;
                        }
                        float* row = plane + static_cast<size_t>(iy) * w;
                        for (int ox = 0; ox < ow; ++ox) {
                            int ix = ox * stride + kx - pad;
                            if (ix >= 0 && ix < w) row[ix] += src[ox];
                        }
                        src += ow;
                    }
                }
            }
        }
    }
};

// ---------------------------------------------------------------------------
// maxpool2d
// ---------------------------------------------------------------------------

class MaxPool2d : public Layer {
  public:
    int ksize, stride;

    explicit MaxPool2d(int k = 2, int stride_ = -1) : ksize(k), stride(stride_ < 0 ? k : stride_) {}

    const char* kind() const override { return "maxpool2d"; }

    std::vector<int> output_shape(const std::vector<int>& in) const override {
        if (in.size() != 4) shape_error("expected input [N,C,H,W]");
        int oh = (in[2] - ksize) / stride + 1;
        int ow = (in[3] - ksize) / stride + 1;
        if (oh <= 0 || ow <= 0) shape_error("input too small for pooling window");
        return {in[0], in[1], oh, ow};
    }

    Tensor forward(const Tensor& in, Mode mode) override {
        auto os = output_shape(in.shape);
        int n = in.shape[0], c = in.shape[1], h = in.shape[2], w = in.shape[3], oh = os[2], ow = os[3];
        Tensor out(os);
        argmax_.assign(out.data.size(), 0);
        size_t o = 0;
        for (int i = 0; i < n; ++i) {
            for (int ch = 0; ch < c; ++ch) {
                const float* plane = in.data.data() + (static_cast<size_t>(i) * c + ch) * h * w;
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox, ++o) {
                        int best = -1;
                        float bv = -std::numeric_limits<float>::infinity();
                        for (int ky = 0; ky < ksize; ++ky) {
                            for (int kx = 0; kx < ksize; ++kx) {
                                int idx = (oy * stride + ky) * w + ox * stride + kx;
                                if (plane[idx] > bv) {
                                    bv = plane[idx];
                                    best = idx;
                                }
                            }
                        }
                        out.data[o] = bv;
                        argmax_[o] = best;
                    }
                }
            }
        }
        if (mode == Mode::train) in_shape_ = in.shape;
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor grad_in(in_shape_);
        int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
        int ohw = static_cast<int>(grad_out.data.size()) / (n * c);
        size_t o = 0;
        for (int i = 0; i < n; ++i) {
            for (int ch = 0; ch < c; ++ch) {
                float* plane = grad_in.data.data() + (static_cast<size_t>(i) * c + ch) * h * w;
                for (int k = 0; k < ohw; ++k, ++o) plane[argmax_[o]] += grad_out.data[o];
            }
        }
        return grad_in;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2d>(*this); }

  private:
    std::vector<int> argmax_;
    std::vector<int> in_shape_;
};

// ---------------------------------------------------------------------------
// batchnorm (per-feature on [N,F], per-channel on [N,C,H,W])
// ---------------------------------------------------------------------------

class BatchNorm : public Layer {
  public:
    int features;
    float momentum, eps;
    Tensor gamma, beta;
    Tensor running_mean, running_var;

    explicit BatchNorm(int features_, float momentum_ = 0.1f, float eps_ = 1e-5f)
        : features(features_), momentum(momentum_), eps(eps_), gamma({features_}), beta({features_}),
          running_mean({features_}), running_var({features_}) {
        std::fill(gamma.data.begin(), gamma.data.end(), 1.0f);
        std::fill(running_var.data.begin(), running_var.data.end(), 1.0f);
        gamma.enable_grad();
        beta.enable_grad();
    }

    const char* kind() const override { return "batchnorm"; }

    std::vector<int> output_shape(const std::vector<int>& in) const override {
        int f = in.size() == 4 ? in[1] : (in.size() == 2 ? in[1] : -1);
        if (f != features) shape_error("expected " + std::to_string(features) + " features/channels");
        return in;
    }

    Tensor forward(const Tensor& in, Mode mode) override {
        output_shape(in.shape);
        Tensor out(in.shape);
        int m = group_count(in.shape);
        if (mode == Mode::train) {
            mean_.assign(features, 0.0f);
            var_.assign(features, 0.0f);
            for_each_elem(in.shape, [&](int f, size_t idx) { mean_[f] += in.data[idx]; });
            for (auto& v : mean_) v /= static_cast<float>(m);
            for_each_elem(in.shape, [&](int f, size_t idx) {
                float d = in.data[idx] - mean_[f];
                var_[f] += d * d;
            });
            for (auto& v : var_) v /= static_cast<float>(m);
            for (int f = 0; f < features; ++f) {
                running_mean.data[f] = (1 - momentum) * running_mean.data[f] + momentum * mean_[f];
                running_var.data[f] = (1 - momentum) * running_var.data[f] + momentum * var_[f];
            }
            inv_std_.resize(features);
            for (int f = 0; f < features; ++f) inv_std_[f] = 1.0f / std::sqrt(var_[f] + eps);
            xhat_.resize(in.data.size());
            for_each_elem(in.shape, [&](int f, size_t idx) {
                xhat_[idx] = (in.data[idx] - mean_[f]) * inv_std_[f];
                out.data[idx] = gamma.data[f] * xhat_[idx] + beta.data[f];
            });
            in_shape_ = in.shape;
        } else {
            for_each_elem(in.shape, [&](int f, size_t idx) {
                float inv = 1.0f / std::sqrt(running_var.data[f] + eps);
                out.data[idx] = gamma.data[f] * (in.data[idx] - running_mean.data[f]) * inv + beta.data[f];
            });
        }
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor grad_in(in_shape_);
        int m = group_count(in_shape_);
        std::vector<float> sum_dy(features, 0.0f), sum_dy_xhat(features, 0.0f);
        for_each_elem(in_shape_, [&](int f, size_t idx) {
            sum_dy[f] += grad_out.data[idx];
            sum_dy_xhat[f] += grad_out.data[idx] * xhat_[idx];
        });
        for (int f = 0; f < features; ++f) {
            gamma.grad[f] += sum_dy_xhat[f];
            beta.grad[f] += sum_dy[f];
        }
        float inv_m = 1.0f / static_cast<float>(m);
        for_each_elem(in_shape_, [&](int f, size_t idx) {
            float dy = grad_out.data[idx];
            grad_in.data[idx] =
                gamma.data[f] * inv_std_[f] * (dy - inv_m * sum_dy[f] - xhat_[idx] * inv_m * sum_dy_xhat[f]);
        });
        return grad_in;
    }

    std::vector<Param> parameters() override { return {{"gamma", &gamma}, {"beta", &beta}}; }
    std::vector<Param> buffers() override { return {{"running_mean", &running_mean}, {"running_var", &running_var}}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }

  private:
    std::vector<float> mean_, var_, inv_std_, xhat_;
    std::vector<int> in_shape_;

    int group_count(const std::vector<int>& s) const {
        return s.size() == 4 ? s[0] * s[2] * s[3] : s[0];
    }

    template <typename F>
    void for_each_elem(const std::vector<int>& s, F&& fn) const {
        if (s.size() == 4) {
            int n = s[0], c = s[1], hw = s[2] * s[3];
            size_t idx = 0;
            for (int i = 0; i < n; ++i)
                for (int f = 0; f < c; ++f)
                    for (int k = 0; k < hw; ++k, ++idx) fn(f, idx);
        } else {
            int n = s[0], c = s[1];
            size_t idx = 0;
            for (int i = 0; i < n; ++i)
                for (int f = 0; f < c; ++f, ++idx) fn(f, idx);
        }
    }
};

// ---------------------------------------------------------------------------
// dropout (inverted; identity in eval mode)
// ---------------------------------------------------------------------------

class Dropout : public Layer {
  public:
    float rate;

    explicit Dropout(float rate_) : rate(rate_), rng_(0x0d70) {
        if (rate_ < 0.0f || rate_ >= 1.0f) throw ConfigError("dropout: rate must be in [0,1)");
    }

    const char* kind() const override { return "dropout"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }

    void seed(uint64_t s) { rng_ = Rng(s); }

    Tensor forward(const Tensor& in, Mode mode) override {
        if (mode == Mode::eval || rate == 0.0f) {
            mask_.clear();
            return in;
        }
        Tensor out(in.shape);
        mask_.resize(in.data.size());
        float scale = 1.0f / (1.0f - rate);
        for (size_t i = 0; i < in.data.size(); ++i) {
            mask_[i] = rng_.uniform() >= rate ? scale : 0.0f;
            out.data[i] = in.data[i] * mask_[i];
        }
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        if (mask_.empty()) return grad_out;
        Tensor grad_in(grad_out.shape);
        for (size_t i = 0; i < grad_out.data.size(); ++i) grad_in.data[i] = grad_out.data[i] * mask_[i];
        return grad_in;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }

  private:
    Rng rng_;
    std::vector<float> mask_;
};

// ---------------------------------------------------------------------------
// activations
// ---------------------------------------------------------------------------

class Relu : public Layer {
  public:
    const char* kind() const override { return "relu"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }

    Tensor forward(const Tensor& in, Mode mode) override {
        Tensor out(in.shape);
        for (size_t i = 0; i < in.data.size(); ++i) out.data[i] = in.data[i] > 0.0f ? in.data[i] : 0.0f;
        if (mode == Mode::train) input_ = in;
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor grad_in(grad_out.shape);
        for (size_t i = 0; i < grad_out.data.size(); ++i)
            grad_in.data[i] = input_.data[i] > 0.0f ? grad_out.data[i] : 0.0f;
        return grad_in;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }

  private:
    Tensor input_;
};

class Sigmoid : public Layer {
  public:
    const char* kind() const override { return "sigmoid"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }

    Tensor forward(const Tensor& in, Mode mode) override {
        Tensor out(in.shape);
        for (size_t i = 0; i < in.data.size(); ++i) out.data[i] = 1.0f / (1.0f + std::exp(-in.data[i]));
        if (mode == Mode::train) output_ = out;
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor grad_in(grad_out.shape);
        for (size_t i = 0; i < grad_out.data.size(); ++i) {
            float y = output_.data[i];
            grad_in.data[i] = grad_out.data[i] * y * (1.0f - y);
        }
        return grad_in;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<Sigmoid>(*this); }

  private:
    Tensor output_;
};

// row-wise softmax over the last dimension
class Softmax : public Layer {
  public:
    const char* kind() const override { return "softmax"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override {
        if (in.empty()) shape_error("scalar input");
        return in;
    }

    Tensor forward(const Tensor& in, Mode mode) override {
        Tensor out(in.shape);
        int c = in.shape.back();
        int rows = static_cast<int>(in.data.size()) / c;
        for (int r = 0; r < rows; ++r) {
            const float* x = in.data.data() + static_cast<size_t>(r) * c;
            float* y = out.data.data() + static_cast<size_t>(r) * c;
            float mx = *std::max_element(x, x + c);
            float sum = 0.0f;
            for (int j = 0; j < c; ++j) {
                y[j] = std::exp(x[j] - mx);
                sum += y[j];
            }
            for (int j = 0; j < c; ++j) y[j] /= sum;
        }
        if (mode == Mode::train) output_ = out;
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor grad_in(grad_out.shape);
        int c = grad_out.shape.back();
        int rows = static_cast<int>(grad_out.data.size()) / c;
        for (int r = 0; r < rows; ++r) {
            const float* y = output_.data.data() + static_cast<size_t>(r) * c;
            const float* dy = grad_out.data.data() + static_cast<size_t>(r) * c;
            float* dx = grad_in.data.data() + static_cast<size_t>(r) * c;
            float dot = 0.0f;
            for (int j = 0; j < c; ++j) dot += dy[j] * y[j];
            for (int j = 0; j < c; ++j) dx[j] = y[j] * (dy[j] - dot);
        }
        return grad_in;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<Softmax>(*this); }

  private:
    Tensor output_;
};

// ---------------------------------------------------------------------------
// shape adapters
// ---------------------------------------------------------------------------

class Flatten : public Layer {
  public:
    const char* kind() const override { return "flatten"; }

    std::vector<int> output_shape(const std::vector<int>& in) const override {
        if (in.empty()) shape_error("scalar input");
        int f = 1;
        for (size_t i = 1; i < in.size(); ++i) f *= in[i];
        return {in[0], f};
    }

    Tensor forward(const Tensor& in, Mode mode) override {
        Tensor out(output_shape(in.shape), in.data);
        if (mode == Mode::train) in_shape_ = in.shape;
        return out;
    }

    Tensor backward(const Tensor& grad_out) override { return Tensor(in_shape_, grad_out.data); }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

  private:
    std::vector<int> in_shape_;
};

// [N, prod(dims)] -> [N, dims...]
class Reshape : public Layer {
  public:
    std::vector<int> dims;

    explicit Reshape(std::vector<int> dims_) : dims(std::move(dims_)) {}

    const char* kind() const override { return "reshape"; }

    std::vector<int> output_shape(const std::vector<int>& in) const override {
        int want = 1;
        for (int d : dims) want *= d;
        if (in.size() != 2 || in[1] != want) shape_error("expected input [N," + std::to_string(want) + "]");
        std::vector<int> out{in[0]};
        out.insert(out.end(), dims.begin(), dims.end());
        return out;
    }

    Tensor forward(const Tensor& in, Mode mode) override {
        Tensor out(output_shape(in.shape), in.data);
        if (mode == Mode::train) in_shape_ = in.shape;
        return out;
    }

    Tensor backward(const Tensor& grad_out) override { return Tensor(in_shape_, grad_out.data); }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<Reshape>(*this); }

  private:
    std::vector<int> in_shape_;
};

// nearest-neighbour upsampling; the decoder counterpart of maxpool
class Upsample2d : public Layer {
  public:
    int factor;

    explicit Upsample2d(int factor_ = 2) : factor(factor_) {
        if (factor_ < 1) throw ConfigError("upsample2d: factor must be >= 1");
    }

    const char* kind() const override { return "upsample2d"; }

    std::vector<int> output_shape(const std::vector<int>& in) const override {
        if (in.size() != 4) shape_error("expected input [N,C,H,W]");
        return {in[0], in[1], in[2] * factor, in[3] * factor};
    }

    Tensor forward(const Tensor& in, Mode mode) override {
        auto os = output_shape(in.shape);
        Tensor out(os);
        int n = in.shape[0], c = in.shape[1], h = in.shape[2], w = in.shape[3];
        for (int i = 0; i < n * c; ++i) {
            const float* src = in.data.data() + static_cast<size_t>(i) * h * w;
            float* dst = out.data.data() + static_cast<size_t>(i) * h * w * factor * factor;
            for (int y = 0; y < h * factor; ++y) {
                const float* srow = src + static_cast<size_t>(y / factor) * w;
                for (int x = 0; x < w * factor; ++x) *dst++ = srow[x / factor];
            }
        }
        if (mode == Mode::train) in_shape_ = in.shape;
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor grad_in(in_shape_);
        int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
        for (int i = 0; i < n * c; ++i) {
            const float* src = grad_out.data.data() + static_cast<size_t>(i) * h * w * factor * factor;
            float* dst = grad_in.data.data() + static_cast<size_t>(i) * h * w;
            for (int y = 0; y < h * factor; ++y) {
                float* drow = dst + static_cast<size_t>(y / factor) * w;
                for (int x = 0; x < w * factor; ++x) drow[x / factor] += *src++;
            }
        }
        return grad_in;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<Upsample2d>(*this); }

  private:
    std::vector<int> in_shape_;
};

}  // namespace multifix::nn
