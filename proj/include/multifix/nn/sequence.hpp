#pragma once

#include <memory>
#include <string>
#include <vector>

#include "multifix/nn/layers.hpp"

namespace multifix::nn {

// Feed-forward layer stack. A train-mode forward records the tape
// (per-layer activations); backward consumes it exactly once.
class Sequence {
  public:
    Sequence() = default;

    Sequence(const Sequence& o) { *this = o; }

    Sequence& operator=(const Sequence& o) {
        layers_.clear();
        for (const auto& l : o.layers_) layers_.push_back(l->clone());
        acts_ = o.acts_;
        tape_live_ = o.tape_live_;
        return *this;
    }

    Sequence(Sequence&&) = default;
    Sequence& operator=(Sequence&&) = default;

    Sequence& add(std::unique_ptr<Layer> l) {
        layers_.push_back(std::move(l));
        return *this;
    }

    template <typename L, typename... Args>
    Sequence& emplace(Args&&... args) {
        layers_.push_back(std::make_unique<L>(std::forward<Args>(args)...));
        return *this;
    }

    int size() const { return static_cast<int>(layers_.size()); }
    Layer& layer(int i) { return *layers_[static_cast<size_t>(i)]; }
    const Layer& layer(int i) const { return *layers_[static_cast<size_t>(i)]; }

    void init_params(uint64_t seed) {
        for (size_t i = 0; i < layers_.size(); ++i) {
            Rng rng(rng_stream(seed, {0x1417u, i}));
            layers_[i]->init_params(rng);
            if (auto* d = dynamic_cast<Dropout*>(layers_[i].get())) d->seed(rng_stream(seed, {0xd707u, i}));
        }
    }

    std::vector<int> output_shape(std::vector<int> in) const {
        for (size_t i = 0; i < layers_.size(); ++i) {
            try {
                in = layers_[i]->output_shape(in);
            } catch (const ShapeError& e) {
                throw ShapeError("layer " + std::to_string(i) + " (" + e.what() + ")");
            }
        }
        return in;
    }

    Tensor forward(const Tensor& in, Mode mode) {
        Tensor cur = in;
        if (mode == Mode::train) {
            acts_.clear();
            acts_.push_back(cur);
        }
        for (size_t i = 0; i < layers_.size(); ++i) {
            try {
                cur = layers_[i]->forward(cur, mode);
            } catch (const ShapeError& e) {
                throw ShapeError("layer " + std::to_string(i) + " (" + e.what() + ")");
            }
            if (mode == Mode::train) acts_.push_back(cur);
        }
        if (mode == Mode::train) tape_live_ = true;
        return cur;
    }

    // Backpropagate grad_out (w.r.t. the final output) down to the input.
    // stop_before: gradients are not propagated into layers below this index
    // (used to skip frozen prefixes). Returns the gradient w.r.t. the output
    // of layer stop_before-1, i.e. w.r.t. the input when stop_before == 0.
    Tensor backward(const Tensor& grad_out, int stop_before = 0) {
        if (!tape_live_) throw NumericError("backward called twice on the same tape (or without a forward)");
        tape_live_ = false;
        Tensor g = grad_out;
        for (int i = static_cast<int>(layers_.size()) - 1; i >= stop_before; --i)
            g = layers_[static_cast<size_t>(i)]->backward(g);
        return g;
    }

    // Backpropagate from the final output, capturing the gradient w.r.t. the
    // output of layer `at` along the way (Grad-CAM hook). Consumes the tape.
    Tensor backward_capture(const Tensor& grad_out, int at) {
        if (!tape_live_) throw NumericError("backward called twice on the same tape (or without a forward)");
        if (at < 0 || at >= size()) throw ConfigError("backward_capture: invalid layer id " + std::to_string(at));
        tape_live_ = false;
        Tensor g = grad_out;
        for (int i = static_cast<int>(layers_.size()) - 1; i > at; --i)
            g = layers_[static_cast<size_t>(i)]->backward(g);
        return g;
    }

    // activation(i) = output of layer i-1 from the last train-mode forward
    // (activation(0) is the input)
    const Tensor& activation(int i) const { return acts_[static_cast<size_t>(i)]; }
    bool has_tape() const { return tape_live_; }
    void drop_tape() {
        tape_live_ = false;
        acts_.clear();
    }

    // Full parameter list with stable hierarchical names.
    std::vector<Param> parameters() const {
        std::vector<Param> out;
        collect(out, false);
        return out;
    }

    std::vector<Param> buffers() const {
        std::vector<Param> out;
        collect(out, true);
        return out;
    }

    // parameters owned by layers in [lo, hi)
    std::vector<Param> parameters_in_range(int lo, int hi) const {
        std::vector<Param> out;
        for (int i = lo; i < hi && i < size(); ++i) {
            for (auto& p : layers_[static_cast<size_t>(i)]->parameters())
                out.push_back({layer_param_name(i, p.name), p.value});
        }
        return out;
    }

    void zero_grad() {
        for (auto& p : parameters()) p.value->zero_grad();
    }

    int64_t parameter_count() const {
        int64_t n = 0;
        for (auto& p : parameters()) n += p.value->numel();
        return n;
    }

  private:
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<Tensor> acts_;
    bool tape_live_ = false;

    std::string layer_param_name(int i, const std::string& suffix) const {
        return "l" + std::to_string(i) + "." + std::string(layers_[static_cast<size_t>(i)]->kind()) + "." + suffix;
    }

    void collect(std::vector<Param>& out, bool want_buffers) const {
        for (size_t i = 0; i < layers_.size(); ++i) {
            auto ps = want_buffers ? layers_[i]->buffers() : layers_[i]->parameters();
            for (auto& p : ps) out.push_back({layer_param_name(static_cast<int>(i), p.name), p.value});
        }
    }
};

}  // namespace multifix::nn
