#pragma once

#include <cmath>
#include <vector>

#include "multifix/nn/layers.hpp"

namespace multifix::nn {

// Adam with decoupled weight decay. Moment buffers are keyed by position in
// the parameter list passed at construction; the list must stay stable for
// the optimizer's lifetime.
class Adam {
  public:
    float lr, weight_decay;
    float beta1 = 0.9f, beta2 = 0.999f, epsilon = 1e-8f;

    Adam(std::vector<Param> params, float lr_, float weight_decay_ = 0.0f)
        : lr(lr_), weight_decay(weight_decay_), params_(std::move(params)) {
        if (lr_ < 0.0f) throw ConfigError("adam: learning rate must be non-negative");
        if (weight_decay_ < 0.0f) throw ConfigError("adam: weight decay must be non-negative");
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (size_t i = 0; i < params_.size(); ++i) {
            params_[i].value->enable_grad();
            m_[i].assign(params_[i].value->data.size(), 0.0f);
            v_[i].assign(params_[i].value->data.size(), 0.0f);
        }
    }

    int64_t step_count() const { return step_; }

    // One update over all tracked parameters; clears their gradients after.
    void step() {
        ++step_;
        float bc1 = 1.0f - std::pow(beta1, static_cast<float>(step_));
        float bc2 = 1.0f - std::pow(beta2, static_cast<float>(step_));
        for (size_t i = 0; i < params_.size(); ++i) {
            Tensor& p = *params_[i].value;
            if (!all_finite(p.grad))
                throw NumericError("adam: non-finite gradient in parameter " + params_[i].name);
            auto& m = m_[i];
            auto& v = v_[i];
            for (size_t k = 0; k < p.data.size(); ++k) {
                float g = p.grad[k];
                m[k] = beta1 * m[k] + (1.0f - beta1) * g;
                v[k] = beta2 * v[k] + (1.0f - beta2) * g * g;
                float mhat = m[k] / bc1;
                float vhat = v[k] / bc2;
                float decay = weight_decay * p.data[k];
                p.data[k] -= lr * (mhat / (std::sqrt(vhat) + epsilon) + decay);
            }
            p.zero_grad();
        }
    }

  private:
    std::vector<Param> params_;
    std::vector<std::vector<float>> m_, v_;
    int64_t step_ = 0;
};

}  // namespace multifix::nn
