// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/nn/tape.hpp"

namespace isirx::nn {

/// Adam with bias correction. Moments live on the parameters; the step
/// counter lives here.
class Adam {
  public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }
    int steps_taken() const { return t_; }

    void step(ParamStore& params) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            Param& p = params.at(i);
            if (!p.grad.allFinite())
                throw std::runtime_error("non-finite gradient for parameter " + p.name);
            p.m = beta1_ * p.m + (1.0 - beta1_) * p.grad;
            p.v = beta2_ * p.v + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
            const MatXd m_hat = p.m / bc1;
            const MatXd v_hat = p.v / bc2;
            p.value -= lr_ * (m_hat.array() / (v_hat.array().sqrt() + eps_)).matrix();
        }
    }

  private:
    double lr_;
    double beta1_, beta2_, eps_;
    int t_ = 0;
};

}  // namespace isirx::nn
