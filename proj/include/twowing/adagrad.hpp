#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "twowing/autodiff.hpp"

namespace twowing {

/// AdaGrad over an externally owned parameter list. Each step consumes the
/// gradients accumulated on the parameters and zeroes them.
class AdaGrad {
 public:
  explicit AdaGrad(std::vector<Parameter*> params, double lr = 0.02, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), eps_(eps) {}

  double lr() const { return lr_; }

  void step() {
    for (Parameter* p : params_) {
      for (std::size_t i = 0; i < p->value.numel(); ++i) {
        double g = p->grad[i];
        p->accum[i] += g * g;
        p->value[i] -= lr_ * g / std::sqrt(p->accum[i] + eps_);
      }
      p->zero_grad();
    }
  }

  void zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
  }

 private:
  std::vector<Parameter*> params_;
  double lr_;
  double eps_;
};

}  // namespace twowing
