#pragma once

#include "longichange/nn/autograd.hpp"

namespace lc::nn {

/// Adam with bias correction. The learning rate may be reset between steps
/// (used for inverse-time decay schedules).
class Adam {
 public:
  Adam(std::vector<Var> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  std::int64_t steps_taken() const { return t_; }

  /// Applies one update from the accumulated gradients, then leaves the
  /// gradients untouched (call zero_grad before the next backward pass).
  void step();
  void zero_grad();

 private:
  std::vector<Var> params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, epsilon_;
  std::int64_t t_ = 0;
};

}  // namespace lc::nn
