#include "longichange/nn/adam.hpp"

#include <cmath>

namespace lc::nn {

Adam::Adam(std::vector<Var> params, double lr, double beta1, double beta2, double epsilon)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Node& p = *params_[i];
    if (!p.has_grad) continue;
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::int64_t j = 0; j < p.value.numel(); ++j) {
      const auto s = static_cast<std::size_t>(j);
      const double g = p.grad[s];
      m[s] = beta1_ * m[s] + (1.0 - beta1_) * g;
      v[s] = beta2_ * v[s] + (1.0 - beta2_) * g * g;
      p.value[s] -= lr_ * (m[s] / bc1) / (std::sqrt(v[s] / bc2) + epsilon_);
    }
  }
}

void Adam::zero_grad() { lc::nn::zero_grad(params_); }

}  // namespace lc::nn
