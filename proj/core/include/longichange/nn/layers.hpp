#pragma once

#include "longichange/nn/autograd.hpp"
#include "longichange/rng.hpp"

namespace lc::nn {

enum class Init { he_relu, xavier, zeros };

Tensor conv_weight_init(std::int64_t cout, std::int64_t cin, int k, Init init, Rng& rng);

/// k^3 convolution with bias; registers its parameters under `<name>.w` /
/// `<name>.b`.
struct Conv3d {
  Var w, b;
  int stride = 1;

  Conv3d() = default;
  Conv3d(ParamStore& ps, const std::string& name, std::int64_t cin, std::int64_t cout, int k,
         int stride_, Init init, Rng& rng);

  Var operator()(const Var& x) const { return conv3d(x, w, b, stride); }
  std::int64_t param_count() const { return w->value.numel() + b->value.numel(); }
};

}  // namespace lc::nn
