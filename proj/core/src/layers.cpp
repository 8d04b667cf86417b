#include "longichange/nn/layers.hpp"

#include <cmath>

namespace lc::nn {

Tensor conv_weight_init(std::int64_t cout, std::int64_t cin, int k, Init init, Rng& rng) {
  Tensor w({cout, cin, k, k, k});
  const double fan_in = static_cast<double>(cin) * k * k * k;
  const double fan_out = static_cast<double>(cout) * k * k * k;
  double std_dev = 0.0;
  switch (init) {
    case Init::he_relu: std_dev = std::sqrt(2.0 / fan_in); break;
    case Init::xavier: std_dev = std::sqrt(2.0 / (fan_in + fan_out)); break;
    case Init::zeros: return w;
  }
  for (std::int64_t i = 0; i < w.numel(); ++i)
    w[static_cast<std::size_t>(i)] = rng.normal() * std_dev;
  return w;
}

Conv3d::Conv3d(ParamStore& ps, const std::string& name, std::int64_t cin, std::int64_t cout,
               int k, int stride_, Init init, Rng& rng)
    : stride(stride_) {
  w = ps.add(name + ".w", conv_weight_init(cout, cin, k, init, rng));
  b = ps.add(name + ".b", Tensor({cout}));
}

}  // namespace lc::nn
