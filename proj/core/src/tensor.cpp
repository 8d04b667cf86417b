#include "longichange/nn/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace lc::nn {

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

Tensor volume_to_tensor(const Volume& v) {
  return volumes_to_tensor({&v});
}

Tensor volumes_to_tensor(const std::vector<const Volume*>& channels) {
  if (channels.empty()) throw std::invalid_argument("volumes_to_tensor: no channels");
  const Volume& first = *channels.front();
  const auto X = first.dim(0), Y = first.dim(1), Z = first.dim(2);
  Tensor t({1, static_cast<std::int64_t>(channels.size()), X, Y, Z});
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const Volume& v = *channels[c];
    if (v.shape() != first.shape())
      throw std::invalid_argument("volumes_to_tensor: channel shape mismatch");
    real* dst = t.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(X * Y * Z);
    for (std::int64_t i = 0; i < X; ++i)
      for (std::int64_t j = 0; j < Y; ++j)
        for (std::int64_t k = 0; k < Z; ++k)
          dst[(i * Y + j) * Z + k] = static_cast<real>(v.at(i, j, k));
  }
  return t;
}

Tensor batch_tensors(const std::vector<Tensor>& items) {
  if (items.empty()) throw std::invalid_argument("batch_tensors: empty batch");
  auto shape = items.front().shape();
  if (shape.empty() || shape[0] != 1)
    throw std::invalid_argument("batch_tensors: items must have a leading batch dim of 1");
  for (const auto& t : items)
    if (t.shape() != shape) throw std::invalid_argument("batch_tensors: shape mismatch");
  shape[0] = static_cast<std::int64_t>(items.size());
  Tensor out(shape);
  const std::size_t per = static_cast<std::size_t>(items.front().numel());
  for (std::size_t n = 0; n < items.size(); ++n)
    std::copy_n(items[n].data(), per, out.data() + n * per);
  return out;
}

Volume tensor_to_volume(const Tensor& t, std::int64_t n, std::int64_t c,
                        const Volume::Spacing& spacing, DtypeRole role) {
  if (t.ndim() != 5) throw std::invalid_argument("tensor_to_volume: expects (N,C,X,Y,Z)");
  const auto N = t.dim(0), C = t.dim(1), X = t.dim(2), Y = t.dim(3), Z = t.dim(4);
  if (n < 0 || n >= N || c < 0 || c >= C)
    throw std::invalid_argument("tensor_to_volume: batch/channel out of range");
  Volume v({X, Y, Z}, spacing, role);
  const real* src = t.data() + static_cast<std::size_t>((n * C + c) * X * Y * Z);
  for (std::int64_t i = 0; i < X; ++i)
    for (std::int64_t j = 0; j < Y; ++j)
      for (std::int64_t k = 0; k < Z; ++k) {
        auto x = static_cast<float>(src[(i * Y + j) * Z + k]);
        if (role == DtypeRole::probability) x = std::clamp(x, 0.0f, 1.0f);
        v.at(i, j, k) = x;
      }
  v.validate();
  return v;
}

}  // namespace lc::nn
