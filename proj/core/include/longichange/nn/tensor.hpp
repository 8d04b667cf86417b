#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "longichange/volume.hpp"

namespace lc::nn {

/// Network scalar type. Double keeps finite-difference gradient checks well
/// conditioned and makes fixed-seed runs bit-reproducible.
using real = double;

/// Dense row-major (last index fastest) tensor. Conv data uses the layout
/// (N, C, X, Y, Z); conv weights use (Cout, Cin, kx, ky, kz).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape, real fill = 0.0)
      : shape_(std::move(shape)), data_(checked_numel(shape_), fill) {}
  Tensor(std::vector<std::int64_t> shape, std::vector<real> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != checked_numel(shape_))
      throw std::invalid_argument("Tensor: data size does not match shape");
  }

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t ndim() const { return shape_.size(); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

  real* data() { return data_.data(); }
  const real* data() const { return data_.data(); }
  std::span<real> span() { return data_; }
  std::span<const real> span() const { return data_; }

  real& operator[](std::size_t i) { return data_[i]; }
  real operator[](std::size_t i) const { return data_[i]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(real v) { std::fill(data_.begin(), data_.end(), v); }

  static std::size_t checked_numel(const std::vector<std::int64_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) {
      if (d < 1) throw std::invalid_argument("Tensor: dims must be >= 1");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

 private:
  std::vector<std::int64_t> shape_;
  std::vector<real> data_;
};

std::string shape_to_string(const std::vector<std::int64_t>& shape);

/// Volume (first axis fastest) -> (1, 1, X, Y, Z) tensor.
Tensor volume_to_tensor(const Volume& v);

/// Stack volumes as channels of one batch item -> (1, C, X, Y, Z).
Tensor volumes_to_tensor(const std::vector<const Volume*>& channels);

/// Concatenate single-item tensors along the batch axis.
Tensor batch_tensors(const std::vector<Tensor>& items);

/// Channel c of batch item n -> Volume with the given spacing and role.
/// Probability outputs are clamped to [0,1] after the float32 narrowing.
Volume tensor_to_volume(const Tensor& t, std::int64_t n, std::int64_t c,
                        const Volume::Spacing& spacing, DtypeRole role);

}  // namespace lc::nn
