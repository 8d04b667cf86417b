#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "longichange/nn/tensor.hpp"

namespace lc::nn {

/// One value in the computation tape. Graphs are rebuilt per step; nodes are
/// freed when the last Var referencing them goes away. Parameters are leaf
/// nodes kept alive by their owning network across steps.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool has_grad = false;
  std::string name;  // nonempty for parameters
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad();
};

using Var = std::shared_ptr<Node>;

Var make_leaf(Tensor value, bool requires_grad = false, std::string name = {});
Var make_const(Tensor value);

/// Reverse-mode sweep from a scalar (numel == 1) node.
void backward(const Var& loss);

void zero_grad(const std::vector<Var>& params);

/// Named parameter registry; owns nothing but the Vars.
class ParamStore {
 public:
  Var add(const std::string& name, Tensor init);
  const std::vector<Var>& all() const { return params_; }
  Var find(const std::string& name) const;
  std::int64_t total_count() const;
  std::vector<std::pair<std::string, Tensor>> snapshot() const;
  void restore(const std::vector<std::pair<std::string, Tensor>>& arrays);

 private:
  std::vector<Var> params_;
};

// ---- differentiable ops ----------------------------------------------------

/// 3D convolution over (N,C,X,Y,Z) with cubic kernel k (odd), "same"
/// zero-padding k/2 and stride 1 or 2. Weight (Cout,Cin,k,k,k), bias (Cout).
Var conv3d(const Var& x, const Var& w, const Var& b, int stride = 1);

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);

/// x * exp(0.5 * half_log) elementwise plus mu: the reparameterisation
/// z = mu + exp(log_var / 2) * eps with eps a constant tensor.
Var reparameterize(const Var& mu, const Var& log_var, const Tensor& eps);

/// Broadcast-multiply (N,C,S) features by a (N,1,S) per-voxel gate.
Var mul_channel_gate(const Var& x, const Var& gate);

/// 2x2x2 max pooling, stride 2; spatial dims must be even.
Var maxpool2(const Var& x);

/// 2x2x2 average pooling, stride 2; spatial dims must be even.
Var avgpool2(const Var& x);

/// Nearest-neighbour x2 upsampling of all spatial dims.
Var upsample_nearest2(const Var& x);

Var concat_channels(const std::vector<Var>& xs);

/// Scalar node with caller-supplied value and per-parent gradients, for
/// losses whose gradients are computed analytically at forward time.
Var custom_scalar(std::vector<Var> parents, real value, std::vector<Tensor> parent_grads);

/// value = sum_i coeffs[i] * terms[i]; every term must be scalar.
Var scalar_combine(const std::vector<Var>& terms, const std::vector<real>& coeffs);

/// Sum of squared entries over the given parameters (L2 penalty).
Var sum_squares(const std::vector<Var>& params);

// ---- non-differentiable helpers --------------------------------------------

/// Max-pool a (N,C,X,Y,Z) tensor by 2^k per spatial axis (no gradient);
/// used to build deep-supervision targets from a full-resolution mask.
Tensor maxpool_repeated(const Tensor& t, int times);

}  // namespace lc::nn
