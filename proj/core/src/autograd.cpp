#include "longichange/nn/autograd.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_set>

namespace lc::nn {

using MatRM = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatCM = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

Tensor& Node::ensure_grad() {
  if (!has_grad) {
    grad = Tensor(value.shape());
    has_grad = true;
  }
  return grad;
}

Var make_leaf(Tensor value, bool requires_grad, std::string name) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->name = std::move(name);
  return n;
}

Var make_const(Tensor value) { return make_leaf(std::move(value), false); }

void backward(const Var& loss) {
  if (!loss || loss->value.numel() != 1)
    throw std::invalid_argument("backward: loss must be a scalar node");
  if (!loss->requires_grad) return;

  // Iterative post-order DFS over grad-requiring nodes.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  visited.insert(loss.get());
  while (!stack.empty()) {
    Node* node = stack.back().first;
    const std::size_t idx = stack.back().second;
    if (idx < node->parents.size()) {
      stack.back().second = idx + 1;
      Node* p = node->parents[idx].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss->ensure_grad()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->has_grad) n->backward_fn(*n);
  }
}

void zero_grad(const std::vector<Var>& params) {
  for (const auto& p : params) {
    p->has_grad = false;
    if (p->grad.numel() > 0) p->grad.fill(0.0);
  }
}

Var ParamStore::add(const std::string& name, Tensor init) {
  for (const auto& p : params_)
    if (p->name == name) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  params_.push_back(make_leaf(std::move(init), true, name));
  return params_.back();
}

Var ParamStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p;
  throw std::out_of_range("ParamStore: no parameter named " + name);
}

std::int64_t ParamStore::total_count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p->value.numel();
  return n;
}

std::vector<std::pair<std::string, Tensor>> ParamStore::snapshot() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.emplace_back(p->name, p->value);
  return out;
}

void ParamStore::restore(const std::vector<std::pair<std::string, Tensor>>& arrays) {
  for (const auto& [name, tensor] : arrays) {
    Var p = find(name);
    if (p->value.shape() != tensor.shape())
      throw std::invalid_argument("ParamStore: shape mismatch restoring " + name + ": have " +
                                  shape_to_string(p->value.shape()) + ", file has " +
                                  shape_to_string(tensor.shape()));
    p->value = tensor;
  }
}

namespace {

bool any_requires(const std::vector<Var>& vs) {
  return std::any_of(vs.begin(), vs.end(), [](const Var& v) { return v->requires_grad; });
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = any_requires(parents);
  n->parents = std::move(parents);
  if (n->requires_grad) n->backward_fn = std::move(fn);
  return n;
}

struct ConvDims {
  std::int64_t N, Cin, X, Y, Z, Cout, OX, OY, OZ, P, K;
  int k, pad, stride;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride) {
  if (x.ndim() != 5) throw std::invalid_argument("conv3d: input must be (N,C,X,Y,Z)");
  if (w.ndim() != 5 || w.dim(2) != w.dim(3) || w.dim(3) != w.dim(4))
    throw std::invalid_argument("conv3d: weight must be (Cout,Cin,k,k,k)");
  if (w.dim(1) != x.dim(1))
    throw std::invalid_argument("conv3d: input channels " + std::to_string(x.dim(1)) +
                                " do not match weight channels " + std::to_string(w.dim(1)));
  if (stride != 1 && stride != 2) throw std::invalid_argument("conv3d: stride must be 1 or 2");
  ConvDims d;
  d.N = x.dim(0); d.Cin = x.dim(1); d.X = x.dim(2); d.Y = x.dim(3); d.Z = x.dim(4);
  d.Cout = w.dim(0);
  d.k = static_cast<int>(w.dim(2));
  if (d.k % 2 == 0) throw std::invalid_argument("conv3d: kernel size must be odd");
  d.pad = d.k / 2;
  d.stride = stride;
  const auto out_extent = [&](std::int64_t in) {
    return (in + 2 * d.pad - d.k) / stride + 1;
  };
  d.OX = out_extent(d.X); d.OY = out_extent(d.Y); d.OZ = out_extent(d.Z);
  d.P = d.OX * d.OY * d.OZ;
  d.K = d.Cin * d.k * d.k * d.k;
  return d;
}

// Patch matrix (K x ncols, col-major) for output columns [col0, col0+ncols).
void im2col_block(const real* x, const ConvDims& d, std::int64_t col0, std::int64_t ncols,
                  real* out) {
  const std::int64_t k = d.k;
  for (std::int64_t c = 0; c < ncols; ++c) {
    const std::int64_t g = col0 + c;
    const std::int64_t oz = g % d.OZ;
    const std::int64_t oy = (g / d.OZ) % d.OY;
    const std::int64_t ox = g / (d.OZ * d.OY);
    const std::int64_t bx = ox * d.stride - d.pad;
    const std::int64_t by = oy * d.stride - d.pad;
    const std::int64_t bz = oz * d.stride - d.pad;
    real* col = out + c * d.K;
    for (std::int64_t ci = 0; ci < d.Cin; ++ci) {
      const real* xc = x + ci * d.X * d.Y * d.Z;
      for (std::int64_t dx = 0; dx < k; ++dx) {
        const std::int64_t ix = bx + dx;
        const bool x_ok = ix >= 0 && ix < d.X;
        for (std::int64_t dy = 0; dy < k; ++dy) {
          const std::int64_t iy = by + dy;
          real* dst = col + ((ci * k + dx) * k + dy) * k;
          if (!x_ok || iy < 0 || iy >= d.Y) {
            std::fill(dst, dst + k, 0.0);
            continue;
          }
          const real* src = xc + (ix * d.Y + iy) * d.Z;
          for (std::int64_t dz = 0; dz < k; ++dz) {
            const std::int64_t iz = bz + dz;
            dst[dz] = (iz >= 0 && iz < d.Z) ? src[iz] : 0.0;
          }
        }
      }
    }
  }
}

// Scatter-add of a patch-gradient matrix back into the input gradient.
void col2im_block(const real* cols, const ConvDims& d, std::int64_t col0, std::int64_t ncols,
                  real* gx) {
  const std::int64_t k = d.k;
  for (std::int64_t c = 0; c < ncols; ++c) {
    const std::int64_t g = col0 + c;
    const std::int64_t oz = g % d.OZ;
    const std::int64_t oy = (g / d.OZ) % d.OY;
    const std::int64_t ox = g / (d.OZ * d.OY);
    const std::int64_t bx = ox * d.stride - d.pad;
    const std::int64_t by = oy * d.stride - d.pad;
    const std::int64_t bz = oz * d.stride - d.pad;
    const real* col = cols + c * d.K;
    for (std::int64_t ci = 0; ci < d.Cin; ++ci) {
      real* xc = gx + ci * d.X * d.Y * d.Z;
      for (std::int64_t dx = 0; dx < k; ++dx) {
        const std::int64_t ix = bx + dx;
        if (ix < 0 || ix >= d.X) continue;
        for (std::int64_t dy = 0; dy < k; ++dy) {
          const std::int64_t iy = by + dy;
          if (iy < 0 || iy >= d.Y) continue;
          const real* src = col + ((ci * k + dx) * k + dy) * k;
          real* dst = xc + (ix * d.Y + iy) * d.Z;
          for (std::int64_t dz = 0; dz < k; ++dz) {
            const std::int64_t iz = bz + dz;
            if (iz >= 0 && iz < d.Z) dst[iz] += src[dz];
          }
        }
      }
    }
  }
}

constexpr std::int64_t kConvBlockCols = 8192;

}  // namespace

Var conv3d(const Var& x, const Var& w, const Var& b, int stride) {
  const ConvDims d = conv_dims(x->value, w->value, stride);
  if (b->value.ndim() != 1 || b->value.dim(0) != d.Cout)
    throw std::invalid_argument("conv3d: bias must have shape (Cout)");

  Tensor out({d.N, d.Cout, d.OX, d.OY, d.OZ});
  std::vector<real> patches(static_cast<std::size_t>(d.K * std::min(d.P, kConvBlockCols)));
  Eigen::Map<const MatRM> wm(w->value.data(), d.Cout, d.K);
  for (std::int64_t n = 0; n < d.N; ++n) {
    const real* xn = x->value.data() + n * d.Cin * d.X * d.Y * d.Z;
    real* on = out.data() + n * d.Cout * d.P;
    for (std::int64_t col0 = 0; col0 < d.P; col0 += kConvBlockCols) {
      const std::int64_t ncols = std::min(kConvBlockCols, d.P - col0);
      im2col_block(xn, d, col0, ncols, patches.data());
      Eigen::Map<const MatCM> pm(patches.data(), d.K, ncols);
      Eigen::Map<MatRM, 0, Eigen::OuterStride<>> om(
          on + col0, d.Cout, ncols, Eigen::OuterStride<>(d.P));
      om.noalias() = wm * pm;
    }
    for (std::int64_t co = 0; co < d.Cout; ++co) {
      const real bias = b->value[static_cast<std::size_t>(co)];
      real* row = on + co * d.P;
      for (std::int64_t p = 0; p < d.P; ++p) row[p] += bias;
    }
  }

  Var xv = x, wv = w, bv = b;
  return make_op(std::move(out), {x, w, b}, [xv, wv, bv, d](Node& self) {
    const Tensor& g = self.grad;
    const bool need_x = xv->requires_grad;
    const bool need_w = wv->requires_grad;
    const bool need_b = bv->requires_grad;
    Tensor* gx = need_x ? &xv->ensure_grad() : nullptr;
    Tensor* gw = need_w ? &wv->ensure_grad() : nullptr;
    Tensor* gb = need_b ? &bv->ensure_grad() : nullptr;

    std::vector<real> patches(static_cast<std::size_t>(d.K * std::min(d.P, kConvBlockCols)));
    std::vector<real> gcols(need_x ? patches.size() : 0);
    Eigen::Map<const MatRM> wm(wv->value.data(), d.Cout, d.K);
    for (std::int64_t n = 0; n < d.N; ++n) {
      const real* xn = xv->value.data() + n * d.Cin * d.X * d.Y * d.Z;
      const real* gn = g.data() + n * d.Cout * d.P;
      for (std::int64_t col0 = 0; col0 < d.P; col0 += kConvBlockCols) {
        const std::int64_t ncols = std::min(kConvBlockCols, d.P - col0);
        Eigen::Map<const MatRM, 0, Eigen::OuterStride<>> gm(
            gn + col0, d.Cout, ncols, Eigen::OuterStride<>(d.P));
        if (need_w || need_x) {
          if (need_w) {
            im2col_block(xn, d, col0, ncols, patches.data());
            Eigen::Map<const MatCM> pm(patches.data(), d.K, ncols);
            Eigen::Map<MatRM> gwm(gw->data(), d.Cout, d.K);
            gwm.noalias() += gm * pm.transpose();
          }
          if (need_x) {
            Eigen::Map<MatCM> gc(gcols.data(), d.K, ncols);
            gc.noalias() = wm.transpose() * gm;
            col2im_block(gcols.data(), d, col0, ncols,
                         gx->data() + n * d.Cin * d.X * d.Y * d.Z);
          }
        }
      }
      if (need_b) {
        for (std::int64_t co = 0; co < d.Cout; ++co) {
          const real* row = gn + co * d.P;
          real acc = 0.0;
          for (std::int64_t p = 0; p < d.P; ++p) acc += row[p];
          (*gb)[static_cast<std::size_t>(co)] += acc;
        }
      }
    }
  });
}

Var relu(const Var& x) {
  Tensor out(x->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i)
    out[static_cast<std::size_t>(i)] = std::max(x->value[static_cast<std::size_t>(i)], 0.0);
  Var xv = x;
  return make_op(std::move(out), {x}, [xv](Node& self) {
    if (!xv->requires_grad) return;
    Tensor& gx = xv->ensure_grad();
    for (std::int64_t i = 0; i < gx.numel(); ++i) {
      const auto s = static_cast<std::size_t>(i);
      if (xv->value[s] > 0.0) gx[s] += self.grad[s];
    }
  });
}

Var sigmoid(const Var& x) {
  Tensor out(x->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    out[s] = 1.0 / (1.0 + std::exp(-x->value[s]));
  }
  Var xv = x;
  return make_op(std::move(out), {x}, [xv](Node& self) {
    if (!xv->requires_grad) return;
    Tensor& gx = xv->ensure_grad();
    for (std::int64_t i = 0; i < gx.numel(); ++i) {
      const auto s = static_cast<std::size_t>(i);
      const real y = self.value[s];
      gx[s] += self.grad[s] * y * (1.0 - y);
    }
  });
}

Var add(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) throw std::invalid_argument("add: shape mismatch");
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    out[s] = a->value[s] + b->value[s];
  }
  Var av = a, bv = b;
  return make_op(std::move(out), {a, b}, [av, bv](Node& self) {
    for (const Var& p : {av, bv}) {
      if (!p->requires_grad) continue;
      Tensor& gp = p->ensure_grad();
      for (std::int64_t i = 0; i < gp.numel(); ++i) {
        const auto s = static_cast<std::size_t>(i);
        gp[s] += self.grad[s];
      }
    }
  });
}

Var mul(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) throw std::invalid_argument("mul: shape mismatch");
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    out[s] = a->value[s] * b->value[s];
  }
  Var av = a, bv = b;
  return make_op(std::move(out), {a, b}, [av, bv](Node& self) {
    if (av->requires_grad) {
      Tensor& ga = av->ensure_grad();
      for (std::int64_t i = 0; i < ga.numel(); ++i) {
        const auto s = static_cast<std::size_t>(i);
        ga[s] += self.grad[s] * bv->value[s];
      }
    }
    if (bv->requires_grad) {
      Tensor& gb = bv->ensure_grad();
      for (std::int64_t i = 0; i < gb.numel(); ++i) {
        const auto s = static_cast<std::size_t>(i);
        gb[s] += self.grad[s] * av->value[s];
      }
    }
  });
}

Var reparameterize(const Var& mu, const Var& log_var, const Tensor& eps) {
  if (!mu->value.same_shape(log_var->value) || !mu->value.same_shape(eps))
    throw std::invalid_argument("reparameterize: shape mismatch");
  Tensor out(mu->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    out[s] = mu->value[s] + std::exp(0.5 * log_var->value[s]) * eps[s];
  }
  Var mv = mu, lv = log_var;
  Tensor eps_copy = eps;
  return make_op(std::move(out), {mu, log_var}, [mv, lv, eps_copy](Node& self) {
    if (mv->requires_grad) {
      Tensor& gm = mv->ensure_grad();
      for (std::int64_t i = 0; i < gm.numel(); ++i) {
        const auto s = static_cast<std::size_t>(i);
        gm[s] += self.grad[s];
      }
    }
    if (lv->requires_grad) {
      Tensor& gl = lv->ensure_grad();
      for (std::int64_t i = 0; i < gl.numel(); ++i) {
        const auto s = static_cast<std::size_t>(i);
        gl[s] += self.grad[s] * eps_copy[s] * 0.5 * std::exp(0.5 * lv->value[s]);
      }
    }
  });
}

Var mul_channel_gate(const Var& x, const Var& gate) {
  const auto& xs = x->value.shape();
  const auto& gs = gate->value.shape();
  if (xs.size() != 5 || gs.size() != 5 || gs[1] != 1 || gs[0] != xs[0] || gs[2] != xs[2] ||
      gs[3] != xs[3] || gs[4] != xs[4])
    throw std::invalid_argument("mul_channel_gate: gate must be (N,1,spatial) matching x");
  const std::int64_t N = xs[0], C = xs[1], S = xs[2] * xs[3] * xs[4];
  Tensor out(xs);
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t c = 0; c < C; ++c) {
      const real* xi = x->value.data() + (n * C + c) * S;
      const real* gi = gate->value.data() + n * S;
      real* oi = out.data() + (n * C + c) * S;
      for (std::int64_t i = 0; i < S; ++i) oi[i] = xi[i] * gi[i];
    }
  Var xv = x, gv = gate;
  return make_op(std::move(out), {x, gate}, [xv, gv, N, C, S](Node& self) {
    if (xv->requires_grad) {
      Tensor& gx = xv->ensure_grad();
      for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t c = 0; c < C; ++c) {
          real* dst = gx.data() + (n * C + c) * S;
          const real* g = self.grad.data() + (n * C + c) * S;
          const real* gate_v = gv->value.data() + n * S;
          for (std::int64_t i = 0; i < S; ++i) dst[i] += g[i] * gate_v[i];
        }
    }
    if (gv->requires_grad) {
      Tensor& gg = gv->ensure_grad();
      for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t c = 0; c < C; ++c) {
          real* dst = gg.data() + n * S;
          const real* g = self.grad.data() + (n * C + c) * S;
          const real* xi = xv->value.data() + (n * C + c) * S;
          for (std::int64_t i = 0; i < S; ++i) dst[i] += g[i] * xi[i];
        }
    }
  });
}

namespace {

void check_even_spatial(const Tensor& t, const char* op) {
  static const char* axis_names[3] = {"X", "Y", "Z"};
  if (t.ndim() != 5) throw std::invalid_argument(std::string(op) + ": input must be (N,C,X,Y,Z)");
  for (int a = 0; a < 3; ++a)
    if (t.dim(static_cast<std::size_t>(2 + a)) % 2 != 0)
      throw std::invalid_argument(std::string(op) + ": spatial axis " + axis_names[a] +
                                  " has odd extent " +
                                  std::to_string(t.dim(static_cast<std::size_t>(2 + a))));
}

}  // namespace

Var maxpool2(const Var& x) {
  check_even_spatial(x->value, "maxpool2");
  const auto& s = x->value.shape();
  const std::int64_t N = s[0], C = s[1], X = s[2], Y = s[3], Z = s[4];
  const std::int64_t OX = X / 2, OY = Y / 2, OZ = Z / 2;
  Tensor out({N, C, OX, OY, OZ});
  std::vector<std::int64_t> argmax(static_cast<std::size_t>(out.numel()));
  std::size_t oi = 0;
  for (std::int64_t nc = 0; nc < N * C; ++nc) {
    const real* in = x->value.data() + nc * X * Y * Z;
    for (std::int64_t ox = 0; ox < OX; ++ox)
      for (std::int64_t oy = 0; oy < OY; ++oy)
        for (std::int64_t oz = 0; oz < OZ; ++oz, ++oi) {
          real best = -std::numeric_limits<real>::infinity();
          std::int64_t best_idx = 0;
          for (std::int64_t dx = 0; dx < 2; ++dx)
            for (std::int64_t dy = 0; dy < 2; ++dy)
              for (std::int64_t dz = 0; dz < 2; ++dz) {
                const std::int64_t idx =
                    ((2 * ox + dx) * Y + (2 * oy + dy)) * Z + (2 * oz + dz);
                if (in[idx] > best) {  // first maximum wins on ties
                  best = in[idx];
                  best_idx = idx;
                }
              }
          out[oi] = best;
          argmax[oi] = nc * X * Y * Z + best_idx;
        }
  }
  Var xv = x;
  return make_op(std::move(out), {x}, [xv, argmax](Node& self) {
    if (!xv->requires_grad) return;
    Tensor& gx = xv->ensure_grad();
    for (std::int64_t i = 0; i < self.grad.numel(); ++i) {
      const auto s2 = static_cast<std::size_t>(i);
      gx[static_cast<std::size_t>(argmax[s2])] += self.grad[s2];
    }
  });
}

Var avgpool2(const Var& x) {
  check_even_spatial(x->value, "avgpool2");
  const auto& s = x->value.shape();
  const std::int64_t N = s[0], C = s[1], X = s[2], Y = s[3], Z = s[4];
  const std::int64_t OX = X / 2, OY = Y / 2, OZ = Z / 2;
  Tensor out({N, C, OX, OY, OZ});
  std::size_t oi = 0;
  for (std::int64_t nc = 0; nc < N * C; ++nc) {
    const real* in = x->value.data() + nc * X * Y * Z;
    for (std::int64_t ox = 0; ox < OX; ++ox)
      for (std::int64_t oy = 0; oy < OY; ++oy)
        for (std::int64_t oz = 0; oz < OZ; ++oz, ++oi) {
          real acc = 0.0;
          for (std::int64_t dx = 0; dx < 2; ++dx)
            for (std::int64_t dy = 0; dy < 2; ++dy)
              for (std::int64_t dz = 0; dz < 2; ++dz)
                acc += in[((2 * ox + dx) * Y + (2 * oy + dy)) * Z + (2 * oz + dz)];
          out[oi] = acc / 8.0;
        }
  }
  Var xv = x;
  return make_op(std::move(out), {x}, [xv, N, C, X, Y, Z, OX, OY, OZ](Node& self) {
    if (!xv->requires_grad) return;
    Tensor& gx = xv->ensure_grad();
    std::size_t oi = 0;
    for (std::int64_t nc = 0; nc < N * C; ++nc) {
      real* g = gx.data() + nc * X * Y * Z;
      for (std::int64_t ox = 0; ox < OX; ++ox)
        for (std::int64_t oy = 0; oy < OY; ++oy)
          for (std::int64_t oz = 0; oz < OZ; ++oz, ++oi) {
            const real v = self.grad[oi] / 8.0;
            for (std::int64_t dx = 0; dx < 2; ++dx)
              for (std::int64_t dy = 0; dy < 2; ++dy)
                for (std::int64_t dz = 0; dz < 2; ++dz)
                  g[((2 * ox + dx) * Y + (2 * oy + dy)) * Z + (2 * oz + dz)] += v;
          }
    }
  });
}

Var upsample_nearest2(const Var& x) {
  if (x->value.ndim() != 5)
    throw std::invalid_argument("upsample_nearest2: input must be (N,C,X,Y,Z)");
  const auto& s = x->value.shape();
  const std::int64_t N = s[0], C = s[1], X = s[2], Y = s[3], Z = s[4];
  Tensor out({N, C, 2 * X, 2 * Y, 2 * Z});
  for (std::int64_t nc = 0; nc < N * C; ++nc) {
    const real* in = x->value.data() + nc * X * Y * Z;
    real* o = out.data() + nc * 8 * X * Y * Z;
    for (std::int64_t i = 0; i < 2 * X; ++i)
      for (std::int64_t j = 0; j < 2 * Y; ++j) {
        const real* row = in + ((i / 2) * Y + (j / 2)) * Z;
        real* orow = o + (i * 2 * Y + j) * 2 * Z;
        for (std::int64_t k2 = 0; k2 < 2 * Z; ++k2) orow[k2] = row[k2 / 2];
      }
  }
  Var xv = x;
  return make_op(std::move(out), {x}, [xv, N, C, X, Y, Z](Node& self) {
    if (!xv->requires_grad) return;
    Tensor& gx = xv->ensure_grad();
    for (std::int64_t nc = 0; nc < N * C; ++nc) {
      real* g = gx.data() + nc * X * Y * Z;
      const real* go = self.grad.data() + nc * 8 * X * Y * Z;
      for (std::int64_t i = 0; i < 2 * X; ++i)
        for (std::int64_t j = 0; j < 2 * Y; ++j) {
          real* row = g + ((i / 2) * Y + (j / 2)) * Z;
          const real* grow = go + (i * 2 * Y + j) * 2 * Z;
          for (std::int64_t k2 = 0; k2 < 2 * Z; ++k2) row[k2 / 2] += grow[k2];
        }
    }
  });
}

Var concat_channels(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_channels: no inputs");
  const auto& s0 = xs.front()->value.shape();
  if (s0.size() != 5) throw std::invalid_argument("concat_channels: inputs must be (N,C,X,Y,Z)");
  std::int64_t C = 0;
  for (const auto& x : xs) {
    const auto& s = x->value.shape();
    if (s.size() != 5 || s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3] || s[4] != s0[4])
      throw std::invalid_argument("concat_channels: batch/spatial mismatch");
    C += s[1];
  }
  const std::int64_t N = s0[0], S = s0[2] * s0[3] * s0[4];
  Tensor out({N, C, s0[2], s0[3], s0[4]});
  for (std::int64_t n = 0; n < N; ++n) {
    std::int64_t coff = 0;
    for (const auto& x : xs) {
      const std::int64_t ci = x->value.dim(1);
      std::copy_n(x->value.data() + n * ci * S, ci * S, out.data() + (n * C + coff) * S);
      coff += ci;
    }
  }
  std::vector<Var> parents = xs;
  return make_op(std::move(out), std::move(parents), [xs, N, C, S](Node& self) {
    for (std::int64_t n = 0; n < N; ++n) {
      std::int64_t coff = 0;
      for (const auto& x : xs) {
        const std::int64_t ci = x->value.dim(1);
        if (x->requires_grad) {
          Tensor& gx = x->ensure_grad();
          const real* src = self.grad.data() + (n * C + coff) * S;
          real* dst = gx.data() + n * ci * S;
          for (std::int64_t i = 0; i < ci * S; ++i) dst[i] += src[i];
        }
        coff += ci;
      }
    }
  });
}

Var custom_scalar(std::vector<Var> parents, real value, std::vector<Tensor> parent_grads) {
  if (parents.size() != parent_grads.size())
    throw std::invalid_argument("custom_scalar: one gradient per parent required");
  for (std::size_t i = 0; i < parents.size(); ++i)
    if (!parents[i]->value.same_shape(parent_grads[i]))
      throw std::invalid_argument("custom_scalar: gradient shape mismatch");
  Tensor out({1});
  out[0] = value;
  auto ps = parents;
  return make_op(std::move(out), std::move(parents),
                 [ps, parent_grads = std::move(parent_grads)](Node& self) {
                   const real g = self.grad[0];
                   for (std::size_t i = 0; i < ps.size(); ++i) {
                     if (!ps[i]->requires_grad) continue;
                     Tensor& gp = ps[i]->ensure_grad();
                     const Tensor& pg = parent_grads[i];
                     for (std::int64_t j = 0; j < gp.numel(); ++j) {
                       const auto s = static_cast<std::size_t>(j);
                       gp[s] += g * pg[s];
                     }
                   }
                 });
}

Var scalar_combine(const std::vector<Var>& terms, const std::vector<real>& coeffs) {
  if (terms.empty() || terms.size() != coeffs.size())
    throw std::invalid_argument("scalar_combine: one coefficient per term required");
  real v = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i]->value.numel() != 1)
      throw std::invalid_argument("scalar_combine: terms must be scalars");
    v += coeffs[i] * terms[i]->value[0];
  }
  Tensor out({1});
  out[0] = v;
  std::vector<Var> parents = terms;
  return make_op(std::move(out), std::move(parents), [terms, coeffs](Node& self) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (!terms[i]->requires_grad) continue;
      terms[i]->ensure_grad()[0] += coeffs[i] * self.grad[0];
    }
  });
}

Var sum_squares(const std::vector<Var>& params) {
  if (params.empty()) throw std::invalid_argument("sum_squares: no parameters");
  real v = 0.0;
  for (const auto& p : params)
    for (std::int64_t i = 0; i < p->value.numel(); ++i) {
      const real w = p->value[static_cast<std::size_t>(i)];
      v += w * w;
    }
  Tensor out({1});
  out[0] = v;
  std::vector<Var> parents = params;
  return make_op(std::move(out), std::move(parents), [params](Node& self) {
    const real g = self.grad[0];
    for (const auto& p : params) {
      if (!p->requires_grad) continue;
      Tensor& gp = p->ensure_grad();
      for (std::int64_t i = 0; i < gp.numel(); ++i) {
        const auto s = static_cast<std::size_t>(i);
        gp[s] += 2.0 * g * p->value[s];
      }
    }
  });
}

Tensor maxpool_repeated(const Tensor& t, int times) {
  Tensor cur = t;
  for (int r = 0; r < times; ++r) {
    Var tmp = make_const(cur);
    cur = maxpool2(tmp)->value;
  }
  return cur;
}

}  // namespace lc::nn
